//! Plot data and geometric cross-checks: depth-n region covers, a Monte
//! Carlo box-counting estimate and propagation of vertical-graph slopes.

use std::collections::HashSet;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::carpet::{domination_constants, CarpetSpec, DEFAULT_GRID};
use crate::coding::{cylinder_interval, FullWord};
use crate::error::{CarpetError, Result};

/// Most regions [`render_regions`] will produce.
pub const MAX_REGIONS: f64 = 1e6;
/// Points per boundary polyline.
pub const BOUNDARY_POINTS: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    pub word: FullWord,
    /// `(x0, y0, x1, y1)`
    pub bbox: (f64, f64, f64, f64),
    /// Image of `{0} × [0, 1]`, bottom to top in the source parameter.
    pub left: Vec<(f64, f64)>,
    /// Image of `{1} × [0, 1]`.
    pub right: Vec<(f64, f64)>,
}

impl Region {
    pub fn area_of_bbox(&self) -> f64 {
        (self.bbox.2 - self.bbox.0) * (self.bbox.3 - self.bbox.1)
    }
}

/// `f_{w_1} ∘ ... ∘ f_{w_n}(x, y)`
pub fn compose(spec: &CarpetSpec, word: &[(usize, usize)], x: f64, y: f64) -> (f64, f64) {
    word.iter().rev().fold((x, y), |(x, y), &(i, j)| spec.apply(i, j, x, y))
}

fn region(spec: &CarpetSpec, word: FullWord, c: f64) -> Result<Region> {
    let ys: Vec<f64> = (0..BOUNDARY_POINTS).map(|k| k as f64 / (BOUNDARY_POINTS - 1) as f64).collect();
    let left: Vec<(f64, f64)> = ys.iter().map(|&y| compose(spec, &word.0, 0.0, y)).collect();
    let right: Vec<(f64, f64)> = ys.iter().map(|&y| compose(spec, &word.0, 1.0, y)).collect();
    let (y0, y1) = cylinder_interval(spec, &word.rows())?;
    // boundaries are graphs of slope ≤ C; between samples they move by at
    // most C times half the gap
    let mut x0 = f64::INFINITY;
    let mut x1 = f64::NEG_INFINITY;
    for curve in [&left, &right] {
        for k in 0..curve.len() {
            x0 = x0.min(curve[k].0);
            x1 = x1.max(curve[k].0);
            if k + 1 < curve.len() {
                let slack = 0.5 * c * (curve[k + 1].1 - curve[k].1).abs();
                let mid_lo = curve[k].0.min(curve[k + 1].0) - slack;
                let mid_hi = curve[k].0.max(curve[k + 1].0) + slack;
                x0 = x0.min(mid_lo);
                x1 = x1.max(mid_hi);
            }
        }
    }
    Ok(Region {
        word,
        bbox: (x0, y0, x1, y1),
        left,
        right,
    })
}

/// All depth-`n` regions in lexicographic word order.
pub fn render_regions(spec: &CarpetSpec, depth: usize) -> Result<Vec<Region>> {
    let count = (spec.alphabet_len() as f64).powi(depth as i32);
    if count > MAX_REGIONS {
        return Err(CarpetError::TooDeep { depth, regions: count });
    }
    if depth == 0 {
        return Err(CarpetError::InvalidArgument("depth must be ≥ 1".into()));
    }
    let c = if spec.is_affine() {
        0.0
    } else {
        domination_constants(spec, DEFAULT_GRID)?.c
    };
    FullWord::all(spec, depth)
        .into_par_iter()
        .map(|w| region(spec, w, c))
        .collect()
}

/// `word,x0,y0,x1,y1`
pub fn write_regions_csv(regions: &[Region], out: &mut impl Write) -> Result<()> {
    writeln!(out, "word,x0,y0,x1,y1")?;
    for r in regions {
        let (x0, y0, x1, y1) = r.bbox;
        writeln!(out, "{},{x0:?},{y0:?},{x1:?},{y1:?}", r.word)?;
    }
    Ok(())
}

/// `word,side,k,x,y`, one row per polyline vertex.
pub fn write_boundaries_csv(regions: &[Region], out: &mut impl Write) -> Result<()> {
    writeln!(out, "word,side,k,x,y")?;
    for r in regions {
        for (side, curve) in [("left", &r.left), ("right", &r.right)] {
            for (k, (x, y)) in curve.iter().enumerate() {
                writeln!(out, "{},{side},{k},{x:?},{y:?}", r.word)?;
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Box counting

#[derive(Debug, Clone, PartialEq)]
pub struct BoxCount {
    pub estimate: f64,
    /// `(scale, occupied boxes)`
    pub counts: Vec<(f64, usize)>,
}

/// Least-squares slope of `log N` against `log(1/scale)`.
fn fit_slope(counts: &[(f64, usize)]) -> f64 {
    let pts: Vec<(f64, f64)> = counts.iter().map(|&(s, n)| ((1.0 / s).ln(), (n as f64).ln())).collect();
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Sample point number `index`: a uniform random word of length `depth`
/// applied to the centre of the square. Each index owns its own stream, so
/// results do not depend on the thread count.
fn sample_point(spec: &CarpetSpec, symbols: &[(usize, usize)], depth: usize, seed: u64, index: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let word: Vec<(usize, usize)> = (0..depth).map(|_| symbols[rng.random_range(0..symbols.len())]).collect();
    compose(spec, &word, 0.5, 0.5)
}

pub fn box_count(spec: &CarpetSpec, samples: usize, depth: usize, scales: &[f64], seed: u64) -> Result<BoxCount> {
    if samples < 10_000 {
        return Err(CarpetError::InvalidArgument("box counting needs at least 10^4 samples".into()));
    }
    if scales.len() < 2 || scales.iter().any(|&s| !(s > 0.0 && s < 1.0)) {
        return Err(CarpetError::InvalidArgument("need at least two scales in (0, 1)".into()));
    }
    let symbols = spec.symbols();
    let points: Vec<(f64, f64)> = (0..samples as u64)
        .into_par_iter()
        .map(|k| sample_point(spec, &symbols, depth, seed, k))
        .collect();
    let counts: Vec<(f64, usize)> = scales
        .par_iter()
        .map(|&s| {
            let boxes: HashSet<(i64, i64)> = points
                .iter()
                .map(|&(x, y)| ((x / s).floor() as i64, (y / s).floor() as i64))
                .collect();
            (s, boxes.len())
        })
        .collect();
    Ok(BoxCount {
        estimate: fit_slope(&counts),
        counts,
    })
}

/// `scale,count`
pub fn write_box_counts_csv(bc: &BoxCount, out: &mut impl Write) -> Result<()> {
    writeln!(out, "scale,count")?;
    for (s, n) in &bc.counts {
        writeln!(out, "{s:?},{n}")?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Vertical graphs

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistortionCheck {
    pub max_slope_seen: f64,
    pub c: f64,
    pub pass: bool,
}

/// Pushes the graphs `{0} × [0, 1]` and `{1} × [0, 1]` through `depth`
/// random maps, tracking the exact slope of the image graph
///
/// ```text
/// G'(Y) = (ã'(y) x + ã(y) g'(y) + u'(y)) / b'(y),    Y = b(y),
/// ```
///
/// and compares the largest slope met with the distortion bound `C`.
pub fn vertical_graph_distortion_check(spec: &CarpetSpec, trials: usize, depth: usize, seed: u64) -> Result<DistortionCheck> {
    if trials == 0 {
        return Err(CarpetError::InvalidArgument("trials must be ≥ 1".into()));
    }
    let c = domination_constants(spec, DEFAULT_GRID)?.c;
    let symbols = spec.symbols();
    let derivs: Vec<Vec<_>> = spec
        .rows()
        .iter()
        .map(|row| {
            row.cells
                .iter()
                .map(|cell| (cell.a_tilde.derivative(), cell.u.derivative()))
                .collect()
        })
        .collect();
    let max_slope_seen = (0..trials as u64)
        .into_par_iter()
        .map(|trial| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(trial);
            let mut worst: f64 = 0.0;
            for x_start in [0.0, 1.0] {
                // (y, x, slope) along the graph at 33 heights
                let mut pts: Vec<(f64, f64, f64)> = (0..33).map(|k| (k as f64 / 32.0, x_start, 0.0)).collect();
                for _ in 0..depth {
                    let (i, j) = symbols[rng.random_range(0..symbols.len())];
                    let (da, du) = &derivs[i][j];
                    for p in pts.iter_mut() {
                        let (y, x, s) = *p;
                        let slope = (da.eval(y) * x + spec.a_tilde(i, j, y) * s + du.eval(y)) / spec.b_prime(i, y);
                        let (nx, ny) = spec.apply(i, j, x, y);
                        *p = (ny, nx, slope);
                        worst = worst.max(slope.abs());
                    }
                }
            }
            worst
        })
        .reduce(|| 0.0, f64::max);
    Ok(DistortionCheck {
        max_slope_seen,
        c,
        pass: max_slope_seen <= c + 1e-9,
    })
}
