//! Class-𝓛 carpets: the IFS `f_ij(x, y) = (ã_ij(y)·x + u_ij(y), b_i(y))`.
//!
//! Hypotheses are checked on a uniform grid. A strict inequality only counts
//! as satisfied when it holds with margin at least `L·h`, where `h` is the
//! grid spacing and `L` a Lipschitz bound of the checked expression, so a
//! passing report certifies the inequality on all of `[0, 1]`.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{CarpetError, Result};
use crate::poly::{unit_grid, Poly};

/// Grid used when a caller does not pick one.
pub const DEFAULT_GRID: usize = 257;

#[derive(Debug, Clone, PartialEq)]
pub struct CellSpec {
    /// Slope `ã_ij(y)` of the affine-in-x map.
    pub a_tilde: Poly,
    /// Offset `u_ij(y)`.
    pub u: Poly,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RowSpec {
    /// Fiber map `b_i(y)`.
    pub b: Poly,
    pub cells: Vec<CellSpec>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CarpetSpec {
    rows: Vec<RowSpec>,
    // cached derivatives b_i'
    b_prime: Vec<Poly>,
}

impl CarpetSpec {
    pub fn new(rows: Vec<RowSpec>) -> Result<Self> {
        if rows.is_empty() {
            return Err(CarpetError::MalformedSpec("carpet has no rows".into()));
        }
        if let Some(i) = rows.iter().position(|r| r.cells.is_empty()) {
            return Err(CarpetError::MalformedSpec(format!(
                "row {} has no cells",
                i + 1
            )));
        }
        let b_prime = rows.iter().map(|r| r.b.derivative()).collect();
        Ok(CarpetSpec { rows, b_prime })
    }

    pub fn rows(&self) -> &[RowSpec] {
        &self.rows
    }

    /// Number of rows `m`.
    pub fn m(&self) -> usize {
        self.rows.len()
    }

    /// Number of cells `m_i` in row `i` (0-based).
    pub fn row_len(&self, i: usize) -> usize {
        self.rows[i].cells.len()
    }

    /// Size of the full alphabet `Σ m_i`.
    pub fn alphabet_len(&self) -> usize {
        self.rows.iter().map(|r| r.cells.len()).sum()
    }

    /// All symbols `(i, j)`, row-major.
    pub fn symbols(&self) -> Vec<(usize, usize)> {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(i, r)| (0..r.cells.len()).map(move |j| (i, j)))
            .collect()
    }

    #[inline]
    pub fn b(&self, i: usize, y: f64) -> f64 {
        self.rows[i].b.eval(y)
    }

    #[inline]
    pub fn b_prime(&self, i: usize, y: f64) -> f64 {
        self.b_prime[i].eval(y)
    }

    pub fn b_prime_poly(&self, i: usize) -> &Poly {
        &self.b_prime[i]
    }

    #[inline]
    pub fn a_tilde(&self, i: usize, j: usize, y: f64) -> f64 {
        self.rows[i].cells[j].a_tilde.eval(y)
    }

    #[inline]
    pub fn u(&self, i: usize, j: usize, y: f64) -> f64 {
        self.rows[i].cells[j].u.eval(y)
    }

    /// `f_ij(x, y)`
    #[inline]
    pub fn apply(&self, i: usize, j: usize, x: f64, y: f64) -> (f64, f64) {
        (self.a_tilde(i, j, y) * x + self.u(i, j, y), self.b(i, y))
    }

    /// Certified upper bound of `max_i sup |b_i'|`.
    pub fn max_b_slope(&self, grid_points: usize) -> f64 {
        let h = 1.0 / (grid_points.max(2) - 1) as f64;
        self.b_prime
            .iter()
            .map(|bp| {
                let grid_max = unit_grid(grid_points)
                    .map(|y| bp.eval(y).abs())
                    .fold(0.0, f64::max);
                (grid_max + bp.lipschitz_bound() * h).min(bp.sup_bound())
            })
            .fold(0.0, f64::max)
    }

    /// Constant slopes everywhere (a Lalley-Gatzouras carpet).
    pub fn is_affine(&self) -> bool {
        self.rows.iter().all(|r| {
            r.b.degree() <= 1
                && r.cells
                    .iter()
                    .all(|c| c.a_tilde.is_constant() && c.u.is_constant())
        })
    }

    /// Parses the line-oriented `carpet v1` format.
    pub fn parse(text: &str) -> Result<Self> {
        text.parse()
    }

    /// Writes the `carpet v1` format; reals use the shortest round-trip form.
    pub fn to_carpet_string(&self) -> String {
        self.to_string()
    }
}

fn join_coeffs(p: &Poly) -> String {
    p.coeffs()
        .iter()
        .map(|c| format!("{c:?}"))
        .collect::<Vec<_>>()
        .join(" ")
}

impl fmt::Display for CarpetSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "carpet v1")?;
        for (i, row) in self.rows.iter().enumerate() {
            writeln!(f, "row {} b: {}", i + 1, join_coeffs(&row.b))?;
        }
        for (i, row) in self.rows.iter().enumerate() {
            for (j, cell) in row.cells.iter().enumerate() {
                writeln!(
                    f,
                    "cell {} {} a: {} ; u: {}",
                    i + 1,
                    j + 1,
                    join_coeffs(&cell.a_tilde),
                    join_coeffs(&cell.u)
                )?;
            }
        }
        Ok(())
    }
}

fn parse_index(tok: Option<&str>, line: usize, what: &str) -> Result<usize> {
    let tok = tok.ok_or_else(|| CarpetError::Parse {
        line,
        message: format!("missing {what} index"),
    })?;
    match tok.parse::<usize>() {
        Ok(v) if v >= 1 => Ok(v - 1),
        _ => Err(CarpetError::Parse {
            line,
            message: format!("bad {what} index `{tok}`"),
        }),
    }
}

fn parse_poly(text: &str, line: usize) -> Result<Poly> {
    let coeffs = text
        .split_whitespace()
        .map(|t| {
            t.parse::<f64>().map_err(|_| CarpetError::Parse {
                line,
                message: format!("bad real `{t}`"),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    if coeffs.is_empty() {
        return Err(CarpetError::Parse {
            line,
            message: "empty polynomial".into(),
        });
    }
    Poly::new(coeffs)
}

impl FromStr for CarpetSpec {
    type Err = CarpetError;

    fn from_str(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(n, l)| (n + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());
        match lines.next() {
            Some((_, "carpet v1")) => {}
            Some((n, other)) => {
                return Err(CarpetError::Parse {
                    line: n,
                    message: format!("expected `carpet v1`, found `{other}`"),
                })
            }
            None => {
                return Err(CarpetError::Parse {
                    line: 1,
                    message: "empty file".into(),
                })
            }
        }
        let mut bs: Vec<Option<Poly>> = Vec::new();
        let mut cells: Vec<Vec<Option<CellSpec>>> = Vec::new();
        for (n, l) in lines {
            let (head, rest) = l.split_once(':').ok_or_else(|| CarpetError::Parse {
                line: n,
                message: "missing `:`".into(),
            })?;
            let mut toks = head.split_whitespace();
            match toks.next() {
                Some("row") => {
                    let i = parse_index(toks.next(), n, "row")?;
                    if toks.next() != Some("b") {
                        return Err(CarpetError::Parse {
                            line: n,
                            message: "expected `row <i> b:`".into(),
                        });
                    }
                    if bs.len() <= i {
                        bs.resize(i + 1, None);
                    }
                    if bs[i].replace(parse_poly(rest, n)?).is_some() {
                        return Err(CarpetError::Parse {
                            line: n,
                            message: format!("row {} given twice", i + 1),
                        });
                    }
                }
                Some("cell") => {
                    let i = parse_index(toks.next(), n, "row")?;
                    let j = parse_index(toks.next(), n, "cell")?;
                    if toks.next() != Some("a") {
                        return Err(CarpetError::Parse {
                            line: n,
                            message: "expected `cell <i> <j> a:`".into(),
                        });
                    }
                    let (a_txt, u_part) =
                        rest.split_once(';').ok_or_else(|| CarpetError::Parse {
                            line: n,
                            message: "missing `; u:`".into(),
                        })?;
                    let u_txt = u_part
                        .trim()
                        .strip_prefix("u:")
                        .ok_or_else(|| CarpetError::Parse {
                            line: n,
                            message: "expected `u:`".into(),
                        })?;
                    let cell = CellSpec {
                        a_tilde: parse_poly(a_txt, n)?,
                        u: parse_poly(u_txt, n)?,
                    };
                    if cells.len() <= i {
                        cells.resize(i + 1, Vec::new());
                    }
                    if cells[i].len() <= j {
                        cells[i].resize(j + 1, None);
                    }
                    if cells[i][j].replace(cell).is_some() {
                        return Err(CarpetError::Parse {
                            line: n,
                            message: format!("cell {} {} given twice", i + 1, j + 1),
                        });
                    }
                }
                _ => {
                    return Err(CarpetError::Parse {
                        line: n,
                        message: format!("unknown record `{l}`"),
                    })
                }
            }
        }
        if cells.len() > bs.len() {
            return Err(CarpetError::MalformedSpec(format!(
                "cells reference row {} which has no `row` line",
                cells.len()
            )));
        }
        let mut rows = Vec::with_capacity(bs.len());
        for (i, b) in bs.into_iter().enumerate() {
            let b = b.ok_or_else(|| CarpetError::MalformedSpec(format!("row {} missing", i + 1)))?;
            let row_cells = cells
                .get_mut(i)
                .map(std::mem::take)
                .unwrap_or_default()
                .into_iter()
                .enumerate()
                .map(|(j, c)| {
                    c.ok_or_else(|| {
                        CarpetError::MalformedSpec(format!("cell {} {} missing", i + 1, j + 1))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(RowSpec { b, cells: row_cells });
        }
        CarpetSpec::new(rows)
    }
}

// ---------------------------------------------------------------------------
// Validation

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Hypothesis {
    /// At least two rows and some row with two or more cells.
    Structure,
    /// The fiber maps form a simple function system.
    H2,
    /// Each row's horizontal maps form a simple function system.
    H3,
    /// Domination: `|ã_ij| < |b_i'|`.
    H4,
}

impl fmt::Display for Hypothesis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Hypothesis::Structure => "structure",
            Hypothesis::H2 => "H2",
            Hypothesis::H3 => "H3",
            Hypothesis::H4 => "H4",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub hypothesis: Hypothesis,
    pub row: Option<usize>,
    pub cell: Option<usize>,
    /// Grid point where the worst margin was seen.
    pub witness_y: Option<f64>,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})", self.hypothesis)?;
        if let Some(i) = self.row {
            write!(f, " row {}", i + 1)?;
        }
        if let Some(j) = self.cell {
            write!(f, " cell {}", j + 1)?;
        }
        if let Some(y) = self.witness_y {
            write!(f, " at y={y:.6}")?;
        }
        write!(f, ": {}", self.detail)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub grid_points: usize,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn violates(&self, h: Hypothesis) -> bool {
        self.violations.iter().any(|v| v.hypothesis == h)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.passed() {
            return writeln!(
                f,
                "PASS: H1-H4 hold on a {}-point grid with Lipschitz slack",
                self.grid_points
            );
        }
        writeln!(f, "FAIL: {} violation(s)", self.violations.len())?;
        for v in &self.violations {
            writeln!(f, "  {v}")?;
        }
        Ok(())
    }
}

/// Worst (smallest) grid value of `margin(y) − slack`, with the witness point.
fn worst_margin(grid_points: usize, slack: f64, margin: impl Fn(f64) -> f64) -> (f64, f64) {
    unit_grid(grid_points)
        .map(|y| (margin(y) - slack, y))
        .fold((f64::INFINITY, 0.0), |acc, cur| if cur.0 < acc.0 { cur } else { acc })
}

/// Checks (H1)-(H4) and the structural assumptions.
pub fn validate_carpet(spec: &CarpetSpec, grid_points: usize) -> Result<ValidationReport> {
    if grid_points < 2 {
        return Err(CarpetError::InvalidArgument("grid_points must be ≥ 2".into()));
    }
    let h = 1.0 / (grid_points - 1) as f64;
    let mut violations = Vec::new();
    let mut push = |hypothesis, row, cell, witness_y, detail: String| {
        violations.push(Violation {
            hypothesis,
            row,
            cell,
            witness_y,
            detail,
        })
    };

    if spec.m() < 2 {
        push(Hypothesis::Structure, None, None, None, "need at least 2 rows".into());
    }
    if (0..spec.m()).all(|i| spec.row_len(i) < 2) {
        push(
            Hypothesis::Structure,
            None,
            None,
            None,
            "every fiber has a single point; some row needs ≥ 2 cells".into(),
        );
    }

    // (H2)
    let mut images = Vec::with_capacity(spec.m());
    for i in 0..spec.m() {
        let bp = spec.b_prime_poly(i);
        let slack = bp.lipschitz_bound() * h;
        let sign = if bp.eval(0.0) < 0.0 { -1.0 } else { 1.0 };
        let (m, y) = worst_margin(grid_points, slack, |y| sign * bp.eval(y));
        if m <= 0.0 {
            push(Hypothesis::H2, Some(i), None, Some(y), format!("b' vanishes or changes sign (margin {m:.3e})"));
        }
        let (m, y) = worst_margin(grid_points, slack, |y| 1.0 - bp.eval(y).abs());
        if m <= 0.0 {
            push(Hypothesis::H2, Some(i), None, Some(y), format!("|b'| ≥ 1 (margin {m:.3e})"));
        }
        let (b0, b1) = (spec.b(i, 0.0), spec.b(i, 1.0));
        let (lo, hi) = (b0.min(b1), b0.max(b1));
        if lo < 0.0 || hi > 1.0 {
            push(Hypothesis::H2, Some(i), None, None, format!("b([0,1]) = [{lo}, {hi}] leaves [0,1]"));
        }
        images.push((lo, hi, i));
    }
    images.sort_by(|a, b| a.0.total_cmp(&b.0));
    for w in images.windows(2) {
        if w[1].0 <= w[0].1 {
            push(
                Hypothesis::H2,
                Some(w[1].2),
                None,
                None,
                format!("image overlaps row {} (gap {:.3e})", w[0].2 + 1, w[1].0 - w[0].1),
            );
        }
    }

    for (i, row) in spec.rows().iter().enumerate() {
        let bp = spec.b_prime_poly(i);
        for (j, cell) in row.cells.iter().enumerate() {
            let a = &cell.a_tilde;
            let u = &cell.u;
            let la = a.lipschitz_bound();
            let lu = u.lipschitz_bound();
            // (H3) slope strictly inside (0,1) in absolute value, no sign change
            let sign = if a.eval(0.0) < 0.0 { -1.0 } else { 1.0 };
            let (m, y) = worst_margin(grid_points, la * h, |y| sign * a.eval(y));
            if m <= 0.0 {
                push(Hypothesis::H3, Some(i), Some(j), Some(y), format!("ã vanishes or changes sign (margin {m:.3e})"));
            }
            let (m, y) = worst_margin(grid_points, la * h, |y| 1.0 - a.eval(y).abs());
            if m <= 0.0 {
                push(Hypothesis::H3, Some(i), Some(j), Some(y), format!("|ã| ≥ 1 (margin {m:.3e})"));
            }
            // image [u, u+ã] inside [0,1]
            let slack = (la + lu) * h;
            let (m, y) = worst_margin(grid_points, slack, |y| u.eval(y).min(u.eval(y) + a.eval(y)));
            if m < 0.0 {
                push(Hypothesis::H3, Some(i), Some(j), Some(y), format!("image leaves [0,1] on the left (margin {m:.3e})"));
            }
            let (m, y) = worst_margin(grid_points, slack, |y| 1.0 - u.eval(y).max(u.eval(y) + a.eval(y)));
            if m < 0.0 {
                push(Hypothesis::H3, Some(i), Some(j), Some(y), format!("image leaves [0,1] on the right (margin {m:.3e})"));
            }
            // (H4)
            let slack = (la + bp.lipschitz_bound()) * h;
            let (m, y) = worst_margin(grid_points, slack, |y| bp.eval(y).abs() - a.eval(y).abs());
            if m <= 0.0 {
                push(Hypothesis::H4, Some(i), Some(j), Some(y), format!("|ã| ≥ |b'| (margin {m:.3e})"));
            }
        }
        // (H3) pairwise disjoint images
        for j in 0..row.cells.len() {
            for k in j + 1..row.cells.len() {
                let (cj, ck) = (&row.cells[j], &row.cells[k]);
                let slack = (cj.a_tilde.lipschitz_bound()
                    + cj.u.lipschitz_bound()
                    + ck.a_tilde.lipschitz_bound()
                    + ck.u.lipschitz_bound())
                    * h;
                let interval = |c: &CellSpec, y: f64| {
                    let (p, q) = (c.u.eval(y), c.u.eval(y) + c.a_tilde.eval(y));
                    (p.min(q), p.max(q))
                };
                let (m, y) = worst_margin(grid_points, slack, |y| {
                    let (lj, hj) = interval(cj, y);
                    let (lk, hk) = interval(ck, y);
                    (lk - hj).max(lj - hk)
                });
                if m <= 0.0 {
                    push(
                        Hypothesis::H3,
                        Some(i),
                        Some(k),
                        Some(y),
                        format!("image overlaps cell {} (margin {m:.3e})", j + 1),
                    );
                }
            }
        }
    }
    Ok(ValidationReport {
        grid_points,
        violations,
    })
}

// ---------------------------------------------------------------------------
// Domination constants

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DominationConstants {
    /// Certified bound of `max |ã_ij| / |b_i'|`.
    pub lambda: f64,
    /// Distortion bound for vertical graphs.
    pub c: f64,
}

/// Certified upper bound of `max_y num(y)/den(y)` given Lipschitz and sup
/// bounds of numerator and denominator (`den > 0`).
fn certified_ratio_max(
    grid_points: usize,
    num: impl Fn(f64) -> f64,
    den: impl Fn(f64) -> f64,
    lip_num: f64,
    sup_num: f64,
    lip_den: f64,
    sup_den: f64,
) -> f64 {
    let h = 1.0 / (grid_points - 1) as f64;
    let mut grid_max: f64 = 0.0;
    let mut den_min = f64::INFINITY;
    for y in unit_grid(grid_points) {
        let d = den(y);
        den_min = den_min.min(d);
        grid_max = grid_max.max(num(y) / d);
    }
    let den_min = (den_min - lip_den * h).max(f64::MIN_POSITIVE);
    let lip = (lip_num * sup_den + sup_num * lip_den) / (den_min * den_min);
    grid_max + lip * h
}

/// `(λ, C)` as certified upper bounds of the true maxima.
pub fn domination_constants(spec: &CarpetSpec, grid_points: usize) -> Result<DominationConstants> {
    if grid_points < 2 {
        return Err(CarpetError::InvalidArgument("grid_points must be ≥ 2".into()));
    }
    let mut lambda: f64 = 0.0;
    let mut dist: f64 = 0.0;
    for (i, row) in spec.rows().iter().enumerate() {
        let bp = spec.b_prime_poly(i);
        let den = |y: f64| bp.eval(y).abs();
        for cell in &row.cells {
            let a = &cell.a_tilde;
            lambda = lambda.max(certified_ratio_max(
                grid_points,
                |y| a.eval(y).abs(),
                den,
                a.lipschitz_bound(),
                a.sup_bound(),
                bp.lipschitz_bound(),
                bp.sup_bound(),
            ));
            // ∂_y a = ã'(y)x + u'(y), extremal at x ∈ {0, 1}
            let da = a.derivative();
            let du = cell.u.derivative();
            let d1 = da.add(&du);
            dist = dist.max(certified_ratio_max(
                grid_points,
                |y| du.eval(y).abs().max(d1.eval(y).abs()),
                den,
                du.lipschitz_bound().max(d1.lipschitz_bound()),
                du.sup_bound().max(d1.sup_bound()),
                bp.lipschitz_bound(),
                bp.sup_bound(),
            ));
        }
    }
    if lambda >= 1.0 {
        return Err(CarpetError::InvalidArgument(format!(
            "domination bound λ = {lambda} is not below 1"
        )));
    }
    Ok(DominationConstants {
        lambda,
        c: dist / (1.0 - lambda),
    })
}

// ---------------------------------------------------------------------------
// Constructors

/// Placement of rows and cells for [`make_sierpinski`].
#[derive(Debug, Clone, PartialEq)]
pub enum Layout {
    /// Leftover length split evenly over all gaps, including both ends, so
    /// `b + v_i < v_{i+1}` and `a + u_ij < u_{i,j+1}` hold strictly.
    Even,
    /// Explicit offsets: `v[i]` for rows, `u[i][j]` for cells.
    Explicit { v: Vec<f64>, u: Vec<Vec<f64>> },
}

/// General Sierpinski carpet `f_ij(x, y) = (a x + u_ij, b y + v_i)`.
pub fn make_sierpinski(a: f64, b: f64, m_list: &[usize], layout: &Layout) -> Result<CarpetSpec> {
    if !(a > 0.0 && a < b && b < 1.0) {
        return Err(CarpetError::InfeasibleLayout(format!(
            "need 0 < a < b < 1, got a={a}, b={b}"
        )));
    }
    if m_list.is_empty() || m_list.contains(&0) {
        return Err(CarpetError::InfeasibleLayout("every row needs a cell".into()));
    }
    let m = m_list.len();
    if m as f64 * b >= 1.0 {
        return Err(CarpetError::InfeasibleLayout(format!(
            "{m} rows of height {b} do not fit with gaps"
        )));
    }
    if let Some(&mi) = m_list.iter().find(|&&mi| mi as f64 * a >= 1.0) {
        return Err(CarpetError::InfeasibleLayout(format!(
            "{mi} cells of width {a} do not fit with gaps"
        )));
    }
    let (v, u): (Vec<f64>, Vec<Vec<f64>>) = match layout {
        Layout::Even => {
            let gap = (1.0 - m as f64 * b) / (m + 1) as f64;
            let v = (0..m).map(|i| gap + i as f64 * (b + gap)).collect();
            let u = m_list
                .iter()
                .map(|&mi| {
                    let gap = (1.0 - mi as f64 * a) / (mi + 1) as f64;
                    (0..mi).map(|j| gap + j as f64 * (a + gap)).collect()
                })
                .collect();
            (v, u)
        }
        Layout::Explicit { v, u } => {
            if v.len() != m || u.len() != m || u.iter().zip(m_list).any(|(r, &mi)| r.len() != mi) {
                return Err(CarpetError::InfeasibleLayout(
                    "explicit offsets do not match m_list".into(),
                ));
            }
            (v.clone(), u.clone())
        }
    };
    let rows = (0..m)
        .map(|i| RowSpec {
            b: Poly::linear(b, v[i]),
            cells: u[i]
                .iter()
                .map(|&uij| CellSpec {
                    a_tilde: Poly::constant(a),
                    u: Poly::constant(uij),
                })
                .collect(),
        })
        .collect();
    let spec = CarpetSpec::new(rows)?;
    let report = validate_carpet(&spec, DEFAULT_GRID)?;
    if !report.passed() {
        return Err(CarpetError::InfeasibleLayout(format!(
            "layout violates the hypotheses: {}",
            report.violations[0]
        )));
    }
    Ok(spec)
}

/// The reference carpet S1: `a = 0.2`, `b = 0.45`, rows of 3 and 2 cells.
pub fn s1() -> CarpetSpec {
    make_sierpinski(
        0.2,
        0.45,
        &[3, 2],
        &Layout::Explicit {
            v: vec![0.0, 0.55],
            u: vec![vec![0.05, 0.35, 0.65], vec![0.1, 0.6]],
        },
    )
    .expect("S1 is feasible")
}

/// S1 with the first row's slopes modulated: `ã_1j(y) = 0.2 (1 + ε T₃(2y − 1))`.
pub fn s1_eps(eps: f64) -> Result<CarpetSpec> {
    let p = Poly::from_shifted_chebyshev(&[0.0, 0.0, 0.0, 1.0])?;
    let mut rows = s1().rows;
    for cell in &mut rows[0].cells {
        cell.a_tilde = Poly::constant(1.0).add(&p.scale(eps)).scale(0.2);
    }
    CarpetSpec::new(rows)
}

// ---------------------------------------------------------------------------
// Perturbation

#[derive(Debug, Clone, PartialEq)]
pub struct Perturbation {
    pub spec: CarpetSpec,
    /// Number of draws used (1 on first success).
    pub attempts: usize,
    /// `max |d/dy log|ã_ij||` on the grid, a proxy for the Hölder seminorm of φ.
    pub log_slope_seminorm: f64,
}

const PERTURB_ATTEMPTS: usize = 8;
const PERTURB_DEGREE: usize = 3;

/// Random polynomial with certified `sup_{[0,1]} |p| ≤ 1`, attaining about 1.
fn random_unit_poly(rng: &mut ChaCha8Rng) -> Poly {
    let cheb: Vec<f64> = (0..=PERTURB_DEGREE).map(|_| rng.random_range(-1.0..1.0)).collect();
    let p = Poly::from_shifted_chebyshev(&cheb).expect("low degree");
    let n = DEFAULT_GRID;
    let h = 1.0 / (n - 1) as f64;
    let grid_max = unit_grid(n).map(|y| p.eval(y).abs()).fold(0.0, f64::max);
    let bound = (grid_max + 0.5 * p.lipschitz_bound() * h).min(p.sup_bound());
    if bound == 0.0 {
        return Poly::constant(0.0);
    }
    p.scale(1.0 / bound)
}

/// Half the smallest clearance between a row's cell images and between the
/// outer cells and the ends of `[0, 1]`.
fn row_clearance(row: &RowSpec) -> f64 {
    let mut best = f64::INFINITY;
    for y in unit_grid(DEFAULT_GRID) {
        let mut iv: Vec<(f64, f64)> = row
            .cells
            .iter()
            .map(|c| {
                let (p, q) = (c.u.eval(y), c.u.eval(y) + c.a_tilde.eval(y));
                (p.min(q), p.max(q))
            })
            .collect();
        iv.sort_by(|a, b| a.0.total_cmp(&b.0));
        best = best.min(iv[0].0).min(1.0 - iv[iv.len() - 1].1);
        for w in iv.windows(2) {
            best = best.min(w[1].0 - w[0].1);
        }
    }
    0.5 * best.max(0.0)
}

pub fn log_slope_seminorm(spec: &CarpetSpec) -> f64 {
    let mut best: f64 = 0.0;
    for row in spec.rows() {
        for cell in &row.cells {
            let da = cell.a_tilde.derivative();
            for y in unit_grid(DEFAULT_GRID) {
                best = best.max((da.eval(y) / cell.a_tilde.eval(y)).abs());
            }
        }
    }
    best
}

/// Multiplies each slope by `1 + ε q_ij(y)` and shifts each offset by
/// `ε c_i r_ij(y)`, with `q, r` seeded random polynomials bounded by 1 and
/// `c_i` half the clearance of row `i`. Redraws up to 8 times until the
/// result validates.
pub fn perturb_carpet(spec: &CarpetSpec, epsilon: f64, seed: u64) -> Result<Perturbation> {
    if !epsilon.is_finite() || epsilon < 0.0 {
        return Err(CarpetError::InvalidArgument(format!("bad epsilon {epsilon}")));
    }
    if epsilon == 0.0 {
        return Ok(Perturbation {
            spec: spec.clone(),
            attempts: 0,
            log_slope_seminorm: log_slope_seminorm(spec),
        });
    }
    let clearance: Vec<f64> = spec.rows().iter().map(row_clearance).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for attempt in 1..=PERTURB_ATTEMPTS {
        let mut rows = spec.rows().to_vec();
        let mut ok = true;
        for (i, row) in rows.iter_mut().enumerate() {
            for cell in &mut row.cells {
                let q = random_unit_poly(&mut rng);
                let r = random_unit_poly(&mut rng);
                match Poly::constant(1.0).add(&q.scale(epsilon)).mul(&cell.a_tilde) {
                    Ok(a) => cell.a_tilde = a,
                    Err(_) => ok = false,
                }
                cell.u = cell.u.add(&r.scale(epsilon * clearance[i]));
            }
        }
        if !ok {
            continue;
        }
        let candidate = CarpetSpec::new(rows)?;
        if validate_carpet(&candidate, DEFAULT_GRID)?.passed() {
            let log_slope_seminorm = log_slope_seminorm(&candidate);
            return Ok(Perturbation {
                spec: candidate,
                attempts: attempt,
                log_slope_seminorm,
            });
        }
    }
    Err(CarpetError::PerturbationTooLarge {
        attempts: PERTURB_ATTEMPTS,
    })
}

/// Largest coefficient distance between two carpets with the same alphabet.
pub fn coefficient_distance(a: &CarpetSpec, b: &CarpetSpec) -> f64 {
    let mut d: f64 = 0.0;
    for (ra, rb) in a.rows().iter().zip(b.rows()) {
        d = d.max(ra.b.coeff_distance(&rb.b));
        for (ca, cb) in ra.cells.iter().zip(&rb.cells) {
            d = d.max(ca.a_tilde.coeff_distance(&cb.a_tilde));
            d = d.max(ca.u.coeff_distance(&cb.u));
        }
    }
    d
}
