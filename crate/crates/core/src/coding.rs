//! Symbolic dynamics on the row alphabet `{1..m}` and the full alphabet
//! `{(i, j)}`.
//!
//! Indices are 0-based in memory and 1-based in text (`1 2 1` for a row
//! word, `1.1 2.2` for a full word).

use std::fmt;
use std::str::FromStr;

use crate::carpet::CarpetSpec;
use crate::error::{CarpetError, Result};
use crate::poly::unit_grid;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RowWord(pub Vec<usize>);

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FullWord(pub Vec<(usize, usize)>);

impl RowWord {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn concat(&self, other: &RowWord) -> RowWord {
        RowWord(self.0.iter().chain(&other.0).copied().collect())
    }

    /// All `m^n` words of length `n` in lexicographic order.
    pub fn all(m: usize, n: usize) -> Vec<RowWord> {
        let mut out = vec![RowWord(Vec::with_capacity(n))];
        for _ in 0..n {
            out = out
                .into_iter()
                .flat_map(|w| {
                    (0..m).map(move |i| {
                        let mut v = w.0.clone();
                        v.push(i);
                        RowWord(v)
                    })
                })
                .collect();
        }
        out
    }

    pub fn check(&self, spec: &CarpetSpec) -> Result<()> {
        match self.0.iter().find(|&&i| i >= spec.m()) {
            Some(&i) => Err(CarpetError::InvalidArgument(format!(
                "row symbol {} out of range 1..{}",
                i + 1,
                spec.m()
            ))),
            None => Ok(()),
        }
    }
}

impl FullWord {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// The factor map `π`: forget the column symbols.
    pub fn rows(&self) -> RowWord {
        RowWord(self.0.iter().map(|&(i, _)| i).collect())
    }

    pub fn concat(&self, other: &FullWord) -> FullWord {
        FullWord(self.0.iter().chain(&other.0).copied().collect())
    }

    /// All full words of length `n` for `spec`, lexicographic.
    pub fn all(spec: &CarpetSpec, n: usize) -> Vec<FullWord> {
        let symbols = spec.symbols();
        let mut out = vec![FullWord(Vec::with_capacity(n))];
        for _ in 0..n {
            out = out
                .into_iter()
                .flat_map(|w| {
                    symbols.iter().map(move |&s| {
                        let mut v = w.0.clone();
                        v.push(s);
                        FullWord(v)
                    })
                })
                .collect();
        }
        out
    }

    pub fn check(&self, spec: &CarpetSpec) -> Result<()> {
        for &(i, j) in &self.0 {
            if i >= spec.m() || j >= spec.row_len(i) {
                return Err(CarpetError::InvalidArgument(format!(
                    "symbol {}.{} not in the alphabet",
                    i + 1,
                    j + 1
                )));
            }
        }
        Ok(())
    }
}

impl fmt::Display for RowWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|i| (i + 1).to_string()).collect();
        f.write_str(&parts.join(" "))
    }
}

impl fmt::Display for FullWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .0
            .iter()
            .map(|(i, j)| format!("{}.{}", i + 1, j + 1))
            .collect();
        f.write_str(&parts.join(" "))
    }
}

fn parse_symbol(tok: &str) -> Result<usize> {
    match tok.parse::<usize>() {
        Ok(v) if v >= 1 => Ok(v - 1),
        _ => Err(CarpetError::InvalidArgument(format!("bad symbol `{tok}`"))),
    }
}

impl FromStr for RowWord {
    type Err = CarpetError;

    fn from_str(s: &str) -> Result<Self> {
        let syms = s.split_whitespace().map(parse_symbol).collect::<Result<Vec<_>>>()?;
        Ok(RowWord(syms))
    }
}

impl FromStr for FullWord {
    type Err = CarpetError;

    fn from_str(s: &str) -> Result<Self> {
        let syms = s
            .split_whitespace()
            .map(|tok| {
                let (i, j) = tok.split_once('.').ok_or_else(|| {
                    CarpetError::InvalidArgument(format!("full symbol `{tok}` needs `i.j`"))
                })?;
                Ok((parse_symbol(i)?, parse_symbol(j)?))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(FullWord(syms))
    }
}

/// Point of the `{b_i}`-attractor coded by a row sequence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailCoordinate {
    pub z: f64,
    /// Bound on `|z − Y(w)|`.
    pub error_bound: f64,
}

/// `b_{w_1} ∘ ... ∘ b_{w_n}(y)`.
#[inline]
pub fn push_through(spec: &CarpetSpec, word: &[usize], y: f64) -> f64 {
    word.iter().rev().fold(y, |y, &i| spec.b(i, y))
}

/// Tail coordinate of the periodic sequence `word word word ...`, truncated
/// at a depth large enough that the error is at most `tol`.
pub fn tail_coordinate(spec: &CarpetSpec, word: &RowWord, depth: usize, tol: f64) -> Result<TailCoordinate> {
    if word.is_empty() {
        return Err(CarpetError::InvalidArgument("empty word".into()));
    }
    word.check(spec)?;
    if !(tol > 0.0) {
        return Err(CarpetError::InvalidArgument("tol must be positive".into()));
    }
    let contraction = spec.max_b_slope(crate::carpet::DEFAULT_GRID);
    if !(contraction < 1.0) {
        return Err(CarpetError::NonContractive(contraction));
    }
    let needed = if contraction == 0.0 {
        1
    } else {
        (tol.ln() / contraction.ln()).ceil().max(1.0) as usize
    };
    let n = depth.max(needed);
    let mut y = 0.5;
    for k in (0..n).rev() {
        y = spec.b(word.0[k % word.len()], y);
    }
    Ok(TailCoordinate {
        z: y,
        error_bound: contraction.powi(n as i32),
    })
}

/// Certified upper bounds `(α, β)` of the maximal horizontal and vertical
/// derivatives of the composition `f_{w_1} ∘ ... ∘ f_{w_n}`.
pub fn composition_bounds(spec: &CarpetSpec, word: &FullWord, grid_points: usize) -> Result<(f64, f64)> {
    if word.is_empty() {
        return Err(CarpetError::InvalidArgument("empty word".into()));
    }
    word.check(spec)?;
    let grid_points = grid_points.max(2);
    let h = 1.0 / (grid_points - 1) as f64;
    let n = word.len();

    let mut alpha_grid: f64 = 0.0;
    let mut beta_grid: f64 = 0.0;
    for y in unit_grid(grid_points) {
        let mut yk = y;
        let mut a = 1.0;
        let mut b = 1.0;
        for &(i, j) in word.0.iter().rev() {
            a *= spec.a_tilde(i, j, yk).abs();
            b *= spec.b_prime(i, yk).abs();
            yk = spec.b(i, yk);
        }
        alpha_grid = alpha_grid.max(a);
        beta_grid = beta_grid.max(b);
    }

    // Lipschitz bounds of the log-products in y: factor k depends on y
    // through b_{i_{k+1}} ∘ ... ∘ b_{i_n}.
    let log_lip = |poly: &crate::poly::Poly| {
        let min = unit_grid(grid_points).map(|y| poly.eval(y).abs()).fold(f64::INFINITY, f64::min)
            - poly.lipschitz_bound() * h;
        if poly.lipschitz_bound() == 0.0 {
            0.0
        } else {
            poly.lipschitz_bound() / min.max(f64::MIN_POSITIVE)
        }
    };
    let mut lip_a = 0.0;
    let mut lip_b = 0.0;
    let mut inner = 1.0;
    for k in (0..n).rev() {
        let (i, j) = word.0[k];
        lip_a += log_lip(&spec.rows()[i].cells[j].a_tilde) * inner;
        lip_b += log_lip(spec.b_prime_poly(i)) * inner;
        inner *= spec.b_prime_poly(i).sup_bound();
    }
    Ok((alpha_grid * (lip_a * h).exp(), beta_grid * (lip_b * h).exp()))
}

/// `b_{w_1} ∘ ... ∘ b_{w_n}([0, 1])` as `(lo, hi)`.
pub fn cylinder_interval(spec: &CarpetSpec, word: &RowWord) -> Result<(f64, f64)> {
    if word.is_empty() {
        return Err(CarpetError::InvalidArgument("empty word".into()));
    }
    word.check(spec)?;
    let p = push_through(spec, &word.0, 0.0);
    let q = push_through(spec, &word.0, 1.0);
    Ok((p.min(q), p.max(q)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::carpet::{s1, s1_eps};

    #[test]
    fn tail_fixed_points() {
        let s = s1();
        let z = |w: &str| tail_coordinate(&s, &w.parse().unwrap(), 1, 1e-12).unwrap();
        assert!(z("1").z.abs() < 1e-12);
        assert!((z("2").z - 1.0).abs() < 1e-12);
        let t = z("1 2");
        assert!((t.z - 0.2475 / (1.0 - 0.2025)).abs() <= 1e-12);
        assert!(t.error_bound <= 1e-12);
    }

    #[test]
    fn composition_bounds_constant_slopes() {
        let s = s1();
        let (a, b) = composition_bounds(&s, &"1.1 2.2".parse().unwrap(), 17).unwrap();
        assert!((a - 0.04).abs() < 1e-15);
        assert!((b - 0.2025).abs() < 1e-15);
    }

    #[test]
    fn composition_bounds_perturbed() {
        let s = s1_eps(0.05).unwrap();
        let (a, _) = composition_bounds(&s, &"1.1 1.2".parse().unwrap(), 2001).unwrap();
        assert!(a <= 0.2 * 0.2 * 1.05 * 1.05 + 1e-4, "{a}");
        // single letter: max |ã|
        let (a1, _) = composition_bounds(&s, &"1.3".parse().unwrap(), 2001).unwrap();
        assert!((0.21 - 1e-12..=0.21 + 5e-3).contains(&a1), "{a1}");
    }

    #[test]
    fn cylinder_intervals() {
        let s = s1();
        let iv = |w: &str| cylinder_interval(&s, &w.parse().unwrap()).unwrap();
        assert_eq!(iv("1"), (0.0, 0.45));
        let (lo, hi) = iv("2 1");
        assert!((lo - 0.55).abs() < 1e-15 && (hi - 0.7525).abs() < 1e-15);
        let (lo, hi) = iv("1 1 1");
        assert_eq!(lo, 0.0);
        assert!((hi - 0.091125).abs() < 1e-15);
    }

    #[test]
    fn word_text_forms() {
        let w: FullWord = "1.2 2.1".parse().unwrap();
        assert_eq!(w.0, vec![(0, 1), (1, 0)]);
        assert_eq!(w.to_string(), "1.2 2.1");
        assert_eq!(w.rows().to_string(), "1 2");
        assert!("1.0".parse::<FullWord>().is_err());
        assert!("12".parse::<FullWord>().is_err());
        assert!(w.check(&s1()).is_ok());
        assert!("1.3 2.3".parse::<FullWord>().unwrap().check(&s1()).is_err());
        assert_eq!(RowWord::all(2, 3).len(), 8);
        assert_eq!(FullWord::all(&s1(), 2).len(), 25);
    }
}
