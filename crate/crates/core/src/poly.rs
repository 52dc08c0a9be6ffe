//! Real polynomials on `[0, 1]` in the monomial basis.
//!
//! Every map of a carpet (the fiber maps `b_i`, the slopes `ã_ij` and the
//! offsets `u_ij`) is one of these. Evaluation is Horner; compositions are
//! only ever evaluated pointwise.

use crate::error::{CarpetError, Result};

/// Largest supported degree.
pub const MAX_DEGREE: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct Poly {
    coeffs: Vec<f64>,
}

impl Poly {
    /// Builds `Σ c_k y^k` from `c_0, c_1, ...`. Trailing zeros are trimmed.
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(CarpetError::MalformedSpec(
                "non-finite polynomial coefficient".into(),
            ));
        }
        let mut coeffs = coeffs;
        while coeffs.len() > 1 && *coeffs.last().unwrap() == 0.0 {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(0.0);
        }
        if coeffs.len() - 1 > MAX_DEGREE {
            return Err(CarpetError::MalformedSpec(format!(
                "polynomial degree {} exceeds {MAX_DEGREE}",
                coeffs.len() - 1
            )));
        }
        Ok(Poly { coeffs })
    }

    pub fn constant(c: f64) -> Self {
        Poly { coeffs: vec![c] }
    }

    /// `slope * y + offset`
    pub fn linear(slope: f64, offset: f64) -> Self {
        Poly::new(vec![offset, slope]).expect("finite linear coefficients")
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.len() == 1
    }

    #[inline]
    pub fn eval(&self, y: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * y + c)
    }

    pub fn derivative(&self) -> Poly {
        if self.coeffs.len() == 1 {
            return Poly::constant(0.0);
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, &c)| k as f64 * c)
            .collect();
        Poly { coeffs }
    }

    /// Upper bound of `sup_{[0,1]} |p|`.
    pub fn sup_bound(&self) -> f64 {
        self.coeffs.iter().map(|c| c.abs()).sum()
    }

    /// Upper bound of the Lipschitz constant of `p` on `[0,1]`.
    pub fn lipschitz_bound(&self) -> f64 {
        self.derivative().sup_bound()
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..n)
            .map(|k| {
                self.coeffs.get(k).copied().unwrap_or(0.0)
                    + other.coeffs.get(k).copied().unwrap_or(0.0)
            })
            .collect();
        Poly::new(coeffs).expect("sum of finite polynomials")
    }

    pub fn scale(&self, s: f64) -> Poly {
        Poly::new(self.coeffs.iter().map(|c| c * s).collect()).expect("finite scale")
    }

    pub fn mul(&self, other: &Poly) -> Result<Poly> {
        let mut coeffs = vec![0.0; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        Poly::new(coeffs)
    }

    /// Largest absolute coefficient difference (zero padded).
    pub fn coeff_distance(&self, other: &Poly) -> f64 {
        let n = self.coeffs.len().max(other.coeffs.len());
        (0..n)
            .map(|k| {
                (self.coeffs.get(k).copied().unwrap_or(0.0)
                    - other.coeffs.get(k).copied().unwrap_or(0.0))
                .abs()
            })
            .fold(0.0, f64::max)
    }

    /// Monomial coefficients of `Σ c_k T_k(2y − 1)`.
    pub fn from_shifted_chebyshev(cheb: &[f64]) -> Result<Poly> {
        // T_0 = 1, T_1 = s, T_{k+1} = 2 s T_k − T_{k−1} with s = 2y − 1.
        let s = Poly::linear(2.0, -1.0);
        let mut prev = Poly::constant(1.0);
        let mut cur = s.clone();
        let mut acc = Poly::constant(0.0);
        for (k, &c) in cheb.iter().enumerate() {
            let term = match k {
                0 => prev.clone(),
                1 => cur.clone(),
                _ => {
                    let next = s.scale(2.0).mul(&cur)?.add(&prev.scale(-1.0));
                    prev = std::mem::replace(&mut cur, next);
                    cur.clone()
                }
            };
            acc = acc.add(&term.scale(c));
        }
        Ok(acc)
    }
}

/// Uniform grid `0, h, 2h, ..., 1` with `n ≥ 2` points.
pub fn unit_grid(n: usize) -> impl Iterator<Item = f64> + Clone {
    let n = n.max(2);
    (0..n).map(move |k| k as f64 / (n - 1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn horner_and_derivative() {
        let p = Poly::new(vec![1.0, -2.0, 3.0]).unwrap();
        assert_eq!(p.eval(2.0), 1.0 - 4.0 + 12.0);
        assert_eq!(p.derivative().coeffs(), &[-2.0, 6.0]);
        assert_eq!(Poly::constant(5.0).derivative().coeffs(), &[0.0]);
    }

    #[test]
    fn rejects_bad_coefficients() {
        assert!(Poly::new(vec![f64::NAN]).is_err());
        assert!(Poly::new(vec![1.0; MAX_DEGREE + 2]).is_err());
        assert!(Poly::new(vec![1.0; MAX_DEGREE + 1]).is_ok());
        // trailing zeros do not count toward the degree
        let mut c = vec![1.0; MAX_DEGREE + 1];
        c.push(0.0);
        assert_eq!(Poly::new(c).unwrap().degree(), MAX_DEGREE);
    }

    #[test]
    fn chebyshev_conversion() {
        // T_3(s) = 4s^3 − 3s
        let p = Poly::from_shifted_chebyshev(&[0.0, 0.0, 0.0, 1.0]).unwrap();
        for y in unit_grid(11) {
            let s = 2.0 * y - 1.0;
            assert!((p.eval(y) - (4.0 * s * s * s - 3.0 * s)).abs() < 1e-12);
        }
    }

    #[test]
    fn bounds_dominate_grid_values() {
        let p = Poly::new(vec![0.3, -1.2, 0.7, 0.25]).unwrap();
        let dp = p.derivative();
        for y in unit_grid(101) {
            assert!(p.eval(y).abs() <= p.sup_bound());
            assert!(dp.eval(y).abs() <= p.lipschitz_bound());
        }
    }
}
