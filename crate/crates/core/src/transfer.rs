//! Transfer operators on the row shift.
//!
//! A function on the row shift is stored as `m` smooth components
//! `F(i, z)`: its value at `y = (i₁ i₂ ...)` is `F(i₁, z)` where `z` is the
//! tail coordinate of `(i₂ i₃ ...)`. The transfer operator then reads
//!
//! ```text
//! (𝓛f)(j, z) = Σ_i exp(g(i, b_j(z))) · f(i, b_j(z))
//! ```
//!
//! and is discretized by collocation at `K` Chebyshev points of the second
//! kind on `[0, 1]` with barycentric interpolation. Its Perron pair gives the
//! pressure `P(g)`, the eigenfunction `h` and the eigenmeasure; the Gibbs
//! state is `ν(f) = m(h f)`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::carpet::CarpetSpec;
use crate::coding::RowWord;
use crate::error::{CarpetError, Result};

pub const DEFAULT_K: usize = 64;
pub const MIN_K: usize = 8;

const POWER_TOL: f64 = 1e-14;
const POWER_MAX_ITER: usize = 20_000;
const SERIES_MAX_ITER: usize = 20_000;

/// Chebyshev points of the second kind mapped to `[0, 1]`, with barycentric
/// weights.
#[derive(Debug, Clone, PartialEq)]
pub struct ChebGrid {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl ChebGrid {
    pub fn new(k: usize) -> Result<Self> {
        if k < MIN_K {
            return Err(CarpetError::InvalidArgument(format!("K = {k} < {MIN_K}")));
        }
        let n = k - 1;
        let nodes = (0..k)
            .map(|l| 0.5 * (1.0 - (std::f64::consts::PI * l as f64 / n as f64).cos()))
            .collect();
        let weights = (0..k)
            .map(|l| {
                let s = if l % 2 == 0 { 1.0 } else { -1.0 };
                if l == 0 || l == n {
                    0.5 * s
                } else {
                    s
                }
            })
            .collect();
        Ok(ChebGrid { nodes, weights })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Lagrange basis values `ℓ_l(x)` for all nodes.
    pub fn basis(&self, x: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        if let Some(l) = self.nodes.iter().position(|&t| t == x) {
            out[l] = 1.0;
            return out;
        }
        let mut denom = 0.0;
        for (l, (&t, &w)) in self.nodes.iter().zip(&self.weights).enumerate() {
            let c = w / (x - t);
            out[l] = c;
            denom += c;
        }
        out.iter_mut().for_each(|v| *v /= denom);
        out
    }

    /// Interpolant of `values` evaluated at `x`.
    pub fn eval(&self, values: &[f64], x: f64) -> f64 {
        let mut num = 0.0;
        let mut denom = 0.0;
        for ((&t, &w), &v) in self.nodes.iter().zip(&self.weights).zip(values) {
            let d = x - t;
            if d == 0.0 {
                return v;
            }
            let c = w / d;
            num += c * v;
            denom += c;
        }
        num / denom
    }
}

/// A function on the row shift, `m` components sampled at the grid nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Observable {
    grid: Arc<ChebGrid>,
    m: usize,
    values: Vec<f64>,
}

impl Observable {
    pub fn from_fn(grid: &Arc<ChebGrid>, m: usize, mut f: impl FnMut(usize, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(m * grid.len());
        for i in 0..m {
            for &z in grid.nodes() {
                values.push(f(i, z));
            }
        }
        Observable {
            grid: grid.clone(),
            m,
            values,
        }
    }

    pub fn from_values(grid: &Arc<ChebGrid>, m: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != m * grid.len() {
            return Err(CarpetError::InvalidArgument(format!(
                "expected {} node values, got {}",
                m * grid.len(),
                values.len()
            )));
        }
        Ok(Observable {
            grid: grid.clone(),
            m,
            values,
        })
    }

    pub fn constant(grid: &Arc<ChebGrid>, m: usize, c: f64) -> Self {
        Observable {
            grid: grid.clone(),
            m,
            values: vec![c; m * grid.len()],
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn k(&self) -> usize {
        self.grid.len()
    }

    pub fn grid(&self) -> &Arc<ChebGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn component(&self, i: usize) -> &[f64] {
        let k = self.k();
        &self.values[i * k..(i + 1) * k]
    }

    /// `F(i, z)` at an arbitrary `z ∈ [0, 1]`.
    pub fn eval(&self, i: usize, z: f64) -> f64 {
        self.grid.eval(self.component(i), z)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Observable {
        Observable {
            grid: self.grid.clone(),
            m: self.m,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    fn zip_with(&self, other: &Observable, f: impl Fn(f64, f64) -> f64) -> Observable {
        debug_assert_eq!(self.values.len(), other.values.len());
        Observable {
            grid: self.grid.clone(),
            m: self.m,
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    pub fn plus(&self, other: &Observable) -> Observable {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn minus(&self, other: &Observable) -> Observable {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn times(&self, other: &Observable) -> Observable {
        self.zip_with(other, |a, b| a * b)
    }

    /// `self + c · other`
    pub fn axpy(&self, c: f64, other: &Observable) -> Observable {
        self.zip_with(other, |a, b| a + c * b)
    }

    pub fn scaled(&self, c: f64) -> Observable {
        self.map(|v| c * v)
    }

    pub fn shifted(&self, c: f64) -> Observable {
        self.map(|v| v + c)
    }

    /// Sup norm over the nodes.
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    pub fn oscillation(&self) -> f64 {
        let (lo, hi) = self
            .values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        hi - lo
    }
}

/// Spec-dependent part of the discretization: the nodes and the
/// interpolation matrices `E_j[k][l] = ℓ_l(b_j(z_k))`.
#[derive(Debug, Clone)]
pub struct Collocation {
    spec: CarpetSpec,
    grid: Arc<ChebGrid>,
    images: Vec<Vec<f64>>,
    interp: Vec<DMatrix<f64>>,
}

impl Collocation {
    pub fn new(spec: &CarpetSpec, k: usize) -> Result<Arc<Self>> {
        let grid = Arc::new(ChebGrid::new(k)?);
        let m = spec.m();
        let images: Vec<Vec<f64>> = (0..m)
            .map(|j| grid.nodes().iter().map(|&z| spec.b(j, z)).collect())
            .collect();
        let interp = images
            .iter()
            .map(|img| {
                let mut e = DMatrix::zeros(k, k);
                for (r, &x) in img.iter().enumerate() {
                    for (c, v) in grid.basis(x).into_iter().enumerate() {
                        e[(r, c)] = v;
                    }
                }
                e
            })
            .collect();
        Ok(Arc::new(Collocation {
            spec: spec.clone(),
            grid,
            images,
            interp,
        }))
    }

    pub fn spec(&self) -> &CarpetSpec {
        &self.spec
    }

    pub fn grid(&self) -> &Arc<ChebGrid> {
        &self.grid
    }

    pub fn m(&self) -> usize {
        self.spec.m()
    }

    pub fn k(&self) -> usize {
        self.grid.len()
    }

    pub fn observable(&self, f: impl FnMut(usize, f64) -> f64) -> Observable {
        Observable::from_fn(&self.grid, self.m(), f)
    }

    pub fn constant(&self, c: f64) -> Observable {
        Observable::constant(&self.grid, self.m(), c)
    }

    /// Collocation matrix of `𝓛` for the potential `g`.
    fn operator_matrix(&self, potential: &Observable) -> DMatrix<f64> {
        let (m, k) = (self.m(), self.k());
        let pot = DMatrix::from_fn(k, m, |l, i| potential.component(i)[l]);
        let mut mat = DMatrix::zeros(m * k, m * k);
        for j in 0..m {
            let e = &self.interp[j];
            // potential components at b_j(z_r)
            let at_images = e * &pot;
            for r in 0..k {
                for i in 0..m {
                    let w = at_images[(r, i)].exp();
                    for l in 0..k {
                        mat[(j * k + r, i * k + l)] = w * e[(r, l)];
                    }
                }
            }
        }
        mat
    }
}

fn normalize_max(v: &mut DVector<f64>) -> f64 {
    let s = v.iter().copied().fold(0.0, |a: f64, x| if x.abs() > a.abs() { x } else { a });
    *v /= s;
    s
}

/// Power iteration for the dominant eigenvector, normalized to max 1.
fn power_iteration(
    apply: impl Fn(&DVector<f64>) -> DVector<f64>,
    start: DVector<f64>,
) -> Result<(DVector<f64>, usize)> {
    let mut v = start;
    normalize_max(&mut v);
    for it in 1..=POWER_MAX_ITER {
        let mut w = apply(&v);
        let s = normalize_max(&mut w);
        if !s.is_finite() || s == 0.0 {
            return Err(CarpetError::NonPrimitive("power iteration broke down".into()));
        }
        let diff = (&w - &v).amax();
        v = w;
        if diff <= POWER_TOL {
            return Ok((v, it));
        }
    }
    Err(CarpetError::NonPrimitive(format!(
        "no dominant eigenvalue separated after {POWER_MAX_ITER} iterations"
    )))
}

/// Discretized transfer operator with its Perron data.
#[derive(Debug, Clone)]
pub struct GibbsSystem {
    col: Arc<Collocation>,
    potential: Observable,
    matrix: DMatrix<f64>,
    eigenvalue: f64,
    right: Observable,
    left: Vec<f64>,
    // ν(f) = Σ nu_weights · f at nodes
    nu_weights: Vec<f64>,
}

impl GibbsSystem {
    /// Builds the operator for `potential` and solves for its Perron pair.
    pub fn new(col: &Arc<Collocation>, potential: Observable) -> Result<Self> {
        Self::with_guess(col, potential, None)
    }

    /// Same as [`GibbsSystem::new`], starting the eigen-solve from the
    /// eigenvectors of a nearby system.
    pub fn with_guess(col: &Arc<Collocation>, potential: Observable, guess: Option<&GibbsSystem>) -> Result<Self> {
        if potential.m() != col.m() || potential.k() != col.k() {
            return Err(CarpetError::InvalidArgument("potential does not match the discretization".into()));
        }
        if potential.values().iter().any(|v| !v.is_finite()) {
            return Err(CarpetError::InvalidArgument("potential is not finite".into()));
        }
        let n = col.m() * col.k();
        let matrix = col.operator_matrix(&potential);
        let (r0, l0) = match guess {
            Some(g) if g.matrix.nrows() == n => (
                DVector::from_column_slice(g.right.values()),
                DVector::from_column_slice(&g.left),
            ),
            _ => (DVector::from_element(n, 1.0), DVector::from_element(n, 1.0)),
        };
        let (right, _) = power_iteration(|v| &matrix * v, r0)?;
        let mt = matrix.transpose();
        let (mut left, _) = power_iteration(|v| &mt * v, l0)?;

        let min_right = right.min();
        if !(min_right > 0.0) {
            return Err(CarpetError::NonPrimitive(format!(
                "eigenfunction not positive (min {min_right:e})"
            )));
        }
        let mr = &matrix * &right;
        let pairing = left.dot(&right);
        if !(pairing.abs() > 0.0) {
            return Err(CarpetError::NonPrimitive("left and right eigenvectors are orthogonal".into()));
        }
        let eigenvalue = left.dot(&mr) / pairing;
        if !(eigenvalue > 0.0) {
            return Err(CarpetError::NonPrimitive(format!("leading eigenvalue {eigenvalue}")));
        }
        left /= pairing;
        let nu_weights: Vec<f64> = left.iter().zip(right.iter()).map(|(l, r)| l * r).collect();
        let right = Observable::from_values(col.grid(), col.m(), right.as_slice().to_vec())?;
        Ok(GibbsSystem {
            col: col.clone(),
            potential,
            matrix,
            eigenvalue,
            right,
            left: left.as_slice().to_vec(),
            nu_weights,
        })
    }

    pub fn collocation(&self) -> &Arc<Collocation> {
        &self.col
    }

    pub fn potential(&self) -> &Observable {
        &self.potential
    }

    /// `P(g) = log λ`.
    pub fn pressure(&self) -> f64 {
        self.eigenvalue.ln()
    }

    pub fn eigenvalue(&self) -> f64 {
        self.eigenvalue
    }

    /// Positive eigenfunction `h`, max-normalized.
    pub fn right_eigen(&self) -> &Observable {
        &self.right
    }

    /// Eigenmeasure weights, normalized so that pairing with `h` gives 1.
    pub fn left_eigen(&self) -> &[f64] {
        &self.left
    }

    /// Residual `‖𝓛h − λh‖∞ / ‖h‖∞`.
    pub fn eigen_residual(&self) -> f64 {
        let h = DVector::from_column_slice(self.right.values());
        ((&self.matrix * &h) - &h * self.eigenvalue).amax() / h.amax()
    }

    /// `∫ f dν`.
    pub fn integrate(&self, f: &Observable) -> f64 {
        self.nu_weights.iter().zip(f.values()).map(|(w, v)| w * v).sum()
    }

    /// Normalized operator `𝓛̂f = e^{−P} h⁻¹ 𝓛(h f)`.
    pub fn normalized_apply(&self, f: &Observable) -> Observable {
        let h = self.right.values();
        let hf = DVector::from_iterator(h.len(), h.iter().zip(f.values()).map(|(a, b)| a * b));
        let out = &self.matrix * hf;
        let values = out
            .iter()
            .zip(h)
            .map(|(v, hh)| v / (self.eigenvalue * hh))
            .collect();
        Observable {
            grid: f.grid.clone(),
            m: f.m,
            values,
        }
    }

    /// `ν(f)` by iterating `𝓛̂` until the iterate is constant within `tol`.
    pub fn expectation_by_iteration(&self, f: &Observable, tol: f64) -> Result<f64> {
        let mut cur = f.clone();
        for _ in 0..SERIES_MAX_ITER {
            if cur.oscillation() <= tol {
                let (lo, hi) = cur
                    .values()
                    .iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
                return Ok(0.5 * (lo + hi));
            }
            cur = self.normalized_apply(&cur);
        }
        Err(CarpetError::NoConvergence {
            what: "normalized operator iteration",
            iterations: SERIES_MAX_ITER,
        })
    }

    /// `Σ_{n≥0} ∫ a · 𝓛̂ⁿ(b − ∫b) dν`, i.e. `Σ_{n≥0} cov(a ∘ Sⁿ, b)`.
    fn one_sided_series(&self, a: &Observable, b: &Observable, tol: f64) -> Result<f64> {
        let a_norm = a.sup_norm().max(f64::MIN_POSITIVE);
        let mut f = b.shifted(-self.integrate(b));
        let mut total = 0.0;
        let mut prev_sup = f.sup_norm();
        let mut ratio: f64 = 0.0;
        for n in 0..SERIES_MAX_ITER {
            total += self.integrate(&a.times(&f));
            let next = self.normalized_apply(&f);
            let next = next.shifted(-self.integrate(&next));
            let sup = next.sup_norm();
            if sup == 0.0 {
                return Ok(total);
            }
            if n >= 2 && prev_sup > 0.0 {
                ratio = ratio.max(sup / prev_sup).min(1.0);
            }
            if n >= 2 && ratio < 1.0 && sup * a_norm / (1.0 - ratio) <= tol {
                return Ok(total + self.integrate(&a.times(&next)));
            }
            // past the rounding floor
            if n >= 2 && sup <= 1e-15 * b.sup_norm() {
                return Ok(total);
            }
            prev_sup = sup;
            // the ratio is re-measured from recent steps only
            if n % 16 == 15 {
                ratio = 0.0;
            }
            f = next;
        }
        Err(CarpetError::NoConvergence {
            what: "correlation series",
            iterations: SERIES_MAX_ITER,
        })
    }

    /// Evaluates the single-branch function `y ↦ exp(S_n ĝ(w y)) · Π weight`
    /// at every node and integrates it against `ν`. `weight(k, i_k, tail_k)`
    /// receives the position, the row symbol and the tail coordinate of the
    /// shifted sequence at that position.
    pub fn branch_integral(&self, word: &RowWord, weight: impl Fn(usize, usize, f64) -> f64) -> Result<f64> {
        if word.is_empty() {
            return Err(CarpetError::InvalidArgument("empty word".into()));
        }
        word.check(self.col.spec())?;
        let spec = self.col.spec();
        let k = self.col.k();
        let n = word.len();
        let log_lambda = self.pressure();
        let mut total = 0.0;
        for j in 0..self.col.m() {
            for r in 0..k {
                let mut tail = self.col.images[j][r];
                let mut log_sum = -(n as f64) * log_lambda;
                let mut wprod = 1.0;
                let mut head = 0.0;
                for pos in (0..n).rev() {
                    let i = word.0[pos];
                    log_sum += self.potential.eval(i, tail);
                    wprod *= weight(pos, i, tail);
                    if pos == 0 {
                        head = self.right.eval(i, tail);
                    } else {
                        tail = spec.b(i, tail);
                    }
                }
                let idx = j * k + r;
                let value = log_sum.exp() * head / self.right.values()[idx] * wprod;
                total += self.nu_weights[idx] * value;
            }
        }
        Ok(total)
    }
}

/// Builds the collocation for `spec` at `k` nodes and the Gibbs system of
/// `potential`, given as a function of `(row, tail coordinate)`.
pub fn build_operator(spec: &CarpetSpec, potential: impl FnMut(usize, f64) -> f64, k: usize) -> Result<GibbsSystem> {
    let col = Collocation::new(spec, k)?;
    let pot = col.observable(potential);
    GibbsSystem::new(&col, pot)
}

/// `∫ h dν`.
pub fn expectation(sys: &GibbsSystem, h: &Observable, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(CarpetError::InvalidArgument("tol must be positive".into()));
    }
    Ok(sys.integrate(h))
}

/// `h_ν = P(g) − ∫ g dν`.
pub fn entropy(sys: &GibbsSystem, tol: f64) -> Result<f64> {
    let h = sys.pressure() - expectation(sys, sys.potential(), tol)?;
    Ok(if h < 0.0 && h > -tol { 0.0 } else { h })
}

/// `ν([i₁ ... i_n])`.
pub fn cylinder_mass(sys: &GibbsSystem, word: &RowWord, _tol: f64) -> Result<f64> {
    sys.branch_integral(word, |_, _, _| 1.0)
}

/// Correlation form `Q(h₁, h₂) = Σ_{n∈ℤ} cov(h₁ ∘ S^{|n|}, h₂)` ordered as
/// the two one-sided series minus the shared `n = 0` term. It is the
/// derivative `d/ds ∫ h₂ dν_{g + s h₁}`; on the diagonal it is the
/// asymptotic variance `d²/ds² P(g + s h)`.
pub fn correlation_form(sys: &GibbsSystem, h1: &Observable, h2: &Observable, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(CarpetError::InvalidArgument("tol must be positive".into()));
    }
    let forward = sys.one_sided_series(h1, h2, tol)?;
    let backward = sys.one_sided_series(h2, h1, tol)?;
    let c1 = h1.shifted(-sys.integrate(h1));
    let c2 = h2.shifted(-sys.integrate(h2));
    Ok(forward + backward - sys.integrate(&c1.times(&c2)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::carpet::{s1, s1_eps};

    #[test]
    fn barycentric_reproduces_polynomials() {
        let grid = Arc::new(ChebGrid::new(12).unwrap());
        let p = |z: f64| 1.0 - 3.0 * z + 2.0 * z.powi(5);
        let obs = Observable::from_fn(&grid, 1, |_, z| p(z));
        for z in [0.0, 0.123, 0.5, 0.77, 1.0] {
            assert!((obs.eval(0, z) - p(z)).abs() < 1e-13);
        }
        let basis = grid.basis(0.3);
        assert!((basis.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        assert!(ChebGrid::new(4).is_err());
    }

    #[test]
    fn constant_potential_pressure() {
        let sys = build_operator(&s1(), |_, _| 0.7, 32).unwrap();
        assert!((sys.pressure() - (2f64.ln() + 0.7)).abs() < 1e-13);
        assert!((entropy(&sys, 1e-12).unwrap() - 2f64.ln()).abs() < 1e-13);
        let mass = cylinder_mass(&sys, &"1 1 1".parse().unwrap(), 1e-12).unwrap();
        assert!((mass - 0.125).abs() < 1e-13);
    }

    #[test]
    fn bernoulli_potential() {
        let q = [0.3f64, 0.7];
        let sys = build_operator(&s1(), |i, _| q[i].ln(), 32).unwrap();
        assert!(sys.pressure().abs() < 1e-13);
        let ind = sys.collocation().observable(|i, _| if i == 0 { 1.0 } else { 0.0 });
        assert!((expectation(&sys, &ind, 1e-12).unwrap() - 0.3).abs() < 1e-13);
        let by_iter = sys.expectation_by_iteration(&ind, 1e-13).unwrap();
        assert!((by_iter - 0.3).abs() < 1e-12);
        let mass = cylinder_mass(&sys, &"1 2".parse().unwrap(), 1e-12).unwrap();
        assert!((mass - 0.21).abs() < 1e-13);
        let ent = entropy(&sys, 1e-12).unwrap();
        assert!((ent + 0.3 * 0.3f64.ln() + 0.7 * 0.7f64.ln()).abs() < 1e-13);
        let var = correlation_form(&sys, &ind, &ind, 1e-13).unwrap();
        assert!((var - 0.21).abs() < 1e-12);
    }

    #[test]
    fn bowen_root_for_constant_slope() {
        // P(−s ψ) with ψ = −log 0.45 on two rows
        let s = 2f64.ln() / (1.0 / 0.45f64).ln();
        let sys = build_operator(&s1(), |_, _| s * 0.45f64.ln(), 16).unwrap();
        assert!(sys.pressure().abs() < 1e-13);
        assert!((s - 0.8680532245877164).abs() < 1e-12);
    }

    #[test]
    fn eigen_pair_is_consistent() {
        let spec = s1_eps(0.05).unwrap();
        let sys = build_operator(&spec, |i, z| (0.3 + 0.2 * z * z).ln() * (1.0 + i as f64), 48).unwrap();
        assert!(sys.eigen_residual() < 1e-12);
        let one = sys.collocation().constant(1.0);
        assert!((sys.integrate(&one) - 1.0).abs() < 1e-13);
        // invariance ν(𝓛̂f) = ν(f)
        let f = sys.collocation().observable(|i, z| z.sin() + i as f64);
        let lf = sys.normalized_apply(&f);
        assert!((sys.integrate(&lf) - sys.integrate(&f)).abs() < 1e-12);
        let g = sys.collocation().observable(|_, z| z);
        assert!(correlation_form(&sys, &one, &g, 1e-12).unwrap().abs() < 1e-12);
    }

    #[test]
    fn pressure_derivatives_match_finite_differences() {
        let spec = s1_eps(0.05).unwrap();
        let col = Collocation::new(&spec, 48).unwrap();
        let g = col.observable(|i, z| -0.8 * spec.b_prime(i, z).ln() + 0.2 * z * z - 0.3 * i as f64);
        let h = col.observable(|i, z| (2.0 * z).cos() + 0.5 * i as f64);
        let p = |s: f64| GibbsSystem::new(&col, g.axpy(s, &h)).unwrap().pressure();
        let sys = GibbsSystem::new(&col, g.clone()).unwrap();
        let step = 1e-3;
        let d1 = (-p(2.0 * step) + 8.0 * p(step) - 8.0 * p(-step) + p(-2.0 * step)) / (12.0 * step);
        let d2 = (-p(2.0 * step) + 16.0 * p(step) - 30.0 * p(0.0) + 16.0 * p(-step) - p(-2.0 * step))
            / (12.0 * step * step);
        assert!((d1 - sys.integrate(&h)).abs() < 1e-9);
        let q = correlation_form(&sys, &h, &h, 1e-14).unwrap();
        assert!((d2 - q).abs() < 1e-5, "{d2} vs {q}");
    }
}
