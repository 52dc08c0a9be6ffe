//! Measures of full dimension through relativized thermodynamic formalism.
//!
//! With `ψ(i, z) = −log|b_i'(z)|` on the row shift and
//! `φ((i, j), z) = −log|ã_ij(z)|` on the full shift, class 𝓛 makes `−tφ` a
//! basic potential, so the relativized pressure has the one-step form
//!
//! ```text
//! A(i, z; t) = Σ_j |ã_ij(z)|^t
//! ```
//!
//! and the fiber measures are products of the weights `|ã_ij|^t / A`. The
//! dimension `D` and the optimal parameter `t*` solve `P(Φ_t) = 0`,
//! `dP(Φ_t)/dt = 0` for the family
//!
//! ```text
//! Φ_t = (t − D) ψ + β(t) log A_t,    ∫ log A_t dν_{Φ_t} = 0.
//! ```
//!
//! A strictly negative `d²P(Φ_t)/dt²` over the admissible interval rules
//! out a second stationary point, hence a second measure of full dimension.

use std::sync::Arc;

use rayon::prelude::*;

use crate::carpet::{validate_carpet, CarpetSpec, DEFAULT_GRID};
use crate::coding::{FullWord, RowWord};
use crate::error::{CarpetError, Result};
use crate::poly::unit_grid;
use crate::roots::{brent, brent_with_values, golden_max};
use crate::transfer::{correlation_form, entropy, Collocation, GibbsSystem, Observable, DEFAULT_K};

/// Variance of `log A` under `ν` below which the family is degenerate.
pub const DEGENERACY_THRESHOLD: f64 = 1e-12;
/// Default period bound for the periodic-orbit scan of `t(ν)`.
pub const DEFAULT_MAX_PERIOD: usize = 6;
/// Default `ε` as a fraction of `t̄ − t̲`.
pub const DEFAULT_EPS_FRACTION: f64 = 0.05;

const Q_TOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Collocation nodes.
    pub k: usize,
    /// Root tolerance for `β`, `dP/dt` and `P`.
    pub tol: f64,
    /// Period bound for the `t`-range scan.
    pub max_period: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            k: DEFAULT_K,
            tol: 1e-10,
            max_period: DEFAULT_MAX_PERIOD,
        }
    }
}

// ---------------------------------------------------------------------------
// A-family

/// Closed forms for `A_{−tφ}` and its `t`-derivatives.
#[derive(Debug, Clone)]
pub struct AFamily {
    spec: CarpetSpec,
}

/// `log A`, `d/dt log A`, `d²/dt² log A` at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AMoments {
    pub log_a: f64,
    pub dlog_a: f64,
    pub d2log_a: f64,
}

/// Moments from the log-slopes `log|ã_ij(z)|` of one fiber.
fn moments_from_logs(logs: impl Iterator<Item = f64> + Clone, t: f64) -> AMoments {
    let top = logs.clone().fold(f64::NEG_INFINITY, |a, l| a.max(t * l));
    let mut sum = 0.0;
    let mut s1 = 0.0;
    let mut s2 = 0.0;
    for l in logs {
        let w = (t * l - top).exp();
        sum += w;
        s1 += w * l;
        s2 += w * l * l;
    }
    let mean = s1 / sum;
    AMoments {
        log_a: top + sum.ln(),
        dlog_a: mean,
        d2log_a: (s2 / sum - mean * mean).max(0.0),
    }
}

impl AFamily {
    pub fn new(spec: &CarpetSpec) -> Self {
        AFamily { spec: spec.clone() }
    }

    pub fn spec(&self) -> &CarpetSpec {
        &self.spec
    }

    /// `log|ã_ij(z)| = −φ`
    #[inline]
    pub fn log_slope(&self, i: usize, j: usize, z: f64) -> f64 {
        self.spec.a_tilde(i, j, z).abs().ln()
    }

    pub fn moments(&self, i: usize, z: f64, t: f64) -> AMoments {
        moments_from_logs((0..self.spec.row_len(i)).map(|j| self.log_slope(i, j, z)), t)
    }

    pub fn a(&self, i: usize, z: f64, t: f64) -> f64 {
        self.moments(i, z, t).log_a.exp()
    }

    pub fn log_a(&self, i: usize, z: f64, t: f64) -> f64 {
        self.moments(i, z, t).log_a
    }

    pub fn dlog_a(&self, i: usize, z: f64, t: f64) -> f64 {
        self.moments(i, z, t).dlog_a
    }

    pub fn d2log_a(&self, i: usize, z: f64, t: f64) -> f64 {
        self.moments(i, z, t).d2log_a
    }

    /// Fiber weights `w_j = |ã_ij(z)|^t / A(i, z; t)`.
    pub fn fiber_weights(&self, t: f64, row: usize, z: f64) -> Vec<f64> {
        let logs: Vec<f64> = (0..self.spec.row_len(row)).map(|j| t * self.log_slope(row, j, z)).collect();
        let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = logs.iter().map(|l| (l - top).exp()).collect();
        let sum: f64 = w.iter().sum();
        w.into_iter().map(|x| x / sum).collect()
    }

    /// `ψ(i, z) = −log|b_i'(z)|` on the collocation grid.
    pub fn psi(&self, col: &Collocation) -> Observable {
        col.observable(|i, z| -self.spec.b_prime(i, z).abs().ln())
    }

    /// `log A`, `d/dt log A` and `d²/dt² log A` on the collocation grid.
    pub fn observables(&self, col: &Collocation, t: f64) -> AObservables {
        let m = col.m();
        let mut la = Vec::with_capacity(m * col.k());
        let mut d1 = Vec::with_capacity(m * col.k());
        let mut d2 = Vec::with_capacity(m * col.k());
        for i in 0..m {
            for &z in col.grid().nodes() {
                let mo = self.moments(i, z, t);
                la.push(mo.log_a);
                d1.push(mo.dlog_a);
                d2.push(mo.d2log_a);
            }
        }
        let mk = |v| Observable::from_values(col.grid(), m, v).expect("sized by the grid");
        AObservables {
            t,
            log_a: mk(la),
            dlog_a: mk(d1),
            d2log_a: mk(d2),
        }
    }
}

#[derive(Debug, Clone)]
pub struct AObservables {
    pub t: f64,
    pub log_a: Observable,
    pub dlog_a: Observable,
    pub d2log_a: Observable,
}

pub fn a_family(spec: &CarpetSpec) -> AFamily {
    AFamily::new(spec)
}

pub fn fiber_weights(af: &AFamily, t: f64, row: usize, z: f64) -> Result<Vec<f64>> {
    if row >= af.spec.m() {
        return Err(CarpetError::InvalidArgument(format!("row {} out of range", row + 1)));
    }
    if !(t >= 0.0) || !(0.0..=1.0).contains(&z) {
        return Err(CarpetError::InvalidArgument("need t ≥ 0 and z ∈ [0,1]".into()));
    }
    Ok(af.fiber_weights(t, row, z))
}

// ---------------------------------------------------------------------------
// t(ν) and the t-range

fn decreasing_root(mut f: impl FnMut(f64) -> Result<f64>, tol: f64, what: &'static str) -> Result<f64> {
    let f0 = f(0.0)?;
    if f0 <= 0.0 {
        return if f0 == 0.0 {
            Ok(0.0)
        } else {
            Err(CarpetError::BracketFailure { what, lo: 0.0, hi: 0.0 })
        };
    }
    let mut hi = 1.0;
    let mut fhi = f(hi)?;
    while fhi > 0.0 {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(CarpetError::BracketFailure { what, lo: 0.0, hi });
        }
        fhi = f(hi)?;
    }
    brent_with_values(f, (0.0, f0), (hi, fhi), 1e-15, tol, what)
}

/// The unique `t ≥ 0` with `∫ log A_{−tφ} dν = 0`.
pub fn t_of_measure(af: &AFamily, nu: &GibbsSystem, tol: f64) -> Result<f64> {
    let col = nu.collocation().clone();
    decreasing_root(|t| Ok(nu.integrate(&af.observables(&col, t).log_a)), tol, "t(nu)")
}

/// Extremes of `t(ν)` over periodic-orbit measures, plus outer bounds from
/// the pointwise envelope of `log A`.
#[derive(Debug, Clone, PartialEq)]
pub struct TRange {
    pub t_lower: f64,
    pub t_upper: f64,
    pub argmin: RowWord,
    pub argmax: RowWord,
    /// Root of `t ↦ min_{i,z} log A(i, z; t)`; a lower bound of `t̲`.
    pub outer_lower: f64,
    /// Root of `t ↦ max_{i,z} log A(i, z; t)`; an upper bound of `t̄`.
    pub outer_upper: f64,
}

impl TRange {
    pub fn width(&self) -> f64 {
        self.t_upper - self.t_lower
    }
}

/// `t(ν)` for the uniform measure on the periodic orbit of `word`.
pub fn t_of_periodic_orbit(af: &AFamily, word: &RowWord, tol: f64) -> Result<f64> {
    let p = word.len();
    // tail coordinate of the sequence starting right after position k
    let tails: Vec<f64> = (0..p)
        .map(|k| {
            let rotated = RowWord((0..p).map(|s| word.0[(k + 1 + s) % p]).collect());
            crate::coding::tail_coordinate(&af.spec, &rotated, 1, 1e-15).map(|tc| tc.z)
        })
        .collect::<Result<_>>()?;
    decreasing_root(
        |t| {
            Ok((0..p).map(|k| af.log_a(word.0[k], tails[k], t)).sum::<f64>() / p as f64)
        },
        tol,
        "periodic t(nu)",
    )
}

pub fn t_range(af: &AFamily, max_period: usize) -> Result<TRange> {
    if max_period == 0 {
        return Err(CarpetError::InvalidArgument("max_period must be ≥ 1".into()));
    }
    let tol = 1e-14;
    let m = af.spec.m();
    let words: Vec<RowWord> = (1..=max_period).flat_map(|p| RowWord::all(m, p)).collect();
    let values: Vec<(f64, RowWord)> = words
        .into_par_iter()
        .map(|w| t_of_periodic_orbit(af, &w, tol).map(|t| (t, w)))
        .collect::<Result<_>>()?;
    let mut lo = &values[0];
    let mut hi = &values[0];
    for v in &values {
        if v.0 < lo.0 {
            lo = v;
        }
        if v.0 > hi.0 {
            hi = v;
        }
    }
    let zs: Vec<f64> = unit_grid(DEFAULT_GRID).collect();
    let envelope = |t: f64, pick_max: bool| {
        let mut best = if pick_max { f64::NEG_INFINITY } else { f64::INFINITY };
        for i in 0..m {
            for &z in &zs {
                let v = af.log_a(i, z, t);
                best = if pick_max { best.max(v) } else { best.min(v) };
            }
        }
        best
    };
    let outer_lower = decreasing_root(|t| Ok(envelope(t, false)), tol, "outer t lower")?;
    let outer_upper = decreasing_root(|t| Ok(envelope(t, true)), tol, "outer t upper")?;
    Ok(TRange {
        t_lower: lo.0,
        t_upper: hi.0,
        argmin: lo.1.clone(),
        argmax: hi.1.clone(),
        outer_lower: outer_lower.min(lo.0),
        outer_upper: outer_upper.max(hi.0),
    })
}

// ---------------------------------------------------------------------------
// The Φ_t family

/// `Φ_t = (t − D) ψ + β(t) log A_t` for a candidate `D`.
#[derive(Debug, Clone)]
pub struct PhiFamily {
    af: AFamily,
    col: Arc<Collocation>,
    psi: Observable,
    d: f64,
}

/// Solved `β(t)` with the Gibbs state `ν_{Φ_t}`.
#[derive(Debug, Clone)]
pub struct BetaSolution {
    pub t: f64,
    pub beta: f64,
    pub nu: GibbsSystem,
    pub a: AObservables,
    /// `∫ log A dν`, the defining residual.
    pub residual: f64,
}

/// One point of the pressure curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub t: f64,
    pub p: f64,
    pub dpdt: f64,
    pub d2pdt2: f64,
    pub beta: f64,
    pub beta_prime: f64,
    pub rho: f64,
    /// `∫ ψ dν`
    pub int_psi: f64,
    /// `∫ φ dμ = −∫ d/dt log A dν`
    pub int_phi: f64,
}

impl PhiFamily {
    pub fn new(spec: &CarpetSpec, d_candidate: f64, k: usize) -> Result<Self> {
        let col = Collocation::new(spec, k)?;
        Ok(Self::with_collocation(AFamily::new(spec), col, d_candidate))
    }

    pub fn with_collocation(af: AFamily, col: Arc<Collocation>, d_candidate: f64) -> Self {
        let psi = af.psi(&col);
        PhiFamily {
            af,
            col,
            psi,
            d: d_candidate,
        }
    }

    pub fn with_d(&self, d_candidate: f64) -> Self {
        PhiFamily {
            d: d_candidate,
            ..self.clone()
        }
    }

    pub fn d_candidate(&self) -> f64 {
        self.d
    }

    pub fn a_family(&self) -> &AFamily {
        &self.af
    }

    pub fn collocation(&self) -> &Arc<Collocation> {
        &self.col
    }

    pub fn psi(&self) -> &Observable {
        &self.psi
    }

    /// `(t − D) ψ + β log A_t`
    pub fn potential(&self, a: &AObservables, beta: f64) -> Observable {
        self.psi.scaled(a.t - self.d).axpy(beta, &a.log_a)
    }

    fn system(&self, a: &AObservables, beta: f64, guess: Option<&GibbsSystem>) -> Result<GibbsSystem> {
        GibbsSystem::with_guess(&self.col, self.potential(a, beta), guess)
    }

    /// Solves `∫ log A_t dν_{(t,β)} = 0` for `β`, optionally warm-started.
    pub fn solve_beta(&self, t: f64, tol: f64, warm: Option<&BetaSolution>) -> Result<BetaSolution> {
        let a = self.af.observables(&self.col, t);
        let beta0 = warm.map(|w| w.beta).unwrap_or(0.0);
        let mut last = self.system(&a, beta0, warm.map(|w| &w.nu))?;
        let f0 = last.integrate(&a.log_a);
        let second = last.integrate(&a.log_a.times(&a.log_a));
        let variance = second - f0 * f0;
        if variance < DEGENERACY_THRESHOLD {
            return Err(CarpetError::DegenerateFamily { variance });
        }
        if f0.abs() <= tol {
            return Ok(BetaSolution {
                t,
                beta: beta0,
                nu: last,
                a,
                residual: f0,
            });
        }
        // F is increasing in β; walk away from β0 until the sign flips
        let dir = if f0 < 0.0 { 1.0 } else { -1.0 };
        let mut step = (f0.abs() / variance).clamp(1e-3, 10.0) * 1.5;
        let mut prev = (beta0, f0);
        let far = loop {
            let b = prev.0 + dir * step;
            if b.abs() > 1e6 {
                return Err(CarpetError::BracketFailure {
                    what: "beta(t)",
                    lo: beta0.min(b),
                    hi: beta0.max(b),
                });
            }
            let sys = self.system(&a, b, Some(&last))?;
            let fb = sys.integrate(&a.log_a);
            last = sys;
            if fb.signum() != f0.signum() || fb == 0.0 {
                break (b, fb);
            }
            prev = (b, fb);
            step *= 2.0;
        };
        let cache = std::cell::RefCell::new(last);
        let root = brent_with_values(
            |b| {
                let sys = self.system(&a, b, Some(&cache.borrow()))?;
                let v = sys.integrate(&a.log_a);
                *cache.borrow_mut() = sys;
                Ok(v)
            },
            prev,
            far,
            1e-15,
            tol,
            "beta(t)",
        )?;
        let last = cache.into_inner();
        let nu = if last.potential() == &self.potential(&a, root) {
            last
        } else {
            self.system(&a, root, Some(&last))?
        };
        let residual = nu.integrate(&a.log_a);
        Ok(BetaSolution {
            t,
            beta: root,
            nu,
            a,
            residual,
        })
    }

    /// `P(Φ_t)` and `dP(Φ_t)/dt` only.
    pub fn pressure_and_slope(&self, sol: &BetaSolution) -> (f64, f64, f64) {
        let int_psi = sol.nu.integrate(&self.psi);
        let int_dlog = sol.nu.integrate(&sol.a.dlog_a);
        (sol.nu.pressure(), int_psi + sol.beta * int_dlog, int_psi)
    }

    /// Full pressure-curve point at a solved `β(t)`.
    pub fn curve_point(&self, sol: &BetaSolution) -> Result<CurvePoint> {
        let nu = &sol.nu;
        let a = &sol.a;
        let beta = sol.beta;
        let int_psi = nu.integrate(&self.psi);
        let int_dlog = nu.integrate(&a.dlog_a);
        let int_phi = -int_dlog;
        let dpdt = int_psi + beta * int_dlog;

        let f_beta = correlation_form(nu, &a.log_a, &a.log_a, Q_TOL)?;
        let dpot_dt = self.psi.axpy(beta, &a.dlog_a);
        let f_t = int_dlog + correlation_form(nu, &a.log_a, &dpot_dt, Q_TOL)?;
        let beta_prime = -f_t / f_beta;
        let phi_dot = dpot_dt.axpy(beta_prime, &a.log_a);
        let d2pdt2 = -beta_prime * int_phi
            + beta * nu.integrate(&a.d2log_a)
            + correlation_form(nu, &self.psi, &phi_dot, Q_TOL)?
            + beta * correlation_form(nu, &a.dlog_a, &phi_dot, Q_TOL)?;
        Ok(CurvePoint {
            t: sol.t,
            p: nu.pressure(),
            dpdt,
            d2pdt2,
            beta,
            beta_prime,
            rho: int_psi / int_phi,
            int_psi,
            int_phi,
        })
    }
}

/// `β(t)` and `ν_{Φ_t}`.
pub fn beta_of_t(pf: &PhiFamily, t: f64, tol: f64) -> Result<(f64, GibbsSystem)> {
    let sol = pf.solve_beta(t, tol, None)?;
    Ok((sol.beta, sol.nu))
}

/// `P`, its first two `t`-derivatives, `β`, `β'` and `ρ` at `t`.
pub fn pressure_curve(pf: &PhiFamily, t: f64, tol: f64) -> Result<CurvePoint> {
    let sol = pf.solve_beta(t, tol, None)?;
    pf.curve_point(&sol)
}

// ---------------------------------------------------------------------------
// Solving for the dimension

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    pub p_at_star: f64,
    pub dpdt_at_star: f64,
    pub d2pdt2_at_star: f64,
    pub beta_prime_at_star: f64,
    /// `∫ log A dν` at the solution.
    pub beta_residual: f64,
    pub outer_iterations: usize,
    pub t_range: TRange,
}

#[derive(Debug, Clone)]
pub struct FullDimSolution {
    pub d: f64,
    pub t_star: f64,
    /// `NaN` for degenerate carpets, where `β` is undefined.
    pub beta_star: f64,
    pub rho_star: f64,
    /// Base measure `ν_{Φ_{t*}}`.
    pub nu: GibbsSystem,
    pub diagnostics: Diagnostics,
    /// Solved through the closed form for constant-slope trivial carpets.
    pub degenerate: bool,
    pub config: SolverConfig,
    af: AFamily,
}

impl FullDimSolution {
    pub fn a_family(&self) -> &AFamily {
        &self.af
    }

    pub fn spec(&self) -> &CarpetSpec {
        self.af.spec()
    }
}

struct InnerMax {
    sol: BetaSolution,
    p: f64,
    dpdt: f64,
    int_psi: f64,
}

/// Maximizes `t ↦ P(Φ_t)` for the candidate `D` of `pf`.
fn inner_maximize(pf: &PhiFamily, lo: f64, hi: f64, tol: f64, warm: Option<&BetaSolution>) -> Result<InnerMax> {
    let warm_cell = std::cell::RefCell::new(warm.cloned());
    let eval = |t: f64| -> Result<(BetaSolution, f64, f64, f64)> {
        let guess = warm_cell.borrow().clone();
        let sol = pf.solve_beta(t, tol * 1e-2, guess.as_ref())?;
        let (p, dpdt, int_psi) = pf.pressure_and_slope(&sol);
        *warm_cell.borrow_mut() = Some(sol.clone());
        Ok((sol, p, dpdt, int_psi))
    };
    let (_, _, d_lo, _) = eval(lo)?;
    let (_, _, d_hi, _) = eval(hi)?;
    let t_star = if d_lo > 0.0 && d_hi < 0.0 {
        brent_with_values(|t| Ok(eval(t)?.2), (lo, d_lo), (hi, d_hi), 1e-15, tol, "dP/dt")?
    } else {
        // maximum at (or beyond) an end of the bracket
        golden_max(|t| Ok(eval(t)?.1), lo, hi, 1e-12)?.0
    };
    let (sol, p, dpdt, int_psi) = eval(t_star)?;
    Ok(InnerMax { sol, p, dpdt, int_psi })
}

/// Closed form for constant-slope carpets whose rows all carry the same
/// multiset of slopes: `D = s₀ + t₀` with `Σ_i |b_i'|^{s₀} = 1` and
/// `Σ_j |a_1j|^{t₀} = 1`.
fn degenerate_solution(spec: &CarpetSpec, cfg: &SolverConfig, t_range: TRange) -> Result<FullDimSolution> {
    let constant_b = spec.rows().iter().all(|r| r.b.degree() <= 1);
    let constant_a = spec.rows().iter().all(|r| r.cells.iter().all(|c| c.a_tilde.is_constant()));
    let mut rows: Vec<Vec<f64>> = spec
        .rows()
        .iter()
        .map(|r| {
            let mut v: Vec<f64> = r.cells.iter().map(|c| c.a_tilde.coeffs()[0].abs()).collect();
            v.sort_by(f64::total_cmp);
            v
        })
        .collect();
    rows.dedup();
    if !(constant_b && constant_a && rows.len() == 1) {
        return Err(CarpetError::DegenerateFamily { variance: 0.0 });
    }
    let slopes_b: Vec<f64> = (0..spec.m()).map(|i| spec.b_prime(i, 0.0).abs()).collect();
    let s0 = brent(
        |s| Ok(slopes_b.iter().map(|b| b.powf(s)).sum::<f64>() - 1.0),
        0.0,
        64.0,
        1e-15,
        0.0,
        "Moran equation",
    )?;
    let t0 = if rows[0].len() == 1 {
        0.0
    } else {
        brent(
            |t| Ok(rows[0].iter().map(|a| a.powf(t)).sum::<f64>() - 1.0),
            0.0,
            64.0,
            1e-15,
            0.0,
            "fiber Moran equation",
        )?
    };
    let af = AFamily::new(spec);
    let col = Collocation::new(spec, cfg.k)?;
    let psi = af.psi(&col);
    let nu = GibbsSystem::new(&col, psi.scaled(-s0))?;
    let int_psi = nu.integrate(&psi);
    let int_phi = -nu.integrate(&af.observables(&col, t0).dlog_a);
    Ok(FullDimSolution {
        d: s0 + t0,
        t_star: t0,
        beta_star: f64::NAN,
        rho_star: int_psi / int_phi,
        diagnostics: Diagnostics {
            p_at_star: nu.pressure(),
            dpdt_at_star: f64::NAN,
            d2pdt2_at_star: f64::NAN,
            beta_prime_at_star: f64::NAN,
            beta_residual: 0.0,
            outer_iterations: 0,
            t_range,
        },
        nu,
        degenerate: true,
        config: *cfg,
        af,
    })
}

/// Solves `max_t P(Φ_t^{(D)}) = 0` for `D` with the nested scheme: Newton on
/// `D` (safeguarded by bisection; `∂P/∂D = −∫ψ dν`), and for every candidate
/// the stationary point of `t ↦ P(Φ_t)`.
pub fn solve_full_dimension(spec: &CarpetSpec, cfg: &SolverConfig) -> Result<FullDimSolution> {
    let report = validate_carpet(spec, DEFAULT_GRID)?;
    if !report.passed() {
        return Err(CarpetError::MalformedSpec(format!(
            "carpet fails validation: {}",
            report.violations[0]
        )));
    }
    let af = AFamily::new(spec);
    let tr = t_range(&af, cfg.max_period)?;
    if tr.width() < 1e-12 {
        return degenerate_solution(spec, cfg, tr);
    }
    let col = Collocation::new(spec, cfg.k)?;
    let base = PhiFamily::with_collocation(af.clone(), col, 1.5);
    let margin = 0.005 * tr.width();
    let (t_lo, t_hi) = (tr.t_lower + margin, tr.t_upper - margin);

    let mut lo = 0.0;
    let mut hi = 2.0;
    let mut d = 1.5;
    let mut warm: Option<BetaSolution> = None;
    let mut iterations = 0;
    let inner = loop {
        iterations += 1;
        if iterations > 100 {
            return Err(CarpetError::NoConvergence {
                what: "dimension solve",
                iterations: 100,
            });
        }
        let pf = base.with_d(d);
        let inner = match inner_maximize(&pf, t_lo, t_hi, cfg.tol, warm.as_ref()) {
            Ok(v) => v,
            Err(CarpetError::DegenerateFamily { .. }) => {
                return degenerate_solution(spec, cfg, tr);
            }
            Err(e) => return Err(e),
        };
        let g = inner.p;
        if g.abs() <= cfg.tol && inner.dpdt.abs() <= cfg.tol {
            break inner;
        }
        if g > 0.0 {
            lo = d;
        } else {
            hi = d;
        }
        let newton = d + g / inner.int_psi;
        d = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        warm = Some(inner.sol);
        if hi - lo < 1e-15 {
            return Err(CarpetError::NoConvergence {
                what: "dimension solve (bracket collapsed)",
                iterations,
            });
        }
    };
    let pf = base.with_d(d);
    let point = pf.curve_point(&inner.sol)?;
    Ok(FullDimSolution {
        d,
        t_star: inner.sol.t,
        beta_star: inner.sol.beta,
        rho_star: point.rho,
        diagnostics: Diagnostics {
            p_at_star: point.p,
            dpdt_at_star: point.dpdt,
            d2pdt2_at_star: point.d2pdt2,
            beta_prime_at_star: point.beta_prime,
            beta_residual: inner.sol.residual,
            outer_iterations: iterations,
            t_range: tr,
        },
        nu: inner.sol.nu,
        degenerate: false,
        config: *cfg,
        af,
    })
}

/// Mass of the full cylinder `[w]` under `μ* = μ_y × ν*`.
pub fn measure_cylinder(sol: &FullDimSolution, word: &FullWord, _tol: f64) -> Result<f64> {
    word.check(sol.spec())?;
    let t = sol.t_star;
    let af = &sol.af;
    sol.nu.branch_integral(&word.rows(), |pos, i, tail| {
        let j = word.0[pos].1;
        af.fiber_weights(t, i, tail)[j]
    })
}

/// Mass of the row cylinder `[w]` under `ν*`.
pub fn base_cylinder(sol: &FullDimSolution, word: &RowWord, tol: f64) -> Result<f64> {
    crate::transfer::cylinder_mass(&sol.nu, word, tol)
}

/// `D(μ)` for the relative equilibrium state of `−tφ` over `ν`.
pub fn dimension_of_measure(af: &AFamily, nu: &GibbsSystem, t: f64, tol: f64) -> Result<f64> {
    let col = nu.collocation();
    let psi = af.psi(col);
    let a = af.observables(col, t);
    let h_nu = entropy(nu, tol)?;
    let int_psi = nu.integrate(&psi);
    let int_phi = -nu.integrate(&a.dlog_a);
    let fiber_entropy = nu.integrate(&a.log_a) + t * int_phi;
    Ok(h_nu / int_psi + fiber_entropy / int_phi)
}

/// `t̲ + ε < t* < t̄ − ε`.
pub fn check_h_eps(sol: &FullDimSolution, range: &TRange, epsilon: f64) -> bool {
    range.t_lower + epsilon < sol.t_star && sol.t_star < range.t_upper - epsilon
}

// ---------------------------------------------------------------------------
// Uniqueness certificate

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertificateOptions {
    /// Absolute `ε`; `None` means `0.05 (t̄ − t̲)`.
    pub epsilon: Option<f64>,
    pub grid: usize,
    /// Concavity margin: every `d²P/dt²` must be below `−tol`.
    pub tol: f64,
    pub solver: SolverConfig,
}

impl Default for CertificateOptions {
    fn default() -> Self {
        CertificateOptions {
            epsilon: None,
            grid: 50,
            tol: 1e-8,
            solver: SolverConfig::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct UniquenessReport {
    pub d: f64,
    pub t_star: f64,
    pub t_range: TRange,
    pub epsilon: f64,
    pub t_interval: (f64, f64),
    pub points: Vec<CurvePoint>,
    pub max_d2pdt2: f64,
    pub concavity_ok: bool,
    pub h_eps_ok: bool,
    /// Infimum of the `γ` satisfying `γ⁻¹ < φ < γ`, `|β| < γ`, `|β'| < γ`
    /// on the grid.
    pub gamma_witness: f64,
    /// `max |d/dz φ|` over the grid.
    pub phi_seminorm: f64,
    /// `max |d/dz ψ|` over the grid.
    pub psi_seminorm: f64,
    pub degenerate: bool,
    pub unique: bool,
}

fn seminorm_proxies(spec: &CarpetSpec) -> (f64, f64, f64, f64) {
    let mut phi_semi: f64 = 0.0;
    let mut psi_semi: f64 = 0.0;
    let mut phi_min = f64::INFINITY;
    let mut phi_max: f64 = 0.0;
    for (i, row) in spec.rows().iter().enumerate() {
        let bpp = spec.b_prime_poly(i).derivative();
        for y in unit_grid(DEFAULT_GRID) {
            psi_semi = psi_semi.max((bpp.eval(y) / spec.b_prime(i, y)).abs());
        }
        for cell in &row.cells {
            let da = cell.a_tilde.derivative();
            for y in unit_grid(DEFAULT_GRID) {
                let a = cell.a_tilde.eval(y);
                phi_semi = phi_semi.max((da.eval(y) / a).abs());
                let phi = -a.abs().ln();
                phi_min = phi_min.min(phi);
                phi_max = phi_max.max(phi);
            }
        }
    }
    (phi_semi, psi_semi, phi_min, phi_max)
}

/// Solves for `D` and checks strict concavity of `t ↦ P(Φ_t)` on a grid in
/// `(t̲ + ε, t̄ − ε)`, together with `(H_ε)`.
pub fn uniqueness_certificate(spec: &CarpetSpec, opts: &CertificateOptions) -> Result<UniquenessReport> {
    if opts.grid < 2 {
        return Err(CarpetError::InvalidArgument("grid must be ≥ 2".into()));
    }
    let sol = solve_full_dimension(spec, &opts.solver)?;
    let tr = sol.diagnostics.t_range.clone();
    let epsilon = opts.epsilon.unwrap_or(DEFAULT_EPS_FRACTION * tr.width());
    let (phi_seminorm, psi_seminorm, phi_min, phi_max) = seminorm_proxies(spec);
    let interval = (tr.t_lower + epsilon, tr.t_upper - epsilon);
    if sol.degenerate {
        return Ok(UniquenessReport {
            d: sol.d,
            t_star: sol.t_star,
            t_range: tr,
            epsilon,
            t_interval: interval,
            points: Vec::new(),
            max_d2pdt2: f64::NAN,
            concavity_ok: false,
            h_eps_ok: false,
            gamma_witness: phi_max.max(1.0 / phi_min),
            phi_seminorm,
            psi_seminorm,
            degenerate: true,
            // constant-slope trivial carpets carry a unique Bernoulli measure
            unique: true,
        });
    }
    let h_eps_ok = check_h_eps(&sol, &tr, epsilon);
    if !(interval.0 < interval.1) {
        return Err(CarpetError::InvalidArgument(format!(
            "epsilon {epsilon} leaves an empty t-interval"
        )));
    }
    let pf = PhiFamily::with_collocation(sol.af.clone(), sol.nu.collocation().clone(), sol.d);
    let ts: Vec<f64> = (0..opts.grid)
        .map(|k| interval.0 + (interval.1 - interval.0) * k as f64 / (opts.grid - 1) as f64)
        .collect();
    let points: Vec<CurvePoint> = ts
        .par_iter()
        .map(|&t| pressure_curve(&pf, t, opts.solver.tol))
        .collect::<Result<_>>()?;
    let max_d2pdt2 = points.iter().map(|p| p.d2pdt2).fold(f64::NEG_INFINITY, f64::max);
    let concavity_ok = max_d2pdt2 < -opts.tol;
    let gamma_witness = points
        .iter()
        .map(|p| p.beta.abs().max(p.beta_prime.abs()))
        .fold(phi_max.max(1.0 / phi_min), f64::max);
    Ok(UniquenessReport {
        d: sol.d,
        t_star: sol.t_star,
        t_range: tr,
        epsilon,
        t_interval: interval,
        points,
        max_d2pdt2,
        concavity_ok,
        h_eps_ok,
        gamma_witness,
        phi_seminorm,
        psi_seminorm,
        degenerate: false,
        unique: concavity_ok && h_eps_ok,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::carpet::{make_sierpinski, s1, Layout};

    #[test]
    fn a_family_closed_forms() {
        let af = a_family(&s1());
        assert!((af.a(0, 0.3, 0.5) - 3.0 * 0.2f64.sqrt()).abs() < 1e-14);
        assert!((af.dlog_a(1, 0.7, 0.4) - 0.2f64.ln()).abs() < 1e-14);
        assert_eq!(af.d2log_a(0, 0.1, 0.9), 0.0);
        let w = fiber_weights(&af, 0.7, 0, 0.2).unwrap();
        assert!(w.iter().all(|&x| (x - 1.0 / 3.0).abs() < 1e-15));
        assert!(fiber_weights(&af, 0.7, 5, 0.2).is_err());
    }

    #[test]
    fn fiber_weights_at_zero_are_uniform() {
        let spec = crate::carpet::s1_eps(0.05).unwrap();
        let af = a_family(&spec);
        for z in [0.0, 0.3, 1.0] {
            let w = af.fiber_weights(0.0, 0, z);
            assert!(w.iter().all(|&x| (x - 1.0 / 3.0).abs() < 1e-15));
            let w = af.fiber_weights(0.8, 0, z);
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn trivial_carpet_is_degenerate() {
        let spec = make_sierpinski(0.2, 0.45, &[2, 2], &Layout::Even).unwrap();
        let af = a_family(&spec);
        let tr = t_range(&af, 3).unwrap();
        let expected = 2f64.ln() / 5f64.ln();
        assert!((tr.t_lower - expected).abs() < 1e-12 && (tr.t_upper - expected).abs() < 1e-12);
        let pf = PhiFamily::new(&spec, 1.4, 32).unwrap();
        assert!(matches!(
            beta_of_t(&pf, expected, 1e-10),
            Err(CarpetError::DegenerateFamily { .. })
        ));
        let sol = solve_full_dimension(&spec, &SolverConfig::default()).unwrap();
        assert!(sol.degenerate);
        let closed = 2f64.ln() / (1.0 / 0.45f64).ln() + expected;
        assert!((sol.d - closed).abs() < 1e-12);
        assert!(!check_h_eps(&sol, &tr, 0.0));
    }

    #[test]
    fn h_eps_with_wide_epsilon_fails() {
        let sol = solve_full_dimension(&s1(), &SolverConfig::default()).unwrap();
        let tr = sol.diagnostics.t_range.clone();
        assert!(check_h_eps(&sol, &tr, 0.05));
        assert!(!check_h_eps(&sol, &tr, tr.width() / 2.0));
    }
}
