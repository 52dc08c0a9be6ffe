//! The level-n variational problem: Bernoulli measures on n-step cylinders,
//! scored by `λ_n(p) + t_n(p)`, whose supremum approximates the dimension
//! to within `O(1/n)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::carpet::{CarpetSpec, DEFAULT_GRID};
use crate::coding::{composition_bounds, FullWord, RowWord};
use crate::error::{CarpetError, Result};
use crate::roots::brent_with_values;

/// Largest number of row words accepted by [`LevelNProblem::new`].
pub const MAX_ROW_WORDS: usize = 4096;

const MAX_ITER: usize = 200_000;
const STARTS: u64 = 5;

/// Composition tables of one level together with a weight vector on the
/// row words of length `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelNProblem {
    n: usize,
    /// Row symbol counts, used to index fiber words.
    row_lens: Vec<usize>,
    /// `α_{ij,n}` per row word, fibers in lexicographic order.
    alpha: Vec<Vec<f64>>,
    /// `β_{i,n}` per row word.
    beta: Vec<f64>,
    p: Vec<f64>,
}

impl LevelNProblem {
    /// Tables for `spec` at level `n`, with uniform `p`.
    pub fn new(spec: &CarpetSpec, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(CarpetError::InvalidArgument("level n must be ≥ 1".into()));
        }
        let m = spec.m();
        let words = (m as f64).powi(n as i32);
        if words > MAX_ROW_WORDS as f64 {
            return Err(CarpetError::InvalidArgument(format!(
                "{m}^{n} row words exceed the limit of {MAX_ROW_WORDS}"
            )));
        }
        let row_lens: Vec<usize> = (0..m).map(|i| spec.row_len(i)).collect();
        let rows = RowWord::all(m, n);
        let tables: Vec<(Vec<f64>, f64)> = rows
            .par_iter()
            .map(|rw| {
                let fibers = fiber_words(rw, &row_lens);
                let mut alpha = Vec::with_capacity(fibers.len());
                let mut beta = 0.0;
                for fw in &fibers {
                    let (a, b) = composition_bounds(spec, fw, DEFAULT_GRID)?;
                    alpha.push(a);
                    beta = b;
                }
                Ok((alpha, beta))
            })
            .collect::<Result<_>>()?;
        let (alpha, beta): (Vec<_>, Vec<_>) = tables.into_iter().unzip();
        let k = alpha.len();
        Self::from_tables(n, row_lens, alpha, beta, vec![1.0 / k as f64; k])
    }

    /// Problem from explicit tables.
    pub fn from_tables(
        n: usize,
        row_lens: Vec<usize>,
        alpha: Vec<Vec<f64>>,
        beta: Vec<f64>,
        p: Vec<f64>,
    ) -> Result<Self> {
        let in_unit = |x: f64| x > 0.0 && x < 1.0;
        if alpha.len() != beta.len() || alpha.iter().any(|a| a.is_empty()) {
            return Err(CarpetError::InvalidArgument("table shapes disagree".into()));
        }
        if !alpha.iter().flatten().all(|&a| in_unit(a)) || !beta.iter().all(|&b| in_unit(b)) {
            return Err(CarpetError::InvalidArgument("table entries must lie in (0, 1)".into()));
        }
        let prob = LevelNProblem {
            n,
            row_lens,
            alpha,
            beta,
            p: Vec::new(),
        };
        prob.with_p(p)
    }

    /// Same tables, new weights.
    pub fn with_p(mut self, p: Vec<f64>) -> Result<Self> {
        if p.len() != self.alpha.len() {
            return Err(CarpetError::InvalidArgument(format!(
                "p has {} entries, expected {}",
                p.len(),
                self.alpha.len()
            )));
        }
        let sum: f64 = p.iter().sum();
        if p.iter().any(|&x| !(x >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
            return Err(CarpetError::InvalidArgument("p must be a probability vector".into()));
        }
        self.p = p;
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    pub fn alpha(&self) -> &[Vec<f64>] {
        &self.alpha
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    /// Index of a row word in the lexicographic enumeration.
    pub fn row_index(&self, word: &RowWord) -> usize {
        let m = self.row_lens.len();
        word.0.iter().fold(0, |acc, &i| acc * m + i)
    }

    fn fiber_index(&self, word: &FullWord) -> usize {
        word.0.iter().fold(0, |acc, &(i, j)| acc * self.row_lens[i] + j)
    }

    fn row_sums(&self, t: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        // (Σ_j α^t, Σ_j α^t log α)
        self.alpha.iter().map(move |row| {
            row.iter().fold((0.0, 0.0), |(s, d), &a| {
                let w = a.powf(t);
                (s + w, d + w * a.ln())
            })
        })
    }

    fn t_objective(&self, t: f64) -> f64 {
        self.row_sums(t).zip(&self.p).map(|((s, _), &p)| if p > 0.0 { p * s.ln() } else { 0.0 }).sum()
    }
}

/// All fiber words over a row word, lexicographic.
fn fiber_words(rows: &RowWord, row_lens: &[usize]) -> Vec<FullWord> {
    let mut out = vec![FullWord(Vec::with_capacity(rows.len()))];
    for &i in &rows.0 {
        out = out
            .into_iter()
            .flat_map(|w| {
                (0..row_lens[i]).map(move |j| {
                    let mut v = w.0.clone();
                    v.push((i, j));
                    FullWord(v)
                })
            })
            .collect();
    }
    out
}

fn xlogx(x: f64) -> f64 {
    if x > 0.0 {
        x * x.ln()
    } else {
        0.0
    }
}

/// `Σ p log p / Σ p log β`.
pub fn lambda_n(prob: &LevelNProblem) -> f64 {
    let h: f64 = prob.p.iter().map(|&p| xlogx(p)).sum();
    let l: f64 = prob.p.iter().zip(&prob.beta).map(|(&p, &b)| p * b.ln()).sum();
    if h == 0.0 {
        0.0
    } else {
        h / l
    }
}

/// Root in `[0, 1]` of `t ↦ Σ_i p_i log Σ_j α_ij^t`.
pub fn t_n_root(prob: &LevelNProblem, tol: f64) -> Result<f64> {
    let f0 = prob.t_objective(0.0);
    let f1 = prob.t_objective(1.0);
    if f0 < 0.0 || f1 > 0.0 {
        return Err(CarpetError::NoRootInUnitInterval);
    }
    if f0 == 0.0 {
        return Ok(0.0);
    }
    brent_with_values(|t| Ok(prob.t_objective(t)), (0.0, f0), (1.0, f1), tol.max(1e-16), 0.0, "t_n")
}

/// Weight `p_i α_ij^{t_n} / Σ_j' α_ij'^{t_n}` of the cylinder of `word`.
pub fn bernoulli_weights_level_n(prob: &LevelNProblem, word: &FullWord) -> Result<f64> {
    if word.len() != prob.n {
        return Err(CarpetError::InvalidArgument(format!(
            "word length {} differs from level {}",
            word.len(),
            prob.n
        )));
    }
    if word.0.iter().any(|&(i, j)| i >= prob.row_lens.len() || j >= prob.row_lens[i]) {
        return Err(CarpetError::InvalidArgument(format!("word {word} not in the alphabet")));
    }
    let t = t_n_root(prob, 1e-14)?;
    let r = prob.row_index(&word.rows());
    let row = &prob.alpha[r];
    let a = row[prob.fiber_index(word)].powf(t);
    let s: f64 = row.iter().map(|x| x.powf(t)).sum();
    Ok(prob.p[r] * a / s)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelNSolution {
    pub value: f64,
    pub p_star: Vec<f64>,
    pub t_star: f64,
    pub lambda: f64,
    pub iterations: usize,
    /// Best value reached by each start (uniform first).
    pub start_values: Vec<f64>,
}

/// `λ_n + t_n`, its gradient and `t_n`.
fn objective(prob: &LevelNProblem, p: &[f64]) -> Result<(f64, Vec<f64>, f64)> {
    let prob = LevelNProblem {
        p: p.to_vec(),
        ..prob.clone()
    };
    let t = t_n_root(&prob, 1e-15)?;
    let h: f64 = p.iter().map(|&x| xlogx(x)).sum();
    let l: f64 = p.iter().zip(&prob.beta).map(|(&x, &b)| x * b.ln()).sum();
    let sums: Vec<(f64, f64)> = prob.row_sums(t).collect();
    let slope: f64 = sums.iter().zip(p).map(|(&(s, d), &x)| x * d / s).sum();
    let grad = p
        .iter()
        .zip(&prob.beta)
        .zip(&sums)
        .map(|((&x, &b), &(s, _))| {
            let dlambda = (x.max(f64::MIN_POSITIVE).ln() + 1.0) / l - h * b.ln() / (l * l);
            dlambda - s.ln() / slope
        })
        .collect();
    Ok((h / l + t, grad, t))
}

fn projected_norm(p: &[f64], grad: &[f64]) -> (f64, f64) {
    let mean: f64 = p.iter().zip(grad).map(|(x, g)| x * g).sum();
    let norm = p.iter().zip(grad).map(|(x, g)| x * (g - mean).powi(2)).sum::<f64>().sqrt();
    (mean, norm)
}

fn ascend(prob: &LevelNProblem, mut p: Vec<f64>, tol: f64) -> Result<(f64, Vec<f64>, f64, usize)> {
    let (mut value, mut grad, mut t) = objective(prob, &p)?;
    let (mut mean, mut norm) = projected_norm(&p, &grad);
    let mut eta = 1.0;
    for it in 0..MAX_ITER {
        if norm <= tol {
            return Ok((value, p, t, it));
        }
        // near the top the value moves by O(norm²), below rounding; ties
        // are settled by the gradient norm
        let slack = 8.0 * f64::EPSILON * value.abs();
        loop {
            let mut q: Vec<f64> = p.iter().zip(&grad).map(|(x, g)| x * (eta * (g - mean)).exp()).collect();
            let z: f64 = q.iter().sum();
            q.iter_mut().for_each(|x| *x /= z);
            let (v, g, tq) = objective(prob, &q)?;
            let (mq, nq) = projected_norm(&q, &g);
            if v > value + slack || (v >= value - slack && nq < norm) {
                p = q;
                value = v;
                grad = g;
                t = tq;
                mean = mq;
                norm = nq;
                eta *= 1.5;
                break;
            }
            eta *= 0.5;
            if eta < 1e-12 {
                // stationary to working precision
                return Ok((value, p, t, it));
            }
        }
    }
    Err(CarpetError::IterationLimit(MAX_ITER))
}

/// Maximizes `λ_n + t_n` over the simplex by exponentiated-gradient ascent
/// from the uniform vector and five seeded random starts.
pub fn optimize_level_n(spec: &CarpetSpec, n: usize, tol: f64) -> Result<LevelNSolution> {
    let prob = LevelNProblem::new(spec, n)?;
    optimize_problem(&prob, tol)
}

pub fn optimize_problem(prob: &LevelNProblem, tol: f64) -> Result<LevelNSolution> {
    let k = prob.alpha.len();
    let mut starts = vec![vec![1.0 / k as f64; k]];
    for seed in 0..STARTS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p: Vec<f64> = (0..k).map(|_| -(1.0 - rng.random::<f64>()).ln() + 1e-3).collect();
        let z: f64 = p.iter().sum();
        p.iter_mut().for_each(|x| *x /= z);
        starts.push(p);
    }
    let runs: Vec<(f64, Vec<f64>, f64, usize)> = starts
        .into_par_iter()
        .map(|p| ascend(prob, p, tol))
        .collect::<Result<_>>()?;
    let start_values = runs.iter().map(|r| r.0).collect();
    let iterations = runs.iter().map(|r| r.3).sum();
    let best = runs
        .into_iter()
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .expect("at least one start");
    let lambda = lambda_n(&prob.clone().with_p(best.1.clone())?);
    Ok(LevelNSolution {
        value: best.0,
        p_star: best.1,
        t_star: best.2,
        lambda,
        iterations,
        start_values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::carpet::s1;

    fn s1_level(n: usize, p: Vec<f64>) -> LevelNProblem {
        LevelNProblem::new(&s1(), n).unwrap().with_p(p).unwrap()
    }

    #[test]
    fn lambda_examples() {
        let prob = s1_level(1, vec![0.5, 0.5]);
        assert!((lambda_n(&prob) - 2f64.ln() / (1.0 / 0.45f64).ln()).abs() < 1e-14);
        assert_eq!(lambda_n(&s1_level(1, vec![1.0, 0.0])), 0.0);
        let uniform = LevelNProblem::new(&s1(), 3).unwrap();
        assert!((lambda_n(&uniform) - lambda_n(&prob)).abs() < 1e-12);
    }

    #[test]
    fn t_root_closed_form() {
        let (p1, p2) = (0.3, 0.7);
        let t = t_n_root(&s1_level(1, vec![p1, p2]), 1e-15).unwrap();
        let closed = (p1 * 3f64.ln() + p2 * 2f64.ln()) / 5f64.ln();
        assert!((t - closed).abs() < 1e-13);
        let product = s1_level(2, vec![p1 * p1, p1 * p2, p2 * p1, p2 * p2]);
        assert!((t_n_root(&product, 1e-15).unwrap() - closed).abs() < 1e-12);
    }

    #[test]
    fn single_fiber_rows_give_zero() {
        let prob = LevelNProblem::from_tables(1, vec![1, 1], vec![vec![0.3], vec![0.4]], vec![0.5, 0.4], vec![0.5, 0.5])
            .unwrap();
        assert_eq!(t_n_root(&prob, 1e-14).unwrap(), 0.0);
        let bad = LevelNProblem::from_tables(1, vec![2, 1], vec![vec![0.9, 0.9], vec![0.8]], vec![0.5, 0.4], vec![1.0, 0.0])
            .unwrap();
        assert_eq!(t_n_root(&bad, 1e-14), Err(CarpetError::NoRootInUnitInterval));
    }

    #[test]
    fn bernoulli_weights_normalize() {
        let prob = s1_level(1, vec![0.3, 0.7]);
        let w = bernoulli_weights_level_n(&prob, &"1.2".parse().unwrap()).unwrap();
        assert!((w - 0.1).abs() < 1e-15);
        let prob = LevelNProblem::new(&s1(), 2).unwrap();
        let total: f64 = FullWord::all(&s1(), 2)
            .iter()
            .map(|w| bernoulli_weights_level_n(&prob, w).unwrap())
            .sum();
        assert!((total - 1.0).abs() < 1e-14);
        assert!(bernoulli_weights_level_n(&prob, &"1.1".parse().unwrap()).is_err());
    }

    #[test]
    fn level_cap() {
        let spec = s1();
        assert!(LevelNProblem::new(&spec, 13).is_err());
        assert!(LevelNProblem::new(&spec, 0).is_err());
    }

    #[test]
    fn s1_optimum() {
        let sol = optimize_level_n(&s1(), 1, 1e-10).unwrap();
        assert!((sol.value - 1.4310189624616765).abs() < 1e-9, "{}", sol.value);
        assert!((sol.p_star[0] - 0.5501230188244575).abs() < 1e-6);
        assert!(sol.start_values.iter().all(|v| (v - sol.value).abs() < 1e-9));
        let sol2 = optimize_level_n(&s1(), 2, 1e-10).unwrap();
        assert!((sol2.value - sol.value).abs() < 1e-8);
    }
}
