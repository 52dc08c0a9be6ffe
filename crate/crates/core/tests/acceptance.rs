//! Acceptance suite. Runs every criterion, prints one line per criterion and
//! exits non-zero if any fails.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use carpetdim::carpet::{perturb_carpet, s1, s1_eps, CarpetSpec};
use carpetdim::cli::sweep;
use carpetdim::coding::{FullWord, RowWord};
use carpetdim::fulldim::{
    a_family, base_cylinder, check_h_eps, dimension_of_measure, measure_cylinder, pressure_curve,
    solve_full_dimension, t_range, uniqueness_certificate, CertificateOptions, PhiFamily, SolverConfig,
    DEFAULT_EPS_FRACTION,
};
use carpetdim::geometry::{box_count, render_regions, vertical_graph_distortion_check};
use carpetdim::transfer::{build_operator, correlation_form, entropy, Collocation, GibbsSystem};
use carpetdim::variational::optimize_level_n;
use carpetdim::Result;

type Outcome = Result<(bool, String)>;
type Criterion = (&'static str, fn() -> Outcome);

fn s1_closed_form() -> f64 {
    let rho = 0.45f64.ln() / 0.2f64.ln();
    (3f64.powf(rho) + 2f64.powf(rho)).ln() / (1.0 / 0.45f64).ln()
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let sol = solve_full_dimension(&s1(), &SolverConfig::default())?;
    let secs = start.elapsed().as_secs_f64();
    let err = (sol.d - s1_closed_form()).abs();
    Ok((err <= 1e-6 && secs < 10.0, format!("D={:.12} |D-closed|={err:.2e} time={secs:.2}s", sol.d)))
}

fn criterion_2() -> Outcome {
    let d = solve_full_dimension(&s1(), &SolverConfig::default())?.d;
    let v = optimize_level_n(&s1(), 1, 1e-10)?.value;
    let spec = s1_eps(0.05)?;
    let de = solve_full_dimension(&spec, &SolverConfig::default())?.d;
    let g1 = (optimize_level_n(&spec, 1, 1e-10)?.value - de).abs();
    let g2 = (optimize_level_n(&spec, 2, 1e-10)?.value - de).abs();
    let ok = (v - d).abs() <= 1e-6 && g1 <= 0.02 && g2 <= 0.02 && g2 < g1;
    Ok((ok, format!("S1 |value-D|={:.2e}; S1eps gaps n=1 {g1:.4}, n=2 {g2:.4}", (v - d).abs())))
}

/// Fourth-order central difference.
fn diff4(f: impl Fn(f64) -> Result<f64>, t: f64, h: f64) -> Result<f64> {
    Ok((-f(t + 2.0 * h)? + 8.0 * f(t + h)? - 8.0 * f(t - h)? + f(t - 2.0 * h)?) / (12.0 * h))
}

fn derivative_suite(spec: &CarpetSpec, seed: u64) -> Result<(f64, f64, f64, f64, bool)> {
    let h = 1e-4;
    let af = a_family(spec);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut e1, mut e2, mut e3, mut e4) = (0f64, 0f64, 0f64, 0f64);
    let mut nonneg = true;
    for _ in 0..20 {
        let i = rng.random_range(0..spec.m());
        let z: f64 = rng.random();
        let t: f64 = rng.random_range(0.1..1.5);
        let fd1 = (af.log_a(i, z, t + h) - af.log_a(i, z, t - h)) / (2.0 * h);
        let fd2 = (af.dlog_a(i, z, t + h) - af.dlog_a(i, z, t - h)) / (2.0 * h);
        e1 = e1.max((fd1 - af.dlog_a(i, z, t)).abs());
        e2 = e2.max((fd2 - af.d2log_a(i, z, t)).abs());
        nonneg &= af.d2log_a(i, z, t) >= -1e-12;
    }
    let sol = solve_full_dimension(spec, &SolverConfig::default())?;
    let pf = PhiFamily::new(spec, sol.d, 64)?;
    let tr = &sol.diagnostics.t_range;
    let eps = DEFAULT_EPS_FRACTION * tr.width();
    for _ in 0..10 {
        let t = rng.random_range(tr.t_lower + eps..tr.t_upper - eps);
        let c = pressure_curve(&pf, t, 1e-13)?;
        let fd_p = diff4(|s| Ok(pressure_curve(&pf, s, 1e-13)?.p), t, h)?;
        let fd_dp = diff4(|s| Ok(pressure_curve(&pf, s, 1e-13)?.dpdt), t, h)?;
        e3 = e3.max((fd_p - c.dpdt).abs());
        e4 = e4.max((fd_dp - c.d2pdt2).abs());
    }
    Ok((e1, e2, e3, e4, nonneg))
}

fn criterion_3() -> Outcome {
    let mut ok = true;
    let mut msg = Vec::new();
    for (name, spec, seed) in [("S1", s1(), 1), ("S1eps", s1_eps(0.05)?, 2)] {
        let (e1, e2, e3, e4, nonneg) = derivative_suite(&spec, seed)?;
        ok &= e1 <= 1e-7 && e2 <= 1e-6 && nonneg && e3 <= 1e-6 && e4 <= 1e-5;
        msg.push(format!("{name}: dlogA {e1:.1e} d2logA {e2:.1e} dP {e3:.1e} d2P {e4:.1e}"));
    }
    Ok((ok, msg.join("; ")))
}

fn criterion_4() -> Outcome {
    let mut ok = true;
    let mut msg = Vec::new();
    for (name, spec) in [("S1", s1()), ("S1eps", s1_eps(0.05)?)] {
        let sol = solve_full_dimension(&spec, &SolverConfig::default())?;
        let d = &sol.diagnostics;
        let dmu = dimension_of_measure(sol.a_family(), &sol.nu, sol.t_star, 1e-12)?;
        let br = (sol.beta_star - sol.rho_star).abs();
        ok &= d.p_at_star.abs() <= 1e-8 && d.dpdt_at_star.abs() <= 1e-8 && br <= 1e-7 && (dmu - sol.d).abs() <= 1e-6;
        msg.push(format!(
            "{name}: |P|={:.1e} |dP|={:.1e} |beta-rho|={br:.1e} |D(mu)-D|={:.1e}",
            d.p_at_star.abs(),
            d.dpdt_at_star.abs(),
            (dmu - sol.d).abs()
        ));
    }
    Ok((ok, msg.join("; ")))
}

fn criterion_5() -> Outcome {
    let opts = CertificateOptions::default();
    let mut specs = vec![s1()];
    for seed in 0..10 {
        specs.push(perturb_carpet(&s1(), 0.05, seed)?.spec);
    }
    let mut worst = f64::NEG_INFINITY;
    let mut all_unique = true;
    for spec in &specs {
        let rep = uniqueness_certificate(spec, &opts)?;
        all_unique &= rep.unique && rep.points.len() == 50;
        worst = worst.max(rep.max_d2pdt2);
    }
    Ok((all_unique && worst < -1e-4, format!("11 carpets unique={all_unique}, max d2P/dt2 = {worst:.3}")))
}

fn criterion_6() -> Outcome {
    let tr = t_range(&a_family(&s1()), 6)?;
    let lo = 2f64.ln() / 5f64.ln();
    let hi = 3f64.ln() / 5f64.ln();
    let sol = solve_full_dimension(&s1(), &SolverConfig::default())?;
    let err = (tr.t_lower - lo).abs().max((tr.t_upper - hi).abs());
    let inside = check_h_eps(&sol, &tr, 0.05);
    Ok((
        err <= 1e-9 && inside,
        format!("t-range=[{:.12}, {:.12}] err={err:.1e}, t*={:.6} inside H_eps: {inside}", tr.t_lower, tr.t_upper, sol.t_star),
    ))
}

fn criterion_7() -> Outcome {
    let mut e_marg: f64 = 0.0;
    let mut e_total: f64 = 0.0;
    let mut e_shift: f64 = 0.0;
    for spec in [s1(), s1_eps(0.05)?] {
        let sol = solve_full_dimension(&spec, &SolverConfig::default())?;
        for i in 0..spec.m() {
            let sum: f64 = (0..spec.row_len(i))
                .map(|j| measure_cylinder(&sol, &FullWord(vec![(i, j)]), 1e-12))
                .sum::<Result<f64>>()?;
            e_marg = e_marg.max((sum - base_cylinder(&sol, &RowWord(vec![i]), 1e-12)?).abs());
        }
        let total: f64 = FullWord::all(&spec, 2)
            .iter()
            .map(|w| measure_cylinder(&sol, w, 1e-12))
            .sum::<Result<f64>>()?;
        e_total = e_total.max((total - 1.0).abs());
        let symbols = spec.symbols();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let len = rng.random_range(1..=4);
            let w = FullWord((0..len).map(|_| symbols[rng.random_range(0..symbols.len())]).collect());
            let pre: f64 = symbols
                .iter()
                .map(|&s| measure_cylinder(&sol, &FullWord(vec![s]).concat(&w), 1e-12))
                .sum::<Result<f64>>()?;
            e_shift = e_shift.max((pre - measure_cylinder(&sol, &w, 1e-12)?).abs());
        }
    }
    Ok((
        e_marg <= 1e-9 && e_total <= 1e-9 && e_shift <= 1e-8,
        format!("marginal {e_marg:.1e}, length-2 total {e_total:.1e}, shift {e_shift:.1e}"),
    ))
}

fn criterion_8() -> Outcome {
    let spec = s1_eps(0.05)?;
    let col = Collocation::new(&spec, 64)?;
    let g = col.observable(|i, z| -0.7 * spec.b_prime(i, z).abs().ln() + 0.3 * z - 0.1 * i as f64);
    let base = GibbsSystem::new(&col, g.clone())?;
    let shifted = GibbsSystem::new(&col, g.shifted(0.37))?;
    let e_shift = (shifted.pressure() - base.pressure() - 0.37).abs();

    let h = entropy(&base, 1e-12)?;
    let entropy_ok = h >= 0.0 && h <= 2f64.ln() + 1e-12;

    let f = col.observable(|i, z| (3.0 * z).sin() + i as f64);
    let step = 1e-4;
    let p = |s: f64| -> Result<f64> { Ok(GibbsSystem::new(&col, g.axpy(s, &f))?.pressure()) };
    let fd = (-p(2.0 * step)? + 8.0 * p(step)? - 8.0 * p(-step)? + p(-2.0 * step)?) / (12.0 * step);
    let e_deriv = (fd - base.integrate(&f)).abs();

    let q_ff = correlation_form(&base, &f, &f, 1e-14)?;

    let q = [0.3f64, 0.7];
    let bern = build_operator(&spec, |i, _| q[i].ln(), 64)?;
    let ind = bern.collocation().observable(|i, _| if i == 0 { 1.0 } else { 0.0 });
    let e_bern = (correlation_form(&bern, &ind, &ind, 1e-14)? - 0.21).abs();

    let mut drift: f64 = 0.0;
    for spec in [s1(), s1_eps(0.05)?] {
        let a = solve_full_dimension(&spec, &SolverConfig::default())?;
        let b = solve_full_dimension(&spec, &SolverConfig { k: 128, ..Default::default() })?;
        drift = drift.max((a.d - b.d).abs()).max((a.t_star - b.t_star).abs());
    }
    let ok = e_shift <= 1e-10 && entropy_ok && e_deriv <= 1e-8 && q_ff >= -1e-10 && e_bern <= 1e-8 && drift < 1e-8;
    Ok((
        ok,
        format!(
            "shift {e_shift:.1e}, h={h:.4}, dP/ds {e_deriv:.1e}, Q(f,f)={q_ff:.4}, Bernoulli {e_bern:.1e}, K drift {drift:.1e}"
        ),
    ))
}

fn criterion_9() -> Outcome {
    let d = solve_full_dimension(&s1(), &SolverConfig::default())?.d;
    let scales: Vec<f64> = (3..=9).map(|k| 0.5f64.powi(k)).collect();
    let bc = box_count(&s1(), 1_000_000, 14, &scales, 1)?;
    let dc = vertical_graph_distortion_check(&s1_eps(0.05)?, 1000, 30, 11)?;
    let expected = [
        (0.05, 0.0, 0.25, 0.45),
        (0.35, 0.0, 0.55, 0.45),
        (0.65, 0.0, 0.85, 0.45),
        (0.1, 0.55, 0.3, 1.0),
        (0.6, 0.55, 0.8, 1.0),
    ];
    let regions = render_regions(&s1(), 1)?;
    let boxes_ok = regions.len() == 5
        && regions.iter().zip(expected).all(|(r, e)| {
            let b = r.bbox;
            [b.0 - e.0, b.1 - e.1, b.2 - e.2, b.3 - e.3].iter().all(|x| x.abs() <= 1e-15)
        });
    let ok = (bc.estimate - d).abs() <= 0.05 && dc.pass && boxes_ok;
    Ok((
        ok,
        format!(
            "box dim {:.4} (D {:.4}), max slope {:.4} <= C {:.4}, depth-1 boxes {}",
            bc.estimate,
            d,
            dc.max_slope_seen,
            dc.c,
            if boxes_ok { "exact" } else { "mismatch" }
        ),
    ))
}

fn criterion_10() -> Outcome {
    let rows = sweep(&s1(), 0.0, 0.05, 6, 3, 50, 64)?;
    let tv = |f: &dyn Fn(usize) -> f64| (1..rows.len()).map(|k| (f(k) - f(k - 1)).abs()).sum::<f64>();
    let mut worst = tv(&|k| rows[k].d);
    for s in 0..rows[0].masses.len() {
        worst = worst.max(tv(&|k| rows[k].masses[s]));
    }
    let flips = rows.windows(2).filter(|w| w[0].unique != w[1].unique).count();
    Ok((
        worst < 0.03 && flips == 0 && rows[0].unique,
        format!("largest total variation {worst:.4}, uniqueness flips {flips}"),
    ))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("closed-form dimension", criterion_1),
        ("route agreement", criterion_2),
        ("derivative formulas", criterion_3),
        ("stationarity identities", criterion_4),
        ("uniqueness certificate", criterion_5),
        ("hypothesis interval", criterion_6),
        ("measure consistency", criterion_7),
        ("transfer operator", criterion_8),
        ("geometry", criterion_9),
        ("continuity sweep", criterion_10),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let (ok, detail) = match run() {
            Ok(v) => v,
            Err(e) => (false, format!("error: {e}")),
        };
        if !ok {
            failed += 1;
        }
        println!("criterion {:>2} {:<24} {}  {detail}", k + 1, name, if ok { "PASS" } else { "FAIL" });
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
