use proptest::prelude::*;

use carpetdim::carpet::{make_sierpinski, perturb_carpet, s1, validate_carpet, CarpetSpec, Layout, DEFAULT_GRID};
use carpetdim::coding::{FullWord, RowWord};
use carpetdim::fulldim::{measure_cylinder, solve_full_dimension, SolverConfig};
use carpetdim::transfer::{cylinder_mass, Collocation, GibbsSystem};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn even_layouts_validate(a in 0.02f64..0.3, gap in 0.01f64..0.3, m in prop::collection::vec(1usize..4, 2..4)) {
        let b = (a + gap).min(0.9 / m.len() as f64);
        let widest = *m.iter().max().unwrap();
        prop_assume!(a < b && widest >= 2 && widest as f64 * a < 1.0);
        let spec = make_sierpinski(a, b, &m, &Layout::Even).unwrap();
        prop_assert!(validate_carpet(&spec, DEFAULT_GRID).unwrap().passed());
    }

    #[test]
    fn text_roundtrip(eps in 0.0f64..0.1, seed in 0u64..1000) {
        let spec = perturb_carpet(&s1(), eps, seed).unwrap().spec;
        let back: CarpetSpec = spec.to_string().parse().unwrap();
        prop_assert_eq!(back, spec);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn pressure_shift_and_convexity(c in -2.0f64..2.0, w in -1.0f64..1.0, s in 0.05f64..0.5) {
        let spec = perturb_carpet(&s1(), 0.05, 1).unwrap().spec;
        let col = Collocation::new(&spec, 32).unwrap();
        let g = col.observable(|i, z| -spec.b_prime(i, z).ln() * 0.8 + w * z * i as f64);
        let f = col.observable(|i, z| (2.0 * z).cos() - i as f64);
        let p = |x: f64| GibbsSystem::new(&col, g.axpy(x, &f)).unwrap().pressure();
        let shifted = GibbsSystem::new(&col, g.shifted(c)).unwrap().pressure();
        prop_assert!((shifted - p(0.0) - c).abs() < 1e-10);
        prop_assert!(p(s) + p(-s) - 2.0 * p(0.0) >= -1e-12);
    }

    #[test]
    fn cylinders_refine(seed in 0u64..50, len in 1usize..4) {
        let spec = perturb_carpet(&s1(), 0.05, seed).unwrap().spec;
        let col = Collocation::new(&spec, 32).unwrap();
        let sys = GibbsSystem::new(&col, col.observable(|i, z| -(spec.b_prime(i, z)).ln() * 0.9 + 0.1 * z)).unwrap();
        let word = RowWord((0..len).map(|k| (seed as usize + k) % 2).collect());
        let parent = cylinder_mass(&sys, &word, 1e-12).unwrap();
        let children: f64 = (0..2)
            .map(|i| cylinder_mass(&sys, &word.concat(&RowWord(vec![i])), 1e-12).unwrap())
            .sum();
        prop_assert!((parent - children).abs() < 1e-10);
    }
}

#[test]
fn full_cylinders_refine() {
    let spec = perturb_carpet(&s1(), 0.05, 9).unwrap().spec;
    let sol = solve_full_dimension(&spec, &SolverConfig::default()).unwrap();
    for w in FullWord::all(&spec, 2) {
        let parent = measure_cylinder(&sol, &w, 1e-12).unwrap();
        let children: f64 = spec
            .symbols()
            .into_iter()
            .map(|s| measure_cylinder(&sol, &w.concat(&FullWord(vec![s])), 1e-12).unwrap())
            .sum();
        assert!((parent - children).abs() < 1e-10, "{w}");
    }
}
