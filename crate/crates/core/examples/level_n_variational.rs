//! The finite-dimensional route: maximize `lambda_n + t_n` over Bernoulli
//! weights on n-step row words and compare with the thermodynamic solve.
use carpetdim::carpet::{s1, s1_eps};
use carpetdim::fulldim::{solve_full_dimension, SolverConfig};
use carpetdim::variational::optimize_level_n;

fn main() -> carpetdim::Result<()> {
    for (name, spec) in [("S1", s1()), ("S1 eps=0.05", s1_eps(0.05)?)] {
        let d = solve_full_dimension(&spec, &SolverConfig::default())?.d;
        println!("{name}: thermodynamic D = {d:.10}");
        for n in 1..=4 {
            let sol = optimize_level_n(&spec, n, 1e-10)?;
            println!("  n={n}: value={:.10} t_n={:.10} gap={:+.3e}", sol.value, sol.t_star, sol.value - d);
        }
    }
    Ok(())
}
