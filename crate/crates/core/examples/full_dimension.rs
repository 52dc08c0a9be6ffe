//! Dimension, optimal parameters and a few cylinder masses of the measure
//! of full dimension for the S1 carpet and a curved perturbation of it.
use carpetdim::carpet::{s1, s1_eps};
use carpetdim::coding::FullWord;
use carpetdim::fulldim::{dimension_of_measure, measure_cylinder, solve_full_dimension, SolverConfig};

fn main() -> carpetdim::Result<()> {
    for (name, spec) in [("S1", s1()), ("S1 eps=0.05", s1_eps(0.05)?)] {
        let sol = solve_full_dimension(&spec, &SolverConfig::default())?;
        let d = &sol.diagnostics;
        println!("{name}");
        println!("  D = {:.12}  t* = {:.12}", sol.d, sol.t_star);
        println!("  beta* = {:.12}  rho* = {:.12}", sol.beta_star, sol.rho_star);
        println!("  t-range = [{:.10}, {:.10}]", d.t_range.t_lower, d.t_range.t_upper);
        println!("  P = {:e}, dP/dt = {:e}, d2P/dt2 = {:.4}", d.p_at_star, d.dpdt_at_star, d.d2pdt2_at_star);
        let dmu = dimension_of_measure(sol.a_family(), &sol.nu, sol.t_star, 1e-12)?;
        println!("  D(mu*) = {dmu:.12}");
        for w in ["1.1", "1.3", "2.2", "1.1 2.1"] {
            let word: FullWord = w.parse()?;
            println!("  mu*[{w}] = {:.12}", measure_cylinder(&sol, &word, 1e-12)?);
        }
    }
    Ok(())
}
