//! Pressure, Gibbs states and the correlation form on the row shift.
use carpetdim::carpet::s1;
use carpetdim::coding::RowWord;
use carpetdim::transfer::{build_operator, correlation_form, cylinder_mass, entropy, Collocation, GibbsSystem};

fn main() -> carpetdim::Result<()> {
    let spec = s1();

    // Bernoulli(0.3, 0.7) as the Gibbs state of a locally constant potential
    let q = [0.3f64, 0.7];
    let sys = build_operator(&spec, |i, _| q[i].ln(), 64)?;
    println!("P = {:e}, h = {:.12}", sys.pressure(), entropy(&sys, 1e-12)?);
    let ind = sys.collocation().observable(|i, _| if i == 0 { 1.0 } else { 0.0 });
    println!("Q(1_[1], 1_[1]) = {:.12} (q(1-q) = {:.12})", correlation_form(&sys, &ind, &ind, 1e-14)?, 0.3 * 0.7);
    println!("nu[1 2] = {:.12}", cylinder_mass(&sys, &RowWord(vec![0, 1]), 1e-12)?);

    // Bowen root of s -> P(-s log|b'|)
    let col = Collocation::new(&spec, 64)?;
    let psi = col.observable(|i, z| -spec.b_prime(i, z).abs().ln());
    let (mut lo, mut hi) = (0.0, 2.0);
    for _ in 0..60 {
        let s = 0.5 * (lo + hi);
        if GibbsSystem::new(&col, psi.scaled(-s))?.pressure() > 0.0 {
            lo = s;
        } else {
            hi = s;
        }
    }
    println!("Bowen root = {:.12} (log 2 / log(1/0.45) = {:.12})", lo, 2f64.ln() / (1.0 / 0.45f64).ln());
    Ok(())
}
