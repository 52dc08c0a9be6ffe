use carpetdim::carpet::s1;
use carpetdim::cli::sweep;

fn main() -> carpetdim::Result<()> {
    let rows = sweep(&s1(), 0.0, 0.05, 6, 3, 50, 64)?;
    for r in &rows {
        let masses: Vec<String> = r.masses.iter().map(|m| format!("{m:.6}")).collect();
        println!("eps={:.3} D={:.8} unique={} mu=[{}]", r.epsilon, r.d, r.unique, masses.join(", "));
    }
    Ok(())
}
