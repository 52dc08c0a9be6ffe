use carpetdim::carpet::{perturb_carpet, s1};
use carpetdim::fulldim::{uniqueness_certificate, CertificateOptions};

fn main() -> carpetdim::Result<()> {
    let opts = CertificateOptions::default();
    let rep = uniqueness_certificate(&s1(), &opts)?;
    println!("S1: unique={} max d2P/dt2={:.4} gamma={:.3}", rep.unique, rep.max_d2pdt2, rep.gamma_witness);
    println!("{:>10} {:>14} {:>14} {:>14}", "t", "P", "dP/dt", "d2P/dt2");
    for p in rep.points.iter().step_by(7) {
        println!("{:>10.6} {:>14.6e} {:>14.6e} {:>14.6}", p.t, p.p, p.dpdt, p.d2pdt2);
    }
    for seed in 0..5 {
        let spec = perturb_carpet(&s1(), 0.05, seed)?.spec;
        let rep = uniqueness_certificate(&spec, &opts)?;
        println!(
            "seed {seed}: D={:.8} unique={} max d2P/dt2={:.4} phi seminorm={:.4}",
            rep.d, rep.unique, rep.max_d2pdt2, rep.phi_seminorm
        );
    }
    Ok(())
}
