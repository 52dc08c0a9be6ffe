use carpetdim::carpet::{domination_constants, perturb_carpet, s1, validate_carpet, CarpetSpec, DEFAULT_GRID};

fn main() -> carpetdim::Result<()> {
    let spec = s1();
    print!("S1: {}", validate_carpet(&spec, DEFAULT_GRID)?);

    // overlapping cells in row 2
    let broken: CarpetSpec = spec.to_string().replace("u: 0.6\n", "u: 0.25\n").parse()?;
    print!("broken: {}", validate_carpet(&broken, DEFAULT_GRID)?);

    for seed in 0..3 {
        let p = perturb_carpet(&spec, 0.05, seed)?;
        let dc = domination_constants(&p.spec, DEFAULT_GRID)?;
        println!(
            "seed {seed}: attempts={} |d log a|={:.4} lambda={:.4} C={:.4}",
            p.attempts, p.log_slope_seminorm, dc.lambda, dc.c
        );
    }
    match perturb_carpet(&spec, 3.0, 0) {
        Ok(_) => println!("eps=3 unexpectedly valid"),
        Err(e) => println!("eps=3: {e}"),
    }
    println!("\n{}", perturb_carpet(&spec, 0.05, 0)?.spec);
    Ok(())
}
