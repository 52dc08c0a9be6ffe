use carpetdim::carpet::{s1, s1_eps};
use carpetdim::geometry::{box_count, render_regions, vertical_graph_distortion_check};

fn main() -> carpetdim::Result<()> {
    for r in render_regions(&s1(), 1)? {
        let (x0, y0, x1, y1) = r.bbox;
        println!("{}: [{x0:.4}, {x1:.4}] x [{y0:.4}, {y1:.4}]", r.word);
    }
    let curved = render_regions(&s1_eps(0.05)?, 2)?;
    let r = &curved[0];
    println!("{} left edge: {:?}", r.word, &r.left[..3]);

    let scales: Vec<f64> = (3..=9).map(|k| 0.5f64.powi(k)).collect();
    for seed in [1, 2] {
        let bc = box_count(&s1(), 1_000_000, 14, &scales, seed)?;
        println!("box dimension (seed {seed}) = {:.4}", bc.estimate);
    }
    let check = vertical_graph_distortion_check(&s1_eps(0.05)?, 1000, 30, 0)?;
    println!("max slope {:.6} <= C = {:.6}: {}", check.max_slope_seen, check.c, check.pass);
    Ok(())
}
