//! End-to-end reconstruction of a synthetic cube, checked against its ground
//! truth and exported as OBJ.
//!
//! `cargo run --example reconstruct_cube [seed]`

use linelift::config::Config;
use linelift::io::to_obj;
use linelift::pipeline::reconstruct;
use linelift::synth::{generate_scene, SceneSpec};

fn main() -> linelift::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let (instance, truth) = generate_scene(&SceneSpec::cube(seed))?;
    let out = reconstruct(&instance, &Config::default())?;
    let rec = &out.reconstruction;
    println!(
        "{} lines, {} candidate edges, {} real; status {} in {:.2?}",
        rec.lines.len(),
        rec.edges.len(),
        rec.num_real(),
        out.solution.status,
        out.solution.solve_time
    );

    // the reconstruction is defined up to scale; align on the first endpoint
    let first = &rec.lines[0];
    let gt = truth.line(first.id).expect("every line has ground truth");
    let norm = |p: [f64; 3]| (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
    let scale = norm(gt.p1) / norm(first.p1);
    let mut worst: f64 = 0.0;
    for line in &rec.lines {
        let g = truth.line(line.id).expect("every line has ground truth");
        for (p, q) in [(line.p1, g.p1), (line.p2, g.p2)] {
            let d = [p[0] * scale - q[0], p[1] * scale - q[1], p[2] * scale - q[2]];
            worst = worst.max(norm(d) / norm(q));
        }
    }
    println!("largest relative endpoint error after scale alignment: {worst:.2e}");
    print!("{}", to_obj(rec));
    Ok(())
}
