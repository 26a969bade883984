//! Spanning-tree accuracy of the full model over a few noisy scenes.
//!
//! `cargo run --release --example evaluate [count]`

use linelift::config::Config;
use linelift::eval::{score, AccuracyReport};
use linelift::synth::{generate_scene, SceneSpec};

fn main() -> linelift::Result<()> {
    let count: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(5);
    let config = Config::default();
    let mut scores = Vec::new();
    for seed in 0..count {
        let (instance, _) = generate_scene(&SceneSpec::noisy(seed))?;
        let s = score(&instance, &format!("noisy-{seed}"), &config)?;
        println!("{}: {} of {} tree edges real", s.name, s.real, s.total);
        scores.push(s);
    }
    let report = AccuracyReport::new("B + C + P", scores);
    println!("mean accuracy {:.2}%, normalized {:.2}%", 100.0 * report.mean_acc, 100.0 * report.norm_acc);
    Ok(())
}
