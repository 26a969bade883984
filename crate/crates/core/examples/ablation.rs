//! Constraint ablation: every combination of boundary, cycle and planarity
//! constraints over a seeded noisy suite.
//!
//! `cargo run --release --example ablation [count] [budget_s]`

use linelift::config::Config;
use linelift::eval::{run_ablation, ABLATION_CONFIGS};
use linelift::synth::{generate_scene, SceneSpec};

fn main() -> linelift::Result<()> {
    let mut args = std::env::args().skip(1);
    let count: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(8);
    let mut config = Config::default();
    if let Some(b) = args.next().and_then(|s| s.parse().ok()) {
        config.solver.time_budget = b;
    }
    let suite = (0..count)
        .map(|seed| generate_scene(&SceneSpec::noisy(seed)).map(|(inst, _)| inst))
        .collect::<linelift::Result<Vec<_>>>()?;
    let start = std::time::Instant::now();
    let table = run_ablation(&suite, None, &config, &ABLATION_CONFIGS)?;
    print!("{table}");
    println!("{} scenes in {:.1?}", suite.len(), start.elapsed());
    Ok(())
}
