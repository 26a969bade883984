//! Synthetic scenes: generate each preset, summarize it, and write an
//! instance with its ground-truth sidecar.
//!
//! `cargo run --example synth_scenes [out_dir]`

use std::path::PathBuf;

use linelift::io::write_json;
use linelift::synth::{generate_scene, SceneSpec};

fn main() -> linelift::Result<()> {
    let out = std::env::args().nth(1).map(PathBuf::from);
    for preset in SceneSpec::PRESETS {
        let spec = SceneSpec::preset(preset, 0).expect("listed preset");
        let (instance, truth) = generate_scene(&spec)?;
        let real = truth.edges.iter().filter(|e| e.real).count();
        let distractors = truth.lines.iter().filter(|l| l.distractor).count();
        println!(
            "{preset:<6} {:>3} lines ({distractors} distractors), {:>3} labeled edges ({real} real), margin {:.3}",
            instance.lines.len(),
            truth.edges.len(),
            truth.margin
        );
        if let Some(dir) = &out {
            std::fs::create_dir_all(dir)?;
            instance.write(&dir.join(format!("{preset}.json")))?;
            write_json(&dir.join(format!("{preset}.gt.json")), &truth)?;
        }
    }
    Ok(())
}
