//! Line-graph construction: candidate intersections, junction classes and
//! the largest connected component.
//!
//! `cargo run --example line_graph [preset] [seed]`

use std::collections::BTreeMap;

use linelift::config::Config;
use linelift::linegraph::{build_line_graph, largest_connected_component};
use linelift::pipeline::prepare;
use linelift::synth::{generate_scene, SceneSpec};

fn main() -> linelift::Result<()> {
    let mut args = std::env::args().skip(1);
    let preset = args.next().unwrap_or_else(|| "noisy".into());
    let seed = args.next().and_then(|s| s.parse().ok()).unwrap_or(0);
    let spec = SceneSpec::preset(&preset, seed).expect("known preset");
    let (instance, truth) = generate_scene(&spec)?;
    let config = Config::default();

    let (_, _, segments, source) = prepare(&instance, &config, true)?;
    let graph = build_line_graph(&segments, &config.graph);
    let lcc = largest_connected_component(&graph);
    println!(
        "{} segments ({source:?} labels), {} edges, {} components; largest has {} lines and {} edges",
        segments.len(),
        graph.num_edges(),
        graph.components().len(),
        lcc.num_vertices(),
        lcc.num_edges()
    );

    let mut by_class: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for e in &lcc.edges {
        let (a, b) = (lcc.vertices[e.i].id, lcc.vertices[e.j].id);
        let entry = by_class.entry(format!("{:?}", e.junction)).or_default();
        entry.0 += 1;
        if truth.label(a, b) == Some(true) {
            entry.1 += 1;
        }
    }
    println!("junction  edges  real");
    for (class, (n, real)) in by_class {
        println!("{class:<8}  {n:>5}  {real:>4}");
    }
    Ok(())
}
