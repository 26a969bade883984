//! The three optional constraint families on one scene: cycle bounds,
//! planarity pairs and boundary variables.
//!
//! `cargo run --example constraints [seed]`

use linelift::config::Config;
use linelift::constraints::ConstraintSet;
use linelift::linegraph::{build_line_graph, largest_connected_component};
use linelift::pipeline::prepare;
use linelift::synth::{generate_scene, SceneSpec};

fn main() -> linelift::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1);
    let (instance, _) = generate_scene(&SceneSpec::boxes(seed))?;
    let config = Config::default();
    let (_, _, segments, _) = prepare(&instance, &config, true)?;
    let g = largest_connected_component(&build_line_graph(&segments, &config.graph));
    let set = ConstraintSet::generate(&g, &config.constraint_config());

    println!("{} lines, {} candidate edges", g.num_vertices(), g.num_edges());
    println!("{} cycle constraints", set.cycles.len());
    for c in set.cycles.iter().take(5) {
        let ids: Vec<u32> = c.vertices.iter().map(|&v| g.vertices[v].id).collect();
        let dirs: String = c.vertices.iter().map(|&v| g.direction(v).to_string()).collect();
        println!("  lines {ids:?} ({dirs}): at most {} of {} real", c.bound, c.edges.len());
    }
    println!(
        "{} planarity pairs with {} rows",
        set.planarity.pairs.len(),
        set.planarity.rows.len()
    );
    println!("{} boundary variables with {} rows", set.boundary.vars.len(), set.boundary.rows.len());
    println!("{} combinatorial rows in total", set.num_rows());
    Ok(())
}
