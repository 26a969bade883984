//! Build the mixed-integer program for a scene, inspect its size, solve it
//! with the built-in branch and bound, and write it in LP format.
//!
//! `cargo run --example solve_model [seed] [out.lp]`

use linelift::config::Config;
use linelift::constraints::ConstraintSet;
use linelift::linegraph::{build_line_graph, largest_connected_component};
use linelift::milp::{build_model, kind_counts, solve, solve_relaxation, write_lp};
use linelift::pipeline::{prepare, rays_for};
use linelift::synth::{generate_scene, SceneSpec};

fn main() -> linelift::Result<()> {
    let mut args = std::env::args().skip(1);
    let seed = args.next().and_then(|s| s.parse().ok()).unwrap_or(2);
    let lp_path = args.next();

    let (instance, _) = generate_scene(&SceneSpec::noisy(seed))?;
    let config = Config::default();
    let (cam, rot, segments, _) = prepare(&instance, &config, true)?;
    let g = largest_connected_component(&build_line_graph(&segments, &config.graph));
    let rays = rays_for(&g, &cam, &rot)?;
    let set = ConstraintSet::generate(&g, &config.constraint_config());
    let model = build_model(&g, &rays, &set, &config.solver)?;

    println!("{} variables, {} rows, big-M {:.1}", model.num_vars(), model.constraints.len(), model.params.big_m);
    for (kind, n) in kind_counts(&model) {
        println!("  {kind:?}: {n}");
    }
    let root = solve_relaxation(&model);
    println!("root relaxation {:?}, bound {:.4}", root.status, root.objective);
    let sol = solve(&model)?;
    println!(
        "branch and bound: {} objective {:.4}, bound {:.4}, {} nodes, {:.2?}",
        sol.status, sol.objective, sol.bound, sol.nodes, sol.solve_time
    );
    if let Some(p) = lp_path {
        write_lp(&model, std::fs::File::create(&p)?)?;
        println!("model written to {p}");
    }
    Ok(())
}
