//! `linelift`: reconstruct, synthesize, evaluate and ablate from the shell.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use linelift::config::{Config, CONFIG_ENV};
use linelift::eval::{run_ablation, score, AccuracyReport, AblationTable, ABLATION_CONFIGS};
use linelift::io::{read_json, to_obj, write_json, ReconstructionFile, SceneInstance};
use linelift::milp::write_lp;
use linelift::pipeline::reconstruct;
use linelift::synth::{generate_scene, SceneSpec};
use linelift::Error;

#[derive(Parser)]
#[command(name = "linelift", version, about = "Lift detected Manhattan line segments to 3D")]
struct Cli {
    #[command(flatten)]
    opts: Opts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Opts {
    /// TOML configuration file.
    #[arg(long, global = true, env = CONFIG_ENV)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    no_cycles: bool,
    #[arg(long, global = true)]
    no_planarity: bool,
    #[arg(long, global = true)]
    no_boundary: bool,
    /// Big-M rows for all four endpoint pairs of every edge.
    #[arg(long, global = true)]
    strict_eq4: bool,
    /// Solver time budget per instance, in seconds.
    #[arg(long, global = true)]
    budget: Option<f64>,
    #[arg(long, global = true)]
    mu1: Option<f64>,
    #[arg(long, global = true)]
    mu2: Option<f64>,
    #[arg(long, global = true)]
    slack_penalty: Option<f64>,
    /// Segment extension used when intersecting lines, in pixels.
    #[arg(long, global = true)]
    extension_px: Option<f64>,
    /// Seed for vanishing point estimation; first scene seed for `synth`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Threads for the solver and per-instance evaluation.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Write the model in LP format to this path (`reconstruct` only).
    #[arg(long, global = true)]
    dump_lp: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Reconstruct one instance; writes `<stem>.rec.json` and `<stem>.obj`.
    Reconstruct {
        instance: PathBuf,
        #[arg(short, long, default_value = ".")]
        out: PathBuf,
    },
    /// Generate synthetic instances with ground truth.
    Synth {
        /// Built-in preset: cube, boxes, noisy or urban.
        #[arg(long, conflicts_with = "spec")]
        preset: Option<String>,
        /// Scene specification file (TOML or JSON).
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        count: u64,
        #[arg(short, long, default_value = ".")]
        out: PathBuf,
    },
    /// Spanning-tree accuracy over a directory of labeled instances.
    Eval {
        dir: PathBuf,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// All eight constraint combinations over a directory of labeled instances.
    Ablate {
        dir: PathBuf,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Schema { .. } => 2,
        Error::VanishingPointEstimation(_) => 3,
        _ => 1,
    }
}

fn run(cli: Cli) -> linelift::Result<()> {
    let config = load_config(&cli.opts)?;
    if let Some(w) = cli.opts.workers {
        // fails only if a pool already exists
        let _ = rayon::ThreadPoolBuilder::new().num_threads(w.max(1)).build_global();
    }
    match cli.command {
        Command::Reconstruct { instance, out } => cmd_reconstruct(&instance, &out, &config, cli.opts.dump_lp.as_deref()),
        Command::Synth { preset, spec, count, out } => {
            cmd_synth(preset.as_deref(), spec.as_deref(), cli.opts.seed.unwrap_or(0), count, &out)
        }
        Command::Eval { dir, csv } => cmd_eval(&dir, &config, csv.as_deref()),
        Command::Ablate { dir, csv } => cmd_ablate(&dir, &config, csv.as_deref()),
    }
}

fn load_config(o: &Opts) -> linelift::Result<Config> {
    let mut c = match &o.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    c.constraints.cycles &= !o.no_cycles;
    c.constraints.planarity &= !o.no_planarity;
    c.constraints.boundary &= !o.no_boundary;
    c.solver.strict_eq4 |= o.strict_eq4;
    if let Some(v) = o.budget {
        c.solver.time_budget = v;
    }
    if let Some(v) = o.mu1 {
        c.solver.mu1 = v;
    }
    if let Some(v) = o.mu2 {
        c.solver.mu2 = v;
    }
    if let Some(v) = o.slack_penalty {
        c.solver.slack_penalty = v;
    }
    if let Some(v) = o.extension_px {
        c.graph.extension_px = v;
    }
    if let Some(v) = o.seed {
        c.seed = v;
    }
    if let Some(v) = o.workers {
        c.solver.workers = v.max(1);
    }
    Ok(c)
}

fn stem(path: &Path) -> String {
    path.file_stem().map_or_else(|| "instance".into(), |s| s.to_string_lossy().into_owned())
}

fn cmd_reconstruct(instance: &Path, out: &Path, config: &Config, dump_lp: Option<&Path>) -> linelift::Result<()> {
    let inst = SceneInstance::read(instance)?;
    let off = inst.out_of_bounds();
    if !off.is_empty() {
        eprintln!("warning: {} line(s) reach outside the image: {off:?}", off.len());
    }
    let result = reconstruct(&inst, config)?;
    if let Some(p) = dump_lp {
        write_lp(&result.model, std::fs::File::create(p)?)?;
    }
    std::fs::create_dir_all(out)?;
    let name = stem(instance);
    let rec = &result.reconstruction;
    write_json(&out.join(format!("{name}.rec.json")), &ReconstructionFile::new(rec.clone()))?;
    std::fs::write(out.join(format!("{name}.obj")), to_obj(rec))?;
    println!(
        "{name}: {} lines, {} of {} edges real, status {}, objective {:.6}, {:.2?}",
        rec.lines.len(),
        rec.num_real(),
        rec.edges.len(),
        result.solution.status,
        result.solution.objective,
        result.solution.solve_time
    );
    Ok(())
}

fn load_spec(path: &Path) -> linelift::Result<SceneSpec> {
    let text = std::fs::read_to_string(path)?;
    if path.extension().is_some_and(|e| e == "toml") {
        serde_path_to_error::deserialize(toml::Deserializer::new(&text)).map_err(|e| Error::Schema {
            path: e.path().to_string(),
            message: e.into_inner().message().to_string(),
        })
    } else {
        linelift::io::parse_json(&text)
    }
}

fn cmd_synth(preset: Option<&str>, spec: Option<&Path>, seed: u64, count: u64, out: &Path) -> linelift::Result<()> {
    let base = match (preset, spec) {
        (_, Some(p)) => load_spec(p)?,
        (Some(name), None) => SceneSpec::preset(name, seed).ok_or_else(|| Error::Schema {
            path: "preset".into(),
            message: format!("unknown preset {name:?}; expected one of {:?}", SceneSpec::PRESETS),
        })?,
        (None, None) => SceneSpec::cube(seed),
    };
    std::fs::create_dir_all(out)?;
    for s in seed..seed + count {
        let spec = SceneSpec { rng_seed: s, ..base.clone() };
        let (inst, gt) = generate_scene(&spec)?;
        inst.write(&out.join(format!("scene_{s:04}.json")))?;
        write_json(&out.join(format!("scene_{s:04}.gt.json")), &gt)?;
    }
    println!("wrote {count} scene(s) to {}", out.display());
    Ok(())
}

/// Instance files in `dir`, skipping ground-truth and reconstruction sidecars.
fn instances(dir: &Path) -> linelift::Result<(Vec<String>, Vec<SceneInstance>)> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    paths.retain(|p| {
        let name = p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        name.ends_with(".json") && !name.ends_with(".gt.json") && !name.ends_with(".rec.json")
    });
    paths.sort();
    let names = paths.iter().map(|p| stem(p)).collect();
    let insts = paths.iter().map(|p| read_json(p)).collect::<linelift::Result<_>>()?;
    Ok((names, insts))
}

fn emit(table: &AblationTable, csv: Option<&Path>) -> linelift::Result<()> {
    print!("{table}");
    if let Some(p) = csv {
        std::fs::write(p, table.to_csv())?;
    }
    Ok(())
}

fn cmd_eval(dir: &Path, config: &Config, csv: Option<&Path>) -> linelift::Result<()> {
    use rayon::prelude::*;
    let (names, insts) = instances(dir)?;
    let scores = insts
        .par_iter()
        .zip(&names)
        .map(|(inst, name)| score(inst, name, config))
        .collect::<linelift::Result<Vec<_>>>()?;
    for s in &scores {
        println!("{}: {}/{}", s.name, s.real, s.total);
    }
    emit(&AblationTable { rows: vec![AccuracyReport::new("Configured", scores)] }, csv)
}

fn cmd_ablate(dir: &Path, config: &Config, csv: Option<&Path>) -> linelift::Result<()> {
    let (names, insts) = instances(dir)?;
    let table = run_ablation(&insts, Some(&names), config, &ABLATION_CONFIGS)?;
    emit(&table, csv)
}
