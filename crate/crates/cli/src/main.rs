use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand};
use vtools_core::agent::{SsupConfig, Variant};
use vtools_core::harness::io::{self, ReferenceRow};
use vtools_core::harness::sweep::{self, ParamAxis};
use vtools_core::harness::{compare, load_level_dir, run_experiment, write_outputs, ExperimentConfig, DEFAULT_RUNS};
use vtools_core::level::{Action, LevelSpec};
use vtools_core::trajectory::{TrajectoryDoc, DEFAULT_FRAME_STRIDE};
use vtools_core::{bundled, HarnessError, NoiseConfig};

#[derive(Parser)]
#[command(name = "vtools", version, about = "Physics puzzle experiments with the sample-simulate-update agent")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct AgentArgs {
    /// Level directory; the bundled levels when omitted.
    #[arg(long)]
    levels: Option<PathBuf>,
    /// Comma-separated agent variants.
    #[arg(long, value_delimiter = ',', default_value = "full,no-prior,no-simulation,no-updating,guessing")]
    variant: Vec<Variant>,
    #[arg(long, default_value_t = DEFAULT_RUNS)]
    runs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// JSON file with agent settings; omitted fields keep their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one agent setting, e.g. `--set epsilon=0.2` (repeatable).
    #[arg(long = "set", value_name = "NAME=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Run every variant on every level and write metrics, episodes and plots.
    Run {
        #[command(flatten)]
        agent: AgentArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Correlate a metrics CSV with a reference CSV.
    Compare {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        reference: PathBuf,
        /// Model variant to compare.
        #[arg(long, default_value = "full")]
        variant: Variant,
        /// Write the report as JSON here as well.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-run the experiment over a grid of agent settings.
    Sweep {
        #[command(flatten)]
        agent: AgentArgs,
        /// `name=start:stop:step` or `name=a,b,c` (repeatable; grids multiply).
        #[arg(long, required = true)]
        param: Vec<ParamAxis>,
        /// Output CSV, one row per grid point and variant.
        #[arg(long)]
        out: PathBuf,
    },
    /// Play one placement on the noiseless engine and print the outcome.
    Attempt {
        /// Bundled level name or path to a level document.
        #[arg(long)]
        level: String,
        #[arg(long)]
        tool: usize,
        #[arg(long)]
        x: f64,
        #[arg(long)]
        y: f64,
        /// Write the trajectory document here.
        #[arg(long)]
        trajectory: Option<PathBuf>,
    },
    /// Serve levels and record human attempts over HTTP.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
        /// Where session logs and trajectories are stored.
        #[arg(long, default_value = "vtools-data")]
        data: PathBuf,
        /// Level directory; the bundled levels when omitted.
        #[arg(long)]
        levels: Option<PathBuf>,
    },
    /// List the bundled levels.
    Levels,
}

type Res<T> = Result<T, String>;

fn load_levels(dir: Option<&Path>) -> Res<Vec<LevelSpec>> {
    match dir {
        Some(d) => load_level_dir(d).map_err(|e| e.to_string()),
        None => bundled::load_all().map_err(|e| e.to_string()),
    }
}

fn experiment_config(args: &AgentArgs) -> Res<ExperimentConfig> {
    let mut agent = match &args.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?;
            serde_json::from_str::<SsupConfig>(&text).map_err(|e| format!("{}: {e}", p.display()))?
        }
        None => SsupConfig::default(),
    };
    for o in &args.overrides {
        let (name, value) = o.split_once('=').ok_or_else(|| format!("`--set {o}`: expected NAME=VALUE"))?;
        let value: f64 = value.parse().map_err(|_| format!("`--set {o}`: `{value}` is not a number"))?;
        agent = sweep::apply(&agent, &[(name, value)]).map_err(|e| e.to_string())?;
    }
    let cfg = ExperimentConfig { variants: args.variant.clone(), runs: args.runs, base_seed: args.seed, agent, out_dir: None };
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

fn cmd_run(agent: &AgentArgs, out: &Path) -> Res<()> {
    let cfg = ExperimentConfig { out_dir: Some(out.to_path_buf()), ..experiment_config(agent)? };
    let levels = load_levels(agent.levels.as_deref())?;
    eprintln!("running {} levels x {} variants x {} runs", levels.len(), cfg.variants.len(), cfg.runs);
    let cells = run_experiment(&levels, &cfg).map_err(|e| e.to_string())?;
    write_outputs(out, &cfg, &cells).map_err(|e| e.to_string())?;
    println!("{:<16} {:<14} {:>8} {:>9} {:>6}", "level", "variant", "solved", "attempts", "area");
    for c in &cells {
        let m = &c.metrics;
        println!("{:<16} {:<14} {:>8.3} {:>9.2} {:>6.3}", m.level, m.variant, m.solution_rate, m.mean_attempts, m.curve_area());
    }
    println!("wrote {}", out.display());
    Ok(())
}

fn cmd_compare(model: &Path, reference: &Path, variant: Variant, out: Option<&Path>) -> Res<()> {
    let rows: Vec<_> = io::read_metrics_csv(model).map_err(|e| e.to_string())?.into_iter().filter(|r| r.variant == variant).collect();
    if rows.is_empty() {
        return Err(format!("{} has no rows for variant {variant}", model.display()));
    }
    let refs = io::read_reference_csv(reference).map_err(|e| e.to_string())?;
    let mean = |xs: Vec<f64>| xs.iter().sum::<f64>() / xs.len() as f64;
    let model_rate = mean(rows.iter().map(|r| r.solution_rate).collect());
    let model_attempts = mean(rows.iter().map(|r| r.mean_attempts).collect());
    let mut report = serde_json::json!({
        "variant": variant,
        "model_mean_solution_rate": model_rate,
        "model_mean_attempts": model_attempts,
    });
    println!("model ({variant}, {} levels): solution rate {model_rate:.3}, mean attempts {model_attempts:.2}", rows.len());
    if let Some(agg) = refs.iter().find(|r| r.is_aggregate()) {
        println!(
            "reference aggregate: solution rate {}, mean attempts {}",
            agg.solution_rate.map_or("-".into(), |v| v.to_string()),
            agg.mean_attempts.map_or("-".into(), |v| v.to_string())
        );
        report["reference_aggregate"] = serde_json::json!({"solution_rate": agg.solution_rate, "mean_attempts": agg.mean_attempts});
    }
    let per_level: Vec<&ReferenceRow> = refs.iter().filter(|r| !r.is_aggregate()).collect();
    if per_level.is_empty() {
        println!("reference has aggregates only; per-level correlation needs per-level rows");
    }
    type Pick = fn(&ReferenceRow) -> Option<f64>;
    let metrics: [(&str, Pick, fn(&io::MetricsRow) -> f64); 2] = [
        ("mean_attempts", |r| r.mean_attempts, |m| m.mean_attempts),
        ("solution_rate", |r| r.solution_rate, |m| m.solution_rate),
    ];
    for (name, pick_ref, pick_model) in metrics {
        let reference: Vec<(String, f64)> = per_level.iter().filter_map(|r| pick_ref(r).map(|v| (r.level.clone(), v))).collect();
        if reference.is_empty() {
            continue;
        }
        let model: Vec<(String, f64)> = reference
            .iter()
            .map(|(level, _)| {
                rows.iter()
                    .find(|r| &r.level == level)
                    .map(|r| (level.clone(), pick_model(r)))
                    .ok_or_else(|| format!("level `{level}` is in the reference but not in the model metrics"))
            })
            .collect::<Res<_>>()?;
        let r = match compare(&model, &reference) {
            Ok(r) => r,
            Err(e @ HarnessError::DegenerateVariance(_)) => {
                println!("{name}: {e}");
                continue;
            }
            Err(e) => return Err(format!("{name}: {e}")),
        };
        println!("{name}: r = {:.3}, rmse = {:.3} over {} levels", r.pearson_r, r.rmse, r.levels.len());
        for ((level, res), (m, h)) in r.levels.iter().zip(&r.residuals).zip(r.model.iter().zip(&r.reference)) {
            println!("  {level:<16} model {m:>8.3}  reference {h:>8.3}  residual {res:>+8.3}");
        }
        report[name] = serde_json::to_value(&r).map_err(|e| e.to_string())?;
    }
    if let Some(out) = out {
        let text = serde_json::to_string_pretty(&report).map_err(|e| e.to_string())?;
        std::fs::write(out, text).map_err(|e| format!("{}: {e}", out.display()))?;
    }
    Ok(())
}

fn cmd_sweep(agent: &AgentArgs, params: &[ParamAxis], out: &Path) -> Res<()> {
    let cfg = experiment_config(agent)?;
    let levels = load_levels(agent.levels.as_deref())?;
    let rows = sweep::run_sweep(&levels, &cfg, params).map_err(|e| e.to_string())?;
    sweep::write_sweep_csv(out, params, &rows).map_err(|e| e.to_string())?;
    println!("wrote {} rows to {}", rows.len(), out.display());
    Ok(())
}

fn cmd_attempt(level: &str, action: Action, trajectory: Option<&Path>) -> Res<()> {
    let spec = match bundled::load(level) {
        Some(l) => l.map_err(|e| e.to_string())?,
        None => LevelSpec::load_file(level).map_err(|e| format!("{level}: {e}"))?,
    };
    let outcome = spec.attempt_recorded(Some(&action), NoiseConfig::NONE, 0).map_err(|e| e.to_string())?;
    println!(
        "{}",
        serde_json::json!({
            "level": spec.name,
            "solved": outcome.solved,
            "reward": outcome.reward,
            "min_goal_distance": outcome.min_goal_distance,
            "normalized_distance": outcome.normalized_distance,
        })
    );
    if let Some(path) = trajectory {
        let doc = TrajectoryDoc::from_trajectory(outcome.trajectory.as_ref().expect("recorded"), DEFAULT_FRAME_STRIDE);
        std::fs::write(path, doc.to_json()).map_err(|e| format!("{}: {e}", path.display()))?;
    }
    Ok(())
}

fn cmd_serve(addr: SocketAddr, data: &Path, levels: Option<&Path>) -> Res<()> {
    let levels = match levels {
        Some(d) => vtools_service::LevelStore::from_dir(d)?,
        None => vtools_service::LevelStore::bundled().map_err(|e| e.to_string())?,
    };
    let store = vtools_service::Store::open(data).map_err(|e| format!("{}: {e}", data.display()))?;
    let state = vtools_service::AppState::new(levels, store, Arc::new(vtools_service::SystemClock)).map_err(|e| e.to_string())?;
    let rt = tokio::runtime::Runtime::new().map_err(|e| e.to_string())?;
    eprintln!("serving on http://{addr}, data in {}", data.display());
    rt.block_on(vtools_service::serve(state, addr)).map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run { agent, out } => cmd_run(agent, out),
        Command::Compare { model, reference, variant, out } => cmd_compare(model, reference, *variant, out.as_deref()),
        Command::Sweep { agent, param, out } => cmd_sweep(agent, param, out),
        Command::Attempt { level, tool, x, y, trajectory } => cmd_attempt(level, Action::new(*tool, *x, *y), trajectory.as_deref()),
        Command::Serve { addr, data, levels } => cmd_serve(*addr, data, levels.as_deref()),
        Command::Levels => {
            for b in bundled::LEVELS {
                println!("{:<18} {:?}", b.name, b.category);
            }
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
