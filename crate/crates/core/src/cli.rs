//! The `freight-bid` command line.
//!
//! Exit status: 0 on success, 1 on configuration or I/O errors, 2 on usage
//! errors, 3 when training diverges.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::ConfigFile;
use crate::error::{Error, Result};
use crate::experiments::{self, Scale, ScenarioSpec, SweepRow};
use crate::io::{
    load_checkpoint, save_checkpoint, write_json, write_summary_csv, write_sweep_csv, write_trace_csv,
    write_validation_csv, RunManifest,
};
use crate::learner::{train, validate};

#[derive(Debug, Parser)]
#[command(name = "freight-bid", version, about = "Train and evaluate container bidding policies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train one policy; writes trace.csv, policy.json and manifest.json.
    Train {
        #[command(flatten)]
        common: Common,
    },
    /// Evaluate a saved policy on fresh episodes; writes validation.csv.
    Validate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        policy: PathBuf,
        #[arg(long, default_value_t = 10)]
        episodes: u32,
        #[arg(long, default_value_t = 1000)]
        horizon: u32,
    },
    /// Train across a parameter sweep; writes <sweep>.csv and <sweep>_summary.csv.
    Sweep {
        #[arg(value_enum)]
        kind: SweepKind,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        runs: Runs,
    },
    /// The two single-type scenarios; writes toy.csv and toy_summary.csv.
    Toy {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        runs: Runs,
    },
    /// Base features against transport-cost-only features; writes cost_feature.csv.
    CostFeature {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        runs: Runs,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SweepKind {
    Sharing,
    Capacity,
    Horizon,
    LearningRate,
}

#[derive(Debug, Args)]
struct Common {
    /// JSON config; missing keys take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the config's seed (the first seed for multi-run commands).
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory, created if missing.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct Runs {
    #[arg(long)]
    replications: Option<u32>,
    /// Use the full training budgets instead of the desk-scale ones.
    #[arg(long)]
    paper_scale: bool,
}

/// Parses `args` (program name first), runs the command and returns the exit status.
pub fn run_command<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let command_line = args.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    match execute(cli.command, command_line) {
        Ok(()) => 0,
        Err(e @ Error::Diverged { .. }) => {
            eprintln!("error: {e}");
            3
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn load_config(common: &Common) -> Result<ConfigFile> {
    let mut file = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
            ConfigFile::from_json(&text)?
        }
        None => ConfigFile::default(),
    };
    if let Some(seed) = common.seed {
        file.learn.seed = seed;
    }
    Ok(file)
}

fn prepare_out(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    Ok(())
}

fn execute(command: Command, command_line: Vec<String>) -> Result<()> {
    match command {
        Command::Train { common } => {
            let file = load_config(&common)?;
            prepare_out(&common.out)?;
            let manifest_path = common.out.join("manifest.json");
            let mut manifest = RunManifest::start(command_line, file.clone(), vec![file.learn.seed]);
            write_json(&manifest_path, &manifest)?;

            let (params, trace) = train(&file.learn, &file.instance)?;
            let trace_path = common.out.join("trace.csv");
            let policy_path = common.out.join("policy.json");
            write_trace_csv(&trace_path, &trace)?;
            save_checkpoint(&policy_path, &params, file.learn.features, &manifest.config_hash)?;

            println!("sigma {}", params.sigma);
            println!("theta {:?}", params.theta);
            if let Some((episode, cost)) = trace.validation_costs().last() {
                println!("validation cost after episode {episode}: {cost}");
            }
            manifest.finish(vec![trace_path, policy_path, manifest_path.clone()]);
            write_json(&manifest_path, &manifest)
        }
        Command::Validate { common, policy, episodes, horizon } => {
            let file = load_config(&common)?;
            let (params, features, _) = load_checkpoint(&policy)?;
            prepare_out(&common.out)?;
            let report = validate(&params, features, &file.instance, episodes, horizon, file.learn.seed)?;
            let path = common.out.join("validation.csv");
            write_validation_csv(&path, &report)?;
            match report.avg_cost() {
                Some(cost) => println!("mean validation cost per completed job: {cost}"),
                None => println!("no job completed during validation"),
            }
            Ok(())
        }
        Command::Sweep { kind, common, runs } => {
            let (spec, scale) = scenario(&common, &runs)?;
            let (name, rows) = match kind {
                SweepKind::Sharing => ("sharing", experiments::sharing_sweep(&spec)?),
                SweepKind::Capacity => ("capacity", experiments::capacity_sweep(&spec, &experiments::capacities(&spec))?),
                SweepKind::Horizon => ("horizon", experiments::horizon_sweep(&spec, scale)?),
                SweepKind::LearningRate => ("learning_rate", experiments::learning_rate_and_init_sweeps(&spec)?),
            };
            emit(&common.out, name, &spec, &rows, command_line)
        }
        Command::Toy { common, runs } => {
            let (spec, scale) = scenario(&common, &runs)?;
            let seeds = spec.seeds();
            let rows = experiments::toy_scenarios(scale, &seeds)?;
            emit(&common.out, "toy", &spec, &rows, command_line)
        }
        Command::CostFeature { common, runs } => {
            let (spec, _) = scenario(&common, &runs)?;
            let rows = experiments::carrier_cost_feature_scenario(&spec)?;
            emit(&common.out, "cost_feature", &spec, &rows, command_line)
        }
    }
}

/// The config's scenario with the training budget set by the scale preset.
fn scenario(common: &Common, runs: &Runs) -> Result<(ScenarioSpec, Scale)> {
    let scale = if runs.paper_scale { Scale::Paper } else { Scale::Desk };
    let mut spec = load_config(common)?.spec().scaled(scale);
    if let Some(r) = runs.replications {
        spec.replications = r;
        spec.seeds.clear();
    }
    spec.validate()?;
    Ok((spec, scale))
}

fn emit(out: &Path, name: &str, spec: &ScenarioSpec, rows: &[SweepRow], command_line: Vec<String>) -> Result<()> {
    prepare_out(out)?;
    let manifest_path = out.join("manifest.json");
    let mut manifest = RunManifest::start(command_line, ConfigFile::from_spec(spec), spec.seeds());
    let rows_path = out.join(format!("{name}.csv"));
    let summary_path = out.join(format!("{name}_summary.csv"));
    let summary = experiments::summarize(rows);
    write_sweep_csv(&rows_path, rows)?;
    write_summary_csv(&summary_path, &summary)?;

    for cell in &summary {
        let settings: Vec<String> = cell.settings.iter().map(|(k, v)| format!("{k}={v}")).collect();
        let cost = cell.validation_cost.map(|s| format!("{:.3} [{:.3}, {:.3}]", s.mean, s.min, s.max));
        let margin = cell.carrier_profit_margin.map(|s| format!("{:.3}", s.mean));
        println!(
            "{:<14} {:<40} runs {} diverged {} cost {} margin {}",
            cell.scenario,
            settings.join(" "),
            cell.runs,
            cell.diverged,
            cost.as_deref().unwrap_or("-"),
            margin.as_deref().unwrap_or("-"),
        );
    }
    manifest.finish(vec![rows_path, summary_path, manifest_path.clone()]);
    write_json(&manifest_path, &manifest)
}
