//! `vmtd`: run the analysis, evaluation and control experiments from the
//! command line.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;

use vmtd_core::experiment::analyze::{render_table, write_analyze_csv};
use vmtd_core::experiment::config::{ExperimentKind, PolicyMode};
use vmtd_core::experiment::output::MANIFEST_FILE;
use vmtd_core::experiment::{
    emit_plot_data, read_csv, run_analyze, run_control, run_evaluation, write_csv, CurveSummary, ExperimentConfig,
};
use vmtd_core::EnvKind;

#[derive(Debug, Parser)]
#[command(name = "vmtd", version, about = "Variance-minimization TD experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Key-matrix eigenvalues and fixed points of the six prediction algorithms.
    Analyze {
        #[arg(long, default_value = "twostate")]
        env: String,
        #[arg(long, value_enum)]
        mode: Mode,
        /// Also write the table as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Policy-evaluation learning curves.
    Evaluate(RunArgs),
    /// Control learning curves.
    Control(RunArgs),
    /// Per-algorithm plot-ready CSVs and a manifest from a curve CSV.
    Plot {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Mode {
    On,
    Off,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    horizon: Option<u64>,
    /// Curve CSV path; overrides `output` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl RunArgs {
    fn load(&self, expected: ExperimentKind) -> Result<ExperimentConfig> {
        let mut config = ExperimentConfig::load(&self.config)?;
        if config.kind != expected {
            bail!("{} is not a {} config", self.config.display(), kind_name(expected));
        }
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if let Some(runs) = self.runs {
            config.runs = runs;
        }
        if let Some(horizon) = self.horizon {
            config.horizon = horizon;
        }
        if let Some(out) = &self.out {
            config.output = Some(out.clone());
        }
        config.validate()?;
        Ok(config)
    }
}

fn kind_name(kind: ExperimentKind) -> &'static str {
    match kind {
        ExperimentKind::Evaluation => "evaluation",
        ExperimentKind::Control => "control",
        ExperimentKind::Analyze => "analyze",
    }
}

/// Fixed notation for ordinary magnitudes, scientific otherwise.
fn num(x: f64) -> String {
    if x != 0.0 && x.is_finite() && !(1e-4..1e6).contains(&x.abs()) {
        format!("{x:.4e}")
    } else {
        format!("{x:.6}")
    }
}

fn print_summaries(summaries: &[CurveSummary]) {
    println!("{:<8} {:>6} {:>12} {:>16} {:>14}", "algo", "runs", "last index", "final mean", "final std");
    for s in summaries {
        let last = s.len().saturating_sub(1);
        println!(
            "{:<8} {:>6} {:>12} {:>16} {:>14}",
            s.algorithm,
            s.n_runs,
            s.index[last],
            num(s.mean[last]),
            num(s.std[last])
        );
    }
}

fn finish(config: &ExperimentConfig, summaries: &[CurveSummary]) -> Result<()> {
    print_summaries(summaries);
    if let Some(path) = &config.output {
        write_csv(summaries, path)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn analyze(env: &str, mode: Mode, out: Option<&Path>) -> Result<()> {
    let env: EnvKind = env.parse()?;
    let mut config = ExperimentConfig::new(ExperimentKind::Analyze, env, 0);
    config.policy_mode = match mode {
        Mode::On => PolicyMode::On,
        Mode::Off => PolicyMode::Off,
    };
    let rows = run_analyze(&config)?;
    print!("{}", render_table(&rows));
    if let Some(path) = out {
        write_analyze_csv(&rows, path)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Analyze { env, mode, out } => analyze(&env, mode, out.as_deref()),
        Command::Evaluate(args) => {
            let config = args.load(ExperimentKind::Evaluation)?;
            info!("evaluation: {} runs x {} steps", config.runs, config.horizon);
            let summaries = run_evaluation(&config)?;
            finish(&config, &summaries)
        }
        Command::Control(args) => {
            let config = args.load(ExperimentKind::Control)?;
            info!("control on {}: {} runs x {} episodes", config.env, config.runs, config.horizon);
            let summaries = run_control(&config)?;
            finish(&config, &summaries)
        }
        Command::Plot { input, out } => {
            let summaries = read_csv(&input).with_context(|| format!("reading {}", input.display()))?;
            let manifest = emit_plot_data(&summaries, &out)?;
            println!("wrote {} series and {} to {}", manifest.series.len(), MANIFEST_FILE, out.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("vmtd: error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
