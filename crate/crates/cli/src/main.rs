use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::Parser;
use exheat_cli::{load_config, run_experiment, ExperimentConfig, RunOptions, Task};

/// Heat flow on exterior domains: profiles, evolutions, mass and decay rates.
#[derive(Debug, Parser)]
#[command(name = "exheat", version)]
struct Cli {
    #[arg(value_enum)]
    task: Task,
    /// JSON experiment config (optional for `verify`).
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory; overrides `output.dir`.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Run on one thread so that repeated runs are bitwise identical.
    #[arg(long)]
    single_thread: bool,
    /// Linear solver tolerance; overrides `solver.tol`.
    #[arg(long, value_name = "X")]
    tol: Option<f64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: &Cli) -> anyhow::Result<ExitCode> {
    if cli.single_thread {
        rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build_global()
            .context("configuring the thread pool")?;
    }
    let config = match &cli.config {
        Some(path) => load_config(path).with_context(|| format!("loading {}", path.display()))?,
        None if cli.task == Task::Verify => ExperimentConfig::default(),
        None => anyhow::bail!("--config is required for `{}`", cli.task.name()),
    };
    let options = RunOptions {
        out: cli.out.clone(),
        tol: cli.tol,
        single_thread: cli.single_thread,
    };
    let report = run_experiment(&config, cli.task, &options)?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    for f in &report.files {
        println!("wrote {}", report.out_dir.join(f).display());
    }
    Ok(if report.passed == Some(false) {
        ExitCode::from(2)
    } else {
        ExitCode::SUCCESS
    })
}
