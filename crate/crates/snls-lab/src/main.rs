use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use snls_lab::{run_experiment, ExperimentConfig, LabError, RunOptions};

#[derive(Parser)]
#[command(name = "snls-lab", version, about = "Preset studies of the stochastic NLS")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the preset described by a key=value config file.
    Run {
        config: PathBuf,
        /// Output directory (default: output.dir, then snls-lab-out/<experiment>).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads (default: ensemble.workers, then SNLS_LAB_WORKERS, then all cores).
        #[arg(long)]
        workers: Option<usize>,
        /// Continue the partial run stored in DIR.
        #[arg(long, value_name = "DIR")]
        resume: Option<PathBuf>,
        /// Save state and exit with status 3 once every path reaches time T.
        #[arg(long, value_name = "T")]
        halt_after: Option<f64>,
    },
}

fn workers(cli: Option<usize>, cfg: &ExperimentConfig) -> Result<usize, LabError> {
    if let Some(w) = cli.filter(|w| *w > 0) {
        return Ok(w);
    }
    if cfg.workers > 0 {
        return Ok(cfg.workers);
    }
    if let Ok(v) = std::env::var("SNLS_LAB_WORKERS") {
        return v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|w| *w > 0)
            .ok_or_else(|| LabError::config("SNLS_LAB_WORKERS", format!("expected a positive integer, got `{v}`")));
    }
    Ok(std::thread::available_parallelism().map_or(1, |n| n.get()))
}

fn run(command: Command) -> Result<i32, LabError> {
    let Command::Run {
        config,
        out,
        workers: cli_workers,
        resume,
        halt_after,
    } = command;
    let text = std::fs::read_to_string(&config).map_err(|e| LabError::io(&config, e))?;
    let cfg = ExperimentConfig::parse(&text)?;
    let out = match (&resume, out) {
        (Some(dir), None) => dir.clone(),
        (Some(dir), Some(o)) if &o != dir => {
            return Err(LabError::config("--resume", "continues in place; --out must be omitted or equal"))
        }
        (_, Some(o)) => o,
        (None, None) if !cfg.output_dir.is_empty() => PathBuf::from(&cfg.output_dir),
        (None, None) => PathBuf::from("snls-lab-out").join(cfg.experiment.name()),
    };
    let opts = RunOptions {
        out,
        workers: workers(cli_workers, &cfg)?,
        resume: resume.is_some(),
        halt_after,
    };
    let summary = run_experiment(&cfg, &opts)?;
    print!("{}", summary.render());
    Ok(summary.exit_code())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("snls-lab: {e}");
            ExitCode::from(2)
        }
    }
}
