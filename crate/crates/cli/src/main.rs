use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mdl_relu_cli::{CliError, Experiment, ExperimentConfig};

#[derive(Debug, Parser)]
#[command(name = "mdl-relu", version, about = "Run MDL estimator experiments")]
struct Args {
    #[command(subcommand)]
    command: Command,

    /// JSON config file; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Master seed; required here or in the config
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Main output file; side files are written next to it.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads for trials and Monte Carlo generation.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Fisher-information spectrum against the grouped theory values.
    Spectrum,
    /// Per-direction grid widths, sizes and code lengths.
    CodeTable,
    /// One MDL fit with a full estimate dump.
    Estimate,
    /// Empirical redundancy over a list of sample sizes.
    Redundancy,
    /// Empirical risk and bounds over a list of sample sizes.
    RiskCurve,
    /// Gram-matrix distance from orthonormal over a width sweep.
    GramCheck,
}

impl From<Command> for Experiment {
    fn from(c: Command) -> Self {
        match c {
            Command::Spectrum => Experiment::Spectrum,
            Command::CodeTable => Experiment::CodeTable,
            Command::Estimate => Experiment::Estimate,
            Command::Redundancy => Experiment::Redundancy,
            Command::RiskCurve => Experiment::RiskCurve,
            Command::GramCheck => Experiment::GramCheck,
        }
    }
}

fn load(args: &Args) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::from_path(path)?,
        None => ExperimentConfig::default(),
    };
    cfg.experiment = Some(args.command.into());
    if let Some(seed) = args.seed {
        cfg.seed = Some(seed);
    }
    if let Some(out) = &args.out {
        cfg.output_path = Some(out.clone());
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let args = Args::parse();
    if let Some(k) = args.threads {
        if k == 0 {
            eprintln!("error: --threads must be positive");
            return ExitCode::from(2);
        }
        rayon::ThreadPoolBuilder::new().num_threads(k).build_global().expect("thread pool is set once");
    }
    let result = load(&args).and_then(|cfg| mdl_relu_cli::run(&cfg));
    match result {
        Ok(summary) => {
            // A closed stdout is not a failure of the run.
            let mut out = std::io::stdout().lock();
            for line in &summary.lines {
                let _ = writeln!(out, "{line}");
            }
            for path in &summary.artifacts {
                let _ = writeln!(out, "wrote {}", path.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
