use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hitdim::lab::{emit_report, run_experiment, ExperimentConfig, ExperimentKind, ReportFormat};

#[derive(Parser)]
#[command(name = "hitdim", version, about = "Hitting-time and local-dimension experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Override the master seed of the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override the output directory of the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write its reports.
    Run { config: PathBuf },
    /// Check a config without running it.
    Validate { config: PathBuf },
    /// List the registered experiment kinds.
    List,
}

const EXIT_FAIL: u8 = 1;
const EXIT_ERROR: u8 = 2;

fn load(cli: &Cli, path: &Path) -> hitdim::Result<ExperimentConfig> {
    let mut config = ExperimentConfig::load(path)?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(out) = &cli.out {
        config.output.dir = Some(out.clone());
    }
    if let Some(threads) = cli.threads {
        config.threads = threads;
    }
    config.validate()?;
    Ok(config)
}

fn run(cli: &Cli, path: &Path) -> hitdim::Result<bool> {
    let config = load(cli, path)?;
    let report = run_experiment(&config)?;
    let dir = config.output.dir();
    if config.output.csv() {
        println!("wrote {}", emit_report(&report, ReportFormat::Csv, &dir)?.display());
    }
    if config.output.json() {
        println!("wrote {}", emit_report(&report, ReportFormat::Json, &dir)?.display());
    }
    for v in &report.verdicts {
        let observed = v.observed.map_or("n/a".to_string(), |x| format!("{x:.4}"));
        println!(
            "{} {}: {observed} ({})",
            if v.pass { "PASS" } else { "FAIL" },
            v.name,
            v.detail
        );
    }
    println!("{} trials in {:.2}s", report.trials.len(), report.duration_seconds);
    Ok(report.passed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::List => {
            for kind in ExperimentKind::ALL {
                println!("{:<18} {}", kind.as_str(), kind.description());
            }
            Ok(true)
        }
        Command::Validate { config } => load(&cli, config).map(|c| {
            println!("{}: valid {} experiment", config.display(), c.experiment);
            true
        }),
        Command::Run { config } => run(&cli, config),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_FAIL),
        Err(hitdim::Error::Config(problems)) => {
            eprintln!("invalid config:");
            for p in problems {
                eprintln!("  {p}");
            }
            ExitCode::from(EXIT_ERROR)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
