use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use superdiff_core::model::CATALOG;
use superdiff_lab::config::{CatalogRef, Experiment};
use superdiff_lab::reproduce::describe;
use superdiff_lab::{exit_code, run_and_write, run_config_file, ExperimentConfig, Overrides, Report, Result};

#[derive(Parser)]
#[command(name = "superdiff", version, about = "Simulate and estimate (L, beta, k)-superdiffusions")]
struct Cli {
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the config replica count.
    #[arg(long, global = true)]
    replicas: Option<usize>,
    /// Overrides the output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; defaults to all cores.
    #[arg(long, global = true, env = "SUPERDIFF_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Runs an experiment config.
    Run { config: PathBuf },
    /// Runs the pinned check bundle of a catalog example.
    Reproduce { name: String },
    /// Lists the catalog examples.
    ListExamples,
    /// Checks a config against the schema without running it.
    Validate { config: PathBuf },
}

fn summarize(report: &Report) {
    for c in &report.checks {
        println!(
            "{:<4} {}  target {}  obtained {}",
            if c.verdict == superdiff_lab::report::Verdict::Pass { "PASS" } else { "FAIL" },
            c.name,
            c.target,
            c.obtained
        );
    }
    println!("wall clock {:.1}s", report.wall_clock_seconds);
}

fn reproduce(name: &str, overrides: &Overrides) -> Result<Report> {
    let mut config = ExperimentConfig {
        name: Some(name.to_string()),
        model: None,
        catalog: None::<CatalogRef>,
        experiment: Experiment::Reproduce { example: name.to_string() },
        replicas: 1,
        seed: 20_240_601,
        output_dir: Some(PathBuf::from("out").join(name)),
        checks: Vec::new(),
    };
    config.apply(overrides)?;
    run_and_write(&config)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads.filter(|n| *n > 0) {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot size the worker pool: {e}");
            return ExitCode::from(1);
        }
    }
    let overrides = Overrides {
        seed: cli.seed,
        replicas: cli.replicas,
        output_dir: cli.out,
    };
    let result = match &cli.command {
        Command::ListExamples => {
            for name in CATALOG {
                println!("{name:<26} {}", describe(name).unwrap_or_default());
            }
            return ExitCode::SUCCESS;
        }
        Command::Validate { config } => {
            return match ExperimentConfig::load(config).and_then(|mut c| c.apply(&overrides)) {
                Ok(()) => {
                    println!("ok");
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(1)
                }
            };
        }
        Command::Run { config } => run_config_file(config, &overrides),
        Command::Reproduce { name } => reproduce(name, &overrides),
    };
    match &result {
        Ok(report) => summarize(report),
        Err(e) => eprintln!("error: {e}"),
    }
    ExitCode::from(exit_code(&result) as u8)
}
