use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qlattice::cli::{list, run, write_report, CliError, ExperimentConfig};

#[derive(Parser)]
#[command(name = "qlattice", version, about = "Discrete-to-continuum experiments for lattice nematics")]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Show the experiment registry with runnable default parameters.
    List {
        #[arg(long)]
        json: bool,
    },
    /// Run one experiment and write its tables and summary.
    Run {
        #[arg(long)]
        experiment: Option<String>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn execute(
    experiment: Option<String>,
    config: Option<PathBuf>,
    out: Option<PathBuf>,
    seed: Option<u64>,
) -> Result<i32, CliError> {
    let mut cfg = match &config {
        Some(p) => ExperimentConfig::from_path(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(e) = experiment {
        if config.is_some() && cfg.experiment != e {
            return Err(CliError::Config(format!(
                "--experiment {e} disagrees with the configuration's `{}`",
                cfg.experiment
            )));
        }
        cfg.experiment = e;
    }
    if cfg.experiment.is_empty() {
        return Err(CliError::Config("no experiment given".into()));
    }
    let dir = out
        .or_else(|| cfg.output.clone())
        .unwrap_or_else(|| PathBuf::from("runs").join(&cfg.experiment));
    let mut report = run(&cfg, seed)?;
    write_report(&mut report, &dir)?;
    for c in &report.checks {
        println!(
            "{} {} [{}]: {:e} {} {:e}",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            c.source,
            c.value,
            c.comparison,
            c.tolerance
        );
    }
    println!("summary: {}", dir.join(qlattice::cli::SUMMARY_FILE).display());
    Ok(report.exit_code())
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match args.command {
        Command::List { json } => {
            let entries = list();
            if json {
                println!("{}", serde_json::to_string_pretty(&entries).expect("registry serializes"));
            } else {
                for e in entries {
                    let tag = if e.stochastic { " (seeded)" } else { "" };
                    println!("{:<16}{}{}", e.name, e.summary, tag);
                    println!("{:<16}{}", "", e.defaults);
                }
            }
            ExitCode::SUCCESS
        }
        Command::Run { experiment, config, out, seed } => match execute(experiment, config, out, seed) {
            Ok(code) => ExitCode::from(code as u8),
            Err(e) => {
                eprintln!("qlattice: {e}");
                ExitCode::from(e.exit_code() as u8)
            }
        },
    }
}
