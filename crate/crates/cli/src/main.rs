use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use ratesplit_cli::config::{ExperimentConfig, OracleConfig};
use ratesplit_cli::{io, oracle, plot, run, verify};

/// Exit status for `verify` and `oracle` when a check fails.
const EXIT_CHECK_FAILED: u8 = 4;

#[derive(Parser)]
#[command(name = "ratesplit", version, about = "Rate-splitting precoding experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Worker threads (overrides the config).
    #[arg(long, global = true)]
    parallelism: Option<usize>,
    /// Base seed for random restarts (overrides the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// AO stopping threshold (overrides the config).
    #[arg(long, global = true)]
    epsilon: Option<f64>,
    /// AO iteration cap (overrides the config).
    #[arg(long = "max-iter", global = true)]
    max_iter: Option<usize>,
    #[arg(long = "output-dir", global = true)]
    output_dir: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep every scenario of an experiment config.
    Run { config: PathBuf },
    /// Frontier tables from region JSON files.
    PlotData {
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
    /// Recheck rates, constraints, traces and frontier of region JSON files.
    Verify {
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
    /// Compare AO with exhaustive search on tiny instances.
    Oracle { config: PathBuf },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn apply_overrides(cli: &Cli, cfg: &mut ExperimentConfig) -> anyhow::Result<()> {
    if let Some(p) = cli.parallelism {
        cfg.parallelism = p;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(e) = cli.epsilon {
        cfg.ao.epsilon = Some(e);
    }
    if let Some(m) = cli.max_iter {
        cfg.ao.max_iterations = Some(m);
    }
    if let Some(d) = &cli.output_dir {
        cfg.output_dir = d.clone();
    }
    cfg.validate()
}

fn dispatch(cli: &Cli) -> anyhow::Result<u8> {
    match &cli.command {
        Command::Run { config } => {
            let (mut cfg, text) = ExperimentConfig::load(config)?;
            apply_overrides(cli, &mut cfg)?;
            let report = run::run(&cfg, &text)?;
            for s in &report.manifest.scenarios {
                let status = if s.infeasible { "INFEASIBLE" } else { "ok" };
                println!(
                    "{:<24} {status:<10} converged {}/{} failed {} ({:.1}s)",
                    s.name, s.converged, s.points, s.failed_points, s.seconds
                );
            }
            if report.outcome != run::Outcome::Success {
                eprintln!("budget exceeded: {:?}", report.outcome);
            }
            Ok(report.outcome.exit_code() as u8)
        }
        Command::PlotData { files } => {
            let out = cli.output_dir.clone().unwrap_or_else(|| PathBuf::from("plot"));
            for p in plot::emit_plot_data(files, &out)? {
                println!("{}", p.display());
            }
            Ok(0)
        }
        Command::Verify { files } => {
            let mut failed = false;
            for f in files {
                let region = plot::load_region(f)?;
                let rep = verify::verify_region(&region);
                println!(
                    "{}: {} points checked, {} violations",
                    f.display(),
                    rep.checked_points,
                    rep.violations.len()
                );
                for v in &rep.violations {
                    println!("  {v}");
                }
                failed |= !rep.ok();
            }
            Ok(if failed { EXIT_CHECK_FAILED } else { 0 })
        }
        Command::Oracle { config } => {
            let text = std::fs::read_to_string(config).with_context(|| format!("cannot read {}", config.display()))?;
            let ocfg = OracleConfig::parse(&text)?;
            let mut exp = ExperimentConfig::parse("[grid]")?;
            apply_overrides(cli, &mut exp)?;
            let rows = oracle::compare(&ocfg, &exp.strategy_config()?)?;
            let csv = oracle::rows_csv(&rows);
            print!("{csv}");
            if let Some(d) = &cli.output_dir {
                std::fs::create_dir_all(d)?;
                io::write_atomic(&d.join("oracle.csv"), csv.as_bytes())?;
            }
            let bad = rows.iter().filter(|r| !r.passes(ocfg.tolerance)).count();
            if bad > 0 {
                eprintln!("{bad} instance(s) where AO trails the oracle by more than {}", ocfg.tolerance);
                return Ok(EXIT_CHECK_FAILED);
            }
            Ok(0)
        }
    }
}
