use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::Parser;
use gchlab::config::{parse_config, ExperimentConfig, Kind};
use gchlab::run::{error_record, execute, write_outcome};

/// Runs one experiment and writes its artifacts.
///
/// Exit status: 0 when every hard check passed, 1 when a check failed,
/// 2 when the run could not be completed (an `error.json` is written).
#[derive(Debug, Parser)]
#[command(name = "gchlab", version)]
struct Cli {
    /// Experiment kind; must match `kind` in the configuration file.
    kind: Kind,
    /// Configuration document.
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overrides the seed of the configuration file (at most 2^63 - 1 so the
    /// echoed configuration stays readable).
    #[arg(long, value_parser = clap::value_parser!(u64).range(..=i64::MAX as u64))]
    seed: Option<u64>,
    /// Worker threads for parallel sweeps (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

fn load(cli: &Cli) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(&cli.config).with_context(|| format!("reading {}", cli.config.display()))?;
    let mut cfg = parse_config(&text).map_err(|e| anyhow::anyhow!("{}: {e}", cli.config.display()))?;
    if cfg.kind() != cli.kind {
        bail!("command line asks for `{}` but the configuration is for `{}`", cli.kind, cfg.kind());
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: configuring {n} threads: {e}");
            return ExitCode::from(2);
        }
    }
    let mut cfg = None;
    let result = load(&cli).and_then(|c| {
        let c = cfg.insert(c);
        let outcome = execute(c)?;
        write_outcome(&cli.out, c, &outcome)?;
        Ok(outcome.report)
    });
    match result {
        Ok(report) => {
            for check in &report.checks {
                println!("{} {}: {}", if check.passed { "ok  " } else { "FAIL" }, check.name, check.detail);
            }
            for w in &report.warnings {
                println!("warn {w}");
            }
            println!("{}: {}", report.kind, if report.passed { "passed" } else { "failed" });
            ExitCode::from(if report.passed { 0 } else { 1 })
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            let record = error_record(cfg.as_ref(), &e);
            if std::fs::create_dir_all(&cli.out).and_then(|_| std::fs::write(cli.out.join("error.json"), record)).is_err() {
                eprintln!("error: could not write {}", cli.out.join("error.json").display());
            }
            ExitCode::from(2)
        }
    }
}
