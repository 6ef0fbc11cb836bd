//! Command-line front end.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{Parser, Subcommand};
use drpp_core::{Algorithm, ConstantsReport};

use crate::config::{parse_overrides, ExperimentConfig};
use crate::experiment::{run_experiment, run_sweep, SweepResult};
use crate::instance::prepare;
use crate::synth::SynthKind;
use crate::validate::validate;

#[derive(Debug, Parser)]
#[command(name = "drpp", version, about = "Distributionally robust performative prediction experiments")]
pub struct Cli {
    /// Overrides the config seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory (default: out/<config name>).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads; 0 uses all cores. Never changes results.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run every configured (epsilon, algorithm) cell and write artifacts.
    Run(ConfigArgs),
    /// Print the constants report for each epsilon of a config.
    Constants(ConfigArgs),
    /// Run the config once per entry of sweep.lambda_c.
    Sweep(ConfigArgs),
    /// Run the oracle suite on a synthetic instance family.
    Validate {
        /// quadratic, linear or logistic-gaussian
        name: String,
    },
    /// Static vs PP vs DR-PP detection rates.
    Compare(ConfigArgs),
}

#[derive(Debug, clap::Args)]
pub struct ConfigArgs {
    /// TOML config file.
    pub config: PathBuf,
    /// `--section.key=value` overrides.
    #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
    pub overrides: Vec<String>,
}

const EXIT_FAILURE: i32 = 1;

/// Parses `args` and runs the command; returns the process exit code.
pub fn main_with<I, T>(args: I, stdout: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    match dispatch(&cli, stdout) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_FAILURE
        }
    }
}

fn load(cli: &Cli, args: &ConfigArgs) -> anyhow::Result<ExperimentConfig> {
    let overrides = parse_overrides(&args.overrides)?;
    let mut cfg = ExperimentConfig::load_with_overrides(&args.config, &overrides)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn out_dir(cli: &Cli, cfg: &ExperimentConfig) -> PathBuf {
    cli.out.clone().unwrap_or_else(|| Path::new("out").join(&cfg.name))
}

fn dispatch(cli: &Cli, stdout: &mut dyn Write) -> anyhow::Result<i32> {
    match &cli.command {
        Command::Run(args) => {
            let cfg = load(cli, args)?;
            let dir = out_dir(cli, &cfg);
            let res = run_experiment(&cfg, &dir, cli.threads)?;
            report(stdout, &res, &dir)
        }
        Command::Sweep(args) => {
            let cfg = load(cli, args)?;
            let dir = out_dir(cli, &cfg);
            let mut failed = 0;
            for &lambda_c in &cfg.sweep.lambda_c {
                let mut c = cfg.clone();
                c.penalty = c.penalty.with_lambda_c(lambda_c);
                c.sweep.lambda_c = vec![lambda_c];
                let sub = dir.join(format!("lambda_c_{lambda_c}"));
                let res = run_experiment(&c, &sub, cli.threads)?;
                failed += res.failed_cells();
                writeln!(stdout, "lambda_c = {lambda_c}: {} cells, {} failed -> {}", res.cells.len(), res.failed_cells(), sub.display())?;
            }
            Ok(if failed == 0 { 0 } else { EXIT_FAILURE })
        }
        Command::Constants(args) => {
            let cfg = load(cli, args)?;
            let prepared = prepare(&cfg)?;
            let problem = prepared.problem(&cfg.penalty)?;
            for &eps in &cfg.sweep.epsilons {
                let eps_sens = eps * cfg.sweep.epsilon_scale;
                let ledger = prepared.ledger(&problem, eps_sens)?;
                let rep = ConstantsReport::compute(&ledger, cfg.inner.tol, cfg.rgd.eta)?;
                writeln!(stdout, "# epsilon = {eps} (epsilon_sens = {eps_sens})")?;
                write!(stdout, "{}", rep.to_key_value())?;
                writeln!(stdout)?;
            }
            Ok(0)
        }
        Command::Validate { name } => {
            let kind: SynthKind = name.parse()?;
            let checks = validate(kind)?;
            for c in &checks {
                writeln!(stdout, "{c}")?;
            }
            let failed = checks.iter().filter(|c| !c.passed).count();
            writeln!(stdout, "{} checks, {} failed", checks.len(), failed)?;
            Ok(if failed == 0 { 0 } else { EXIT_FAILURE })
        }
        Command::Compare(args) => {
            let mut cfg = load(cli, args)?;
            cfg.algorithms = vec![Algorithm::Static, Algorithm::PpRrm, Algorithm::Rrm];
            cfg.sweep.lambda_c.clear();
            let res = run_sweep(&cfg, cli.threads)?;
            write_compare(stdout, &cfg, &res)?;
            Ok(if res.failed_cells() == 0 { 0 } else { EXIT_FAILURE })
        }
    }
}

fn report(stdout: &mut dyn Write, res: &SweepResult, dir: &Path) -> anyhow::Result<i32> {
    writeln!(
        stdout,
        "{} cells, {} failed; artifacts in {}",
        res.cells.len(),
        res.failed_cells(),
        dir.display()
    )
    .context("writing report")?;
    for c in res.cells.iter().filter(|c| c.failed()) {
        writeln!(
            stdout,
            "  failed: epsilon={} algorithm={} lambda_c={}: {}",
            c.spec.epsilon,
            c.spec.algorithm,
            c.spec.lambda_c,
            c.error.as_deref().unwrap_or("")
        )?;
    }
    Ok(if res.failed_cells() == 0 { 0 } else { EXIT_FAILURE })
}

fn write_compare(stdout: &mut dyn Write, cfg: &ExperimentConfig, res: &SweepResult) -> anyhow::Result<()> {
    writeln!(stdout, "detection rate at t=1 and t={}", cfg.outer_iters)?;
    writeln!(
        stdout,
        "{:>10} {:>10} {:>10} {:>10} {:>10} {:>10} {:>10}",
        "epsilon", "static@1", "pp@1", "dr-pp@1", "static@T", "pp@T", "dr-pp@T"
    )?;
    for &eps in &cfg.sweep.epsilons {
        let pick = |a: Algorithm, last: bool| {
            res.main_trace(eps, a)
                .and_then(|t| if last { t.records.last() } else { t.records.first() })
                .map_or(f64::NAN, |r| r.detection_rate)
        };
        writeln!(
            stdout,
            "{:>10} {:>10.4} {:>10.4} {:>10.4} {:>10.4} {:>10.4} {:>10.4}",
            eps,
            pick(Algorithm::Static, false),
            pick(Algorithm::PpRrm, false),
            pick(Algorithm::Rrm, false),
            pick(Algorithm::Static, true),
            pick(Algorithm::PpRrm, true),
            pick(Algorithm::Rrm, true),
        )?;
    }
    Ok(())
}
