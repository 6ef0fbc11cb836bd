//! Sweep execution and artifact emission.
//!
//! Cells run concurrently on a local rayon pool; outputs are assembled in
//! cell order after every cell has finished, so the files do not depend on
//! scheduling.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use drpp_core::{
    fmt17, run, rrm_step, Algorithm, BatchSize, ConstantsReport, RunConfig, RunTrace, ShiftMap, StopReason,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ExperimentConfig, Theta0};
use crate::instance::{prepare, Prepared};

pub const RUN_LOG: &str = "run_log.jsonl";
pub const PARAM_GAP_CSV: &str = "param_gap.csv";
pub const PHASE_CSV: &str = "loss_accuracy_phase.csv";
pub const DETECTION_EPS_CSV: &str = "detection_vs_epsilon.csv";
pub const DETECTION_ITER_CSV: &str = "detection_vs_iteration.csv";
pub const CONSTANTS_TXT: &str = "constants.txt";
pub const SUMMARY_TXT: &str = "summary.txt";

pub const ARTIFACTS: [&str; 7] = [
    RUN_LOG,
    PARAM_GAP_CSV,
    PHASE_CSV,
    DETECTION_EPS_CSV,
    DETECTION_ITER_CSV,
    CONSTANTS_TXT,
    SUMMARY_TXT,
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CellKind {
    /// One of the configured algorithms at the configured multiplier.
    Main,
    /// Robust RRM at an alternative multiplier offset.
    LambdaSweep,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CellSpec {
    pub kind: CellKind,
    pub epsilon: f64,
    pub algorithm: Algorithm,
    pub lambda_c: f64,
}

#[derive(Clone, Debug)]
pub struct CellResult {
    pub spec: CellSpec,
    pub epsilon_sens: f64,
    pub trace: Option<RunTrace>,
    pub error: Option<String>,
}

impl CellResult {
    pub fn failed(&self) -> bool {
        self.error.is_some()
    }
}

/// Everything a sweep produced, before any file is written.
#[derive(Clone, Debug)]
pub struct SweepResult {
    pub config_hash: String,
    pub theta0: Vec<f64>,
    /// `1 / ||theta0^S||`, NaN when the strategic part vanishes.
    pub gap_scale: f64,
    pub cells: Vec<CellResult>,
    pub constants: Vec<(f64, Result<ConstantsReport, String>)>,
}

impl SweepResult {
    pub fn failed_cells(&self) -> usize {
        self.cells.iter().filter(|c| c.failed()).count()
    }

    pub fn main_trace(&self, epsilon: f64, algorithm: Algorithm) -> Option<&RunTrace> {
        self.cells
            .iter()
            .find(|c| c.spec.kind == CellKind::Main && c.spec.epsilon == epsilon && c.spec.algorithm == algorithm)
            .and_then(|c| c.trace.as_ref())
    }
}

pub fn run_config(cfg: &ExperimentConfig, epsilon_sens: f64) -> RunConfig {
    RunConfig {
        outer_iters: cfg.outer_iters,
        inner: cfg.inner.to_core(),
        argmin: cfg.argmin.to_core(),
        eta: cfg.rgd.eta,
        batch: if cfg.batch.size == 0 {
            BatchSize::Full
        } else {
            BatchSize::Uniform(cfg.batch.size)
        },
        seed: cfg.seed,
        shift: ShiftMap::LinearStrategic { epsilon_sens },
        early_stop_tol: 1e-12,
        record_wall_time: cfg.timing,
    }
}

fn pool(threads: usize) -> anyhow::Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if threads > 0 {
        b = b.num_threads(threads);
    }
    b.build().context("building thread pool")
}

/// Non-robust fit on the undeployed base data, from the origin.
pub fn static_erm(cfg: &ExperimentConfig, prepared: &Prepared) -> anyhow::Result<Vec<f64>> {
    let problem = prepared.problem(&cfg.penalty)?;
    let ledger = prepared.ledger(&problem, 0.0)?;
    let env0 = prepared.env0(cfg.seed)?;
    let zero = vec![0.0; prepared.dataset.dim()];
    let step = rrm_step(&problem, &env0, &zero, &run_config(cfg, 0.0), &ledger, false, None)?;
    Ok(step.theta_next)
}

/// Robust fit on the undeployed base data: robust retraining without any
/// distribution shift, run to its fixed point.
pub fn robust_erm(cfg: &ExperimentConfig, prepared: &Prepared) -> anyhow::Result<Vec<f64>> {
    let problem = prepared.problem(&cfg.penalty)?;
    let ledger = prepared.ledger(&problem, 0.0)?;
    let env0 = prepared.env0(cfg.seed)?;
    let start = static_erm(cfg, prepared)?;
    let mut rc = run_config(cfg, 0.0);
    rc.shift = ShiftMap::Identity;
    rc.outer_iters = ROBUST_ERM_ROUNDS;
    let tr = run(Algorithm::Rrm, &problem, &env0, &start, &rc, &ledger);
    if let Some(e) = tr.error {
        return Err(e).context("robust fit on base data");
    }
    anyhow::ensure!(
        tr.stop_reason == StopReason::NumericallyZero,
        "robust fit on base data did not settle within {ROBUST_ERM_ROUNDS} rounds"
    );
    Ok(tr.final_theta().to_vec())
}

const ROBUST_ERM_ROUNDS: usize = 200;

pub fn cell_specs(cfg: &ExperimentConfig) -> Vec<CellSpec> {
    let mut cells = Vec::new();
    for &epsilon in &cfg.sweep.epsilons {
        for &algorithm in &cfg.algorithms {
            cells.push(CellSpec {
                kind: CellKind::Main,
                epsilon,
                algorithm,
                lambda_c: cfg.penalty.lambda_c(),
            });
        }
    }
    for &epsilon in &cfg.sweep.epsilons {
        for &lambda_c in &cfg.sweep.lambda_c {
            cells.push(CellSpec {
                kind: CellKind::LambdaSweep,
                epsilon,
                algorithm: Algorithm::Rrm,
                lambda_c,
            });
        }
    }
    cells
}

fn run_cell(cfg: &ExperimentConfig, prepared: &Prepared, theta0: &[f64], spec: &CellSpec) -> CellResult {
    let epsilon_sens = spec.epsilon * cfg.sweep.epsilon_scale;
    let attempt = || -> anyhow::Result<RunTrace> {
        let problem = prepared.problem(&cfg.penalty.with_lambda_c(spec.lambda_c))?;
        let ledger = prepared.ledger(&problem, epsilon_sens)?;
        let env0 = prepared.env0(cfg.seed)?;
        Ok(run(spec.algorithm, &problem, &env0, theta0, &run_config(cfg, epsilon_sens), &ledger))
    };
    match attempt() {
        Ok(trace) => CellResult {
            spec: spec.clone(),
            epsilon_sens,
            error: trace.error.as_ref().map(|e| e.to_string()),
            trace: Some(trace),
        },
        Err(e) => CellResult {
            spec: spec.clone(),
            epsilon_sens,
            trace: None,
            error: Some(format!("{e:#}")),
        },
    }
}

/// Runs every cell without touching the filesystem.
pub fn run_sweep(cfg: &ExperimentConfig, threads: usize) -> anyhow::Result<SweepResult> {
    cfg.validate()?;
    let prepared = prepare(cfg)?;
    let theta0 = match cfg.model.theta0 {
        Theta0::StaticErm => static_erm(cfg, &prepared)?,
        Theta0::RobustErm => robust_erm(cfg, &prepared)?,
        Theta0::Zero => vec![0.0; prepared.dataset.dim()],
    };
    let s_norm = drpp_core::linalg::norm(&prepared.strategic_part(&theta0));
    let gap_scale = if s_norm > 0.0 { 1.0 / s_norm } else { f64::NAN };
    let specs = cell_specs(cfg);
    let cells: Vec<CellResult> =
        pool(threads)?.install(|| specs.par_iter().map(|s| run_cell(cfg, &prepared, &theta0, s)).collect());
    let problem = prepared.problem(&cfg.penalty)?;
    let constants = cfg
        .sweep
        .epsilons
        .iter()
        .map(|&e| {
            let r = prepared
                .ledger(&problem, e * cfg.sweep.epsilon_scale)
                .and_then(|l| Ok(ConstantsReport::compute(&l, cfg.inner.tol, cfg.rgd.eta)?))
                .map_err(|e| format!("{e:#}"));
            (e, r)
        })
        .collect();
    Ok(SweepResult {
        config_hash: cfg.hash(),
        theta0,
        gap_scale,
        cells,
        constants,
    })
}

/// Runs the sweep and writes all artifacts into `out_dir`.
pub fn run_experiment(cfg: &ExperimentConfig, out_dir: &Path, threads: usize) -> anyhow::Result<SweepResult> {
    let result = run_sweep(cfg, threads)?;
    write_artifacts(cfg, &result, out_dir)?;
    Ok(result)
}

#[derive(Serialize)]
pub struct RunLogRecord<'a> {
    pub config_hash: &'a str,
    pub cell: CellKind,
    pub epsilon: f64,
    pub epsilon_sens: f64,
    pub algorithm: &'a str,
    pub lambda_c: f64,
    pub iteration: usize,
    pub param_gap: f64,
    pub param_gap_scaled: f64,
    pub robust_risk: f64,
    pub plain_loss: f64,
    pub accuracy: f64,
    pub detection_rate: f64,
    pub plain_loss_pre: f64,
    pub accuracy_pre: f64,
    pub detection_rate_pre: f64,
    pub inner_gap_max: f64,
    pub inner_iters_mean: f64,
    pub argmin_iters: usize,
    pub argmin_grad_map: f64,
    pub clamped_coords: usize,
    pub stop_reason: Option<StopReason>,
    pub eta_flagged: bool,
    pub wall_time_s: Option<f64>,
    pub theta: &'a [f64],
    pub error: Option<&'a str>,
}

fn num(v: f64) -> String {
    format!("{v}")
}

fn csv_bytes(header: &[&str], rows: &[Vec<String>]) -> anyhow::Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    Ok(w.into_inner().context("flushing csv")?)
}

fn detection_label(a: Algorithm) -> Option<&'static str> {
    match a {
        Algorithm::Static => Some("static"),
        Algorithm::PpRrm => Some("pp"),
        Algorithm::Rrm => Some("dr-pp"),
        _ => None,
    }
}

pub fn write_artifacts(cfg: &ExperimentConfig, res: &SweepResult, out_dir: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let write = |name: &str, bytes: &[u8]| -> anyhow::Result<PathBuf> {
        let p = out_dir.join(name);
        fs::write(&p, bytes).with_context(|| format!("writing {}", p.display()))?;
        Ok(p)
    };

    // run log
    let mut log = String::new();
    for c in &res.cells {
        let algo = c.spec.algorithm.name();
        if let Some(tr) = &c.trace {
            let last = tr.records.len();
            for (k, r) in tr.records.iter().enumerate() {
                let rec = RunLogRecord {
                    config_hash: &res.config_hash,
                    cell: c.spec.kind,
                    epsilon: c.spec.epsilon,
                    epsilon_sens: c.epsilon_sens,
                    algorithm: algo,
                    lambda_c: c.spec.lambda_c,
                    iteration: r.t + 1,
                    param_gap: r.param_gap,
                    param_gap_scaled: r.param_gap * res.gap_scale,
                    robust_risk: r.robust_risk,
                    plain_loss: r.plain_loss,
                    accuracy: r.accuracy,
                    detection_rate: r.detection_rate,
                    plain_loss_pre: r.plain_loss_pre,
                    accuracy_pre: r.accuracy_pre,
                    detection_rate_pre: r.detection_rate_pre,
                    inner_gap_max: r.diagnostics.inner_gap_max,
                    inner_iters_mean: r.diagnostics.inner_iters_mean,
                    argmin_iters: r.diagnostics.argmin_iters,
                    argmin_grad_map: r.diagnostics.argmin_grad_map,
                    clamped_coords: r.diagnostics.clamped_coords,
                    stop_reason: (k + 1 == last).then_some(tr.stop_reason),
                    eta_flagged: tr.eta_flagged,
                    wall_time_s: r.wall_time_s,
                    theta: &r.theta,
                    error: None,
                };
                log.push_str(&serde_json::to_string(&rec)?);
                log.push('\n');
            }
        }
        if let Some(err) = &c.error {
            let line = serde_json::json!({
                "config_hash": res.config_hash,
                "cell": c.spec.kind,
                "epsilon": c.spec.epsilon,
                "epsilon_sens": c.epsilon_sens,
                "algorithm": algo,
                "lambda_c": c.spec.lambda_c,
                "error": err,
            });
            log.push_str(&line.to_string());
            log.push('\n');
        }
    }
    write(RUN_LOG, log.as_bytes())?;

    let main: Vec<&CellResult> = res.cells.iter().filter(|c| c.spec.kind == CellKind::Main).collect();

    // parameter gap / robust risk per iteration
    let mut rows = Vec::new();
    for c in &main {
        for r in c.trace.iter().flat_map(|t| &t.records) {
            rows.push(vec![
                num(c.spec.epsilon),
                c.spec.algorithm.name().into(),
                (r.t + 1).to_string(),
                num(r.param_gap),
                num(r.param_gap * res.gap_scale),
                num(r.robust_risk),
                num(r.plain_loss),
                num(r.accuracy),
                num(r.detection_rate),
            ]);
        }
    }
    write(
        PARAM_GAP_CSV,
        &csv_bytes(
            &[
                "epsilon",
                "algorithm",
                "iteration",
                "param_gap",
                "param_gap_scaled",
                "robust_risk",
                "plain_loss",
                "accuracy",
                "detection_rate",
            ],
            &rows,
        )?,
    )?;

    // loss / accuracy before and after retraining
    let mut rows = Vec::new();
    for c in &main {
        for r in c.trace.iter().flat_map(|t| &t.records) {
            for (phase, l, a, d) in [
                ("pre", r.plain_loss_pre, r.accuracy_pre, r.detection_rate_pre),
                ("post", r.plain_loss, r.accuracy, r.detection_rate),
            ] {
                rows.push(vec![
                    num(c.spec.epsilon),
                    c.spec.algorithm.name().into(),
                    (r.t + 1).to_string(),
                    phase.into(),
                    num(l),
                    num(a),
                    num(d),
                ]);
            }
        }
    }
    write(
        PHASE_CSV,
        &csv_bytes(
            &["epsilon", "algorithm", "iteration", "phase", "plain_loss", "accuracy", "detection_rate"],
            &rows,
        )?,
    )?;

    // detection rate against epsilon
    let mut rows = Vec::new();
    for c in &main {
        let (Some(label), Some(tr)) = (detection_label(c.spec.algorithm), &c.trace) else {
            continue;
        };
        let (Some(first), Some(last)) = (tr.records.first(), tr.records.last()) else {
            continue;
        };
        rows.push(vec![
            num(c.spec.epsilon),
            label.into(),
            num(first.detection_rate_pre),
            num(first.detection_rate),
            num(last.detection_rate),
        ]);
    }
    write(
        DETECTION_EPS_CSV,
        &csv_bytes(
            &["epsilon", "algorithm", "detection_t1_pre", "detection_t1_post", "detection_final"],
            &rows,
        )?,
    )?;

    // detection rate against iteration across multipliers
    let mut rows = Vec::new();
    for c in res.cells.iter().filter(|c| c.spec.kind == CellKind::LambdaSweep) {
        for r in c.trace.iter().flat_map(|t| &t.records) {
            rows.push(vec![
                num(c.spec.epsilon),
                num(c.spec.lambda_c),
                (r.t + 1).to_string(),
                num(r.detection_rate),
            ]);
        }
    }
    write(
        DETECTION_ITER_CSV,
        &csv_bytes(&["epsilon", "lambda_c", "iteration", "detection_rate"], &rows)?,
    )?;

    write(CONSTANTS_TXT, constants_text(res).as_bytes())?;
    write(SUMMARY_TXT, summary_text(cfg, res).as_bytes())?;
    Ok(())
}

pub fn constants_text(res: &SweepResult) -> String {
    let mut s = String::new();
    for (eps, r) in &res.constants {
        let _ = writeln!(s, "# epsilon = {}", fmt17(*eps));
        match r {
            Ok(rep) => s.push_str(&rep.to_key_value()),
            Err(e) => {
                let _ = writeln!(s, "# error: {e}");
            }
        }
        s.push('\n');
    }
    s
}

pub fn summary_text(cfg: &ExperimentConfig, res: &SweepResult) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "config: {} ({})", cfg.name, res.config_hash);
    let _ = writeln!(
        s,
        "cells: {} run, {} failed",
        res.cells.len(),
        res.failed_cells()
    );
    let _ = writeln!(
        s,
        "{:<12} {:>10} {:<8} {:>9} {:>6} {:<16} {:>12} {:>10} {:>10} {:>12}",
        "cell", "epsilon", "algo", "lambda_c", "iters", "stop", "param_gap", "detection", "accuracy", "robust_risk"
    );
    for c in &res.cells {
        let kind = match c.spec.kind {
            CellKind::Main => "main",
            CellKind::LambdaSweep => "lambda_sweep",
        };
        match (&c.trace, &c.error) {
            (Some(tr), None) => {
                let last = tr.records.last();
                let stop = match tr.stop_reason {
                    StopReason::Completed => "completed",
                    StopReason::NumericallyZero => "numerically_zero",
                    StopReason::Error => "error",
                };
                let _ = writeln!(
                    s,
                    "{:<12} {:>10} {:<8} {:>9} {:>6} {:<16} {:>12.3e} {:>10.4} {:>10.4} {:>12.6}",
                    kind,
                    c.spec.epsilon,
                    c.spec.algorithm.name(),
                    c.spec.lambda_c,
                    tr.records.len(),
                    stop,
                    last.map_or(f64::NAN, |r| r.param_gap),
                    last.map_or(f64::NAN, |r| r.detection_rate),
                    last.map_or(f64::NAN, |r| r.accuracy),
                    last.map_or(f64::NAN, |r| r.robust_risk),
                );
            }
            (_, err) => {
                let _ = writeln!(
                    s,
                    "{:<12} {:>10} {:<8} {:>9} FAILED: {}",
                    kind,
                    c.spec.epsilon,
                    c.spec.algorithm.name(),
                    c.spec.lambda_c,
                    err.as_deref().unwrap_or("unknown error")
                );
            }
        }
    }
    s
}
