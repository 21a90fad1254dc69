//! `run`: sweep every scenario of a config and persist the results.

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Context;
use ratesplit::region::{self, PointStatus, RateRegionResult};
use ratesplit::{channel, Strategy};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::io::write_atomic;

#[derive(Clone, Debug, Serialize)]
pub struct ScenarioRecord {
    pub name: String,
    pub gamma: f64,
    pub theta: f64,
    pub r0_threshold: f64,
    pub infeasible: bool,
    pub points: usize,
    pub converged: usize,
    pub not_converged: usize,
    pub infeasible_points: usize,
    pub failed_points: usize,
    pub files: Vec<String>,
    pub seconds: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub software: String,
    pub config_sha256: String,
    pub config: ExperimentConfig,
    pub rng: String,
    pub seed: u64,
    pub restart_seeds: Vec<u64>,
    pub epsilon: f64,
    pub max_iterations: usize,
    pub solver: String,
    pub scenarios: Vec<ScenarioRecord>,
    pub total_seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    Success,
    InfeasibleBudget,
    FailureBudget,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        match self {
            Outcome::Success => 0,
            Outcome::InfeasibleBudget => 2,
            Outcome::FailureBudget => 3,
        }
    }
}

pub struct RunReport {
    pub manifest: Manifest,
    pub outcome: Outcome,
    pub regions: Vec<(String, Vec<RateRegionResult>)>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Per-iteration traces of every point, one row per iteration.
pub fn trace_csv(region: &RateRegionResult) -> String {
    let mut out = String::from("strategy,u1,u2,lineage,iteration,wsr,power_residual,rate_sharing_residual,qos_residual\n");
    for p in &region.points {
        let Some(o) = &p.outcome else { continue };
        for (i, (w, r)) in o.solution.trace.iter().zip(&o.solution.residual_trace).enumerate() {
            out.push_str(&format!(
                "{},{},{},{},{i},{w},{},{},{}\n",
                region.strategy,
                p.weights[0],
                p.weights[1],
                o.warm_start_lineage,
                r.power,
                r.rate_sharing,
                r.qos
            ));
        }
    }
    out
}

fn file_stem(scenario: &str, s: Strategy) -> String {
    format!("region_{scenario}_{s}")
}

/// Runs every scenario, writes region CSV/JSON, traces and the manifest.
pub fn run(cfg: &ExperimentConfig, config_text: &str) -> anyhow::Result<RunReport> {
    let started = Instant::now();
    let out_dir = &cfg.output_dir;
    std::fs::create_dir_all(out_dir.join("traces"))
        .with_context(|| format!("cannot create {}", out_dir.display()))?;
    let strategy_cfg = cfg.strategy_config()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.parallelism)
        .build()
        .context("cannot start worker pool")?;

    let mut records = Vec::new();
    let mut regions = Vec::new();
    let mut total_points = 0usize;
    let mut failed_points = 0usize;
    for named in cfg.scenarios()? {
        let t0 = Instant::now();
        let sc = &named.scenario;
        let ch = sc.channel()?;
        let result = pool.install(|| region::sweep_strategies(&ch, sc, &cfg.grid.strategies, &strategy_cfg))?;
        let mut files = Vec::new();
        for r in &result {
            let stem = file_stem(&named.name, r.strategy);
            let csv = out_dir.join(format!("{stem}.csv"));
            let json = out_dir.join(format!("{stem}.json"));
            let trace = out_dir.join("traces").join(format!("{stem}.csv"));
            write_atomic(&csv, r.to_csv().as_bytes())?;
            write_atomic(&json, r.to_json()?.as_bytes())?;
            write_atomic(&trace, trace_csv(r).as_bytes())?;
            files.extend([csv, json, trace].iter().map(|p| rel(out_dir, p)));
        }
        let count = |s: PointStatus| result.iter().map(|r| r.count(s)).sum::<usize>();
        let points: usize = result.iter().map(|r| r.points.len()).sum();
        let infeasible = result.iter().all(|r| r.all_failed()) && count(PointStatus::Infeasible) > 0;
        if infeasible {
            log::warn!("scenario {} is infeasible", named.name);
        }
        total_points += points;
        failed_points += count(PointStatus::Failed);
        records.push(ScenarioRecord {
            name: named.name.clone(),
            gamma: sc.gamma,
            theta: sc.theta,
            r0_threshold: sc.r0_threshold,
            infeasible,
            points,
            converged: count(PointStatus::Converged),
            not_converged: count(PointStatus::NotConverged),
            infeasible_points: count(PointStatus::Infeasible),
            failed_points: count(PointStatus::Failed),
            files,
            seconds: t0.elapsed().as_secs_f64(),
        });
        log::info!("{}: {points} points in {:.1}s", named.name, t0.elapsed().as_secs_f64());
        regions.push((named.name, result));
    }

    let ao = &strategy_cfg.ao;
    let manifest = Manifest {
        software: format!("ratesplit {}", env!("CARGO_PKG_VERSION")),
        config_sha256: sha256_hex(config_text.as_bytes()),
        config: cfg.clone(),
        rng: channel::RNG_ALGORITHM.to_string(),
        seed: cfg.seed,
        restart_seeds: (1..ao.restarts as u64).map(|r| ao.seed.wrapping_add(r)).collect(),
        epsilon: ao.epsilon,
        max_iterations: ao.max_iterations,
        solver: format!(
            "clarabel 0.11 (max_iter {}, tol {:e})",
            ratesplit::subproblem::MAX_SOLVER_ITERATIONS,
            ratesplit::subproblem::SOLVER_TOL
        ),
        scenarios: records,
        total_seconds: started.elapsed().as_secs_f64(),
    };
    write_atomic(
        &out_dir.join("manifest.json"),
        serde_json::to_string_pretty(&manifest)?.as_bytes(),
    )?;

    let infeasible_scenarios = manifest.scenarios.iter().filter(|s| s.infeasible).count();
    let outcome = if infeasible_scenarios > cfg.budget.max_infeasible_scenarios {
        Outcome::InfeasibleBudget
    } else if total_points > 0 && failed_points as f64 > cfg.budget.max_failure_fraction * total_points as f64 {
        Outcome::FailureBudget
    } else {
        Outcome::Success
    };
    Ok(RunReport {
        manifest,
        outcome,
        regions,
    })
}

fn rel(base: &Path, p: &Path) -> String {
    p.strip_prefix(base).map(PathBuf::from).unwrap_or_else(|_| p.to_path_buf()).display().to_string()
}
