//! Strategy-level orchestration.
//!
//! MU–LP is one AO run set. SC–SIC runs every decoding order and keeps the
//! best. RS adds the MU–LP and SC–SIC solutions as warm starts, which makes
//! its WSR at least theirs: both are feasible RS points with the same WSR.

use serde::{Deserialize, Serialize};

use crate::ao::{self, AoConfig, RunRecord};
use crate::error::{Error, Result};
use crate::subproblem::{DecodingOrder, Variant};
use crate::types::{ChannelSet, CommonRateAllocation, Solution, Strategy};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrategyConfig {
    pub ao: AoConfig,
    /// Seed RS with the MU–LP and SC–SIC solutions.
    pub cross_warm_start: bool,
}

impl Default for StrategyConfig {
    fn default() -> Self {
        StrategyConfig {
            ao: AoConfig::default(),
            cross_warm_start: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrategyOutcome {
    pub strategy: Strategy,
    pub solution: Solution,
    /// Winning decoding order (SC–SIC only).
    pub order: Option<DecodingOrder>,
    /// Which start produced the solution, e.g. `mrt-svd`, `random:2`,
    /// `warm:MULP`, `warm:SCSIC[2>1]`.
    pub warm_start_lineage: String,
    pub runs: Vec<RunRecord>,
}

impl StrategyOutcome {
    pub fn wsr(&self) -> f64 {
        self.solution.wsr()
    }
}

/// Solves one strategy. RS gets no cross-strategy warm starts here unless
/// `config.cross_warm_start` is set, in which case MU–LP and SC–SIC are
/// solved first.
pub fn solve_strategy(
    ch: &ChannelSet,
    strategy: Strategy,
    r0_threshold: f64,
    weights: &[f64],
    config: &StrategyConfig,
) -> Result<StrategyOutcome> {
    match strategy {
        Strategy::Mulp => solve_variant(ch, Variant::Mulp, r0_threshold, weights, &config.ao, &[]),
        Strategy::ScSic => solve_scsic(ch, r0_threshold, weights, &config.ao),
        Strategy::Rs if config.cross_warm_start => {
            let mulp = solve_strategy(ch, Strategy::Mulp, r0_threshold, weights, config).ok();
            let scsic = if ch.num_users() <= 2 {
                solve_strategy(ch, Strategy::ScSic, r0_threshold, weights, config).ok()
            } else {
                None
            };
            solve_rs_with(ch, r0_threshold, weights, config, mulp.as_ref(), scsic.as_ref())
        }
        Strategy::Rs => solve_variant(ch, Variant::Rs, r0_threshold, weights, &config.ao, &[]),
    }
}

/// RS with warm starts lifted from already computed MU–LP / SC–SIC outcomes.
pub fn solve_rs_with(
    ch: &ChannelSet,
    r0_threshold: f64,
    weights: &[f64],
    config: &StrategyConfig,
    mulp: Option<&StrategyOutcome>,
    scsic: Option<&StrategyOutcome>,
) -> Result<StrategyOutcome> {
    let mut extra = Vec::new();
    if config.cross_warm_start {
        if let Some(m) = mulp {
            extra.push(("warm:MULP".to_string(), lift_mulp_to_rs(&m.solution).precoder));
        }
        if let Some(s) = scsic {
            if let Ok(lifted) = lift_scsic_to_rs(s) {
                let label = s.order.map_or("warm:SCSIC".into(), |o| format!("warm:SCSIC[{}]", o.label()));
                extra.push((label, lifted.precoder));
            }
        }
    }
    solve_variant(ch, Variant::Rs, r0_threshold, weights, &config.ao, &extra)
}

fn solve_variant(
    ch: &ChannelSet,
    variant: Variant,
    r0_threshold: f64,
    weights: &[f64],
    cfg: &AoConfig,
    extra: &[(String, crate::types::PrecoderMatrix)],
) -> Result<StrategyOutcome> {
    let out = ao::optimize_with_starts(ch, variant, r0_threshold, weights, cfg, extra)?;
    Ok(StrategyOutcome {
        strategy: variant.strategy(),
        solution: out.solution,
        order: match variant {
            Variant::ScSic(o) => Some(o),
            _ => None,
        },
        warm_start_lineage: out.lineage,
        runs: out.runs,
    })
}

fn solve_scsic(ch: &ChannelSet, r0_threshold: f64, weights: &[f64], cfg: &AoConfig) -> Result<StrategyOutcome> {
    let orders = DecodingOrder::all(ch.num_users());
    if orders.is_empty() {
        return Err(Error::invalid(format!(
            "SC-SIC is defined for at most two users, got {}",
            ch.num_users()
        )));
    }
    let mut best: Option<StrategyOutcome> = None;
    let mut err = None;
    let mut runs = Vec::new();
    for o in orders {
        match solve_variant(ch, Variant::ScSic(o), r0_threshold, weights, cfg, &[]) {
            Ok(out) => {
                runs.extend(out.runs.iter().cloned().map(|mut r| {
                    r.lineage = format!("{}@{}", r.lineage, o.label());
                    r
                }));
                let better = match &best {
                    None => true,
                    Some(b) => {
                        out.wsr() > b.wsr() || (out.wsr() == b.wsr() && out.solution.iterations < b.solution.iterations)
                    }
                };
                if better {
                    best = Some(out);
                }
            }
            Err(e) => {
                if err.is_none() || matches!(e, Error::Infeasible(_)) {
                    err = Some(e);
                }
            }
        }
    }
    match best {
        Some(mut b) => {
            b.runs = runs;
            Ok(b)
        }
        None => Err(err.expect("at least one order was tried")),
    }
}

/// A MU–LP solution read as an RS solution: no common shares, same WSR.
pub fn lift_mulp_to_rs(sol: &Solution) -> Solution {
    let k = sol.precoder.num_users();
    let common_rates = CommonRateAllocation::new(sol.common_rates.c0(), vec![0.0; k]).expect("c0 was valid");
    let mut report = sol.rate_report.clone();
    report.total_unicast_rates = report.private_rates.clone();
    Solution {
        common_rates,
        rate_report: report,
        ..sol.clone()
    }
}

/// An SC–SIC outcome read as an RS solution. The first-decoded user already
/// has no private column and its unicast rate already sits in its common
/// share, so only the strategy label changes.
pub fn lift_scsic_to_rs(outcome: &StrategyOutcome) -> Result<Solution> {
    let k = outcome.solution.precoder.num_users();
    if k != 2 {
        return Err(Error::invalid(format!("SC-SIC lifts to RS only for two users, got {k}")));
    }
    if outcome.strategy != Strategy::ScSic {
        return Err(Error::invalid(format!("expected an SC-SIC outcome, got {}", outcome.strategy)));
    }
    let order = outcome
        .order
        .ok_or_else(|| Error::invalid("SC-SIC outcome without a decoding order"))?;
    let mut sol = outcome.solution.clone();
    let mut ck0 = sol.common_rates.ck0().to_vec();
    if let Some(second) = order.second {
        ck0[second] = 0.0;
    }
    sol.common_rates = CommonRateAllocation::new(sol.common_rates.c0(), ck0)?;
    sol.rate_report = crate::rates::rate_report_for(&sol.rate_report, &sol.common_rates);
    Ok(sol)
}
