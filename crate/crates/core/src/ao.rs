//! Alternating optimization: closed-form MMSE equalizers and weights for the
//! current precoder, then the convex subproblem for the next precoder and
//! rate split, until the weighted sum rate settles.
//!
//! The WSR recorded after every step is recomputed from the exact rate
//! expressions with the split `c = −x`, never from the WMMSE surrogate.
//! The current point is always feasible for the next subproblem, so an exact
//! solve never lowers the WSR. A step that does (solver inaccuracy) is
//! rejected and ends the run, which keeps every trace non-decreasing.
//!
//! On long shallow ridges the plain iteration gains a near-constant amount
//! per step. With `extrapolate` set, each step also tries moving further
//! along `P[n] − P[n−1]` and keeps the result only if it is feasible and
//! strictly better.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::{complex_gaussian_vec, rng};
use crate::error::{Error, Result};
use crate::rates::{rate_report, RateReport};
use crate::subproblem::{self, SubproblemSpec, SubproblemStatus, Variant};
use crate::types::{norm_sq, ChannelSet, CommonRateAllocation, PrecoderMatrix, Residuals, Solution};
use crate::wmmse::mmse_state;

pub const DEFAULT_EPSILON: f64 = 1e-4;
pub const DEFAULT_MAX_ITERATIONS: usize = 300;
pub const DEFAULT_RESTARTS: usize = 3;

/// Common-stream power fraction of the initial precoder.
pub fn initial_common_fraction(r0_threshold: f64) -> f64 {
    if r0_threshold > 0.0 {
        0.5
    } else {
        0.1
    }
}

// Restoration stops once the max-min multicast rate clears the threshold
// by this much, leaving room to hand power to the private streams.
const RESTORATION_MARGIN: f64 = 0.25;
const RESTORATION_MAX_ITERATIONS: usize = 200;
// Relative accuracy of a subproblem solve; a rejected step smaller than this
// counts as convergence.
const SOLVER_NOISE: f64 = 1e-6;
// Warm starts come out of solves accurate to the feasibility tolerance.
const START_TOL: f64 = 1e-7;
// Extrapolation factor doubles after each accepted trial, up to this cap.
const MAX_EXTRAPOLATION: f64 = 64.0;
const BLEND_FRACTIONS: [f64; 12] = [0.5, 0.3, 0.2, 0.1, 0.05, 0.02, 0.01, 0.005, 0.002, 0.001, 1e-4, 0.0];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum InitMethod {
    /// Matched filters on the private columns, dominant left singular
    /// vector of the stacked channels on the common column.
    MrtSvd,
    Random(u64),
    WarmStart(Box<Solution>),
}

impl InitMethod {
    pub fn label(&self) -> String {
        match self {
            InitMethod::MrtSvd => "mrt-svd".into(),
            InitMethod::Random(s) => format!("random:{s}"),
            InitMethod::WarmStart(_) => "warm-start".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AoConfig {
    /// Stop once `|WSR[n] − WSR[n−1]| ≤ epsilon`.
    pub epsilon: f64,
    pub max_iterations: usize,
    /// Initialization of the first restart.
    pub init_method: InitMethod,
    /// Total number of independent starts; starts after the first are
    /// random with seeds `seed + 1, seed + 2, …`.
    pub restarts: usize,
    pub seed: u64,
    /// Momentum-style trial step after every iteration, kept only when it
    /// raises the WSR.
    pub extrapolate: bool,
}

impl Default for AoConfig {
    fn default() -> Self {
        AoConfig {
            epsilon: DEFAULT_EPSILON,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            init_method: InitMethod::MrtSvd,
            restarts: DEFAULT_RESTARTS,
            seed: 0,
            extrapolate: true,
        }
    }
}

impl AoConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(Error::invalid("epsilon must be positive"));
        }
        if self.max_iterations < 1 {
            return Err(Error::invalid("max_iterations must be at least 1"));
        }
        if self.restarts < 1 {
            return Err(Error::invalid("restarts must be at least 1"));
        }
        Ok(())
    }

    fn starts(&self) -> Vec<InitMethod> {
        let base = match self.init_method {
            InitMethod::Random(s) => s,
            _ => self.seed,
        };
        std::iter::once(self.init_method.clone())
            .chain((1..self.restarts as u64).map(|r| InitMethod::Random(base.wrapping_add(r))))
            .collect()
    }
}

/// Dominant left singular vector of `[h_1, …, h_K]`, i.e. the top
/// eigenvector of `Σ_k h_k h_kᴴ`, found by power iteration. The phase is
/// fixed so the largest-magnitude entry is real and positive.
pub fn dominant_direction(ch: &ChannelSet) -> Vec<Complex64> {
    let nt = ch.num_antennas();
    let apply = |v: &[Complex64]| -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); nt];
        for h in ch.channels() {
            let a = crate::types::inner(h, v);
            for (o, x) in out.iter_mut().zip(h) {
                *o += x * a;
            }
        }
        out
    };
    let mut v = vec![Complex64::new(0.0, 0.0); nt];
    for h in ch.channels() {
        let n = norm_sq(h).sqrt();
        for (o, x) in v.iter_mut().zip(h) {
            *o += x / n;
        }
    }
    if norm_sq(&v) < 1e-24 {
        v = ch.channel(0).to_vec();
    }
    normalize(&mut v);
    for _ in 0..5000 {
        let mut w = apply(&v);
        if norm_sq(&w) == 0.0 {
            break;
        }
        normalize(&mut w);
        let delta = 1.0 - crate::types::inner(&v, &w).norm();
        v = w;
        if delta < 1e-16 {
            break;
        }
    }
    let pivot = v
        .iter()
        .copied()
        .fold(Complex64::new(0.0, 0.0), |a, b| if b.norm() > a.norm() { b } else { a });
    if pivot.norm() > 0.0 {
        let rot = pivot.conj() / pivot.norm();
        for x in &mut v {
            *x *= rot;
        }
    }
    v
}

fn normalize(v: &mut [Complex64]) {
    let n = norm_sq(v).sqrt();
    if n > 0.0 {
        for x in v.iter_mut() {
            *x /= n;
        }
    }
}

fn scaled_to(v: &[Complex64], power: f64) -> Vec<Complex64> {
    let n = norm_sq(v).sqrt();
    if n == 0.0 {
        return v.to_vec();
    }
    let f = power.sqrt() / n;
    v.iter().map(|x| x * f).collect()
}

fn private_columns(variant: Variant, num_users: usize) -> Vec<usize> {
    variant.active_columns(num_users).into_iter().filter(|&c| c > 0).collect()
}

/// Initial precoder at full power: a fraction `t` of the budget on the
/// common column and the rest split evenly over the private columns the
/// strategy uses. Warm starts reuse the given precoder, clipped to the
/// budget.
pub fn init_precoders(ch: &ChannelSet, variant: Variant, method: &InitMethod, r0_threshold: f64) -> PrecoderMatrix {
    let pt = ch.power_budget();
    let k = ch.num_users();
    let nt = ch.num_antennas();
    let cols = private_columns(variant, k);
    let t = if cols.is_empty() { 1.0 } else { initial_common_fraction(r0_threshold) };
    let per_private = if cols.is_empty() { 0.0 } else { (1.0 - t) * pt / cols.len() as f64 };
    let mut p = PrecoderMatrix::zeros(nt, k);
    match method {
        InitMethod::WarmStart(sol) => return sol.precoder.clipped_to(pt),
        InitMethod::MrtSvd => {
            p.set_column(0, scaled_to(&dominant_direction(ch), t * pt));
            for &c in &cols {
                p.set_column(c, scaled_to(ch.channel(c - 1), per_private));
            }
        }
        InitMethod::Random(seed) => {
            let mut r = rng(*seed);
            let common = complex_gaussian_vec(&mut r, nt);
            p.set_column(0, scaled_to(&common, t * pt));
            for &c in &cols {
                let v = complex_gaussian_vec(&mut r, nt);
                p.set_column(c, scaled_to(&v, per_private));
            }
        }
    }
    p
}

fn common_rate(ch: &ChannelSet, p: &PrecoderMatrix) -> f64 {
    (0..ch.num_users())
        .map(|k| crate::rates::log2_1p(crate::rates::sinr_common(ch, p, k)))
        .fold(f64::INFINITY, f64::min)
}

/// Max-min multicast beamforming by the same WMMSE alternation, with the
/// private columns off. Returns a full-power common column.
fn restore_multicast(ch: &ChannelSet, direction: &[Complex64], r0_threshold: f64) -> Vec<Complex64> {
    let pt = ch.power_budget();
    let mut p = PrecoderMatrix::zeros(ch.num_antennas(), ch.num_users());
    let dir = if norm_sq(direction) > 0.0 {
        direction.to_vec()
    } else {
        dominant_direction(ch)
    };
    p.set_column(0, scaled_to(&dir, pt));
    let mut rate = common_rate(ch, &p);
    for _ in 0..RESTORATION_MAX_ITERATIONS {
        if rate >= r0_threshold + RESTORATION_MARGIN {
            break;
        }
        let st = mmse_state(ch, &p);
        let Ok(prog) = subproblem::build_multicast_restoration(ch, &st, pt) else {
            break;
        };
        let sol = subproblem::solve(&prog);
        if sol.status != SubproblemStatus::Optimal {
            break;
        }
        let next = common_rate(ch, &sol.precoder);
        if next < rate {
            break;
        }
        p = sol.precoder;
        let gain = next - rate;
        rate = next;
        if gain < 1e-7 {
            break;
        }
    }
    scaled_to(p.common(), pt)
}

/// Makes a starting precoder meet the multicast QoS constraint.
///
/// Points that already meet it are returned unchanged. Otherwise the common
/// column is replaced by a max-min multicast beamformer and blended with the
/// private columns of `p` at the largest private power fraction that keeps
/// the threshold.
pub fn feasible_start(ch: &ChannelSet, p: &PrecoderMatrix, r0_threshold: f64) -> Result<PrecoderMatrix> {
    if common_rate(ch, p) >= r0_threshold - START_TOL {
        return Ok(p.clone());
    }
    let pt = ch.power_budget();
    let common = restore_multicast(ch, p.common(), r0_threshold);
    let private_power: f64 = (1..=p.num_users()).map(|j| p.column_power(j)).sum();
    for &delta in &BLEND_FRACTIONS {
        let mut q = PrecoderMatrix::zeros(ch.num_antennas(), ch.num_users());
        q.set_column(0, scaled_to(&common, (1.0 - delta) * pt));
        if private_power > 0.0 {
            let f = (delta * pt / private_power).sqrt();
            for j in 1..=p.num_users() {
                q.set_column(j, p.column(j).iter().map(|x| x * f).collect());
            }
        }
        if common_rate(ch, &q) >= r0_threshold {
            return Ok(q);
        }
    }
    let mut q = PrecoderMatrix::zeros(ch.num_antennas(), ch.num_users());
    q.set_column(0, common);
    Err(Error::Infeasible(format!(
        "no multicast beamformer found reaching {r0_threshold} bit/s/Hz (best {:.4})",
        common_rate(ch, &q)
    )))
}

/// Split maximizing the WSR for a fixed precoder: `C0` at the threshold and
/// the rest of the common rate to the eligible user with the largest weight.
pub fn best_split(variant: Variant, report: &RateReport, r0_threshold: f64, weights: &[f64]) -> CommonRateAllocation {
    let k = report.num_users();
    let mut ck0 = vec![0.0; k];
    let spare = (report.common_rate - r0_threshold).max(0.0);
    let eligible = variant.common_share_users(k);
    if let Some(&best) = eligible
        .iter()
        .max_by(|a, b| weights[**a].partial_cmp(&weights[**b]).unwrap().then(b.cmp(a)))
    {
        ck0[best] = spare;
    }
    CommonRateAllocation::new(r0_threshold, ck0).expect("non-negative by construction")
}

/// Common-rate split `c = −x` from a subproblem solution. `C0` is reported at
/// the threshold (any multicast rate above it does not enter the WSR), shares
/// are clipped at zero, and rounding-level excess over `R0` is trimmed from
/// the largest share.
pub fn split_from_x(variant: Variant, x: &[f64], report: &RateReport, r0_threshold: f64) -> CommonRateAllocation {
    let k = report.num_users();
    let mut ck0 = vec![0.0; k];
    for u in variant.common_share_users(k) {
        ck0[u] = (-x[u + 1]).max(0.0);
    }
    let mut excess = r0_threshold + ck0.iter().sum::<f64>() - report.common_rate;
    while excess > 0.0 {
        let Some((i, &v)) = ck0
            .iter()
            .enumerate()
            .filter(|(_, v)| **v > 0.0)
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        else {
            break;
        };
        let cut = v.min(excess);
        ck0[i] -= cut;
        excess -= cut;
    }
    CommonRateAllocation::new(r0_threshold, ck0).expect("non-negative by construction")
}

/// Weighted sum of total unicast rates.
pub fn wsr_of(solution: &Solution, weights: &[f64]) -> f64 {
    weighted_sum(&solution.rate_report, weights)
}

pub fn weighted_sum(report: &RateReport, weights: &[f64]) -> f64 {
    report.total_unicast_rates.iter().zip(weights).map(|(r, w)| r * w).sum()
}

pub fn residuals(
    ch: &ChannelSet,
    p: &PrecoderMatrix,
    c: &CommonRateAllocation,
    report: &RateReport,
    r0_threshold: f64,
) -> Residuals {
    Residuals {
        power: p.total_power() - ch.power_budget(),
        rate_sharing: c.total() - report.common_rate,
        qos: r0_threshold - c.c0(),
    }
}

/// One alternating-optimization run from a given feasible precoder.
pub fn run_from(
    ch: &ChannelSet,
    variant: Variant,
    r0_threshold: f64,
    weights: &[f64],
    start: PrecoderMatrix,
    cfg: &AoConfig,
) -> Result<Solution> {
    let epsilon = cfg.epsilon;
    let report = rate_report(ch, &start, None);
    let split = best_split(variant, &report, r0_threshold, weights);
    let report = rate_report(ch, &start, Some(&split));
    let mut sol = Solution {
        residual_trace: vec![residuals(ch, &start, &split, &report, r0_threshold)],
        trace: vec![weighted_sum(&report, weights)],
        precoder: start,
        common_rates: split,
        rate_report: report,
        iterations: 0,
        converged: false,
    };

    let mut beta = 1.0;
    let mut previous: Option<PrecoderMatrix> = None;
    for n in 1..=cfg.max_iterations {
        let state = mmse_state(ch, &sol.precoder);
        let spec = SubproblemSpec {
            channel: ch,
            wsr_weights: weights,
            wmmse_state: &state,
            r0_threshold,
            power_budget: ch.power_budget(),
            variant,
        };
        let step = subproblem::solve(&subproblem::build(&spec)?);
        match step.status {
            SubproblemStatus::Optimal => {}
            SubproblemStatus::Infeasible if n == 1 => {
                return Err(Error::Infeasible(format!("subproblem infeasible at the first iteration ({})", step.solver_status)))
            }
            _ => {
                return Err(Error::NumericalFailure {
                    reason: format!("iteration {n}: {}", step.solver_status),
                    partial: Some(Box::new(sol)),
                })
            }
        }
        let bare = rate_report(ch, &step.precoder, None);
        let split = split_from_x(variant, &step.x, &bare, r0_threshold);
        let mut report = rate_report(ch, &step.precoder, Some(&split));
        let mut wsr = weighted_sum(&report, weights);
        let prev = *sol.trace.last().unwrap();
        if wsr < prev {
            // The solver returned a point worse than the current one, which is
            // feasible for this subproblem: its accuracy is exhausted.
            log::debug!("iteration {n}: step lowers the WSR by {:e}, keeping the previous iterate", prev - wsr);
            sol.converged = prev - wsr <= epsilon.max(SOLVER_NOISE * prev.abs());
            break;
        }
        let mut precoder = step.precoder;
        let mut split = split;
        let last = std::mem::replace(&mut sol.precoder, PrecoderMatrix::zeros(0, 0));
        if cfg.extrapolate {
            if let Some(before) = &previous {
                match extrapolated(ch, variant, r0_threshold, weights, before, &precoder, beta) {
                    Some((p, c, r, w)) if w > wsr => {
                        (precoder, split, report, wsr) = (p, c, r, w);
                        beta = (2.0 * beta).min(MAX_EXTRAPOLATION);
                    }
                    _ => beta = 1.0,
                }
            }
        }
        previous = Some(last);
        sol.residual_trace
            .push(residuals(ch, &precoder, &split, &report, r0_threshold));
        sol.trace.push(wsr);
        sol.precoder = precoder;
        sol.common_rates = split;
        sol.rate_report = report;
        sol.iterations = n;
        if (wsr - prev).abs() <= epsilon {
            sol.converged = true;
            break;
        }
    }
    Ok(sol)
}

/// `P + β(P − P_prev)` clipped to the power budget, with its best split,
/// or `None` when it misses the multicast threshold.
fn extrapolated(
    ch: &ChannelSet,
    variant: Variant,
    r0_threshold: f64,
    weights: &[f64],
    before: &PrecoderMatrix,
    current: &PrecoderMatrix,
    beta: f64,
) -> Option<(PrecoderMatrix, CommonRateAllocation, RateReport, f64)> {
    let columns = current
        .columns()
        .iter()
        .zip(before.columns())
        .map(|(c, b)| c.iter().zip(b).map(|(x, y)| x + (x - y) * beta).collect())
        .collect();
    let p = PrecoderMatrix::new(columns).ok()?.clipped_to(ch.power_budget());
    let bare = rate_report(ch, &p, None);
    if !(bare.common_rate >= r0_threshold) {
        return None;
    }
    let split = best_split(variant, &bare, r0_threshold, weights);
    let report = rate_report(ch, &p, Some(&split));
    let wsr = weighted_sum(&report, weights);
    Some((p, split, report, wsr))
}

/// Summary of one start inside [`optimize_with_starts`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub lineage: String,
    #[serde(deserialize_with = "crate::types::nan_as_null::scalar")]
    pub wsr: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Largest single-step decrease of the WSR trace: ≤ 0 when monotone,
    /// 0 without steps, NaN for a failed run.
    #[serde(deserialize_with = "crate::types::nan_as_null::scalar")]
    pub max_drop: f64,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AoOutcome {
    pub solution: Solution,
    pub lineage: String,
    pub runs: Vec<RunRecord>,
}

pub fn max_drop(trace: &[f64]) -> f64 {
    if trace.len() < 2 {
        return 0.0;
    }
    trace.windows(2).map(|w| w[0] - w[1]).fold(f64::NEG_INFINITY, f64::max)
}

fn check_inputs(ch: &ChannelSet, variant: Variant, r0_threshold: f64, weights: &[f64], cfg: &AoConfig) -> Result<()> {
    cfg.validate()?;
    if weights.len() != ch.num_users() || weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
        return Err(Error::invalid(format!("need {} strictly positive WSR weights, got {weights:?}", ch.num_users())));
    }
    if !(r0_threshold.is_finite() && r0_threshold >= 0.0) {
        return Err(Error::invalid("r0_threshold must be >= 0"));
    }
    if let Variant::ScSic(o) = variant {
        if !subproblem::DecodingOrder::all(ch.num_users()).contains(&o) {
            return Err(Error::invalid(format!("SC-SIC order {o:?} is not valid for {} users", ch.num_users())));
        }
    }
    if !subproblem::passes_prescreen(ch, r0_threshold) {
        return Err(Error::Infeasible(format!(
            "multicast threshold {r0_threshold} exceeds the bound log2(1 + Pt·min‖h‖²) = {:.4}",
            subproblem::multicast_rate_bound(ch)
        )));
    }
    Ok(())
}

/// Best of `cfg.restarts` runs.
pub fn optimize(ch: &ChannelSet, variant: Variant, r0_threshold: f64, weights: &[f64], cfg: &AoConfig) -> Result<Solution> {
    optimize_with_starts(ch, variant, r0_threshold, weights, cfg, &[]).map(|o| o.solution)
}

/// Runs the configured restarts plus the labelled warm starts in `extra`
/// and keeps the highest WSR (ties: fewer iterations, then earlier start).
pub fn optimize_with_starts(
    ch: &ChannelSet,
    variant: Variant,
    r0_threshold: f64,
    weights: &[f64],
    cfg: &AoConfig,
    extra: &[(String, PrecoderMatrix)],
) -> Result<AoOutcome> {
    check_inputs(ch, variant, r0_threshold, weights, cfg)?;
    let mut starts: Vec<(String, InitMethod)> = cfg.starts().into_iter().map(|m| (m.label(), m)).collect();
    for (label, p) in extra {
        starts.push((label.clone(), InitMethod::WarmStart(Box::new(warm_stub(p.clone())))));
    }

    let mut runs = Vec::with_capacity(starts.len());
    let mut best: Option<(usize, Solution)> = None;
    let mut first_error: Option<Error> = None;
    for (idx, (label, method)) in starts.iter().enumerate() {
        let init = init_precoders(ch, variant, method, r0_threshold);
        let result = feasible_start(ch, &init, r0_threshold)
            .and_then(|p| run_from(ch, variant, r0_threshold, weights, p, cfg));
        match result {
            Ok(sol) => {
                runs.push(RunRecord {
                    lineage: label.clone(),
                    wsr: sol.wsr(),
                    iterations: sol.iterations,
                    converged: sol.converged,
                    max_drop: max_drop(&sol.trace),
                    error: None,
                });
                let better = match &best {
                    None => true,
                    Some((_, b)) => sol.wsr() > b.wsr() || (sol.wsr() == b.wsr() && sol.iterations < b.iterations),
                };
                if better {
                    best = Some((idx, sol));
                }
            }
            Err(e) => {
                log::debug!("start {label} failed: {e}");
                runs.push(RunRecord {
                    lineage: label.clone(),
                    wsr: f64::NAN,
                    iterations: 0,
                    converged: false,
                    max_drop: f64::NAN,
                    error: Some(e.to_string()),
                });
                let replace = match (&first_error, &e) {
                    (None, _) => true,
                    (Some(Error::NumericalFailure { .. }), Error::Infeasible(_)) => true,
                    _ => false,
                };
                if replace {
                    first_error = Some(e);
                }
            }
        }
    }
    match best {
        Some((idx, solution)) => Ok(AoOutcome {
            solution,
            lineage: starts[idx].0.clone(),
            runs,
        }),
        None => Err(first_error.unwrap_or_else(|| Error::invalid("no starts configured"))),
    }
}

// Warm starts only read the precoder.
fn warm_stub(precoder: PrecoderMatrix) -> Solution {
    let k = precoder.num_users();
    Solution {
        precoder,
        common_rates: CommonRateAllocation::zeros(k),
        rate_report: RateReport {
            common_rate_per_user: vec![0.0; k],
            common_rate: 0.0,
            private_rates: vec![0.0; k],
            total_unicast_rates: vec![0.0; k],
        },
        trace: Vec::new(),
        residual_trace: Vec::new(),
        iterations: 0,
        converged: false,
    }
}
