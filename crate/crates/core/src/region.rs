//! Rate-region sweeps over WSR weights, region comparison and the
//! brute-force grid oracle for tiny instances.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rates::log2_1p;
use crate::strategies::{self, StrategyConfig, StrategyOutcome};
use crate::subproblem::{DecodingOrder, Variant};
use crate::types::{ChannelSet, PrecoderMatrix, Scenario, Strategy};

/// `u1 = 1` and `u2 = 10^e` for `e ∈ {−3, −1, −0.95, …, 1, 3}`.
pub fn weight_grid() -> Vec<Vec<f64>> {
    std::iter::once(-3.0)
        .chain((0..=40).map(|i| (i as f64 - 20.0) / 20.0))
        .chain(std::iter::once(3.0))
        .map(|e| vec![1.0, 10f64.powf(e)])
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointStatus {
    Converged,
    NotConverged,
    Infeasible,
    Failed,
}

impl PointStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            PointStatus::Converged => "converged",
            PointStatus::NotConverged => "not_converged",
            PointStatus::Infeasible => "infeasible",
            PointStatus::Failed => "failed",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionPoint {
    pub weights: Vec<f64>,
    /// Per-user total unicast rates; NaN when the point failed.
    #[serde(deserialize_with = "crate::types::nan_as_null::vector")]
    pub rates: Vec<f64>,
    #[serde(deserialize_with = "crate::types::nan_as_null::scalar")]
    pub wsr: f64,
    pub iterations: usize,
    pub status: PointStatus,
    pub error: Option<String>,
    pub outcome: Option<StrategyOutcome>,
}

impl RegionPoint {
    fn from_result(weights: &[f64], result: Result<StrategyOutcome>) -> Self {
        match result {
            Ok(o) => RegionPoint {
                weights: weights.to_vec(),
                rates: o.solution.rate_report.total_unicast_rates.clone(),
                wsr: o.wsr(),
                iterations: o.solution.iterations,
                status: if o.solution.converged {
                    PointStatus::Converged
                } else {
                    PointStatus::NotConverged
                },
                error: None,
                outcome: Some(o),
            },
            Err(e) => RegionPoint {
                weights: weights.to_vec(),
                rates: vec![f64::NAN; weights.len()],
                wsr: f64::NAN,
                iterations: 0,
                status: if matches!(e, Error::Infeasible(_)) {
                    PointStatus::Infeasible
                } else {
                    PointStatus::Failed
                },
                error: Some(e.to_string()),
                outcome: None,
            },
        }
    }

    pub fn has_solution(&self) -> bool {
        self.outcome.is_some()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrontierPoint {
    pub r1: f64,
    pub r2: f64,
    /// Index into `RateRegionResult::points`.
    pub index: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateRegionResult {
    pub strategy: Strategy,
    pub scenario: Scenario,
    pub points: Vec<RegionPoint>,
    /// Non-dominated converged points, increasing in `R1`. Empty unless
    /// `K = 2`.
    pub pareto_frontier: Vec<FrontierPoint>,
}

impl RateRegionResult {
    fn assemble(strategy: Strategy, scenario: &Scenario, points: Vec<RegionPoint>) -> Self {
        let pareto_frontier = if scenario.k == 2 {
            let candidates: Vec<(f64, f64, usize)> = points
                .iter()
                .enumerate()
                .filter(|(_, p)| p.status == PointStatus::Converged)
                .map(|(i, p)| (p.rates[0], p.rates[1], i))
                .collect();
            pareto_frontier(&candidates)
        } else {
            Vec::new()
        };
        RateRegionResult {
            strategy,
            scenario: scenario.with_strategy(strategy),
            points,
            pareto_frontier,
        }
    }

    pub fn all_failed(&self) -> bool {
        self.points.iter().all(|p| !p.has_solution())
    }

    pub fn count(&self, status: PointStatus) -> usize {
        self.points.iter().filter(|p| p.status == status).count()
    }

    /// CSV with one row per weight vector.
    pub fn to_csv(&self) -> String {
        let k = self.scenario.k;
        let mut out = String::from("strategy");
        for i in 1..=k {
            out.push_str(&format!(",u{i}"));
        }
        for i in 1..=k {
            out.push_str(&format!(",R{i}"));
        }
        out.push_str(",wsr,iterations,status\n");
        for p in &self.points {
            out.push_str(self.strategy.as_str());
            for u in &p.weights {
                out.push_str(&format!(",{u}"));
            }
            for r in &p.rates {
                out.push_str(&format!(",{r}"));
            }
            out.push_str(&format!(",{},{},{}\n", p.wsr, p.iterations, p.status.as_str()));
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::invalid(format!("serialization failed: {e}")))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::invalid(format!("not a region file: {e}")))
    }
}

/// Indices of the non-dominated `(r1, r2, index)` points, increasing in
/// `r1` and strictly decreasing in `r2`. Exact duplicates keep the lowest
/// index, so the result does not depend on input order.
pub fn pareto_frontier(points: &[(f64, f64, usize)]) -> Vec<FrontierPoint> {
    let mut sorted: Vec<_> = points.iter().copied().filter(|p| p.0.is_finite() && p.1.is_finite()).collect();
    sorted.sort_by(|a, b| b.0.total_cmp(&a.0).then(b.1.total_cmp(&a.1)).then(a.2.cmp(&b.2)));
    let mut best = f64::NEG_INFINITY;
    let mut out = Vec::new();
    for (r1, r2, index) in sorted {
        if r2 > best {
            best = r2;
            out.push(FrontierPoint { r1, r2, index });
        }
    }
    out.reverse();
    out
}

#[cfg(feature = "parallel")]
fn par_map<T: Sync, U: Send>(items: &[T], f: impl Fn(&T) -> U + Sync + Send) -> Vec<U> {
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn par_map<T: Sync, U: Send>(items: &[T], f: impl Fn(&T) -> U + Sync + Send) -> Vec<U> {
    items.iter().map(f).collect()
}

fn grid_of(scenario: &Scenario) -> Vec<Vec<f64>> {
    if scenario.weight_grid.is_empty() {
        weight_grid()
    } else {
        scenario.weight_grid.clone()
    }
}

/// Region of `scenario.strategy`. An empty weight grid in the scenario means
/// [`weight_grid`].
pub fn sweep(ch: &ChannelSet, scenario: &Scenario, config: &StrategyConfig) -> Result<RateRegionResult> {
    let mut out = sweep_strategies(ch, scenario, &[scenario.strategy], config)?;
    let region = out.pop().expect("one strategy requested");
    if region.all_failed() {
        return Err(Error::Infeasible(format!(
            "every weight vector failed for {} ({})",
            region.strategy,
            region.points[0].error.as_deref().unwrap_or("no points")
        )));
    }
    Ok(region)
}

/// Regions for several strategies over one weight grid. MU–LP and SC–SIC
/// are solved once per weight and, with cross warm starts on, reused as RS
/// starting points. Output order follows `strategies`.
pub fn sweep_strategies(
    ch: &ChannelSet,
    scenario: &Scenario,
    strategies: &[Strategy],
    config: &StrategyConfig,
) -> Result<Vec<RateRegionResult>> {
    scenario.validate()?;
    if ch.num_users() != scenario.k {
        return Err(Error::invalid(format!(
            "scenario has {} users but the channel has {}",
            scenario.k,
            ch.num_users()
        )));
    }
    let grid = grid_of(scenario);
    let r0 = scenario.r0_threshold;
    let want = |s: Strategy| strategies.contains(&s);
    let rs_warm = want(Strategy::Rs) && config.cross_warm_start;
    let need_mulp = want(Strategy::Mulp) || rs_warm;
    let need_scsic = want(Strategy::ScSic) || (rs_warm && scenario.k <= 2);

    let per_weight = par_map(&grid, |w| {
        let mulp = need_mulp.then(|| strategies::solve_strategy(ch, Strategy::Mulp, r0, w, config));
        let scsic = need_scsic.then(|| strategies::solve_strategy(ch, Strategy::ScSic, r0, w, config));
        let rs = want(Strategy::Rs).then(|| {
            if rs_warm {
                strategies::solve_rs_with(
                    ch,
                    r0,
                    w,
                    config,
                    mulp.as_ref().and_then(|r| r.as_ref().ok()),
                    scsic.as_ref().and_then(|r| r.as_ref().ok()),
                )
            } else {
                strategies::solve_strategy(ch, Strategy::Rs, r0, w, config)
            }
        });
        (rs, mulp, scsic)
    });

    let mut columns: [Vec<RegionPoint>; 3] = Default::default();
    for (w, (rs, mulp, scsic)) in grid.iter().zip(per_weight) {
        for (slot, result) in [rs, mulp, scsic].into_iter().enumerate() {
            if let Some(r) = result {
                columns[slot].push(RegionPoint::from_result(w, r));
            }
        }
    }
    let [rs, mulp, scsic] = columns;
    let pick = |s: Strategy| -> Vec<RegionPoint> {
        match s {
            Strategy::Rs => rs.clone(),
            Strategy::Mulp => mulp.clone(),
            Strategy::ScSic => scsic.clone(),
        }
    };
    Ok(strategies
        .iter()
        .map(|&s| RateRegionResult::assemble(s, scenario, pick(s)))
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DominanceReport {
    /// `WSR(a) − WSR(b)` per weight vector; `None` where either side has no
    /// solution.
    pub deltas: Vec<Option<f64>>,
    pub min_delta: f64,
    pub max_delta: f64,
    /// Every frontier point of `b` lies weakly below the staircase of `a`.
    pub a_contains_b: bool,
    pub b_contains_a: bool,
    /// Largest amount by which a frontier point of `b` sits above the upper
    /// concave hull of `a`'s frontier (negative when strictly inside).
    pub hull_excess: f64,
}

/// Compares two regions of the same setting.
pub fn region_dominance(a: &RateRegionResult, b: &RateRegionResult, tol: f64) -> Result<DominanceReport> {
    region_dominance_union(a, &[b], tol)
}

/// Compares `a` with the union of `others`: per weight against the best of
/// them, and against the frontier of all their points together.
pub fn region_dominance_union(a: &RateRegionResult, others: &[&RateRegionResult], tol: f64) -> Result<DominanceReport> {
    if others.is_empty() {
        return Err(Error::invalid("nothing to compare against"));
    }
    for b in others {
        if !a.scenario.same_setting(&b.scenario) {
            return Err(Error::invalid("regions come from different settings"));
        }
        if a.points.len() != b.points.len() || a.points.iter().zip(&b.points).any(|(p, q)| p.weights != q.weights) {
            return Err(Error::invalid("regions use different weight grids"));
        }
    }
    let deltas: Vec<Option<f64>> = (0..a.points.len())
        .map(|i| {
            let pa = &a.points[i];
            let best_b = others
                .iter()
                .map(|b| &b.points[i])
                .filter(|p| p.has_solution())
                .map(|p| p.wsr)
                .fold(None, |m: Option<f64>, w| Some(m.map_or(w, |m| m.max(w))));
            match (pa.has_solution(), best_b) {
                (true, Some(wb)) => Some(pa.wsr - wb),
                _ => None,
            }
        })
        .collect();
    let known: Vec<f64> = deltas.iter().flatten().copied().collect();
    let min_delta = known.iter().copied().fold(f64::INFINITY, f64::min);
    let max_delta = known.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    let fa: Vec<(f64, f64)> = a.pareto_frontier.iter().map(|p| (p.r1, p.r2)).collect();
    let union: Vec<(f64, f64, usize)> = others
        .iter()
        .flat_map(|b| b.pareto_frontier.iter())
        .enumerate()
        .map(|(i, p)| (p.r1, p.r2, i))
        .collect();
    let fb: Vec<(f64, f64)> = pareto_frontier(&union).iter().map(|p| (p.r1, p.r2)).collect();

    Ok(DominanceReport {
        deltas,
        min_delta,
        max_delta,
        a_contains_b: staircase_contains(&fa, &fb, tol),
        b_contains_a: staircase_contains(&fb, &fa, tol),
        hull_excess: fb.iter().map(|&p| hull_excess(&fa, p)).fold(f64::NEG_INFINITY, f64::max),
    })
}

/// Every point of `inner` is weakly dominated by some point of `outer`.
pub fn staircase_contains(outer: &[(f64, f64)], inner: &[(f64, f64)], tol: f64) -> bool {
    inner
        .iter()
        .all(|&(x, y)| outer.iter().any(|&(ox, oy)| ox >= x - tol && oy >= y - tol))
}

/// Height of `p` above the upper concave hull of `frontier` together with
/// its axis projections. Points to the right of the hull count by their
/// horizontal distance.
pub fn hull_excess(frontier: &[(f64, f64)], p: (f64, f64)) -> f64 {
    if frontier.is_empty() {
        return f64::INFINITY;
    }
    let max_x = frontier.iter().map(|q| q.0).fold(f64::NEG_INFINITY, f64::max);
    let max_y = frontier.iter().map(|q| q.1).fold(f64::NEG_INFINITY, f64::max);
    if p.0 > max_x {
        return p.0 - max_x;
    }
    let mut pts: Vec<(f64, f64)> = frontier.to_vec();
    pts.push((0.0, max_y));
    pts.push((max_x, 0.0));
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.total_cmp(&a.1)));
    let mut hull: Vec<(f64, f64)> = Vec::new();
    for q in pts {
        if hull.last().is_some_and(|l| l.0 == q.0) {
            continue;
        }
        while hull.len() >= 2 {
            let (o, a) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            let cross = (a.0 - o.0) * (q.1 - o.1) - (a.1 - o.1) * (q.0 - o.0);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(q);
    }
    let x = p.0.max(0.0);
    let y_hull = hull
        .windows(2)
        .find(|s| x >= s[0].0 && x <= s[1].0)
        .map(|s| {
            let t = (x - s[0].0) / (s[1].0 - s[0].0);
            s[0].1 + t * (s[1].1 - s[0].1)
        })
        .unwrap_or(hull[0].1);
    p.1 - y_hull
}

/// Discretization for [`brute_force_oracle`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleGrid {
    /// Points of `α` on `[0, π/2]`.
    pub alpha_steps: usize,
    /// Points of `β` on `[0, 2π)`.
    pub beta_steps: usize,
    /// The power budget is split in `power_steps` equal quanta over the
    /// columns.
    pub power_steps: usize,
    /// Common-rate surplus is split in `rate_steps` quanta between users.
    pub rate_steps: usize,
}

impl Default for OracleGrid {
    fn default() -> Self {
        OracleGrid {
            alpha_steps: 9,
            beta_steps: 8,
            power_steps: 10,
            rate_steps: 4,
        }
    }
}

/// Refuse oracle runs with more rate evaluations than this.
pub const ORACLE_MAX_EVALUATIONS: u64 = 200_000_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub wsr: f64,
    pub precoder: PrecoderMatrix,
    pub common_shares: Vec<f64>,
    pub evaluations: u64,
}

fn oracle_variants(strategy: Strategy, k: usize) -> Vec<Variant> {
    match strategy {
        Strategy::Rs => vec![Variant::Rs],
        Strategy::Mulp => vec![Variant::Mulp],
        Strategy::ScSic => DecodingOrder::all(k).into_iter().map(Variant::ScSic).collect(),
    }
}

/// Unit directions `(cos α, sin α·e^{jβ})` up to a common phase.
fn directions(nt: usize, grid: &OracleGrid) -> Vec<Vec<Complex64>> {
    if nt == 1 {
        return vec![vec![Complex64::new(1.0, 0.0)]];
    }
    let mut out = Vec::new();
    let na = grid.alpha_steps.max(2);
    for i in 0..na {
        let alpha = FRAC_PI_2 * i as f64 / (na - 1) as f64;
        let endpoint = i == 0 || i == na - 1;
        let nb = if endpoint { 1 } else { grid.beta_steps.max(1) };
        for j in 0..nb {
            let beta = 2.0 * PI * j as f64 / nb as f64;
            let (s, c) = alpha.sin_cos();
            let c = if i == na - 1 { 0.0 } else { c };
            out.push(vec![Complex64::new(c, 0.0), Complex64::from_polar(s, beta)]);
        }
    }
    out
}

/// All ways to place `total` quanta into `parts` bins.
fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    if parts == 1 {
        return vec![vec![total]];
    }
    (0..=total)
        .flat_map(|first| {
            compositions(total - first, parts - 1).into_iter().map(move |mut rest| {
                rest.insert(0, first);
                rest
            })
        })
        .collect()
}

fn binomial(n: u64, k: u64) -> u64 {
    (0..k).fold(1u64, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

struct Candidate {
    wsr: f64,
    shares: Vec<f64>,
}

/// Best WSR over common-rate splits for fixed stream rates.
fn best_over_splits(
    variant: Variant,
    common: f64,
    private: &[f64],
    r0: f64,
    weights: &[f64],
    rate_steps: usize,
) -> Option<Candidate> {
    if common < r0 {
        return None;
    }
    let k = private.len();
    let spare = common - r0;
    let users = variant.common_share_users(k);
    let base: f64 = private.iter().zip(weights).map(|(r, w)| r * w).sum();
    let mut best: Option<Candidate> = None;
    let mut consider = |shares: Vec<f64>| {
        let wsr = base + shares.iter().zip(weights).map(|(c, w)| c * w).sum::<f64>();
        if best.as_ref().map_or(true, |b| wsr > b.wsr) {
            best = Some(Candidate { wsr, shares });
        }
    };
    if users.is_empty() {
        consider(vec![0.0; k]);
    } else {
        let steps = rate_steps.max(1);
        for comp in compositions(steps, users.len()) {
            let mut shares = vec![0.0; k];
            for (u, q) in users.iter().zip(&comp) {
                shares[*u] = spare * *q as f64 / steps as f64;
            }
            consider(shares);
        }
    }
    best
}

fn evaluate(ch: &ChannelSet, p: &PrecoderMatrix) -> (f64, Vec<f64>) {
    let report = crate::rates::rate_report(ch, p, None);
    (report.common_rate, report.private_rates)
}

/// Exhaustive search over a precoder grid (`Nt ≤ 2`, `K ≤ 2`) at full power.
///
/// Full power loses nothing: power left over can go to the common column,
/// which every user removes before decoding its private stream. The result
/// is achievable, so it is a lower bound on the optimum.
pub fn brute_force_oracle(
    ch: &ChannelSet,
    strategy: Strategy,
    r0_threshold: f64,
    weights: &[f64],
    grid: &OracleGrid,
) -> Result<OracleResult> {
    let nt = ch.num_antennas();
    let k = ch.num_users();
    if nt > 2 || k > 2 {
        return Err(Error::invalid(format!("oracle refuses Nt={nt}, K={k}; only Nt <= 2 and K <= 2")));
    }
    if weights.len() != k || weights.iter().any(|w| !(*w > 0.0)) {
        return Err(Error::invalid("oracle needs one positive weight per user"));
    }
    let dirs = directions(nt, grid);
    let pt = ch.power_budget();
    // |h_kᴴ d|² per user and direction
    let gains: Vec<Vec<f64>> = (0..k)
        .map(|u| dirs.iter().map(|d| ch.gain(u, d).norm_sqr()).collect())
        .collect();

    let mut evaluations = 0u64;
    for variant in oracle_variants(strategy, k) {
        let m = variant.active_columns(k).len() as u64;
        let splits = binomial(grid.power_steps as u64 + m - 1, m - 1);
        evaluations = evaluations.saturating_add((dirs.len() as u64).saturating_pow(m as u32).saturating_mul(splits));
    }
    evaluations = evaluations.saturating_mul(grid.rate_steps.max(1) as u64 + 1);
    if evaluations > ORACLE_MAX_EVALUATIONS {
        return Err(Error::invalid(format!("oracle grid too large ({evaluations} evaluations)")));
    }

    let mut best: Option<(f64, Vec<usize>, Vec<f64>, Variant, Vec<f64>)> = None;
    for variant in oracle_variants(strategy, k) {
        let cols = variant.active_columns(k);
        let m = cols.len();
        let fractions: Vec<Vec<f64>> = compositions(grid.power_steps.max(1), m)
            .into_iter()
            .map(|c| c.into_iter().map(|q| pt * q as f64 / grid.power_steps.max(1) as f64).collect())
            .collect();
        let mut idx = vec![0usize; m];
        loop {
            for q in &fractions {
                // received power of column c at user u: q_c·gains[u][d_c]
                let mut private = vec![0.0; k];
                let mut common = f64::INFINITY;
                for u in 0..k {
                    let mut interference = 1.0;
                    let mut own = 0.0;
                    let mut c0 = 0.0;
                    for (slot, &c) in cols.iter().enumerate() {
                        let rx = q[slot] * gains[u][idx[slot]];
                        if c == 0 {
                            c0 = rx;
                        } else {
                            interference += rx;
                            if c == u + 1 {
                                own = rx;
                            }
                        }
                    }
                    common = common.min(log2_1p(c0 / interference));
                    private[u] = log2_1p(own / (interference - own));
                }
                if let Some(c) = best_over_splits(variant, common, &private, r0_threshold, weights, grid.rate_steps) {
                    if best.as_ref().map_or(true, |b| c.wsr > b.0) {
                        best = Some((c.wsr, idx.clone(), q.clone(), variant, c.shares));
                    }
                }
            }
            // odometer over direction indices
            let mut pos = 0;
            while pos < m {
                idx[pos] += 1;
                if idx[pos] < dirs.len() {
                    break;
                }
                idx[pos] = 0;
                pos += 1;
            }
            if pos == m {
                break;
            }
        }
    }
    let (wsr, idx, q, variant, shares) = best.ok_or_else(|| {
        Error::Infeasible(format!("no grid precoder reaches the multicast threshold {r0_threshold}"))
    })?;
    let mut p = PrecoderMatrix::zeros(nt, k);
    for (slot, &c) in variant.active_columns(k).iter().enumerate() {
        p.set_column(c, dirs[idx[slot]].iter().map(|x| x * q[slot].sqrt()).collect());
    }
    Ok(OracleResult {
        wsr,
        precoder: p,
        common_shares: shares,
        evaluations,
    })
}

/// Oracle over an explicit list of precoders instead of a grid.
pub fn oracle_over_precoders(
    ch: &ChannelSet,
    strategy: Strategy,
    r0_threshold: f64,
    weights: &[f64],
    candidates: &[PrecoderMatrix],
    rate_steps: usize,
) -> Result<OracleResult> {
    let k = ch.num_users();
    let mut best: Option<OracleResult> = None;
    for p in candidates {
        if p.num_users() != k || p.num_antennas() != ch.num_antennas() {
            return Err(Error::invalid("candidate precoder does not match the channel"));
        }
        if p.total_power() > ch.power_budget() * (1.0 + 1e-9) {
            continue;
        }
        let (common, private) = evaluate(ch, p);
        for variant in oracle_variants(strategy, k) {
            let off = (1..=k).any(|c| !variant.active_columns(k).contains(&c) && p.column_power(c) > 0.0);
            if off {
                continue;
            }
            if let Some(c) = best_over_splits(variant, common, &private, r0_threshold, weights, rate_steps) {
                if best.as_ref().map_or(true, |b| c.wsr > b.wsr) {
                    best = Some(OracleResult {
                        wsr: c.wsr,
                        precoder: p.clone(),
                        common_shares: c.shares,
                        evaluations: 0,
                    });
                }
            }
        }
    }
    best.ok_or_else(|| Error::Infeasible("no candidate precoder is feasible".into()))
}
