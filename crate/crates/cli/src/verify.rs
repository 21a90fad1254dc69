//! `verify`: re-derive everything stored in a region file from its precoders.

use ratesplit::ao::residuals;
use ratesplit::rates::rate_report;
use ratesplit::region::{pareto_frontier, PointStatus, RateRegionResult};
use ratesplit::Strategy;

/// Absolute tolerance for rates, WSR and constraint residuals.
pub const VERIFY_TOL: f64 = 1e-6;

#[derive(Clone, Debug, Default)]
pub struct VerifyReport {
    pub checked_points: usize,
    pub violations: Vec<String>,
}

impl VerifyReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn verify_region(r: &RateRegionResult) -> VerifyReport {
    let mut rep = VerifyReport::default();
    let mut bad = |msg: String| rep.violations.push(msg);
    let sc = &r.scenario;
    if let Err(e) = sc.validate() {
        bad(format!("scenario: {e}"));
        return rep;
    }
    let ch = match sc.channel() {
        Ok(c) => c,
        Err(e) => {
            bad(format!("channel: {e}"));
            return rep;
        }
    };
    let pt = ch.power_budget();
    let mut checked = 0;
    for (i, p) in r.points.iter().enumerate() {
        let at = format!("point {i} (u={:?})", p.weights);
        let Some(o) = &p.outcome else {
            if matches!(p.status, PointStatus::Converged | PointStatus::NotConverged) {
                bad(format!("{at}: status {} without a solution", p.status.as_str()));
            }
            continue;
        };
        checked += 1;
        let s = &o.solution;
        if o.strategy != r.strategy {
            bad(format!("{at}: outcome strategy {} in a {} region", o.strategy, r.strategy));
        }
        if s.precoder.num_antennas() != ch.num_antennas() || s.precoder.num_users() != ch.num_users() {
            bad(format!("{at}: precoder shape does not match the channel"));
            continue;
        }
        let report = rate_report(&ch, &s.precoder, Some(&s.common_rates));
        for (k, (&a, &b)) in report.total_unicast_rates.iter().zip(&p.rates).enumerate() {
            if !((a - b).abs() <= VERIFY_TOL) {
                bad(format!("{at}: R{} stored {b} recomputed {a}", k + 1));
            }
        }
        let wsr: f64 = report.total_unicast_rates.iter().zip(&p.weights).map(|(r, w)| r * w).sum();
        if !((wsr - p.wsr).abs() <= VERIFY_TOL * (1.0 + wsr.abs())) {
            bad(format!("{at}: wsr stored {} recomputed {wsr}", p.wsr));
        }
        let res = residuals(&ch, &s.precoder, &s.common_rates, &report, sc.r0_threshold);
        if res.power > VERIFY_TOL * pt {
            bad(format!("{at}: power exceeds the budget by {:e}", res.power));
        }
        if res.rate_sharing > VERIFY_TOL {
            bad(format!("{at}: common shares exceed the common rate by {:e}", res.rate_sharing));
        }
        if res.qos > VERIFY_TOL {
            bad(format!("{at}: multicast rate short of the threshold by {:e}", res.qos));
        }
        if s.common_rates.ck0().iter().any(|&c| c < -VERIFY_TOL) {
            bad(format!("{at}: negative common share"));
        }
        match (r.strategy, o.order) {
            (Strategy::Mulp, _) => {
                if s.common_rates.ck0().iter().any(|&c| c > VERIFY_TOL) {
                    bad(format!("{at}: MULP point carries unicast data in the common stream"));
                }
            }
            (Strategy::ScSic, Some(order)) => {
                if let Some(second) = order.second {
                    if s.precoder.column_power(order.first + 1) > VERIFY_TOL * pt {
                        bad(format!("{at}: SC-SIC keeps a private stream for user {}", order.first + 1));
                    }
                    if s.common_rates.user(second) > VERIFY_TOL {
                        bad(format!("{at}: SC-SIC gives user {} a common share", second + 1));
                    }
                }
            }
            (Strategy::ScSic, None) => bad(format!("{at}: SC-SIC point without a decoding order")),
            (Strategy::Rs, _) => {}
        }
        for (n, w) in s.trace.windows(2).enumerate() {
            if w[1] < w[0] - VERIFY_TOL {
                bad(format!("{at}: trace drops by {:e} at iteration {}", w[0] - w[1], n + 1));
            }
        }
        if let Some(&last) = s.trace.last() {
            if !((last - p.wsr).abs() <= VERIFY_TOL * (1.0 + last.abs())) {
                bad(format!("{at}: trace ends at {last}, point reports {}", p.wsr));
            }
        }
        if s.converged != (p.status == PointStatus::Converged) {
            bad(format!("{at}: status {} disagrees with the solution", p.status.as_str()));
        }
    }
    if sc.k == 2 {
        let candidates: Vec<(f64, f64, usize)> = r
            .points
            .iter()
            .enumerate()
            .filter(|(_, p)| p.status == PointStatus::Converged)
            .map(|(i, p)| (p.rates[0], p.rates[1], i))
            .collect();
        if pareto_frontier(&candidates) != r.pareto_frontier {
            bad("stored Pareto frontier differs from the recomputed one".to_string());
        }
    }
    rep.checked_points = checked;
    rep
}
