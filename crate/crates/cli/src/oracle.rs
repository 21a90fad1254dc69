//! `oracle`: AO against exhaustive search on tiny random instances.

use ratesplit::channel::random_channel;
use ratesplit::region::brute_force_oracle;
use ratesplit::strategies::{solve_strategy, StrategyConfig};
use ratesplit::Error;

use crate::config::OracleConfig;

#[derive(Clone, Debug, PartialEq)]
pub struct OracleRow {
    pub seed: u64,
    pub r0_threshold: f64,
    /// NaN when the side failed; see `note`.
    pub ao_wsr: f64,
    pub oracle_wsr: f64,
    pub ao_converged: bool,
    pub evaluations: u64,
    pub note: String,
}

impl OracleRow {
    /// AO minus oracle. Positive when AO beats the grid.
    pub fn margin(&self) -> f64 {
        self.ao_wsr - self.oracle_wsr
    }

    /// AO is acceptable when it is within `tol` of the oracle, or when both
    /// sides agree the instance is infeasible.
    pub fn passes(&self, tol: f64) -> bool {
        if self.oracle_wsr.is_nan() {
            return self.note == "both infeasible" || !self.ao_wsr.is_nan();
        }
        self.margin() >= -tol
    }
}

pub fn compare(cfg: &OracleConfig, strategy_cfg: &StrategyConfig) -> anyhow::Result<Vec<OracleRow>> {
    let grid = cfg.grid.unwrap_or_default();
    let mut rows = Vec::new();
    for &seed in &cfg.seeds {
        let ch = random_channel(seed, cfg.nt, 2)?.with_power_budget(cfg.power)?;
        for &r0 in &cfg.r0_threshold {
            let ao = solve_strategy(&ch, cfg.strategy, r0, &cfg.weights, strategy_cfg);
            let oracle = brute_force_oracle(&ch, cfg.strategy, r0, &cfg.weights, &grid);
            let note = match (&ao, &oracle) {
                (Ok(_), Ok(_)) => String::new(),
                (Err(Error::Infeasible(_)), Err(Error::Infeasible(_))) => "both infeasible".into(),
                (Err(e), Ok(_)) => format!("AO: {e}"),
                (Ok(_), Err(e)) => format!("oracle: {e}"),
                (Err(a), Err(b)) => format!("AO: {a}; oracle: {b}"),
            };
            if let Err(e) = &oracle {
                if !matches!(e, Error::Infeasible(_)) {
                    anyhow::bail!("oracle failed on seed {seed}: {e}");
                }
            }
            rows.push(OracleRow {
                seed,
                r0_threshold: r0,
                ao_wsr: ao.as_ref().map_or(f64::NAN, |o| o.wsr()),
                oracle_wsr: oracle.as_ref().map_or(f64::NAN, |o| o.wsr),
                ao_converged: ao.as_ref().is_ok_and(|o| o.solution.converged),
                evaluations: oracle.as_ref().map_or(0, |o| o.evaluations),
                note,
            });
        }
    }
    Ok(rows)
}

pub fn rows_csv(rows: &[OracleRow]) -> String {
    let mut out = String::from("seed,r0_threshold,ao_wsr,oracle_wsr,margin,ao_converged,evaluations,note\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.seed,
            r.r0_threshold,
            r.ao_wsr,
            r.oracle_wsr,
            r.margin(),
            r.ao_converged,
            r.evaluations,
            r.note.replace(',', ";")
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use ratesplit::region::OracleGrid;

    #[test]
    fn tiny_comparison() {
        let cfg = OracleConfig {
            nt: 2,
            power: 10.0,
            seeds: vec![3],
            r0_threshold: vec![0.0, 40.0],
            strategy: ratesplit::Strategy::Mulp,
            weights: vec![1.0, 1.0],
            tolerance: 0.05,
            grid: Some(OracleGrid {
                alpha_steps: 5,
                beta_steps: 4,
                power_steps: 6,
                rate_steps: 2,
            }),
        };
        let rows = compare(&cfg, &StrategyConfig::default()).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows[0].passes(0.05), "{:?}", rows[0]);
        assert_eq!(rows[1].note, "both infeasible");
        assert!(rows[1].passes(0.05));
        assert!(rows_csv(&rows).lines().count() == 3);
    }
}
