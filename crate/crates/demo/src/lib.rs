//! wasm-bindgen exports for `www/index.html`. Every call takes and returns
//! JSON text so the page needs no generated bindings beyond strings.

use ratesplit::ao::AoConfig;
use ratesplit::channel::alignment;
use ratesplit::region::{sweep_strategies, PointStatus};
use ratesplit::strategies::{solve_strategy, StrategyConfig};
use ratesplit::subproblem::multicast_rate_bound;
use ratesplit::{Scenario, Strategy};
use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

#[derive(Deserialize)]
struct Setting {
    #[serde(default = "default_nt")]
    nt: usize,
    #[serde(default = "default_snr")]
    snr_db: f64,
    gamma: f64,
    /// Radians.
    theta: f64,
    r0_threshold: f64,
    /// Points of `u2` on a log grid from 10^-2 to 10^2 (region only).
    #[serde(default = "default_points")]
    points: usize,
    /// `[u1, u2]` (single point only).
    #[serde(default)]
    weights: Option<Vec<f64>>,
}

fn default_nt() -> usize {
    4
}
fn default_snr() -> f64 {
    20.0
}
fn default_points() -> usize {
    13
}

impl Setting {
    fn scenario(&self, weight_grid: Vec<Vec<f64>>) -> Scenario {
        Scenario {
            nt: self.nt,
            k: 2,
            snr_db: self.snr_db,
            gamma: self.gamma,
            theta: self.theta,
            r0_threshold: self.r0_threshold,
            strategy: Strategy::Rs,
            weight_grid,
        }
    }
}

// One restart keeps a region under a few seconds in the browser.
fn demo_config() -> StrategyConfig {
    StrategyConfig {
        ao: AoConfig {
            restarts: 1,
            ..AoConfig::default()
        },
        cross_warm_start: true,
    }
}

#[derive(Serialize)]
struct PointOut {
    u2: f64,
    r1: f64,
    r2: f64,
    wsr: f64,
    converged: bool,
}

#[derive(Serialize)]
struct RegionOut {
    strategy: Strategy,
    points: Vec<PointOut>,
    frontier: Vec<[f64; 2]>,
}

fn fail(e: impl std::fmt::Display) -> String {
    serde_json::json!({ "error": e.to_string() }).to_string()
}

fn region_impl(setting: &str) -> Result<String, String> {
    let s: Setting = serde_json::from_str(setting).map_err(|e| e.to_string())?;
    let n = s.points.clamp(2, 41);
    let grid = (0..n)
        .map(|i| vec![1.0, 10f64.powf(-2.0 + 4.0 * i as f64 / (n - 1) as f64)])
        .collect();
    let sc = s.scenario(grid);
    let ch = sc.channel().map_err(|e| e.to_string())?;
    let regions = sweep_strategies(&ch, &sc, &Strategy::ALL, &demo_config()).map_err(|e| e.to_string())?;
    let out: Vec<RegionOut> = regions
        .iter()
        .map(|r| RegionOut {
            strategy: r.strategy,
            points: r
                .points
                .iter()
                .filter(|p| p.has_solution())
                .map(|p| PointOut {
                    u2: p.weights[1],
                    r1: p.rates[0],
                    r2: p.rates[1],
                    wsr: p.wsr,
                    converged: p.status == PointStatus::Converged,
                })
                .collect(),
            frontier: r.pareto_frontier.iter().map(|f| [f.r1, f.r2]).collect(),
        })
        .collect();
    serde_json::to_string(&out).map_err(|e| e.to_string())
}

/// Rate regions of all three strategies for one setting.
#[wasm_bindgen]
pub fn rate_region(setting: &str) -> String {
    region_impl(setting).unwrap_or_else(fail)
}

fn point_impl(setting: &str) -> Result<String, String> {
    let s: Setting = serde_json::from_str(setting).map_err(|e| e.to_string())?;
    let w = s.weights.clone().unwrap_or_else(|| vec![1.0, 1.0]);
    let sc = s.scenario(vec![w.clone()]);
    sc.validate().map_err(|e| e.to_string())?;
    let ch = sc.channel().map_err(|e| e.to_string())?;
    let mut out = Vec::new();
    for strategy in Strategy::ALL {
        let entry = match solve_strategy(&ch, strategy, s.r0_threshold, &w, &demo_config()) {
            Ok(o) => {
                let sol = &o.solution;
                serde_json::json!({
                    "strategy": strategy,
                    "wsr": o.wsr(),
                    "rates": sol.rate_report.total_unicast_rates,
                    "private_rates": sol.rate_report.private_rates,
                    "common_rate": sol.rate_report.common_rate,
                    "c0": sol.common_rates.c0(),
                    "common_shares": sol.common_rates.ck0(),
                    "column_power": (0..=2).map(|j| sol.precoder.column_power(j)).collect::<Vec<_>>(),
                    "iterations": sol.iterations,
                    "converged": sol.converged,
                    "order": o.order.map(|d| d.label()),
                    "trace": sol.trace,
                })
            }
            Err(e) => serde_json::json!({ "strategy": strategy, "error": e.to_string() }),
        };
        out.push(entry);
    }
    serde_json::to_string(&out).map_err(|e| e.to_string())
}

/// All three strategies at one weight vector, with power split and trace.
#[wasm_bindgen]
pub fn solve_point(setting: &str) -> String {
    point_impl(setting).unwrap_or_else(fail)
}

/// Channel norms, alignment and the multicast-rate bound.
#[wasm_bindgen]
pub fn channel_info(setting: &str) -> String {
    let run = || -> Result<String, String> {
        let s: Setting = serde_json::from_str(setting).map_err(|e| e.to_string())?;
        let sc = s.scenario(vec![]);
        sc.validate().map_err(|e| e.to_string())?;
        let ch = sc.channel().map_err(|e| e.to_string())?;
        Ok(serde_json::json!({
            "power": ch.power_budget(),
            "norm_sq": [ch.norm_sq(0), ch.norm_sq(1)],
            "alignment": alignment(&ch),
            "multicast_bound": multicast_rate_bound(&ch),
        })
        .to_string())
    };
    run().unwrap_or_else(fail)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SETTING: &str = r#"{"gamma": 1.0, "theta": 0.3490658503988659, "r0_threshold": 0.5, "points": 3}"#;

    #[test]
    fn channel_info_reports_bound() {
        let v: serde_json::Value = serde_json::from_str(&channel_info(SETTING)).unwrap();
        assert_eq!(v["power"], 100.0);
        assert!((v["multicast_bound"].as_f64().unwrap() - 401f64.log2()).abs() < 1e-9);
    }

    #[test]
    fn region_has_three_strategies() {
        let v: serde_json::Value = serde_json::from_str(&rate_region(SETTING)).unwrap();
        let a = v.as_array().unwrap();
        assert_eq!(a.len(), 3);
        assert_eq!(a[0]["points"].as_array().unwrap().len(), 3);
    }

    #[test]
    fn point_and_errors() {
        let v: serde_json::Value =
            serde_json::from_str(&solve_point(r#"{"gamma": 1.0, "theta": 1.0, "r0_threshold": 0.5, "weights": [1, 2]}"#))
                .unwrap();
        let rs = v[0]["wsr"].as_f64().unwrap();
        assert!(rs + 1e-5 >= v[1]["wsr"].as_f64().unwrap());
        let bad: serde_json::Value = serde_json::from_str(&solve_point("{}")).unwrap();
        assert!(bad["error"].is_string());
        let inf: serde_json::Value =
            serde_json::from_str(&solve_point(r#"{"gamma": 1.0, "theta": 1.0, "r0_threshold": 50}"#)).unwrap();
        assert!(inf[0]["error"].as_str().unwrap().contains("nfeasible"));
    }
}
