//! Experiment configuration files (TOML).

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use ratesplit::ao::{AoConfig, InitMethod};
use ratesplit::region::OracleGrid;
use ratesplit::strategies::StrategyConfig;
use ratesplit::{Scenario, Strategy};
use serde::{Deserialize, Serialize};

/// An angle written as a rational multiple of π ("pi/9", "2pi/9", "4*pi/9",
/// "π/3") or plain radians ("0.35").
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Angle {
    Text(String),
    Radians(f64),
}

impl Angle {
    pub fn radians(&self) -> anyhow::Result<f64> {
        match self {
            Angle::Radians(r) => Ok(*r),
            Angle::Text(s) => parse_angle(s),
        }
    }

    /// File-name friendly label: "pi/9" → "pi_9".
    pub fn label(&self) -> String {
        match self {
            Angle::Radians(r) => format!("{r}"),
            Angle::Text(s) => s
                .trim()
                .replace('π', "pi")
                .chars()
                .filter(|c| !c.is_whitespace() && *c != '*')
                .map(|c| if c == '/' { '_' } else { c })
                .collect(),
        }
    }
}

pub fn parse_angle(text: &str) -> anyhow::Result<f64> {
    let s: String = text.trim().replace('π', "pi").chars().filter(|c| !c.is_whitespace()).collect();
    let Some((coef, rest)) = s.split_once("pi") else {
        return s.parse::<f64>().with_context(|| format!("bad angle {text:?}"));
    };
    let coef = coef.trim_end_matches('*');
    let num = if coef.is_empty() {
        1.0
    } else if coef == "-" {
        -1.0
    } else {
        coef.parse::<f64>().with_context(|| format!("bad angle {text:?}"))?
    };
    let den = match rest {
        "" => 1.0,
        r => match r.strip_prefix('/') {
            Some(d) => d.parse::<f64>().with_context(|| format!("bad angle {text:?}"))?,
            None => bail!("bad angle {text:?}"),
        },
    };
    if den == 0.0 {
        bail!("bad angle {text:?}: zero denominator");
    }
    Ok(num * PI / den)
}

fn default_nt() -> usize {
    4
}
fn default_snr() -> f64 {
    20.0
}
fn default_strategies() -> Vec<Strategy> {
    Strategy::ALL.to_vec()
}
fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}
fn default_parallelism() -> usize {
    1
}
fn default_true() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    #[serde(default = "default_nt")]
    pub nt: usize,
    #[serde(default = "default_snr")]
    pub snr_db: f64,
    #[serde(default)]
    pub gamma: Vec<f64>,
    #[serde(default)]
    pub theta: Vec<Angle>,
    #[serde(default)]
    pub r0_threshold: Vec<f64>,
    #[serde(default = "default_strategies")]
    pub strategies: Vec<Strategy>,
    /// Explicit weight vectors; the default 43-point grid when absent.
    #[serde(default)]
    pub weights: Option<Vec<Vec<f64>>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AoSection {
    pub epsilon: Option<f64>,
    pub max_iterations: Option<usize>,
    pub restarts: Option<usize>,
    /// "mrt-svd" or "random".
    pub init: Option<String>,
    #[serde(default = "default_true")]
    pub cross_warm_start: bool,
    #[serde(default = "default_true")]
    pub extrapolate: bool,
}

impl Default for AoSection {
    fn default() -> Self {
        AoSection {
            epsilon: None,
            max_iterations: None,
            restarts: None,
            init: None,
            cross_warm_start: true,
            extrapolate: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Budget {
    /// Scenarios allowed to come back entirely infeasible.
    pub max_infeasible_scenarios: usize,
    /// Fraction of AO points allowed to end in a numerical failure.
    pub max_failure_fraction: f64,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            max_infeasible_scenarios: 0,
            max_failure_fraction: 0.01,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_parallelism")]
    pub parallelism: usize,
    pub grid: Grid,
    #[serde(default)]
    pub ao: AoSection,
    #[serde(default)]
    pub budget: Budget,
}

/// One expanded grid cell, with a stable name used for output files.
#[derive(Clone, Debug, PartialEq)]
pub struct NamedScenario {
    pub name: String,
    pub scenario: Scenario,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> anyhow::Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).context("config does not parse")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> anyhow::Result<(Self, String)> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        Ok((Self::parse(&text)?, text))
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if self.parallelism < 1 {
            bail!("parallelism must be at least 1");
        }
        if self.grid.nt < 1 {
            bail!("nt must be at least 1");
        }
        if self.grid.strategies.is_empty() {
            bail!("no strategies selected");
        }
        if !(0.0..=1.0).contains(&self.budget.max_failure_fraction) {
            bail!("max_failure_fraction must lie in [0, 1]");
        }
        // axes are checked on their own too, since an empty axis yields no scenarios
        if let Some(g) = self.grid.gamma.iter().find(|g| !(**g > 0.0 && **g <= 1.0)) {
            bail!("gamma must lie in (0, 1], got {g}");
        }
        if let Some(r) = self.grid.r0_threshold.iter().find(|r| !(r.is_finite() && **r >= 0.0)) {
            bail!("r0_threshold must be finite and non-negative, got {r}");
        }
        for t in &self.grid.theta {
            t.radians()?;
        }
        self.strategy_config()?.ao.validate()?;
        for s in self.scenarios()? {
            s.scenario.validate()?;
        }
        Ok(())
    }

    pub fn strategy_config(&self) -> anyhow::Result<StrategyConfig> {
        let d = AoConfig::default();
        let init_method = match self.ao.init.as_deref() {
            None | Some("mrt-svd") => InitMethod::MrtSvd,
            Some("random") => InitMethod::Random(self.seed),
            Some(other) => bail!("unknown init method {other:?} (expected \"mrt-svd\" or \"random\")"),
        };
        Ok(StrategyConfig {
            ao: AoConfig {
                epsilon: self.ao.epsilon.unwrap_or(d.epsilon),
                max_iterations: self.ao.max_iterations.unwrap_or(d.max_iterations),
                init_method,
                restarts: self.ao.restarts.unwrap_or(d.restarts),
                seed: self.seed,
                extrapolate: self.ao.extrapolate,
            },
            cross_warm_start: self.ao.cross_warm_start,
        })
    }

    /// Cartesian product `gamma × theta × r0_threshold`, in that nesting
    /// order.
    pub fn scenarios(&self) -> anyhow::Result<Vec<NamedScenario>> {
        let g = &self.grid;
        let weights = g.weights.clone().unwrap_or_default();
        let mut out = Vec::new();
        for &gamma in &g.gamma {
            for theta in &g.theta {
                for &r0 in &g.r0_threshold {
                    out.push(NamedScenario {
                        name: format!("g{gamma}_t{}_r{r0}", theta.label()),
                        scenario: Scenario {
                            nt: g.nt,
                            k: 2,
                            snr_db: g.snr_db,
                            gamma,
                            theta: theta.radians()?,
                            r0_threshold: r0,
                            strategy: g.strategies[0],
                            weight_grid: weights.clone(),
                        },
                    });
                }
            }
        }
        Ok(out)
    }
}

/// Tiny-instance oracle comparison.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    #[serde(default = "oracle_nt")]
    pub nt: usize,
    #[serde(default = "oracle_pt")]
    pub power: f64,
    pub seeds: Vec<u64>,
    pub r0_threshold: Vec<f64>,
    #[serde(default = "oracle_strategy")]
    pub strategy: Strategy,
    #[serde(default = "oracle_weights")]
    pub weights: Vec<f64>,
    /// Allowed shortfall of AO against the oracle, bit/s/Hz.
    #[serde(default = "oracle_tolerance")]
    pub tolerance: f64,
    #[serde(default)]
    pub grid: Option<OracleGrid>,
}

fn oracle_nt() -> usize {
    2
}
fn oracle_pt() -> f64 {
    10.0
}
fn oracle_strategy() -> Strategy {
    Strategy::Rs
}
fn oracle_weights() -> Vec<f64> {
    vec![1.0, 1.0]
}
fn oracle_tolerance() -> f64 {
    0.05
}

impl OracleConfig {
    pub fn parse(text: &str) -> anyhow::Result<Self> {
        let cfg: OracleConfig = toml::from_str(text).context("oracle config does not parse")?;
        if cfg.weights.len() != 2 || cfg.weights.iter().any(|w| !(*w > 0.0)) {
            bail!("oracle weights must be two positive numbers");
        }
        if !(cfg.power > 0.0) {
            bail!("power must be positive");
        }
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn angles() {
        assert!((parse_angle("pi/9").unwrap() - PI / 9.0).abs() < 1e-15);
        assert!((parse_angle("2pi/9").unwrap() - 2.0 * PI / 9.0).abs() < 1e-15);
        assert!((parse_angle("4*pi/9").unwrap() - 4.0 * PI / 9.0).abs() < 1e-15);
        assert!((parse_angle(" π/3 ").unwrap() - PI / 3.0).abs() < 1e-15);
        assert!((parse_angle("pi").unwrap() - PI).abs() < 1e-15);
        assert_eq!(parse_angle("0.5").unwrap(), 0.5);
        assert!(parse_angle("pi/0").is_err());
        assert!(parse_angle("pie").is_err());
        assert_eq!(Angle::Text("2pi/9".into()).label(), "2pi_9");
    }

    #[test]
    fn expands_grid() {
        let cfg = ExperimentConfig::parse(
            r#"
            [grid]
            gamma = [1.0, 0.3]
            theta = ["pi/9", "2pi/9", "pi/3", "4pi/9"]
            r0_threshold = [0.5, 1.5]
            "#,
        )
        .unwrap();
        let s = cfg.scenarios().unwrap();
        assert_eq!(s.len(), 16);
        assert_eq!(s[0].name, "g1_tpi_9_r0.5");
        assert_eq!(s[15].name, "g0.3_t4pi_9_r1.5");
        assert_eq!(cfg.grid.strategies, Strategy::ALL.to_vec());
        assert_eq!(cfg.strategy_config().unwrap().ao.epsilon, 1e-4);
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(ExperimentConfig::parse("[grid]\ngamma = [2.0]\ntheta = [\"pi/9\"]\nr0_threshold = [0.5]").is_err());
        assert!(ExperimentConfig::parse("parallelism = 0\n[grid]").is_err());
        assert!(ExperimentConfig::parse("[grid]\nstrategies = [\"TDMA\"]").is_err());
        assert!(ExperimentConfig::parse("[grid]\nbogus = 1").is_err());
        assert!(ExperimentConfig::parse("[grid]\n[ao]\nepsilon = 0.0").is_err());
        assert!(ExperimentConfig::parse("[grid]").unwrap().scenarios().unwrap().is_empty());
    }
}
