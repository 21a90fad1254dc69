//! Domain types shared by every stage of the optimizer.
//!
//! Users are indexed from zero in code. Column 0 of a [`PrecoderMatrix`] is
//! the (super-)common stream and column `k + 1` belongs to user `k`.
//! Powers are linear; rates are bit/s/Hz (base-2 logarithms); dB only shows
//! up at the [`Scenario`] boundary.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rates::RateReport;

/// Receiver noise power. Every user sees unit-variance noise; the transmit
/// power budget carries the SNR.
pub const NOISE_VARIANCE: f64 = 1.0;

/// Inner product `aᴴ b`.
pub fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm_sq(v: &[Complex64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum()
}

fn all_finite(v: &[Complex64]) -> bool {
    v.iter().all(|x| x.re.is_finite() && x.im.is_finite())
}

/// Channel vectors of all users plus the transmit power budget.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ChannelSetRepr", into = "ChannelSetRepr")]
pub struct ChannelSet {
    num_antennas: usize,
    channels: Vec<Vec<Complex64>>,
    noise_variance: Vec<f64>,
    power_budget: f64,
}

#[derive(Serialize, Deserialize)]
struct ChannelSetRepr {
    num_antennas: usize,
    num_users: usize,
    channels: Vec<Vec<Complex64>>,
    noise_variance: Vec<f64>,
    power_budget: f64,
}

impl TryFrom<ChannelSetRepr> for ChannelSet {
    type Error = Error;

    fn try_from(r: ChannelSetRepr) -> Result<Self> {
        if r.channels.len() != r.num_users {
            return Err(Error::invalid(format!(
                "num_users is {} but {} channel vectors were given",
                r.num_users,
                r.channels.len()
            )));
        }
        if r.noise_variance.len() != r.num_users || r.noise_variance.iter().any(|&n| n != NOISE_VARIANCE) {
            return Err(Error::invalid("noise variances must all equal 1"));
        }
        let set = ChannelSet::new(r.channels, r.power_budget)?;
        if set.num_antennas != r.num_antennas {
            return Err(Error::invalid(format!(
                "num_antennas is {} but channel vectors have length {}",
                r.num_antennas, set.num_antennas
            )));
        }
        Ok(set)
    }
}

impl From<ChannelSet> for ChannelSetRepr {
    fn from(c: ChannelSet) -> Self {
        ChannelSetRepr {
            num_antennas: c.num_antennas,
            num_users: c.channels.len(),
            channels: c.channels,
            noise_variance: c.noise_variance,
            power_budget: c.power_budget,
        }
    }
}

impl ChannelSet {
    pub fn new(channels: Vec<Vec<Complex64>>, power_budget: f64) -> Result<Self> {
        let nt = channels.first().map(Vec::len).ok_or_else(|| Error::invalid("at least one user is required"))?;
        if nt == 0 {
            return Err(Error::invalid("channel vectors must have at least one antenna"));
        }
        for (k, h) in channels.iter().enumerate() {
            if h.len() != nt {
                return Err(Error::invalid(format!("channel {k} has length {} (expected {nt})", h.len())));
            }
            if !all_finite(h) {
                return Err(Error::invalid(format!("channel {k} has non-finite entries")));
            }
            if norm_sq(h) == 0.0 {
                return Err(Error::invalid(format!("channel {k} is identically zero")));
            }
        }
        if !(power_budget.is_finite() && power_budget > 0.0) {
            return Err(Error::invalid(format!("power budget must be positive, got {power_budget}")));
        }
        let noise_variance = vec![NOISE_VARIANCE; channels.len()];
        Ok(ChannelSet {
            num_antennas: nt,
            channels,
            noise_variance,
            power_budget,
        })
    }

    pub fn with_power_budget(mut self, power_budget: f64) -> Result<Self> {
        if !(power_budget.is_finite() && power_budget > 0.0) {
            return Err(Error::invalid(format!("power budget must be positive, got {power_budget}")));
        }
        self.power_budget = power_budget;
        Ok(self)
    }

    pub fn num_antennas(&self) -> usize {
        self.num_antennas
    }

    pub fn num_users(&self) -> usize {
        self.channels.len()
    }

    pub fn channel(&self, k: usize) -> &[Complex64] {
        &self.channels[k]
    }

    pub fn channels(&self) -> &[Vec<Complex64>] {
        &self.channels
    }

    pub fn power_budget(&self) -> f64 {
        self.power_budget
    }

    pub fn noise_variance(&self, k: usize) -> f64 {
        self.noise_variance[k]
    }

    /// `h_kᴴ v`
    pub fn gain(&self, k: usize, v: &[Complex64]) -> Complex64 {
        inner(&self.channels[k], v)
    }

    pub fn norm_sq(&self, k: usize) -> f64 {
        norm_sq(&self.channels[k])
    }

    /// Multiplies every channel by `e^{jφ}`.
    pub fn rotated(&self, phase: f64) -> Self {
        let rot = Complex64::from_polar(1.0, phase);
        let mut out = self.clone();
        for h in &mut out.channels {
            for x in h.iter_mut() {
                *x *= rot;
            }
        }
        out
    }
}

/// Precoder columns `[p0, p1, …, pK]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PrecoderRepr", into = "PrecoderRepr")]
pub struct PrecoderMatrix {
    columns: Vec<Vec<Complex64>>,
}

#[derive(Serialize, Deserialize)]
struct PrecoderRepr {
    columns: Vec<Vec<Complex64>>,
}

impl TryFrom<PrecoderRepr> for PrecoderMatrix {
    type Error = Error;
    fn try_from(r: PrecoderRepr) -> Result<Self> {
        PrecoderMatrix::new(r.columns)
    }
}

impl From<PrecoderMatrix> for PrecoderRepr {
    fn from(p: PrecoderMatrix) -> Self {
        PrecoderRepr { columns: p.columns }
    }
}

impl PrecoderMatrix {
    pub fn new(columns: Vec<Vec<Complex64>>) -> Result<Self> {
        if columns.len() < 2 {
            return Err(Error::invalid("a precoder needs a common column and at least one private column"));
        }
        let nt = columns[0].len();
        if nt == 0 {
            return Err(Error::invalid("precoder columns must be non-empty"));
        }
        for (j, c) in columns.iter().enumerate() {
            if c.len() != nt {
                return Err(Error::invalid(format!("precoder column {j} has length {} (expected {nt})", c.len())));
            }
            if !all_finite(c) {
                return Err(Error::invalid(format!("precoder column {j} has non-finite entries")));
            }
        }
        Ok(PrecoderMatrix { columns })
    }

    pub fn zeros(num_antennas: usize, num_users: usize) -> Self {
        PrecoderMatrix {
            columns: vec![vec![Complex64::new(0.0, 0.0); num_antennas]; num_users + 1],
        }
    }

    pub fn num_antennas(&self) -> usize {
        self.columns[0].len()
    }

    pub fn num_users(&self) -> usize {
        self.columns.len() - 1
    }

    pub fn columns(&self) -> &[Vec<Complex64>] {
        &self.columns
    }

    pub fn column(&self, j: usize) -> &[Complex64] {
        &self.columns[j]
    }

    pub fn common(&self) -> &[Complex64] {
        &self.columns[0]
    }

    pub fn private(&self, k: usize) -> &[Complex64] {
        &self.columns[k + 1]
    }

    /// `tr(P Pᴴ)`
    pub fn total_power(&self) -> f64 {
        self.columns.iter().map(|c| norm_sq(c)).sum()
    }

    pub fn column_power(&self, j: usize) -> f64 {
        norm_sq(&self.columns[j])
    }

    pub fn scaled(&self, factor: f64) -> Self {
        PrecoderMatrix {
            columns: self
                .columns
                .iter()
                .map(|c| c.iter().map(|x| x * factor).collect())
                .collect(),
        }
    }

    pub fn rotated(&self, phase: f64) -> Self {
        let rot = Complex64::from_polar(1.0, phase);
        PrecoderMatrix {
            columns: self.columns.iter().map(|c| c.iter().map(|x| x * rot).collect()).collect(),
        }
    }

    /// Rescales down to the budget when the power exceeds it; never scales up.
    pub fn clipped_to(&self, power_budget: f64) -> Self {
        let p = self.total_power();
        if p > power_budget {
            self.scaled((power_budget / p).sqrt())
        } else {
            self.clone()
        }
    }

    pub(crate) fn set_column(&mut self, j: usize, col: Vec<Complex64>) {
        debug_assert_eq!(col.len(), self.num_antennas());
        self.columns[j] = col;
    }
}

/// Split of the super-common rate: `c0` carries the multicast message and
/// `ck0[k]` the common part of user `k`'s unicast message.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CommonRateRepr", into = "CommonRateRepr")]
pub struct CommonRateAllocation {
    c0: f64,
    ck0: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct CommonRateRepr {
    c0: f64,
    ck0: Vec<f64>,
}

impl TryFrom<CommonRateRepr> for CommonRateAllocation {
    type Error = Error;
    fn try_from(r: CommonRateRepr) -> Result<Self> {
        CommonRateAllocation::new(r.c0, r.ck0)
    }
}

impl From<CommonRateAllocation> for CommonRateRepr {
    fn from(c: CommonRateAllocation) -> Self {
        CommonRateRepr { c0: c.c0, ck0: c.ck0 }
    }
}

impl CommonRateAllocation {
    pub fn new(c0: f64, ck0: Vec<f64>) -> Result<Self> {
        if !(c0.is_finite() && c0 >= 0.0) {
            return Err(Error::invalid(format!("multicast rate portion must be >= 0, got {c0}")));
        }
        if let Some(bad) = ck0.iter().find(|c| !(c.is_finite() && **c >= 0.0)) {
            return Err(Error::invalid(format!("common rate portions must be >= 0, got {bad}")));
        }
        Ok(CommonRateAllocation { c0, ck0 })
    }

    pub fn zeros(num_users: usize) -> Self {
        CommonRateAllocation {
            c0: 0.0,
            ck0: vec![0.0; num_users],
        }
    }

    pub fn c0(&self) -> f64 {
        self.c0
    }

    pub fn ck0(&self) -> &[f64] {
        &self.ck0
    }

    pub fn user(&self, k: usize) -> f64 {
        self.ck0[k]
    }

    /// `C0 + Σ C_{k,0}`
    pub fn total(&self) -> f64 {
        self.c0 + self.ck0.iter().sum::<f64>()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Strategy {
    #[serde(rename = "RS")]
    Rs,
    #[serde(rename = "MULP")]
    Mulp,
    #[serde(rename = "SCSIC")]
    ScSic,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::Rs, Strategy::Mulp, Strategy::ScSic];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Rs => "RS",
            Strategy::Mulp => "MULP",
            Strategy::ScSic => "SCSIC",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().replace(['-', '–', '_'], "").as_str() {
            "RS" => Ok(Strategy::Rs),
            "MULP" => Ok(Strategy::Mulp),
            "SCSIC" | "NOMA" => Ok(Strategy::ScSic),
            _ => Err(Error::invalid(format!("unknown strategy {s:?} (expected RS, MULP or SCSIC)"))),
        }
    }
}

/// One experiment point: the deterministic two-user deployment at a given
/// SNR, strength ratio, angle and multicast QoS threshold.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ScenarioRepr", into = "ScenarioRepr")]
pub struct Scenario {
    pub nt: usize,
    pub k: usize,
    pub snr_db: f64,
    pub gamma: f64,
    pub theta: f64,
    pub r0_threshold: f64,
    pub strategy: Strategy,
    pub weight_grid: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct ScenarioRepr {
    nt: usize,
    k: usize,
    snr_db: f64,
    gamma: f64,
    theta: f64,
    r0_threshold: f64,
    strategy: Strategy,
    weight_grid: Vec<Vec<f64>>,
}

impl TryFrom<ScenarioRepr> for Scenario {
    type Error = Error;
    fn try_from(r: ScenarioRepr) -> Result<Self> {
        let s = Scenario {
            nt: r.nt,
            k: r.k,
            snr_db: r.snr_db,
            gamma: r.gamma,
            theta: r.theta,
            r0_threshold: r.r0_threshold,
            strategy: r.strategy,
            weight_grid: r.weight_grid,
        };
        s.validate()?;
        Ok(s)
    }
}

impl From<Scenario> for ScenarioRepr {
    fn from(s: Scenario) -> Self {
        ScenarioRepr {
            nt: s.nt,
            k: s.k,
            snr_db: s.snr_db,
            gamma: s.gamma,
            theta: s.theta,
            r0_threshold: s.r0_threshold,
            strategy: s.strategy,
            weight_grid: s.weight_grid,
        }
    }
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if self.nt == 0 || self.k == 0 {
            return Err(Error::invalid("nt and k must be positive"));
        }
        if !self.snr_db.is_finite() {
            return Err(Error::invalid("snr_db must be finite"));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::invalid(format!("gamma must lie in (0, 1], got {}", self.gamma)));
        }
        if !self.theta.is_finite() {
            return Err(Error::invalid("theta must be finite"));
        }
        if !(self.r0_threshold.is_finite() && self.r0_threshold >= 0.0) {
            return Err(Error::invalid(format!("r0_threshold must be >= 0, got {}", self.r0_threshold)));
        }
        for w in &self.weight_grid {
            if w.len() != self.k {
                return Err(Error::invalid(format!("weight vector {w:?} does not have {} entries", self.k)));
            }
            if w.iter().any(|u| !(u.is_finite() && *u > 0.0)) {
                return Err(Error::invalid(format!("weight vector {w:?} is not strictly positive")));
            }
        }
        Ok(())
    }

    /// Linear transmit power `10^(snr_db/10)`; with unit noise this is the SNR.
    pub fn power(&self) -> f64 {
        10f64.powf(self.snr_db / 10.0)
    }

    pub fn with_strategy(&self, strategy: Strategy) -> Self {
        Scenario { strategy, ..self.clone() }
    }

    /// The two-user deployment this scenario describes, at its power budget.
    pub fn channel(&self) -> Result<ChannelSet> {
        if self.k != 2 {
            return Err(Error::invalid("the deterministic deployment is defined for two users"));
        }
        crate::channel::deterministic_channel(self.nt, self.gamma, self.theta)?.with_power_budget(self.power())
    }

    /// True when `other` differs from `self` in nothing but the strategy.
    pub fn same_setting(&self, other: &Scenario) -> bool {
        self.with_strategy(other.strategy) == *other
    }
}

/// Constraint residuals of one iterate. Positive values are violations.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    /// `tr(PPᴴ) − Pt`
    pub power: f64,
    /// `C0 + Σ C_{k,0} − min_k R_{k,0}`
    pub rate_sharing: f64,
    /// `R0th − C0`
    pub qos: f64,
}

/// Output of one alternating-optimization run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub precoder: PrecoderMatrix,
    pub common_rates: CommonRateAllocation,
    pub rate_report: RateReport,
    /// Weighted sum rate after each iteration; entry 0 is the initial point.
    pub trace: Vec<f64>,
    pub residual_trace: Vec<Residuals>,
    pub iterations: usize,
    pub converged: bool,
}

impl Solution {
    /// Final weighted sum rate.
    pub fn wsr(&self) -> f64 {
        self.trace.last().copied().unwrap_or(f64::NAN)
    }
}

/// serde_json writes NaN as `null`; these read it back as NaN.
pub(crate) mod nan_as_null {
    use serde::{Deserialize, Deserializer};

    pub fn scalar<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
    }

    pub fn vector<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        let v = Vec::<Option<f64>>::deserialize(d)?;
        Ok(v.into_iter().map(|x| x.unwrap_or(f64::NAN)).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn scenario(snr_db: f64) -> Scenario {
        Scenario {
            nt: 4,
            k: 2,
            snr_db,
            gamma: 1.0,
            theta: std::f64::consts::PI / 9.0,
            r0_threshold: 0.5,
            strategy: Strategy::Rs,
            weight_grid: vec![vec![1.0, 1.0]],
        }
    }

    #[test]
    fn scenario_power_from_snr() {
        assert_eq!(scenario(20.0).power(), 100.0);
        assert_eq!(scenario(0.0).power(), 1.0);
        assert_eq!(scenario(10.0).power(), 10.0);
    }

    #[test]
    fn rejects_bad_channels() {
        assert!(ChannelSet::new(vec![], 1.0).is_err());
        assert!(ChannelSet::new(vec![vec![c(0.0, 0.0); 3]], 1.0).is_err());
        assert!(ChannelSet::new(vec![vec![c(1.0, 0.0); 3], vec![c(1.0, 0.0); 2]], 1.0).is_err());
        assert!(ChannelSet::new(vec![vec![c(1.0, 0.0); 3]], 0.0).is_err());
        assert!(ChannelSet::new(vec![vec![c(f64::NAN, 0.0); 3]], 1.0).is_err());
    }

    #[test]
    fn rejects_bad_noise_in_json() {
        let ch = ChannelSet::new(vec![vec![c(1.0, 0.0)]], 2.0).unwrap();
        let mut v = serde_json::to_value(&ch).unwrap();
        v["noise_variance"] = serde_json::json!([2.0]);
        let err = serde_json::from_value::<ChannelSet>(v).unwrap_err();
        assert!(err.to_string().contains("noise"));
    }

    #[test]
    fn complex_serializes_as_pair() {
        let ch = ChannelSet::new(vec![vec![c(1.5, -0.25)]], 2.0).unwrap();
        let v = serde_json::to_value(&ch).unwrap();
        assert_eq!(v["channels"][0][0], serde_json::json!([1.5, -0.25]));
    }

    #[test]
    fn rejects_negative_common_rates() {
        assert!(CommonRateAllocation::new(-1.0, vec![0.0]).is_err());
        assert!(CommonRateAllocation::new(0.0, vec![0.0, -1e-3]).is_err());
        assert_eq!(CommonRateAllocation::new(0.5, vec![0.25, 1.0]).unwrap().total(), 1.75);
    }

    #[test]
    fn rejects_bad_scenarios() {
        let mut s = scenario(20.0);
        s.weight_grid = vec![vec![1.0, 0.0]];
        assert!(s.validate().is_err());
        let mut s = scenario(20.0);
        s.r0_threshold = -0.1;
        assert!(s.validate().is_err());
        let mut s = scenario(20.0);
        s.gamma = 0.0;
        assert!(s.validate().is_err());
        let json = serde_json::to_string(&s).unwrap();
        assert!(serde_json::from_str::<Scenario>(&json).is_err());
    }

    #[test]
    fn precoder_power_and_clip() {
        let p = PrecoderMatrix::new(vec![vec![c(1.0, 1.0), c(0.0, 0.0)], vec![c(0.0, 2.0), c(1.0, 0.0)]]).unwrap();
        assert_eq!(p.total_power(), 7.0);
        let q = p.clipped_to(3.5);
        assert!((q.total_power() - 3.5).abs() < 1e-12);
        assert_eq!(p.clipped_to(10.0), p);
        assert!(PrecoderMatrix::new(vec![vec![c(1.0, 0.0)]]).is_err());
    }

    #[test]
    fn strategy_parsing() {
        assert_eq!("rs".parse::<Strategy>().unwrap(), Strategy::Rs);
        assert_eq!("MU-LP".parse::<Strategy>().unwrap(), Strategy::Mulp);
        assert_eq!("SC–SIC".parse::<Strategy>().unwrap(), Strategy::ScSic);
        assert!("DPC".parse::<Strategy>().is_err());
    }
}
