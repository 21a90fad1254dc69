//! SINR and achievable-rate evaluation for a fixed channel and precoder.
//!
//! Every user decodes the common stream first, treating all unicast/private
//! streams as interference, removes it, then decodes its own private stream
//! treating the other private streams as noise. Noise power is 1.

use serde::{Deserialize, Serialize};

use crate::types::{ChannelSet, CommonRateAllocation, PrecoderMatrix};

/// `log2(1 + x)`, accurate for small `x`.
pub fn log2_1p(x: f64) -> f64 {
    x.ln_1p() / std::f64::consts::LN_2
}

/// `|h_kᴴ p_j|²` for column `j` of the precoder.
pub fn received_power(ch: &ChannelSet, p: &PrecoderMatrix, k: usize, j: usize) -> f64 {
    ch.gain(k, p.column(j)).norm_sqr()
}

/// SINR of the common stream at user `k`.
pub fn sinr_common(ch: &ChannelSet, p: &PrecoderMatrix, k: usize) -> f64 {
    let interference: f64 = (1..=p.num_users()).map(|j| received_power(ch, p, k, j)).sum();
    received_power(ch, p, k, 0) / (interference + ch.noise_variance(k))
}

/// SINR of user `k`'s private stream after the common stream is removed.
pub fn sinr_private(ch: &ChannelSet, p: &PrecoderMatrix, k: usize) -> f64 {
    let interference: f64 = (0..p.num_users())
        .filter(|&j| j != k)
        .map(|j| received_power(ch, p, k, j + 1))
        .sum();
    received_power(ch, p, k, k + 1) / (interference + ch.noise_variance(k))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    /// `R_{k,0}`
    pub common_rate_per_user: Vec<f64>,
    /// `R0 = min_k R_{k,0}`
    pub common_rate: f64,
    /// `R_k`
    pub private_rates: Vec<f64>,
    /// `C_{k,0} + R_k`
    pub total_unicast_rates: Vec<f64>,
}

impl RateReport {
    pub fn num_users(&self) -> usize {
        self.private_rates.len()
    }
}

/// Rates of every stream. Without a common-rate split the totals equal the
/// private rates.
pub fn rate_report(ch: &ChannelSet, p: &PrecoderMatrix, c: Option<&CommonRateAllocation>) -> RateReport {
    let k = ch.num_users();
    let common_rate_per_user: Vec<f64> = (0..k).map(|u| log2_1p(sinr_common(ch, p, u))).collect();
    let private_rates: Vec<f64> = (0..k).map(|u| log2_1p(sinr_private(ch, p, u))).collect();
    let common_rate = common_rate_per_user.iter().copied().fold(f64::INFINITY, f64::min);
    let total_unicast_rates = match c {
        Some(c) => private_rates.iter().zip(c.ck0()).map(|(r, ck)| r + ck).collect(),
        None => private_rates.clone(),
    };
    RateReport {
        common_rate_per_user,
        common_rate,
        private_rates,
        total_unicast_rates,
    }
}

/// Same stream rates with the totals recomputed for another split.
pub fn rate_report_for(report: &RateReport, c: &CommonRateAllocation) -> RateReport {
    RateReport {
        total_unicast_rates: report.private_rates.iter().zip(c.ck0()).map(|(r, ck)| r + ck).collect(),
        ..report.clone()
    }
}
