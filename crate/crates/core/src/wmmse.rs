//! MSE bookkeeping behind the weighted-MMSE reformulation.
//!
//! At the MMSE equalizer and weight `u = 1/ε`, the weighted MSE
//! `ξ = u·ε − log2(u)` equals `1 − R` in bit/s/Hz.
//!
//! `u = 1/ε` only minimizes the natural-log form `u·ε − ln(u)`; the base-2
//! form dips below `1 − R` for `u·ε ∈ (1, 2)`. The convex subproblem therefore
//! uses [`surrogate_mse`], the natural-log form rescaled to bits, which bounds
//! `log2(e) − R` from above for every weight and touches it at `u = 1/ε`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::types::{ChannelSet, PrecoderMatrix};

/// Weights above this value are clamped; it only triggers when an MMSE
/// collapses to zero, which a finite precoder cannot produce at sane SNRs.
pub const MAX_WEIGHT: f64 = 1e12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PowerTerms {
    /// `T_{k,0}`: every stream plus noise.
    pub t_common: f64,
    /// `T_k`: everything but the common stream.
    pub t_private: f64,
    /// `I_{k,0} = T_k`
    pub i_common: f64,
    /// `I_k = T_k − |h_kᴴp_k|²`
    pub i_private: f64,
}

pub fn power_terms(ch: &ChannelSet, p: &PrecoderMatrix, k: usize) -> PowerTerms {
    let noise = ch.noise_variance(k);
    let common = ch.gain(k, p.common()).norm_sqr();
    let private_sum: f64 = (1..=p.num_users()).map(|j| ch.gain(k, p.column(j)).norm_sqr()).sum();
    let own = ch.gain(k, p.private(k)).norm_sqr();
    let t_private = private_sum + noise;
    PowerTerms {
        t_common: common + t_private,
        t_private,
        i_common: t_private,
        i_private: t_private - own,
    }
}

/// Receive equalizers and MSE weights for both layers of every user.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WmmseState {
    pub g_common: Vec<Complex64>,
    pub g_private: Vec<Complex64>,
    pub u_common: Vec<f64>,
    pub u_private: Vec<f64>,
}

impl WmmseState {
    pub fn num_users(&self) -> usize {
        self.g_common.len()
    }
}

/// `(ε_{k,0}, ε_k)` for the equalizers held in `state`.
pub fn mse(ch: &ChannelSet, p: &PrecoderMatrix, state: &WmmseState, k: usize) -> (f64, f64) {
    let t = power_terms(ch, p, k);
    let a0 = ch.gain(k, p.common());
    let ak = ch.gain(k, p.private(k));
    let g0 = state.g_common[k];
    let gk = state.g_private[k];
    let e0 = g0.norm_sqr() * t.t_common - 2.0 * (g0 * a0).re + 1.0;
    let ek = gk.norm_sqr() * t.t_private - 2.0 * (gk * ak).re + 1.0;
    (e0, ek)
}

/// `g_{k,0} = p0ᴴh_k / T_{k,0}` and `g_k = p_kᴴh_k / T_k` for every user.
pub fn mmse_equalizers(ch: &ChannelSet, p: &PrecoderMatrix) -> (Vec<Complex64>, Vec<Complex64>) {
    (0..ch.num_users())
        .map(|k| {
            let t = power_terms(ch, p, k);
            let g0 = ch.gain(k, p.common()).conj() / t.t_common;
            let gk = ch.gain(k, p.private(k)).conj() / t.t_private;
            (g0, gk)
        })
        .unzip()
}

/// Closed-form MMSEs `(I_{k,0}/T_{k,0}, I_k/T_k)`.
pub fn mmse(ch: &ChannelSet, p: &PrecoderMatrix, k: usize) -> (f64, f64) {
    let t = power_terms(ch, p, k);
    (t.i_common / t.t_common, t.i_private / t.t_private)
}

fn weight_from_mse(e: f64) -> f64 {
    let u = 1.0 / e;
    if u > MAX_WEIGHT || !u.is_finite() {
        log::warn!("MSE weight {u:e} clamped to {MAX_WEIGHT:e}");
        MAX_WEIGHT
    } else {
        u
    }
}

/// `u = 1/ε^MMSE` for both layers of every user.
pub fn mmse_weights(ch: &ChannelSet, p: &PrecoderMatrix) -> (Vec<f64>, Vec<f64>) {
    (0..ch.num_users())
        .map(|k| {
            let (e0, ek) = mmse(ch, p, k);
            (weight_from_mse(e0), weight_from_mse(ek))
        })
        .unzip()
}

/// Equalizers and weights that are jointly optimal for the given precoder.
pub fn mmse_state(ch: &ChannelSet, p: &PrecoderMatrix) -> WmmseState {
    let (g_common, g_private) = mmse_equalizers(ch, p);
    let (u_common, u_private) = mmse_weights(ch, p);
    WmmseState {
        g_common,
        g_private,
        u_common,
        u_private,
    }
}

/// Weighted MSE `u·ε − log2(u)`.
pub fn weighted_mse(weight: f64, mse: f64) -> f64 {
    weight * mse - weight.log2()
}

/// `(u·ε − ln u)·log2(e)`. Its minimum over `u > 0` is `log2(e) − R`,
/// attained at `u = 1/ε^MMSE`.
pub fn surrogate_mse(weight: f64, mse: f64) -> f64 {
    (weight * mse - weight.ln()) * std::f64::consts::LOG2_E
}

/// Augmented WMSEs `(ξ_{k,0}, ξ_k)` for the equalizers and weights in `state`.
pub fn wmse(ch: &ChannelSet, p: &PrecoderMatrix, state: &WmmseState, k: usize) -> (f64, f64) {
    let (e0, ek) = mse(ch, p, state, k);
    (weighted_mse(state.u_common[k], e0), weighted_mse(state.u_private[k], ek))
}

/// `(ξ^MMSE_{k,0} − (1 − R_{k,0}), ξ^MMSE_k − (1 − R_k))`, evaluated through
/// the equalizer and weight formulas and compared against the rate module.
/// Both entries vanish up to rounding.
pub fn rate_wmmse_gap(ch: &ChannelSet, p: &PrecoderMatrix, k: usize) -> (f64, f64) {
    let state = mmse_state(ch, p);
    let (xi0, xik) = wmse(ch, p, &state, k);
    let r0 = crate::rates::log2_1p(crate::rates::sinr_common(ch, p, k));
    let rk = crate::rates::log2_1p(crate::rates::sinr_private(ch, p, k));
    (xi0 - (1.0 - r0), xik - (1.0 - rk))
}
