//! Channel construction: the deterministic two-user deployment and seeded
//! i.i.d. Rayleigh instances.
//!
//! Both constructors return a set with a unit power budget; callers attach
//! the real budget with [`ChannelSet::with_power_budget`].

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::types::ChannelSet;

/// Identity of the generator behind every seeded draw in this crate.
pub const RNG_ALGORITHM: &str = "ChaCha8Rng (rand_chacha 0.3, seed_from_u64)";

pub(crate) fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `h1 = [1, …, 1]` and `h2[m] = γ·e^{−jmθ}`.
///
/// The second user's vector is stored conjugated so that `h2ᴴx` sums
/// `γ·e^{jmθ}·x_m`. Rates only see `|hᴴp|²`, so the opposite convention gives
/// identical results.
pub fn deterministic_channel(nt: usize, gamma: f64, theta: f64) -> Result<ChannelSet> {
    if nt < 1 {
        return Err(Error::invalid("nt must be at least 1"));
    }
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(Error::invalid(format!("gamma must be positive, got {gamma}")));
    }
    if !theta.is_finite() {
        return Err(Error::invalid("theta must be finite"));
    }
    let h1 = vec![Complex64::new(1.0, 0.0); nt];
    let h2 = (0..nt)
        .map(|m| Complex64::from_polar(gamma, m as f64 * theta).conj())
        .collect();
    ChannelSet::new(vec![h1, h2], 1.0)
}

/// `k` users with i.i.d. CN(0, 1) entries, reproducible from `seed`.
pub fn random_channel(seed: u64, nt: usize, k: usize) -> Result<ChannelSet> {
    if nt < 1 || k < 1 {
        return Err(Error::invalid("nt and k must be at least 1"));
    }
    let mut rng = rng(seed);
    let channels = (0..k).map(|_| complex_gaussian_vec(&mut rng, nt)).collect();
    ChannelSet::new(channels, 1.0)
}

pub(crate) fn complex_gaussian_vec<R: rand::Rng>(rng: &mut R, n: usize) -> Vec<Complex64> {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    (0..n)
        .map(|_| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            Complex64::new(re * scale, im * scale)
        })
        .collect()
}

/// `|h1ᴴh2| / (‖h1‖‖h2‖)` for a two-user set.
pub fn alignment(ch: &ChannelSet) -> f64 {
    let num = ch.gain(0, ch.channel(1)).norm();
    num / (ch.norm_sq(0) * ch.norm_sq(1)).sqrt()
}
