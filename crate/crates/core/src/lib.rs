//! Joint unicast and multicast precoding for multi-antenna broadcast
//! channels with rate-splitting, multi-user linear precoding and
//! superposition coding with successive interference cancellation.
//!
//! All three strategies are solved by the same rate-WMMSE alternating
//! optimization; MU–LP and SC–SIC are restrictions of the rate-splitting
//! problem.
//!
//! ```
//! use ratesplit::{ao, channel, subproblem::Variant};
//!
//! let ch = channel::deterministic_channel(4, 1.0, std::f64::consts::PI / 9.0)
//!     .unwrap()
//!     .with_power_budget(100.0)
//!     .unwrap();
//! let sol = ao::optimize(&ch, Variant::Rs, 0.5, &[1.0, 1.0], &ao::AoConfig::default()).unwrap();
//! assert!(sol.common_rates.c0() >= 0.5 - 1e-9);
//! ```

pub mod ao;
pub mod channel;
pub mod error;
pub mod rates;
pub mod region;
pub mod strategies;
pub mod subproblem;
pub mod types;
pub mod wmmse;

pub use error::{Error, Result};
pub use types::{ChannelSet, CommonRateAllocation, PrecoderMatrix, Residuals, Scenario, Solution, Strategy};
