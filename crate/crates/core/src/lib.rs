//! Monte Carlo pricing and short-maturity asymptotics for the jump-diffusion
//! stochastic-volatility Bachelier model
//!
//! ```text
//! S_t = S_0 + ∫_0^t σ_s (ρ dW_s + √(1−ρ²) dB_s) + L_t
//! ```
//!
//! where `σ` is a fractional Bergomi, exponential-SABR or constant volatility
//! and `L` is a pure-jump Lévy martingale (compound Poisson, CGMY or NIG).
//!
//! * [`gauss`]: Bachelier prices, Greeks, implied-volatility inversion.
//! * [`vol`]: volatility path simulation (exact Gaussian via Cholesky).
//! * [`levy`]: jump increments and the first-moment constants of the Lévy measure.
//! * [`engine`]: Monte Carlo estimates of the ATM implied-vol level and skew.
//! * [`asymptotics`]: closed-form short-maturity limits and a quadrature cross-check.

pub mod asymptotics;
pub mod engine;
pub mod error;
pub mod gauss;
pub mod levy;
pub mod quad;
pub mod rng;
pub mod special;
pub mod stats;
pub mod vol;

pub use error::{Error, Result};
