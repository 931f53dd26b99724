//! Bachelier (normal-model) analytics.
//!
//! ```text
//! Bac(τ, x, k, σ) = (x − k)·Φ(d) + σ√τ·φ(d),   d = (x − k)/(σ√τ)
//! ```
//!
//! Rates are zero throughout, so calls are undiscounted and the forward is the spot.

use crate::error::{require_finite, Error, Result};
use crate::special::{ln_otm_factor, norm_cdf, norm_pdf, otm_factor, sqrt_2pi};
use serde::{Deserialize, Serialize};

const MODULE: &str = "gauss";
const MAX_ITERATIONS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BachelierInputs {
    /// Time to maturity in years.
    pub tau: f64,
    pub spot: f64,
    pub strike: f64,
    /// Normal volatility, price units per √year.
    pub vol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Greeks {
    pub delta: f64,
    pub vega: f64,
    pub gamma: f64,
    /// Third spot derivative, `∂gamma/∂x`.
    pub speed: f64,
}

impl BachelierInputs {
    pub fn new(tau: f64, spot: f64, strike: f64, vol: f64) -> Self {
        BachelierInputs {
            tau,
            spot,
            strike,
            vol,
        }
    }

    fn validate(&self) -> Result<()> {
        check_tau(self.tau)?;
        if !(self.vol.is_finite() && self.vol > 0.0) {
            return Err(Error::domain(
                MODULE,
                format!("vol must be > 0, got {}", self.vol),
            ));
        }
        require_finite("spot", self.spot)?;
        require_finite("strike", self.strike)
    }

    fn total_std(&self) -> f64 {
        self.vol * self.tau.sqrt()
    }

    fn moneyness(&self) -> f64 {
        (self.spot - self.strike) / self.total_std()
    }
}

fn check_tau(tau: f64) -> Result<()> {
    if tau.is_finite() && tau > 0.0 {
        Ok(())
    } else {
        Err(Error::domain(MODULE, format!("tau must be > 0, got {tau}")))
    }
}

/// Undiscounted Bachelier call price.
///
/// Evaluated as intrinsic value plus time value so that deep in- and
/// out-of-the-money prices keep full relative accuracy in the time value.
pub fn bac_price(inp: &BachelierInputs) -> Result<f64> {
    inp.validate()?;
    let s = inp.total_std();
    let m = inp.spot - inp.strike;
    Ok(m.max(0.0) + s * otm_factor(m.abs() / s))
}

pub fn greeks(inp: &BachelierInputs) -> Result<Greeks> {
    inp.validate()?;
    let sqrt_tau = inp.tau.sqrt();
    let s = inp.total_std();
    let d = inp.moneyness();
    let pdf = norm_pdf(d);
    Ok(Greeks {
        delta: norm_cdf(d),
        vega: pdf * sqrt_tau,
        gamma: pdf / s,
        speed: -d * pdf / (s * s),
    })
}

/// Normal implied volatility of an undiscounted call.
///
/// At the money the inverse is closed form, `price·√(2π)/√τ`. Elsewhere the
/// time value `h(s) = s·(φ(m/s) − (m/s)·Φ(−m/s))`, `s = σ√τ`, `m = |x − k|`,
/// is inverted by Newton steps on `ln h` against `ln s`, kept inside a
/// bisection bracket. Working in logs keeps the iteration well scaled when
/// the time value is many orders of magnitude below the intrinsic value.
pub fn implied_vol(price: f64, tau: f64, spot: f64, strike: f64) -> Result<f64> {
    check_tau(tau)?;
    require_finite("spot", spot)?;
    require_finite("strike", strike)?;
    if !price.is_finite() {
        return Err(Error::domain(
            MODULE,
            format!("price must be finite, got {price}"),
        ));
    }
    let m = (spot - strike).abs();
    let intrinsic = (spot - strike).max(0.0);
    let time_value = price - intrinsic;
    if time_value.is_nan() || time_value <= 0.0 {
        return Err(Error::domain(
            MODULE,
            format!("price {price} is not above intrinsic value {intrinsic}"),
        ));
    }
    let sqrt_tau = tau.sqrt();
    if m == 0.0 {
        return Ok(price * sqrt_2pi() / sqrt_tau);
    }

    let target = time_value.ln();
    let ln_h = |ln_s: f64| -> f64 { ln_s + ln_otm_factor(m / ln_s.exp()) };
    // d ln h / d ln s = φ(a)/otm(a), a = m/s
    let slope = |ln_s: f64| -> f64 {
        let a = m / ln_s.exp();
        (-0.5 * a * a - ln_otm_factor(a)).exp() / sqrt_2pi()
    };

    let mut lo = (1e-12 * sqrt_tau).ln();
    let mut hi = (10.0 * (time_value + 1.0) * sqrt_2pi()).ln();
    if ln_h(lo) > target {
        return Err(Error::domain(
            MODULE,
            format!("time value {time_value:e} is below the model minimum at vol 1e-12"),
        ));
    }
    let mut expansions = 0;
    while ln_h(hi) < target {
        hi += std::f64::consts::LN_2;
        expansions += 1;
        if expansions > 2000 {
            return Err(Error::NonConvergence {
                module: MODULE,
                routine: "implied_vol bracket",
                iterations: expansions,
            });
        }
    }

    let mut x = (time_value * sqrt_2pi()).ln().clamp(lo, hi);
    for _ in 0..MAX_ITERATIONS {
        let g = ln_h(x) - target;
        if g.abs() <= 1e-15 {
            return Ok(x.exp() / sqrt_tau);
        }
        if g < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let step = g / slope(x);
        let mut next = x - step;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= 4.0 * f64::EPSILON * x.abs().max(1.0) || hi - lo <= 1e-15 {
            return Ok(next.exp() / sqrt_tau);
        }
        x = next;
    }
    Err(Error::NonConvergence {
        module: MODULE,
        routine: "implied_vol",
        iterations: MAX_ITERATIONS,
    })
}

/// ATM implied-vol skew from the digital probability `P(S_T ≥ S_0)`:
/// `(½ − p)/√(τ/2π)`.
pub fn atm_skew_from_digital(digital_prob: f64, tau: f64) -> Result<f64> {
    check_tau(tau)?;
    if !(0.0..=1.0).contains(&digital_prob) {
        return Err(Error::domain(
            MODULE,
            format!("digital probability must lie in [0, 1], got {digital_prob}"),
        ));
    }
    Ok((0.5 - digital_prob) / digital_scale(tau))
}

/// `√(τ/2π)`: the ATM vega, and the denominator of the skew estimator.
pub(crate) fn digital_scale(tau: f64) -> f64 {
    tau.sqrt() / sqrt_2pi()
}
