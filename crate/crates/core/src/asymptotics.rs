//! Short-maturity limits of the ATM implied-volatility level and skew.
//!
//! The level tends to `σ₀` for every jump law. The skew splits into a jump
//! term `c₁/σ₀` and a volatility term driven by the Malliavin derivative of
//! `σ`, which for fractional Bergomi is `D_sσ_u = ½ασ_u·K_H(u, s)`:
//!
//! | regime | limit                                                   |
//! |--------|---------------------------------------------------------|
//! | H > ½  | `c₁/σ₀`                                                 |
//! | H = ½  | `c₁/σ₀ + ρα/4`                                          |
//! | H < ½  | `T^{½−H}·skew → 2ρα√(2H)/(3 + 4H(2 + H))`, raw skew ±∞ |
//!
//! Exponential SABR is the `H = ½` case with `D_sσ_u = ασ_u`.

use crate::error::{Error, Result};
use crate::levy::{c1_of, ExtendedReal, LevySpec, C1};
use crate::quad::{integrate, Tolerance};
use crate::vol::VolModelSpec;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Regime {
    #[serde(rename = "H_gt_half")]
    HGtHalf,
    #[serde(rename = "H_eq_half")]
    HEqHalf,
    #[serde(rename = "H_lt_half")]
    HLtHalf,
}

impl Regime {
    pub fn of(vol: &VolModelSpec) -> Regime {
        let h = vol.hurst();
        if h > 0.5 {
            Regime::HGtHalf
        } else if h < 0.5 {
            Regime::HLtHalf
        } else {
            Regime::HEqHalf
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::HGtHalf => "H_gt_half",
            Regime::HEqHalf => "H_eq_half",
            Regime::HLtHalf => "H_lt_half",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum SkewLimit {
    /// Finite limit of the skew itself.
    Raw(f64),
    /// Finite limit of `T^{½−H}·skew`; the raw skew tends to `raw`.
    Scaled { scaled: f64, raw: ExtendedReal },
    /// `c₁` diverges, so the ATM skew has no limit.
    NoFiniteSkew,
}

impl SkewLimit {
    /// The finite quantity the Monte Carlo estimate should approach.
    pub fn target(&self) -> Option<f64> {
        match *self {
            SkewLimit::Raw(v) => Some(v),
            SkewLimit::Scaled { scaled, .. } => Some(scaled),
            SkewLimit::NoFiniteSkew => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsymptoteReport {
    pub level: f64,
    pub regime: Regime,
    pub skew: SkewLimit,
    pub c1: C1,
}

pub fn theoretical_level(vol: &VolModelSpec) -> f64 {
    vol.sigma0()
}

/// Closed-form volatility contribution to the limit skew (scaled by
/// `T^{½−H}` when `H < ½`).
pub fn vol_skew_constant(vol: &VolModelSpec, rho: f64) -> Result<f64> {
    match *vol {
        VolModelSpec::FractionalBergomi {
            alpha, hurst: h, ..
        } => Ok(if h > 0.5 {
            0.0
        } else if h == 0.5 {
            rho * alpha / 4.0
        } else {
            2.0 * rho * alpha * (2.0 * h).sqrt() / (3.0 + 4.0 * h * (2.0 + h))
        }),
        VolModelSpec::SabrExp { .. } => Ok(skew_integral_oracle(vol, rho, 1.0)?.limit),
        VolModelSpec::Constant { .. } => Ok(0.0),
    }
}

pub fn theoretical_skew(vol: &VolModelSpec, levy: &LevySpec, rho: f64) -> Result<AsymptoteReport> {
    vol.validate()?;
    if !(rho > -1.0 && rho < 1.0) {
        return Err(Error::invalid(
            "rho",
            format!("must lie in (-1, 1), got {rho}"),
        ));
    }
    let c1 = c1_of(levy)?;
    let regime = Regime::of(vol);
    let sigma0 = vol.sigma0();
    let vol_term = vol_skew_constant(vol, rho)?;
    let skew = match c1.value.finite() {
        None => SkewLimit::NoFiniteSkew,
        Some(c) => match regime {
            Regime::HLtHalf => SkewLimit::Scaled {
                scaled: vol_term,
                raw: if vol_term > 0.0 {
                    ExtendedReal::PosInfinity
                } else if vol_term < 0.0 {
                    ExtendedReal::NegInfinity
                } else {
                    ExtendedReal::Finite(c / sigma0)
                },
            },
            _ => SkewLimit::Raw(c / sigma0 + vol_term),
        },
    };
    Ok(AsymptoteReport {
        level: sigma0,
        regime,
        skew,
        c1,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleValue {
    /// `ρ/(σ₀T^{min(2, 3/2+H)})·∫_0^T∫_s^T E[D_sσ_u] du ds` at the given `T`.
    pub value_at_maturity: f64,
    /// Its `T → 0` limit.
    pub limit: f64,
}

/// Volatility skew term by direct quadrature of the Malliavin double integral.
///
/// The inner integral is taken in `r = u − s` with `r = v²`, which removes the
/// kernel's endpoint singularity for every `H ∈ (0, 1)`.
pub fn skew_integral_oracle(vol: &VolModelSpec, rho: f64, t_end: f64) -> Result<OracleValue> {
    vol.validate()?;
    crate::error::require_positive("t_end", t_end)?;
    let (hurst, chain) = match *vol {
        VolModelSpec::FractionalBergomi { alpha, hurst, .. } => (hurst, 0.5 * alpha),
        VolModelSpec::SabrExp { alpha, .. } => (0.5, alpha),
        VolModelSpec::Constant { .. } => {
            return Ok(OracleValue {
                value_at_maturity: 0.0,
                limit: 0.0,
            })
        }
    };
    let c = (2.0 * hurst).sqrt();
    let tol = Tolerance::relative(1e-11);
    let inner = |s: f64| -> f64 {
        let top = (t_end - s).max(0.0).sqrt();
        integrate(|v: f64| 2.0 * c * v.powf(2.0 * hurst), 0.0, top, tol).unwrap_or(f64::NAN)
    };
    let double = integrate(inner, 0.0, t_end, tol)?;
    if !double.is_finite() {
        return Err(Error::Quadrature("inner kernel integral failed".into()));
    }
    // E[D_sσ_u] = chain·σ₀·K(u, s), and σ₀ cancels against the 1/σ₀ prefactor
    let power = (1.5 + hurst).min(2.0);
    let value = rho * chain * double / t_end.powf(power);
    Ok(OracleValue {
        value_at_maturity: value,
        limit: if hurst > 0.5 { 0.0 } else { value },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy::{CompoundPoissonParams, JumpLaw};
    use approx::assert_relative_eq;

    fn fb(h: f64) -> VolModelSpec {
        VolModelSpec::FractionalBergomi {
            sigma0: 0.5,
            alpha: 0.5,
            hurst: h,
        }
    }

    #[test]
    fn reference_limits() {
        let cp = LevySpec::CompoundPoisson(CompoundPoissonParams {
            intensity: 5.0,
            jump_law: JumpLaw::Gaussian {
                mean: 0.01,
                sd: 0.2,
            },
        });
        let r = theoretical_skew(&fb(0.7), &cp, -0.3).unwrap();
        assert_eq!(r.regime, Regime::HGtHalf);
        assert_relative_eq!(r.skew.target().unwrap(), 0.1, max_relative = 1e-14);
        let r = theoretical_skew(&fb(0.5), &LevySpec::None, -0.3).unwrap();
        assert_relative_eq!(r.skew.target().unwrap(), -0.0375, max_relative = 1e-14);
        let r = theoretical_skew(&fb(0.4), &LevySpec::None, -0.3).unwrap();
        assert_eq!(
            r.skew,
            SkewLimit::Scaled {
                scaled: -0.039_229_262_763_154_2,
                raw: ExtendedReal::NegInfinity
            }
        );
    }

    #[test]
    fn sabr_maps_to_half_with_full_vol_of_vol() {
        let v = VolModelSpec::SabrExp {
            sigma0: 0.2,
            alpha: 0.5,
        };
        assert_relative_eq!(
            vol_skew_constant(&v, -0.3).unwrap(),
            -0.075,
            max_relative = 1e-9
        );
        assert_eq!(Regime::of(&v), Regime::HEqHalf);
    }

    #[test]
    fn level_is_sigma0() {
        assert_eq!(theoretical_level(&fb(0.3).clone()), 0.5);
        assert_eq!(
            theoretical_level(&VolModelSpec::Constant { sigma0: 1.4 }),
            1.4
        );
    }
}
