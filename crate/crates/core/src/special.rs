//! Normal distribution helpers and the upper incomplete gamma function.

use libm::erfc;
use statrs::function::gamma::gamma;
use std::f64::consts::{FRAC_1_SQRT_2, PI};

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;
const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

pub fn norm_pdf(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

/// `φ(a) − a·Φ(−a)` for `a ≥ 0`: the Bachelier out-of-the-money value per unit `σ√τ`.
///
/// The direct difference loses digits once `a` grows past a few units, so the
/// tail uses the continued fraction of the Mills ratio, written so that the
/// leading terms cancel analytically.
pub fn otm_factor(a: f64) -> f64 {
    debug_assert!(a >= 0.0);
    if a < 3.0 {
        return norm_pdf(a) - a * norm_cdf(-a);
    }
    // Φ(−a)/φ(a) = 1/(a + t), t = 1/(a + 2/(a + 3/(a + …)))
    // ⇒ 1 − a·Φ(−a)/φ(a) = t/(a + t)
    let t = mills_tail(a);
    norm_pdf(a) * t / (a + t)
}

/// `ln otm_factor(a)`, finite for every `a ≥ 0` including where `φ(a)` underflows.
pub fn ln_otm_factor(a: f64) -> f64 {
    if a < 3.0 {
        return otm_factor(a).ln();
    }
    let t = mills_tail(a);
    -0.5 * a * a - LN_SQRT_2PI + (t / (a + t)).ln()
}

fn mills_tail(a: f64) -> f64 {
    let mut tail = 0.0;
    for k in (2..=120).rev() {
        tail = k as f64 / (a + tail);
    }
    1.0 / (a + tail)
}

/// Upper incomplete gamma `Γ(s, x) = ∫_x^∞ t^{s−1} e^{−t} dt` for real `s` and `x > 0`.
///
/// `s > 0` uses the power series of the lower function or a continued fraction.
/// `s ≤ 0` uses the continued fraction for `x ≥ 1`; below that it steps down
/// from `Γ(s+1, x)` with `Γ(s, x) = (Γ(s+1, x) − x^s e^{−x}) / s`, bottoming
/// out at `E₁(x)` for integer `s`.
pub fn upper_gamma(s: f64, x: f64) -> f64 {
    if x.is_nan() || x <= 0.0 || !s.is_finite() {
        return f64::NAN;
    }
    if s > 0.0 {
        if x < s + 1.0 {
            gamma(s) - lower_gamma_series(s, x)
        } else {
            upper_gamma_cf(s, x)
        }
    } else if x >= 1.0 {
        upper_gamma_cf(s, x)
    } else if s == 0.0 {
        exp_integral_e1(x)
    } else {
        (upper_gamma(s + 1.0, x) - x.powf(s) * (-x).exp()) / s
    }
}

/// Lower incomplete gamma `γ(s, x)` for `s > 0`, by its power series.
pub fn lower_gamma_series(s: f64, x: f64) -> f64 {
    let mut term = 1.0 / s;
    let mut sum = term;
    let mut ap = s;
    for _ in 0..10_000 {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if term.abs() < sum.abs() * 1e-17 {
            break;
        }
    }
    sum * (s * x.ln() - x).exp()
}

fn upper_gamma_cf(s: f64, x: f64) -> f64 {
    // modified Lentz
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0 - s;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..20_000 {
        let an = -(i as f64) * (i as f64 - s);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    (s * x.ln() - x).exp() * h
}

/// Exponential integral `E₁(x) = Γ(0, x)`.
pub fn exp_integral_e1(x: f64) -> f64 {
    if x >= 1.0 {
        return upper_gamma_cf(0.0, x);
    }
    // −γ − ln x − Σ_{k≥1} (−x)^k / (k·k!)
    let mut sum = 0.0;
    let mut pow_fact = 1.0;
    for k in 1..200 {
        pow_fact *= -x / k as f64;
        let term = pow_fact / k as f64;
        sum += term;
        if term.abs() < 1e-17 * sum.abs().max(1e-300) {
            break;
        }
    }
    -EULER_GAMMA - x.ln() - sum
}

pub fn sqrt_2pi() -> f64 {
    (2.0 * PI).sqrt()
}
