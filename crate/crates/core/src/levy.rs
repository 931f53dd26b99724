//! Pure-jump Lévy martingales: compound Poisson, CGMY and NIG.
//!
//! Each family exposes the first-moment constants of its Lévy measure `ν`,
//!
//! ```text
//! c₁  = ∫ y ν(dy)            c₁ᵉ = ∫_{|y|>ε} y ν(dy)
//! c₀ᵉ = ∫_{|y|>ε} ν(dy)
//! ```
//!
//! and a sampler for increments that already include the compensating drift,
//! so that every increment has mean zero.

use crate::error::{require_finite, require_positive, Error, Result};
use crate::quad::{integrate, Tolerance};
use crate::rng::{substream, Purpose};
use crate::special::upper_gamma;
use crate::vol::PathGrid;
use ndarray::Array2;
use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

const MODULE: &str = "levy";

/// Truncation level used when a CGMY process is built with [`CgmyParams::new`].
pub const DEFAULT_TRUNCATION_EPS: f64 = 1e-4;
/// Nodes per tail in the tabulated CGMY jump-size distribution.
pub const CGMY_TABLE_NODES: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LevySpec {
    None,
    CompoundPoisson(CompoundPoissonParams),
    Cgmy(CgmyParams),
    Nig(NigParams),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompoundPoissonParams {
    pub intensity: f64,
    pub jump_law: JumpLaw,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case", deny_unknown_fields)]
pub enum JumpLaw {
    Gaussian { mean: f64, sd: f64 },
    Laplace { mean: f64, scale: f64 },
}

impl JumpLaw {
    pub fn mean(&self) -> f64 {
        match *self {
            JumpLaw::Gaussian { mean, .. } | JumpLaw::Laplace { mean, .. } => mean,
        }
    }

    pub fn second_moment(&self) -> f64 {
        match *self {
            JumpLaw::Gaussian { mean, sd } => mean * mean + sd * sd,
            JumpLaw::Laplace { mean, scale } => mean * mean + 2.0 * scale * scale,
        }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            JumpLaw::Gaussian { mean, sd } => mean + sd * rng.sample::<f64, _>(StandardNormal),
            JumpLaw::Laplace { mean, scale } => {
                let u: f64 = rng.random::<f64>() - 0.5;
                mean - scale * u.signum() * (1.0 - 2.0 * u.abs()).ln()
            }
        }
    }
}

/// CGMY Lévy measure `C·e^{−G|y|}/|y|^{1+Y}` for `y < 0`, `C·e^{−My}/y^{1+Y}` for `y > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CgmyParams {
    pub c: f64,
    pub g: f64,
    pub m: f64,
    pub y: f64,
    /// Jumps smaller than this in absolute value are dropped (or replaced by a
    /// Gaussian of matching variance when `small_jump_gaussian` is set).
    pub truncation_eps: Option<f64>,
    #[serde(default)]
    pub small_jump_gaussian: bool,
}

impl CgmyParams {
    pub fn new(c: f64, g: f64, m: f64, y: f64) -> Self {
        CgmyParams {
            c,
            g,
            m,
            y,
            truncation_eps: Some(DEFAULT_TRUNCATION_EPS),
            small_jump_gaussian: false,
        }
    }

    pub fn with_eps(mut self, eps: f64) -> Self {
        self.truncation_eps = Some(eps);
        self
    }

    fn eps(&self) -> Result<f64> {
        let eps = self
            .truncation_eps
            .ok_or_else(|| Error::invalid("truncation_eps", "required for CGMY jumps"))?;
        require_positive("truncation_eps", eps)?;
        Ok(eps)
    }

    pub fn validate(&self) -> Result<()> {
        require_positive("c", self.c)?;
        require_positive("g", self.g)?;
        require_positive("m", self.m)?;
        if !(self.y > 0.0 && self.y < 2.0) {
            return Err(Error::invalid(
                "y",
                format!("must lie in (0, 2), got {}", self.y),
            ));
        }
        if self.y == 1.0 && self.g != self.m {
            return Err(Error::invalid("y", "Y = 1 requires G = M for a finite c1"));
        }
        self.eps().map(|_| ())
    }

    /// Mass `∫_ε^∞ ν(dy)` of jumps above `ε` on the side with decay `rate`.
    pub fn tail_intensity(&self, rate: f64, eps: f64) -> f64 {
        self.c * rate.powf(self.y) * upper_gamma(-self.y, rate * eps)
    }

    fn one_sided_mean(&self, rate: f64, eps: f64) -> f64 {
        self.c * rate.powf(self.y - 1.0) * upper_gamma(1.0 - self.y, rate * eps)
    }
}

/// Normal inverse Gaussian with tail `α`, skew `β` and scale `δ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NigParams {
    pub alpha: f64,
    pub beta: f64,
    pub delta: f64,
}

impl NigParams {
    pub fn gamma(&self) -> f64 {
        (self.alpha * self.alpha - self.beta * self.beta).sqrt()
    }

    /// Mean of the uncompensated process per unit time, `δβ/γ`.
    pub fn drift_rate(&self) -> f64 {
        self.delta * self.beta / self.gamma()
    }

    pub fn validate(&self) -> Result<()> {
        require_positive("alpha", self.alpha)?;
        require_positive("delta", self.delta)?;
        require_finite("beta", self.beta)?;
        if self.beta.abs() >= self.alpha {
            return Err(Error::invalid(
                "beta",
                format!(
                    "|beta| must be below alpha = {}, got {}",
                    self.alpha, self.beta
                ),
            ));
        }
        Ok(())
    }
}

impl LevySpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            LevySpec::None => Ok(()),
            LevySpec::CompoundPoisson(p) => {
                require_positive("intensity", p.intensity)?;
                match p.jump_law {
                    JumpLaw::Gaussian { mean, sd } => {
                        require_finite("mean", mean)?;
                        require_positive("sd", sd)
                    }
                    JumpLaw::Laplace { mean, scale } => {
                        require_finite("mean", mean)?;
                        require_positive("scale", scale)
                    }
                }
            }
            LevySpec::Cgmy(p) => p.validate(),
            LevySpec::Nig(p) => p.validate(),
        }
    }

    /// True when the Lévy measure is invariant under `y ↦ −y`.
    pub fn is_symmetric(&self) -> bool {
        match self {
            LevySpec::None => true,
            LevySpec::CompoundPoisson(p) => p.jump_law.mean() == 0.0,
            LevySpec::Cgmy(p) => p.g == p.m,
            LevySpec::Nig(p) => p.beta == 0.0,
        }
    }

    /// Variance of the compensated process per unit time, `∫ y² ν(dy)`.
    pub fn variance_rate(&self) -> f64 {
        match self {
            LevySpec::None => 0.0,
            LevySpec::CompoundPoisson(p) => p.intensity * p.jump_law.second_moment(),
            LevySpec::Cgmy(p) => {
                p.c * gamma(2.0 - p.y) * (p.m.powf(p.y - 2.0) + p.g.powf(p.y - 2.0))
            }
            LevySpec::Nig(p) => p.delta * p.alpha * p.alpha / p.gamma().powi(3),
        }
    }
}

/// A real number or a signed infinity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum ExtendedReal {
    Finite(f64),
    PosInfinity,
    NegInfinity,
}

impl ExtendedReal {
    pub fn finite(&self) -> Option<f64> {
        match *self {
            ExtendedReal::Finite(v) => Some(v),
            _ => None,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match *self {
            ExtendedReal::Finite(v) => v,
            ExtendedReal::PosInfinity => f64::INFINITY,
            ExtendedReal::NegInfinity => f64::NEG_INFINITY,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum C1Provenance {
    ClosedForm,
    ZeroBySymmetry,
    Divergent,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct C1 {
    pub value: ExtendedReal,
    pub provenance: C1Provenance,
}

impl C1 {
    fn closed(v: f64) -> Self {
        C1 {
            value: ExtendedReal::Finite(v),
            provenance: C1Provenance::ClosedForm,
        }
    }

    fn zero() -> Self {
        C1 {
            value: ExtendedReal::Finite(0.0),
            provenance: C1Provenance::ZeroBySymmetry,
        }
    }
}

/// First moment `c₁ = lim_{ε→0} c₁ᵉ` of the Lévy measure.
///
/// Divergence (NIG with `β ≠ 0`) is a value, not an error.
pub fn c1_of(spec: &LevySpec) -> Result<C1> {
    match spec {
        LevySpec::None => Ok(C1::zero()),
        LevySpec::CompoundPoisson(p) => {
            let mean = p.jump_law.mean();
            Ok(if mean == 0.0 {
                C1::zero()
            } else {
                C1::closed(p.intensity * mean)
            })
        }
        LevySpec::Cgmy(p) => {
            if p.g == p.m {
                return Ok(C1::zero());
            }
            if p.y == 1.0 {
                return Err(Error::domain(
                    MODULE,
                    "CGMY with Y = 1 and G != M has no finite c1",
                ));
            }
            Ok(C1::closed(
                p.c * (p.m.powf(p.y - 1.0) - p.g.powf(p.y - 1.0)) * gamma(1.0 - p.y),
            ))
        }
        LevySpec::Nig(p) => Ok(if p.beta == 0.0 {
            C1::zero()
        } else {
            C1 {
                value: if p.beta > 0.0 {
                    ExtendedReal::PosInfinity
                } else {
                    ExtendedReal::NegInfinity
                },
                provenance: C1Provenance::Divergent,
            }
        }),
    }
}

/// `c₁ᵉ = C·(M^{Y−1}Γ(1−Y, Mε) − G^{Y−1}Γ(1−Y, Gε))`.
pub fn c1_eps(p: &CgmyParams, eps: f64) -> Result<f64> {
    require_positive("truncation_eps", eps)?;
    Ok(p.one_sided_mean(p.m, eps) - p.one_sided_mean(p.g, eps))
}

/// `c₀ᵉ = ∫_{|y|>ε} ν(dy)`, the intensity of the truncated process.
pub fn c0_eps(p: &CgmyParams, eps: f64) -> Result<f64> {
    require_positive("truncation_eps", eps)?;
    Ok(p.tail_intensity(p.m, eps) + p.tail_intensity(p.g, eps))
}

/// `∫_{|x|<ε} x² ν(dx)`, by quadrature after `v = x^{2−Y}`.
pub fn small_jump_variance(p: &CgmyParams, eps: f64) -> Result<f64> {
    require_positive("truncation_eps", eps)?;
    let k = 2.0 - p.y;
    let inv_k = 1.0 / k;
    let upper = eps.powf(k);
    let v = integrate(
        |v: f64| {
            let x = v.powf(inv_k);
            (-p.m * x).exp() + (-p.g * x).exp()
        },
        0.0,
        upper,
        Tolerance::relative(1e-12),
    )?;
    Ok(p.c / k * v)
}

/// Inverse survival function of one CGMY tail restricted to `[ε, ∞)`.
///
/// Nodes are log-spaced on `[ε, 50/rate]`; `ln y` is interpolated linearly in
/// `ln S(y)`, and beyond the last node the tail is treated as exponential.
#[derive(Debug, Clone)]
struct TailTable {
    ln_y: Vec<f64>,
    ln_surv: Vec<f64>,
    y_max: f64,
    rate: f64,
}

impl TailTable {
    fn new(p: &CgmyParams, rate: f64, eps: f64) -> Self {
        let y_max = (50.0 / rate).max(eps * 1e3);
        let lo = eps.ln();
        let hi = y_max.ln();
        let norm = upper_gamma(-p.y, rate * eps);
        let n = CGMY_TABLE_NODES;
        let ln_y: Vec<f64> = (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect();
        let ln_surv = ln_y
            .iter()
            .enumerate()
            .map(|(i, &ly)| {
                if i == 0 {
                    0.0
                } else {
                    (upper_gamma(-p.y, rate * ly.exp()) / norm).ln()
                }
            })
            .collect();
        TailTable {
            ln_y,
            ln_surv,
            y_max,
            rate,
        }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = 1.0 - rng.random::<f64>();
        let target = u.ln();
        let last = self.ln_surv.len() - 1;
        if target <= self.ln_surv[last] {
            return self.y_max + (self.ln_surv[last] - target) / self.rate;
        }
        // ln_surv is decreasing: find k with ln_surv[k] ≥ target > ln_surv[k+1]
        let k = self.ln_surv.partition_point(|&s| s >= target) - 1;
        let (s0, s1) = (self.ln_surv[k], self.ln_surv[k + 1]);
        let w = (s0 - target) / (s0 - s1);
        (self.ln_y[k] + w * (self.ln_y[k + 1] - self.ln_y[k])).exp()
    }
}

#[derive(Debug, Clone)]
enum SamplerKind {
    None,
    CompoundPoisson {
        mean_count: f64,
        law: JumpLaw,
        drift: f64,
    },
    Cgmy {
        up: TailTable,
        down: TailTable,
        mean_up: f64,
        mean_down: f64,
        drift: f64,
        small_sd: f64,
    },
    Nig {
        ig_mean: f64,
        ig_shape: f64,
        beta: f64,
        drift: f64,
    },
}

/// Draws compensated increments `ΔL` over a fixed step `dt`.
#[derive(Debug, Clone)]
pub struct LevySampler {
    kind: SamplerKind,
}

impl LevySampler {
    pub fn new(spec: &LevySpec, dt: f64) -> Result<Self> {
        spec.validate()?;
        require_positive("dt", dt)?;
        let kind = match spec {
            LevySpec::None => SamplerKind::None,
            LevySpec::CompoundPoisson(p) => SamplerKind::CompoundPoisson {
                mean_count: p.intensity * dt,
                law: p.jump_law,
                drift: -p.intensity * p.jump_law.mean() * dt,
            },
            LevySpec::Cgmy(p) => {
                let eps = p.eps()?;
                let small_sd = if p.small_jump_gaussian {
                    (small_jump_variance(p, eps)? * dt).sqrt()
                } else {
                    0.0
                };
                SamplerKind::Cgmy {
                    up: TailTable::new(p, p.m, eps),
                    down: TailTable::new(p, p.g, eps),
                    mean_up: p.tail_intensity(p.m, eps) * dt,
                    mean_down: p.tail_intensity(p.g, eps) * dt,
                    drift: -c1_eps(p, eps)? * dt,
                    small_sd,
                }
            }
            LevySpec::Nig(p) => {
                let gam = p.gamma();
                SamplerKind::Nig {
                    ig_mean: p.delta * dt / gam,
                    ig_shape: (p.delta * dt).powi(2),
                    beta: p.beta,
                    drift: -p.drift_rate() * dt,
                }
            }
        };
        Ok(LevySampler { kind })
    }

    pub fn is_trivial(&self) -> bool {
        matches!(self.kind, SamplerKind::None)
    }

    pub fn increment<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.kind {
            SamplerKind::None => 0.0,
            SamplerKind::CompoundPoisson {
                mean_count,
                law,
                drift,
            } => {
                let n = poisson(*mean_count, rng);
                drift + (0..n).map(|_| law.sample(rng)).sum::<f64>()
            }
            SamplerKind::Cgmy {
                up,
                down,
                mean_up,
                mean_down,
                drift,
                small_sd,
            } => {
                let n_up = poisson(*mean_up, rng);
                let n_down = poisson(*mean_down, rng);
                let mut x = *drift;
                for _ in 0..n_up {
                    x += up.sample(rng);
                }
                for _ in 0..n_down {
                    x -= down.sample(rng);
                }
                if *small_sd > 0.0 {
                    x += small_sd * rng.sample::<f64, _>(StandardNormal);
                }
                x
            }
            SamplerKind::Nig {
                ig_mean,
                ig_shape,
                beta,
                drift,
            } => {
                let tau = inverse_gaussian(*ig_mean, *ig_shape, rng);
                drift + beta * tau + tau.sqrt() * rng.sample::<f64, _>(StandardNormal)
            }
        }
    }
}

/// Poisson count: sequential inversion for small means, `rand_distr` otherwise.
pub fn poisson<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    if mean < 10.0 {
        let mut p = (-mean).exp();
        let mut cdf = p;
        let u: f64 = rng.random();
        let mut k = 0u64;
        while u > cdf && k < 1000 {
            k += 1;
            p *= mean / k as f64;
            cdf += p;
        }
        k
    } else {
        Poisson::new(mean)
            .expect("mean is positive and finite")
            .sample(rng) as u64
    }
}

/// Inverse Gaussian draw with the given mean and shape.
///
/// The smaller root of the Michael–Schucany–Haas quadratic is written as
/// `μ·r/(1+√(1+r))²`, `r = 4λ/(μy)`, which stays accurate when `μy/λ` is
/// huge, as it is for NIG clocks over very short steps.
pub fn inverse_gaussian<R: Rng + ?Sized>(mean: f64, shape: f64, rng: &mut R) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    let y = z * z;
    if y == 0.0 {
        return mean;
    }
    let r = 4.0 * shape / (mean * y);
    let q = (1.0 + r).sqrt();
    let x = mean * r / ((q + 1.0) * (q + 1.0));
    let u: f64 = rng.random();
    if u * (mean + x) <= mean {
        x
    } else {
        mean * mean / x
    }
}

/// Per-path, per-step compensated increments.
#[derive(Debug, Clone)]
pub struct LevyIncrements {
    pub increments: Array2<f64>,
}

impl LevyIncrements {
    /// `L_T` for each path.
    pub fn terminal(&self) -> ndarray::Array1<f64> {
        self.increments.sum_axis(ndarray::Axis(1))
    }
}

pub fn sample_increments(
    spec: &LevySpec,
    grid: &PathGrid,
    n_paths: usize,
    seed: u64,
    stream: u64,
) -> Result<LevyIncrements> {
    let sampler = LevySampler::new(spec, grid.dt())?;
    let mut rng = substream(seed, stream, Purpose::Jumps);
    let mut increments = Array2::zeros((n_paths, grid.n_steps));
    if !sampler.is_trivial() {
        increments
            .iter_mut()
            .for_each(|x| *x = sampler.increment(&mut rng));
    }
    Ok(LevyIncrements { increments })
}
