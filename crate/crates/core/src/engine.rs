//! Monte Carlo for the terminal value
//!
//! ```text
//! S_T = S_0 + Σ_i σ_{t_{i−1}}(ρ ΔW_i + √(1−ρ²) ΔB_i) + L_T
//! ```
//!
//! and the ATM estimators
//!
//! ```text
//! I(k*)   = E[(S_T − S_0)₊]·√(2π/T)
//! ∂ₖI(k*) = (½ − P(S_T ≥ S_0))/√(T/2π)
//! ```
//!
//! Paths are generated in fixed-size chunks, each with its own substreams, and
//! the per-chunk moments are merged in chunk order, so results are bitwise
//! reproducible for a given seed whatever the number of worker threads.
//!
//! `L` enters `S_T` only through its terminal value, which is drawn in one
//! step from the exact law of `L_T` (the truncated law for CGMY).

use crate::error::{require_finite, Error, Result};
use crate::gauss::{self, BachelierInputs};
use crate::levy::{c1_of, C1Provenance, LevySampler, LevySpec};
use crate::rng::{substream, Purpose, DEFAULT_SEED};
use crate::special::sqrt_2pi;
use crate::stats::{McEstimate, Moments};
use crate::vol::{PathGrid, VolGenerator, VolModelSpec, MAX_FRACTIONAL_STEPS};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Independent samples (antithetic pairs or single paths) per chunk.
pub const CHUNK_SAMPLES: usize = 1024;
pub const DEFAULT_PATHS: usize = 2_000_000;

/// How the two paths of an antithetic pair obtain their jumps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JumpCoupling {
    /// Both paths reuse one draw of `L_T`.
    #[default]
    Shared,
    /// Each path draws its own `L_T`.
    Independent,
}

fn default_paths() -> usize {
    DEFAULT_PATHS
}
fn default_seed() -> u64 {
    DEFAULT_SEED
}
fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub s0: f64,
    pub rho: f64,
    pub vol: VolModelSpec,
    pub levy: LevySpec,
    pub t_end: f64,
    /// Defaults to 64 steps for `t_end ≤ 1e-3` and 256 otherwise.
    #[serde(default)]
    pub n_steps: Option<usize>,
    /// Total number of paths; with antithetics this is twice the number of pairs.
    #[serde(default = "default_paths")]
    pub n_paths: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_true")]
    pub antithetic: bool,
    #[serde(default)]
    pub jump_coupling: JumpCoupling,
}

impl ModelConfig {
    pub fn new(s0: f64, rho: f64, vol: VolModelSpec, levy: LevySpec, t_end: f64) -> Self {
        ModelConfig {
            s0,
            rho,
            vol,
            levy,
            t_end,
            n_steps: None,
            n_paths: DEFAULT_PATHS,
            seed: DEFAULT_SEED,
            antithetic: true,
            jump_coupling: JumpCoupling::Shared,
        }
    }

    pub fn with_paths(mut self, n_paths: usize) -> Self {
        self.n_paths = n_paths;
        self
    }

    pub fn with_steps(mut self, n_steps: usize) -> Self {
        self.n_steps = Some(n_steps);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn steps(&self) -> usize {
        self.n_steps
            .unwrap_or(if self.t_end <= 1e-3 { 64 } else { 256 })
    }

    pub fn grid(&self) -> Result<PathGrid> {
        PathGrid::new(self.t_end, self.steps())
    }

    pub fn validate(&self) -> Result<()> {
        require_finite("s0", self.s0)?;
        if !(self.rho > -1.0 && self.rho < 1.0) {
            return Err(Error::invalid(
                "rho",
                format!("must lie in (-1, 1), got {}", self.rho),
            ));
        }
        self.vol.validate()?;
        self.levy.validate()?;
        self.grid()?;
        if matches!(self.vol, VolModelSpec::FractionalBergomi { .. })
            && self.steps() > MAX_FRACTIONAL_STEPS
        {
            return Err(Error::invalid(
                "n_steps",
                format!(
                    "at most {MAX_FRACTIONAL_STEPS} for fractional volatility, got {}",
                    self.steps()
                ),
            ));
        }
        let per_sample = if self.antithetic { 2 } else { 1 };
        if self.n_paths < 2 * per_sample {
            return Err(Error::invalid(
                "n_paths",
                format!("need at least two samples, got {} paths", self.n_paths),
            ));
        }
        if self.antithetic && !self.n_paths.is_multiple_of(2) {
            return Err(Error::invalid(
                "n_paths",
                format!("must be even with antithetic pairs, got {}", self.n_paths),
            ));
        }
        Ok(())
    }
}

/// ATM level and skew estimates at one configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IvPoint {
    pub level: McEstimate,
    pub skew: McEstimate,
    /// `T^{max(½−H, 0)}·skew`.
    pub scaled_skew: McEstimate,
    /// The jump measure has no finite first moment, so the ATM skew limit
    /// does not exist and `skew` is only the finite-`T` digital estimate.
    pub skew_hypothesis_violated: bool,
}

/// A validated configuration with its samplers built.
struct Simulation {
    cfg: ModelConfig,
    vol: VolGenerator,
    jumps: LevySampler,
    n: usize,
    orth: f64,
}

struct Walker<'a> {
    sim: &'a Simulation,
    rng_vol: ChaCha8Rng,
    rng_orth: ChaCha8Rng,
    rng_jump: ChaCha8Rng,
    z: Vec<f64>,
    dw: Vec<f64>,
    sig_p: Vec<f64>,
    sig_m: Vec<f64>,
}

impl Simulation {
    fn new(cfg: &ModelConfig) -> Result<Self> {
        cfg.validate()?;
        let grid = cfg.grid()?;
        Ok(Simulation {
            cfg: *cfg,
            vol: VolGenerator::new(cfg.vol, grid)?,
            jumps: LevySampler::new(&cfg.levy, cfg.t_end)?,
            n: grid.n_steps,
            orth: (1.0 - cfg.rho * cfg.rho).sqrt() * grid.dt().sqrt(),
        })
    }

    fn paths_per_sample(&self) -> usize {
        if self.cfg.antithetic {
            2
        } else {
            1
        }
    }

    fn n_samples(&self) -> usize {
        self.cfg.n_paths / self.paths_per_sample()
    }

    fn walker(&self, chunk: usize) -> Walker<'_> {
        let seed = self.cfg.seed;
        let c = chunk as u64;
        Walker {
            sim: self,
            rng_vol: substream(seed, c, Purpose::Volatility),
            rng_orth: substream(seed, c, Purpose::Orthogonal),
            rng_jump: substream(seed, c, Purpose::Jumps),
            z: vec![0.0; self.vol.gaussian_dim()],
            dw: vec![0.0; self.n],
            sig_p: vec![0.0; self.n],
            sig_m: vec![0.0; self.n],
        }
    }

    /// Runs every chunk in parallel and returns the per-chunk results in chunk order.
    fn map_chunks<T, F>(&self, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(&mut Walker<'_>, usize) -> T + Sync,
    {
        let total = self.n_samples();
        let chunks = total.div_ceil(CHUNK_SAMPLES);
        (0..chunks)
            .into_par_iter()
            .map(|c| {
                let count = CHUNK_SAMPLES.min(total - c * CHUNK_SAMPLES);
                f(&mut self.walker(c), count)
            })
            .collect()
    }

    /// Per-sample statistics averaged over the paths of each sample.
    fn moments<F>(&self, n_stats: usize, stat: F) -> Vec<Moments>
    where
        F: Fn(f64, &mut [f64]) + Sync,
    {
        let per_chunk = self.map_chunks(|walker, count| {
            let mut acc = vec![Moments::default(); n_stats];
            let mut terminals = [0.0; 2];
            let mut a = vec![0.0; n_stats];
            let mut b = vec![0.0; n_stats];
            for _ in 0..count {
                let paths = walker.next_sample(&mut terminals);
                stat(paths[0], &mut a);
                if paths.len() == 2 {
                    stat(paths[1], &mut b);
                    a.iter_mut().zip(&b).for_each(|(x, y)| *x = 0.5 * (*x + y));
                }
                acc.iter_mut().zip(&a).for_each(|(m, &x)| m.push(x));
            }
            acc
        });
        let mut total = vec![Moments::default(); n_stats];
        for chunk in &per_chunk {
            total.iter_mut().zip(chunk).for_each(|(t, c)| t.merge(c));
        }
        total
    }
}

impl Walker<'_> {
    /// Terminal values of the next sample: one path, or an antithetic pair.
    fn next_sample<'b>(&mut self, out: &'b mut [f64; 2]) -> &'b [f64] {
        let sim = self.sim;
        let cfg = &sim.cfg;
        for x in self.z.iter_mut() {
            *x = self.rng_vol.sample(StandardNormal);
        }
        let rho = cfg.rho;
        let jump = sim.jumps.increment(&mut self.rng_jump);
        if cfg.antithetic {
            sim.vol
                .fill_antithetic(&self.z, &mut self.dw, &mut self.sig_p, &mut self.sig_m);
            let (mut plus, mut minus) = (0.0, 0.0);
            for i in 0..sim.n {
                let zb: f64 = self.rng_orth.sample(StandardNormal);
                let g = rho * self.dw[i] + sim.orth * zb;
                plus += self.sig_p[i] * g;
                minus -= self.sig_m[i] * g;
            }
            let jump_minus = match cfg.jump_coupling {
                JumpCoupling::Shared => jump,
                JumpCoupling::Independent => sim.jumps.increment(&mut self.rng_jump),
            };
            out[0] = cfg.s0 + plus + jump;
            out[1] = cfg.s0 + minus + jump_minus;
            &out[..2]
        } else {
            sim.vol
                .fill_path(&self.z, 1.0, &mut self.dw, &mut self.sig_p);
            let mut plus = 0.0;
            for i in 0..sim.n {
                let zb: f64 = self.rng_orth.sample(StandardNormal);
                plus += self.sig_p[i] * (rho * self.dw[i] + sim.orth * zb);
            }
            out[0] = cfg.s0 + plus + jump;
            &out[..1]
        }
    }
}

/// All `n_paths` terminal values; antithetic partners are adjacent.
pub fn simulate_terminal(config: &ModelConfig) -> Result<Vec<f64>> {
    let sim = Simulation::new(config)?;
    let chunks = sim.map_chunks(|walker, count| {
        let mut v = Vec::with_capacity(count * 2);
        let mut out = [0.0; 2];
        for _ in 0..count {
            v.extend_from_slice(walker.next_sample(&mut out));
        }
        v
    });
    Ok(chunks.concat())
}

fn skew_scale(cfg: &ModelConfig) -> f64 {
    let h = cfg.vol.hurst();
    cfg.t_end.powf((0.5 - h).max(0.0))
}

/// Level and skew from one set of paths.
pub fn estimate_atm(config: &ModelConfig) -> Result<IvPoint> {
    let sim = Simulation::new(config)?;
    let s0 = config.s0;
    let m = sim.moments(2, |x, out| {
        out[0] = (x - s0).max(0.0);
        out[1] = if x >= s0 { 1.0 } else { 0.0 };
    });
    let t = config.t_end;
    let level = m[0].estimate().affine(0.0, sqrt_2pi() / t.sqrt());
    let d = gauss::digital_scale(t);
    let skew = m[1].estimate().affine(0.5 / d, -1.0 / d);
    let scale = skew_scale(config);
    Ok(IvPoint {
        level,
        skew,
        scaled_skew: skew.affine(0.0, scale),
        skew_hypothesis_violated: c1_of(&config.levy)?.provenance == C1Provenance::Divergent,
    })
}

pub fn estimate_atm_level(config: &ModelConfig) -> Result<McEstimate> {
    estimate_atm(config).map(|p| p.level)
}

pub fn estimate_atm_skew(config: &ModelConfig) -> Result<McEstimate> {
    estimate_atm(config).map(|p| p.skew)
}

/// Undiscounted call prices `E[(S_T − k)₊]` for several strikes from one set of paths.
pub fn price_calls(config: &ModelConfig, strikes: &[f64]) -> Result<Vec<McEstimate>> {
    for &k in strikes {
        require_finite("strike", k)?;
    }
    let sim = Simulation::new(config)?;
    let m = sim.moments(strikes.len(), |x, out| {
        for (o, &k) in out.iter_mut().zip(strikes) {
            *o = (x - k).max(0.0);
        }
    });
    Ok(m.iter().map(Moments::estimate).collect())
}

/// Implied volatility at one strike, with its standard error by the delta method.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StrikePoint {
    pub strike: f64,
    pub price: McEstimate,
    pub implied_vol: f64,
    pub implied_vol_se: f64,
}

/// Implied volatilities of Monte Carlo call prices; failed inversions are
/// reported per strike.
pub fn strike_smile(config: &ModelConfig, strikes: &[f64]) -> Result<Vec<Result<StrikePoint>>> {
    let prices = price_calls(config, strikes)?;
    Ok(strikes
        .iter()
        .zip(prices)
        .map(|(&k, price)| {
            let iv = gauss::implied_vol(price.mean, config.t_end, config.s0, k)?;
            let vega = gauss::greeks(&BachelierInputs::new(config.t_end, config.s0, k, iv))?.vega;
            Ok(StrikePoint {
                strike: k,
                price,
                implied_vol: iv,
                implied_vol_se: price.std_error / vega,
            })
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    Sigma0,
    Maturity,
    Strike,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum SweepOutcome {
    Atm(IvPoint),
    Strike(StrikePoint),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub outcome: Result<SweepOutcome>,
}

/// One row per value. A failing point is recorded in its row and does not
/// stop the sweep.
pub fn sweep(template: &ModelConfig, axis: SweepAxis, values: &[f64]) -> Result<Vec<SweepRow>> {
    if values.is_empty() {
        return Err(Error::invalid("values", "sweep needs at least one value"));
    }
    match axis {
        SweepAxis::Strike => {
            let rows = strike_smile(template, values)?;
            Ok(values
                .iter()
                .zip(rows)
                .map(|(&value, r)| SweepRow {
                    value,
                    outcome: r.map(SweepOutcome::Strike),
                })
                .collect())
        }
        SweepAxis::Sigma0 | SweepAxis::Maturity => Ok(values
            .iter()
            .map(|&value| SweepRow {
                value,
                outcome: point_config(template, axis, value)
                    .and_then(|c| estimate_atm(&c))
                    .map(SweepOutcome::Atm),
            })
            .collect()),
    }
}

/// The template with the swept parameter replaced.
pub fn point_config(template: &ModelConfig, axis: SweepAxis, value: f64) -> Result<ModelConfig> {
    let mut c = *template;
    match axis {
        SweepAxis::Sigma0 => c.vol = c.vol.with_sigma0(value),
        SweepAxis::Maturity => c.t_end = value,
        SweepAxis::Strike => {}
    }
    c.validate()?;
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bachelier(sigma: f64) -> ModelConfig {
        ModelConfig::new(
            100.0,
            0.0,
            VolModelSpec::Constant { sigma0: sigma },
            LevySpec::None,
            1e-4,
        )
        .with_paths(20_000)
        .with_steps(4)
    }

    #[test]
    fn validation_rejects_bad_configs() {
        let mut c = bachelier(0.2);
        c.rho = 1.0;
        assert!(matches!(
            c.validate(),
            Err(Error::InvalidParameter { field: "rho", .. })
        ));
        let mut c = bachelier(0.2);
        c.n_paths = 2001;
        assert!(matches!(
            c.validate(),
            Err(Error::InvalidParameter {
                field: "n_paths",
                ..
            })
        ));
    }

    #[test]
    fn default_steps_follow_maturity() {
        let mut c = bachelier(0.2);
        c.n_steps = None;
        assert_eq!(c.steps(), 64);
        c.t_end = 0.5;
        assert_eq!(c.steps(), 256);
    }

    #[test]
    fn constant_vol_pairs_cancel() {
        let xs = simulate_terminal(&bachelier(0.3)).unwrap();
        assert_eq!(xs.len(), 20_000);
        for pair in xs.chunks(2) {
            assert!((pair[0] - 100.0 + pair[1] - 100.0).abs() < 1e-12);
        }
    }

    #[test]
    fn sweep_keeps_failed_points() {
        let rows = sweep(&bachelier(0.2), SweepAxis::Sigma0, &[0.2, -1.0]).unwrap();
        assert!(rows[0].outcome.is_ok());
        assert!(rows[1].outcome.as_ref().unwrap_err().is_validation());
    }
}
