//! Volatility paths on a uniform grid.
//!
//! * Fractional Bergomi: `σ_t = σ₀·exp(½α·W^H_t − ¼α²·t^{2H})`, with the
//!   Riemann–Liouville process `W^H_t = ∫_0^t √(2H)(t−s)^{H−½} dW_s`, so that
//!   `E[σ_t²] = σ₀²`.
//! * Exponential SABR: `σ_t = σ₀·exp(α·W_t − ½α²t)`, so that `E[σ_t] = σ₀`.
//! * Constant.
//!
//! The fractional case is sampled exactly: the increments of `W` and the values
//! of `W^H` on the grid are jointly Gaussian, and one Cholesky factor of their
//! covariance maps standard normals to both.

use crate::error::{require_finite, require_positive, Error, Result};
use crate::quad::{integrate, Tolerance};
use crate::rng::{substream, Purpose};
use ndarray::{Array1, Array2};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Largest grid the exact fractional scheme accepts.
pub const MAX_FRACTIONAL_STEPS: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum VolModelSpec {
    FractionalBergomi { sigma0: f64, alpha: f64, hurst: f64 },
    SabrExp { sigma0: f64, alpha: f64 },
    Constant { sigma0: f64 },
}

impl VolModelSpec {
    pub fn sigma0(&self) -> f64 {
        match *self {
            VolModelSpec::FractionalBergomi { sigma0, .. }
            | VolModelSpec::SabrExp { sigma0, .. }
            | VolModelSpec::Constant { sigma0 } => sigma0,
        }
    }

    pub fn with_sigma0(self, value: f64) -> Self {
        match self {
            VolModelSpec::FractionalBergomi { alpha, hurst, .. } => {
                VolModelSpec::FractionalBergomi {
                    sigma0: value,
                    alpha,
                    hurst,
                }
            }
            VolModelSpec::SabrExp { alpha, .. } => VolModelSpec::SabrExp {
                sigma0: value,
                alpha,
            },
            VolModelSpec::Constant { .. } => VolModelSpec::Constant { sigma0: value },
        }
    }

    /// Roughness of the volatility driver; ½ for the Brownian-driven models.
    pub fn hurst(&self) -> f64 {
        match *self {
            VolModelSpec::FractionalBergomi { hurst, .. } => hurst,
            _ => 0.5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        require_positive("sigma0", self.sigma0())?;
        match *self {
            VolModelSpec::FractionalBergomi { alpha, hurst, .. } => {
                require_alpha(alpha)?;
                if !(hurst > 0.0 && hurst < 1.0) {
                    return Err(Error::invalid(
                        "hurst",
                        format!("must lie in (0, 1), got {hurst}"),
                    ));
                }
                Ok(())
            }
            VolModelSpec::SabrExp { alpha, .. } => require_alpha(alpha),
            VolModelSpec::Constant { .. } => Ok(()),
        }
    }
}

fn require_alpha(alpha: f64) -> Result<()> {
    require_finite("alpha", alpha)?;
    if alpha < 0.0 {
        return Err(Error::invalid(
            "alpha",
            format!("must be >= 0, got {alpha}"),
        ));
    }
    Ok(())
}

/// Uniform grid `0 = t₀ < t₁ < … < t_n = t_end`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathGrid {
    pub t_end: f64,
    pub n_steps: usize,
}

impl PathGrid {
    pub fn new(t_end: f64, n_steps: usize) -> Result<Self> {
        require_positive("t_end", t_end)?;
        if n_steps == 0 {
            return Err(Error::invalid("n_steps", "must be at least 1"));
        }
        Ok(PathGrid { t_end, n_steps })
    }

    pub fn dt(&self) -> f64 {
        self.t_end / self.n_steps as f64
    }

    pub fn time(&self, i: usize) -> f64 {
        if i == self.n_steps {
            self.t_end
        } else {
            i as f64 * self.dt()
        }
    }

    pub fn times(&self) -> Array1<f64> {
        (0..=self.n_steps).map(|i| self.time(i)).collect()
    }
}

/// `Cov(W_t, W^H_u) = √(2H)/(H+½)·[u^{H+½} − (u − t∧u)^{H+½}]`.
pub fn cov_w_fbm(t: f64, u: f64, hurst: f64) -> f64 {
    let p = hurst + 0.5;
    let m = t.min(u);
    (2.0 * hurst).sqrt() / p * (u.powf(p) - (u - m).powf(p))
}

/// `Cov(W^H_t, W^H_u) = 2H∫_0^{t∧u}(t−s)^{H−½}(u−s)^{H−½} ds`.
///
/// With `r = t∧u − s` and `v = r^{H+½}` the integrand is bounded, which keeps
/// the quadrature cheap for every `H ∈ (0, 1)`.
pub fn cov_fbm(t: f64, u: f64, hurst: f64) -> Result<f64> {
    let (lo, hi) = if t <= u { (t, u) } else { (u, t) };
    if lo <= 0.0 {
        return Ok(0.0);
    }
    let gap = hi - lo;
    if gap == 0.0 {
        return Ok(lo.powf(2.0 * hurst));
    }
    let p = hurst + 0.5;
    let e = hurst - 0.5;
    let inv_p = 1.0 / p;
    let upper = lo.powf(p);
    let tol = Tolerance {
        abs: 1e-15 * upper * hi.powf(e.max(0.0)).max(gap.powf(e)),
        rel: 1e-11,
        max_intervals: 2000,
    };
    let v = integrate(|v: f64| (gap + v.powf(inv_p)).powf(e), 0.0, upper, tol)?;
    Ok(2.0 * hurst / p * v)
}

/// Joint covariance of `(ΔW_1, …, ΔW_n, W^H_{t_1}, …, W^H_{t_n})`.
pub fn joint_covariance(grid: &PathGrid, hurst: f64) -> Result<Array2<f64>> {
    let n = grid.n_steps;
    let dt = grid.dt();
    let mut a = Array2::<f64>::zeros((2 * n, 2 * n));
    for i in 0..n {
        a[[i, i]] = dt;
    }
    for j in 0..n {
        let u = grid.time(j + 1);
        for i in 0..n {
            let c = cov_w_fbm(grid.time(i + 1), u, hurst) - cov_w_fbm(grid.time(i), u, hurst);
            a[[n + j, i]] = c;
            a[[i, n + j]] = c;
        }
    }
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|j| {
            (0..=j)
                .map(|i| cov_fbm(grid.time(i + 1), grid.time(j + 1), hurst))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    for (j, row) in rows.iter().enumerate() {
        for (i, &c) in row.iter().enumerate() {
            a[[n + j, n + i]] = c;
            a[[n + i, n + j]] = c;
        }
    }
    Ok(a)
}

/// Lower Cholesky factor of the joint covariance of `(ΔW, W^H)` on `grid`.
pub fn build_kernel_cholesky(grid: &PathGrid, hurst: f64) -> Result<Array2<f64>> {
    if !(hurst > 0.0 && hurst < 1.0) {
        return Err(Error::invalid(
            "hurst",
            format!("must lie in (0, 1), got {hurst}"),
        ));
    }
    if grid.n_steps > MAX_FRACTIONAL_STEPS {
        return Err(Error::invalid(
            "n_steps",
            format!(
                "at most {MAX_FRACTIONAL_STEPS} for fractional volatility, got {}",
                grid.n_steps
            ),
        ));
    }
    cholesky_semidefinite(&joint_covariance(grid, hurst)?)
}

/// Cholesky factorisation that tolerates exact rank deficiency.
///
/// A pivot within `1e-10` (relative to its diagonal entry) of zero, of either
/// sign, is treated as a zero direction and its column is cleared. A clearly
/// negative pivot triggers one retry with diagonal jitter `1e-12·max diag`.
pub fn cholesky_semidefinite(a: &Array2<f64>) -> Result<Array2<f64>> {
    match cholesky_attempt(a, 0.0) {
        Ok(l) => Ok(l),
        Err(_) => {
            let jitter = 1e-12 * a.diag().iter().fold(0.0_f64, |m, &d| m.max(d));
            cholesky_attempt(a, jitter)
        }
    }
}

fn cholesky_attempt(a: &Array2<f64>, jitter: f64) -> Result<Array2<f64>> {
    let n = a.nrows();
    let mut l = Array2::<f64>::zeros((n, n));
    for j in 0..n {
        let ajj = a[[j, j]] + jitter;
        let row_j = l.row(j).to_owned();
        let d = ajj
            - row_j
                .slice(ndarray::s![..j])
                .dot(&row_j.slice(ndarray::s![..j]));
        let scale = ajj.abs().max(f64::MIN_POSITIVE);
        if d.abs() <= 1e-10 * scale {
            continue;
        }
        if d < 0.0 {
            return Err(Error::NotPositiveDefinite { pivot: j, value: d });
        }
        let ljj = d.sqrt();
        l[[j, j]] = ljj;
        let head = row_j.slice(ndarray::s![..j]).to_owned();
        for i in (j + 1)..n {
            let s = a[[i, j]] - l.row(i).slice(ndarray::s![..j]).dot(&head);
            l[[i, j]] = s / ljj;
        }
    }
    Ok(l)
}

/// Maps standard normals to one volatility path and the `W` increments behind it.
#[derive(Debug, Clone)]
pub struct VolGenerator {
    spec: VolModelSpec,
    grid: PathGrid,
    sqrt_dt: f64,
    /// Fractional case: rows `j = 0..n−1` give `W^H_{t_{j+1}}` as a combination
    /// of the first `2n` normals, packed as `[ΔW part (j+1) | orthogonal part (j+1)]`.
    rows: Vec<Vec<f64>>,
    /// Deterministic log-drift at `t_0, …, t_{n−1}`.
    drift: Vec<f64>,
}

impl VolGenerator {
    pub fn new(spec: VolModelSpec, grid: PathGrid) -> Result<Self> {
        spec.validate()?;
        let n = grid.n_steps;
        let mut rows = Vec::new();
        let drift: Vec<f64> = match spec {
            VolModelSpec::FractionalBergomi { alpha, hurst, .. } => {
                let l = build_kernel_cholesky(&grid, hurst)?;
                // σ at t_{n} is never used, so W^H_{t_n} is not needed
                rows = (0..n.saturating_sub(1))
                    .map(|j| {
                        let r = n + j;
                        let mut packed = Vec::with_capacity(2 * (j + 1));
                        packed.extend((0..=j).map(|i| l[[r, i]]));
                        packed.extend((0..=j).map(|i| l[[r, n + i]]));
                        packed
                    })
                    .collect();
                (0..n)
                    .map(|i| -0.25 * alpha * alpha * grid.time(i).powf(2.0 * hurst))
                    .collect()
            }
            VolModelSpec::SabrExp { alpha, .. } => (0..n)
                .map(|i| -0.5 * alpha * alpha * grid.time(i))
                .collect(),
            VolModelSpec::Constant { .. } => vec![0.0; n],
        };
        Ok(VolGenerator {
            spec,
            grid,
            sqrt_dt: grid.dt().sqrt(),
            rows,
            drift,
        })
    }

    pub fn spec(&self) -> &VolModelSpec {
        &self.spec
    }

    pub fn grid(&self) -> &PathGrid {
        &self.grid
    }

    /// Number of standard normals consumed per path.
    pub fn gaussian_dim(&self) -> usize {
        match self.spec {
            VolModelSpec::FractionalBergomi { .. } => 2 * self.grid.n_steps,
            _ => self.grid.n_steps,
        }
    }

    /// Writes `ΔW_i` and the left-endpoint `σ_{t_{i−1}}` for `i = 1..n`.
    ///
    /// `sign = −1` produces the antithetic path from the same normals.
    pub fn fill_path(&self, z: &[f64], sign: f64, dw: &mut [f64], sigma: &mut [f64]) {
        self.fill_increments(z, dw);
        dw.iter_mut().for_each(|d| *d *= sign);
        self.log_driver(z, sigma);
        let s0 = self.spec.sigma0();
        for (s, d) in sigma.iter_mut().zip(&self.drift) {
            *s = s0 * (sign * *s + d).exp();
        }
    }

    /// Both members of an antithetic pair at once. `dw` receives the
    /// increments of the `+` path; the `−` path uses `−dw`.
    pub fn fill_antithetic(
        &self,
        z: &[f64],
        dw: &mut [f64],
        sigma_plus: &mut [f64],
        sigma_minus: &mut [f64],
    ) {
        self.fill_increments(z, dw);
        self.log_driver(z, sigma_plus);
        let s0 = self.spec.sigma0();
        for ((sp, sm), d) in sigma_plus
            .iter_mut()
            .zip(sigma_minus.iter_mut())
            .zip(&self.drift)
        {
            let x = *sp;
            *sp = s0 * (x + d).exp();
            *sm = s0 * (d - x).exp();
        }
    }

    fn fill_increments(&self, z: &[f64], dw: &mut [f64]) {
        debug_assert_eq!(z.len(), self.gaussian_dim());
        for (d, &zi) in dw.iter_mut().zip(z) {
            *d = self.sqrt_dt * zi;
        }
    }

    /// The zero-mean Gaussian part of `ln σ_{t_i}`, `i = 0..n−1`, for the `+` path.
    fn log_driver(&self, z: &[f64], x: &mut [f64]) {
        let n = self.grid.n_steps;
        match self.spec {
            VolModelSpec::FractionalBergomi { alpha, .. } => {
                let (zw, zo) = z.split_at(n);
                x[0] = 0.0;
                for (j, row) in self.rows.iter().enumerate() {
                    let (cw, co) = row.split_at(j + 1);
                    x[j + 1] = 0.5 * alpha * (dot(cw, &zw[..=j]) + dot(co, &zo[..=j]));
                }
            }
            VolModelSpec::SabrExp { alpha, .. } => {
                let mut w = 0.0;
                for i in 0..n {
                    x[i] = alpha * w;
                    w += self.sqrt_dt * z[i];
                }
            }
            VolModelSpec::Constant { .. } => x.fill(0.0),
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// A batch of volatility paths, one row per path.
#[derive(Debug, Clone)]
pub struct VolPathBatch {
    pub w_increments: Array2<f64>,
    /// Left-endpoint volatility `σ_{t_{i−1}}` for step `i`.
    pub sigma: Array2<f64>,
}

/// Simulates `n_paths` independent paths from the volatility substream of `(seed, stream)`.
pub fn simulate_vol(
    spec: VolModelSpec,
    grid: PathGrid,
    n_paths: usize,
    seed: u64,
    stream: u64,
) -> Result<VolPathBatch> {
    if n_paths == 0 {
        return Err(Error::invalid("n_paths", "must be at least 1"));
    }
    let generator = VolGenerator::new(spec, grid)?;
    let n = grid.n_steps;
    let mut rng = substream(seed, stream, Purpose::Volatility);
    let mut w_increments = Array2::zeros((n_paths, n));
    let mut sigma = Array2::zeros((n_paths, n));
    let mut z = vec![0.0; generator.gaussian_dim()];
    let mut dw = vec![0.0; n];
    let mut sg = vec![0.0; n];
    for p in 0..n_paths {
        z.iter_mut().for_each(|x| *x = rng.sample(StandardNormal));
        generator.fill_path(&z, 1.0, &mut dw, &mut sg);
        w_increments.row_mut(p).assign(&Array1::from(dw.clone()));
        sigma.row_mut(p).assign(&Array1::from(sg.clone()));
    }
    Ok(VolPathBatch {
        w_increments,
        sigma,
    })
}
