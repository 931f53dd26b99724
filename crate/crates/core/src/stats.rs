//! Streaming sample moments and Monte Carlo estimates.

use serde::Serialize;

/// Count, mean and centred second moment, mergeable in a fixed order.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&mut self, other: &Moments) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        let w = other.n as f64 / n as f64;
        self.mean += delta * w;
        self.m2 += other.m2 + delta * delta * self.n as f64 * w;
        self.n = n;
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            f64::NAN
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    pub fn std_error(&self) -> f64 {
        (self.variance() / self.n as f64).sqrt()
    }

    pub fn estimate(&self) -> McEstimate {
        McEstimate {
            mean: self.mean,
            std_error: self.std_error(),
            n_samples: self.n,
        }
    }
}

impl FromIterator<f64> for Moments {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut m = Moments::default();
        for x in iter {
            m.push(x);
        }
        m
    }
}

/// A Monte Carlo estimate. `n_samples` counts independent samples, so an
/// antithetic run reports pairs, not paths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_samples: u64,
}

impl McEstimate {
    /// Affine map `a + b·X`; the standard error scales with `|b|`.
    pub fn affine(&self, offset: f64, scale: f64) -> McEstimate {
        McEstimate {
            mean: offset + scale * self.mean,
            std_error: scale.abs() * self.std_error,
            n_samples: self.n_samples,
        }
    }

    /// `|a − b| ≤ k·√(se_a² + se_b²)`, for independent estimates.
    pub fn agrees_with(&self, other: &McEstimate, k: f64) -> bool {
        (self.mean - other.mean).abs() <= k * self.joint_se(other)
    }

    pub fn joint_se(&self, other: &McEstimate) -> f64 {
        self.std_error.hypot(other.std_error)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn matches_two_pass_formulas() {
        let xs = [1.0, 4.0, 2.5, -3.0, 0.5];
        let m: Moments = xs.iter().copied().collect();
        let mean = xs.iter().sum::<f64>() / 5.0;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 4.0;
        assert_relative_eq!(m.mean(), mean, max_relative = 1e-15);
        assert_relative_eq!(m.variance(), var, max_relative = 1e-14);
    }

    proptest! {
        #[test]
        fn merge_equals_single_pass(xs in proptest::collection::vec(-1e3f64..1e3, 2..200), cut in 0usize..200) {
            let cut = cut.min(xs.len());
            let whole: Moments = xs.iter().copied().collect();
            let mut left: Moments = xs[..cut].iter().copied().collect();
            let right: Moments = xs[cut..].iter().copied().collect();
            left.merge(&right);
            prop_assert_eq!(left.count(), whole.count());
            prop_assert!((left.mean() - whole.mean()).abs() <= 1e-10 * (1.0 + whole.mean().abs()));
            prop_assert!((left.variance() - whole.variance()).abs() <= 1e-9 * (1.0 + whole.variance()));
        }
    }
}
