use jdsv_core::engine::{
    estimate_atm, price_calls, simulate_terminal, strike_smile, sweep, JumpCoupling, ModelConfig,
    SweepAxis, SweepOutcome,
};
use jdsv_core::gauss::{bac_price, BachelierInputs};
use jdsv_core::levy::{c1_of, CgmyParams, CompoundPoissonParams, JumpLaw, LevySpec};
use jdsv_core::quad::{integrate, Tolerance};
use jdsv_core::special::norm_cdf;
use jdsv_core::stats::Moments;
use jdsv_core::vol::VolModelSpec;
use num_complex::Complex64;
use statrs::function::gamma::gamma;

fn constant(sigma0: f64) -> VolModelSpec {
    VolModelSpec::Constant { sigma0 }
}

fn fbergomi(sigma0: f64, hurst: f64) -> VolModelSpec {
    VolModelSpec::FractionalBergomi {
        sigma0,
        alpha: 0.5,
        hurst,
    }
}

fn cp() -> LevySpec {
    LevySpec::CompoundPoisson(CompoundPoissonParams {
        intensity: 5.0,
        jump_law: JumpLaw::Gaussian {
            mean: 0.01,
            sd: 0.2,
        },
    })
}

fn within(a: f64, b: f64, se: f64, k: f64) -> bool {
    (a - b).abs() <= k * se
}

/// Asymptotic Kolmogorov survival `P(√n·D > λ)`.
fn kolmogorov_p(lambda: f64) -> f64 {
    let s: f64 = (1..100)
        .map(|k| {
            let k = k as f64;
            let sign = if k as i64 % 2 == 1 { 1.0 } else { -1.0 };
            sign * (-2.0 * k * k * lambda * lambda).exp()
        })
        .sum();
    (2.0 * s).clamp(0.0, 1.0)
}

#[test]
fn constant_vol_terminal_is_gaussian() {
    let cfg = ModelConfig::new(100.0, -0.3, constant(0.2), LevySpec::None, 1.0)
        .with_paths(100_000)
        .with_steps(8);
    let cfg = ModelConfig {
        antithetic: false,
        ..cfg
    };
    let mut x = simulate_terminal(&cfg).unwrap();
    x.sort_by(f64::total_cmp);
    let n = x.len() as f64;
    let d = x
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let f = norm_cdf((v - 100.0) / 0.2);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max);
    let p = kolmogorov_p(n.sqrt() * d);
    assert!(p > 0.01, "KS D={d} p={p}");
}

#[test]
fn antithetic_pairs_mirror_without_jumps() {
    let cfg = ModelConfig::new(10.0, 0.4, constant(0.3), LevySpec::None, 1e-3)
        .with_paths(4096)
        .with_steps(16);
    let x = simulate_terminal(&cfg).unwrap();
    for pair in x.chunks(2) {
        assert!((pair[0] + pair[1] - 20.0).abs() < 1e-12, "{pair:?}");
    }
}

#[test]
fn jump_coupling_controls_pair_structure() {
    let base = ModelConfig::new(10.0, 0.0, constant(0.3), cp(), 1.0)
        .with_paths(20_000)
        .with_steps(4);
    let shared = simulate_terminal(&base).unwrap();
    // pair mean minus s0 is exactly the common jump, so pairs with no jump sum to 2·s0 less the drift
    let drift = -5.0 * 0.01;
    let hits = shared
        .chunks(2)
        .filter(|p| (p[0] + p[1] - 20.0 - 2.0 * drift).abs() < 1e-12)
        .count();
    let expected = (-5.0_f64).exp() * 10_000.0;
    assert!(
        (hits as f64 - expected).abs() < 5.0 * expected.sqrt(),
        "{hits} vs {expected}"
    );

    let indep = ModelConfig {
        jump_coupling: JumpCoupling::Independent,
        ..base
    };
    let a = estimate_atm(&base).unwrap();
    let b = estimate_atm(&indep).unwrap();
    assert!(
        a.level.agrees_with(&b.level, 3.0),
        "{:?} {:?}",
        a.level,
        b.level
    );
    assert!(
        a.skew.agrees_with(&b.skew, 3.0),
        "{:?} {:?}",
        a.skew,
        b.skew
    );
}

#[test]
fn terminal_variance_adds_jump_variance() {
    let cfg = ModelConfig::new(0.0, -0.3, constant(0.2), cp(), 1.0)
        .with_paths(400_000)
        .with_steps(4);
    let cfg = ModelConfig {
        antithetic: false,
        ..cfg
    };
    let x = simulate_terminal(&cfg).unwrap();
    let m: Moments = x.iter().copied().collect();
    let var = 0.04 + 5.0 * (0.01f64.powi(2) + 0.04);
    assert!((var - 0.2405).abs() < 1e-15);
    let mu4: f64 = x.iter().map(|v| (v - m.mean()).powi(4)).sum::<f64>() / x.len() as f64;
    let se = ((mu4 - var * var) / x.len() as f64).sqrt();
    assert!(
        within(m.variance(), var, se, 3.0),
        "{} ± {se}",
        m.variance()
    );
    assert!(within(m.mean(), 0.0, m.std_error(), 3.0));
}

#[test]
fn bachelier_level_and_prices() {
    let cfg = ModelConfig::new(100.0, -0.3, constant(0.2), LevySpec::None, 1e-3)
        .with_paths(200_000)
        .with_steps(4);
    let p = estimate_atm(&cfg).unwrap();
    assert!(
        within(p.level.mean, 0.2, p.level.std_error, 3.0),
        "{:?}",
        p.level
    );
    assert!(
        within(p.skew.mean, 0.0, p.skew.std_error, 3.0),
        "{:?}",
        p.skew
    );
    assert_eq!(p.scaled_skew, p.skew);
    assert!(!p.skew_hypothesis_violated);

    let strikes = [99.98, 100.0, 100.01];
    for (k, c) in strikes.iter().zip(price_calls(&cfg, &strikes).unwrap()) {
        let exact = bac_price(&BachelierInputs::new(1e-3, 100.0, *k, 0.2)).unwrap();
        assert!(
            within(c.mean, exact, c.std_error, 3.0),
            "k={k}: {c:?} vs {exact}"
        );
    }
    for row in strike_smile(&cfg, &strikes).unwrap() {
        let pt = row.unwrap();
        assert!(
            within(pt.implied_vol, 0.2, pt.implied_vol_se, 3.0),
            "{pt:?}"
        );
    }
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let cfg = ModelConfig::new(100.0, -0.3, fbergomi(0.3, 0.3), cp(), 1e-3)
        .with_paths(20_000)
        .with_steps(16);
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| estimate_atm(&cfg).unwrap())
    };
    let one = run(1);
    assert_eq!(one, run(4));
    assert_eq!(one, estimate_atm(&cfg).unwrap());
    assert_ne!(one, estimate_atm(&cfg.with_seed(1)).unwrap());
}

#[test]
fn antithetic_and_plain_estimates_agree() {
    let cfg = ModelConfig::new(100.0, -0.3, fbergomi(0.3, 0.3), cp(), 1e-3)
        .with_paths(100_000)
        .with_steps(32);
    let plain = ModelConfig {
        antithetic: false,
        ..cfg
    };
    let a = estimate_atm(&cfg).unwrap();
    let b = estimate_atm(&plain).unwrap();
    assert!(
        a.level.agrees_with(&b.level, 3.0),
        "{:?} {:?}",
        a.level,
        b.level
    );
    assert!(
        a.skew.agrees_with(&b.skew, 3.0),
        "{:?} {:?}",
        a.skew,
        b.skew
    );
    assert_eq!(a.level.n_samples, 50_000);
    assert_eq!(b.level.n_samples, 100_000);
}

#[test]
fn step_refinement_is_within_noise() {
    let coarse = ModelConfig::new(100.0, -0.3, fbergomi(0.3, 0.3), LevySpec::None, 1e-2)
        .with_paths(100_000)
        .with_steps(64);
    let fine = coarse.with_steps(128);
    let a = estimate_atm(&coarse).unwrap();
    let b = estimate_atm(&fine.with_seed(77)).unwrap();
    assert!(
        a.level.agrees_with(&b.level, 3.0),
        "{:?} {:?}",
        a.level,
        b.level
    );
    assert!(
        a.skew.agrees_with(&b.skew, 3.0),
        "{:?} {:?}",
        a.skew,
        b.skew
    );
}

/// `P(σW_T + L_T ≥ 0)` by Gil-Pelaez inversion of the CGMY characteristic function.
fn cgmy_upper_probability(sigma: f64, p: &CgmyParams, t: f64) -> f64 {
    let g = gamma(-p.y);
    let c1 = c1_of(&LevySpec::Cgmy(*p)).unwrap().value.to_f64();
    let psi = |u: f64| -> Complex64 {
        let iu = Complex64::new(0.0, u);
        // the closed form has mean c₁ for every Y, so compensate explicitly
        p.c * g * ((p.m - iu).powf(p.y) - p.m.powf(p.y) + (p.g + iu).powf(p.y) - p.g.powf(p.y))
            - iu * c1
    };
    let top = 40.0 / (sigma * t.sqrt());
    let integral = integrate(
        |u: f64| {
            if u == 0.0 {
                return 0.0;
            }
            let phi = (Complex64::new(-0.5 * sigma * sigma * t * u * u, 0.0) + t * psi(u)).exp();
            phi.im / u
        },
        0.0,
        top,
        Tolerance::relative(1e-10),
    )
    .unwrap();
    0.5 + integral / std::f64::consts::PI
}

#[test]
fn skew_matches_fourier_oracle() {
    let (sigma, t) = (0.2, 1e-2);
    for p in [
        CgmyParams::new(0.05, 2.0, 4.0, 1.5),
        CgmyParams::new(0.5, 3.0, 6.0, 0.5),
    ] {
        let p = CgmyParams {
            small_jump_gaussian: true,
            ..p.with_eps(1e-3)
        };
        let prob = cgmy_upper_probability(sigma, &p, t);
        let exact = (0.5 - prob) / (t / (2.0 * std::f64::consts::PI)).sqrt();
        let cfg = ModelConfig::new(100.0, 0.0, constant(sigma), LevySpec::Cgmy(p), t)
            .with_paths(400_000)
            .with_steps(2);
        let skew = estimate_atm(&cfg).unwrap().skew;
        assert!(
            within(skew.mean, exact, skew.std_error, 3.0),
            "Y={}: {skew:?} vs {exact}",
            p.y
        );
    }
}

#[test]
fn sweeps_keep_failures_local() {
    let cfg = ModelConfig::new(100.0, -0.3, constant(0.2), LevySpec::None, 1e-3)
        .with_paths(2048)
        .with_steps(2);
    let rows = sweep(&cfg, SweepAxis::Sigma0, &[0.1, -0.1, 0.3]).unwrap();
    assert!(matches!(rows[0].outcome, Ok(SweepOutcome::Atm(_))));
    assert!(rows[1].outcome.as_ref().unwrap_err().is_validation());
    assert!(rows[2].outcome.is_ok());
    let rows = sweep(&cfg, SweepAxis::Strike, &[99.0, 100.0, 300.0]).unwrap();
    assert!(rows[1].outcome.is_ok());
    // far out of the money the Monte Carlo price is zero and cannot be inverted
    assert!(rows[2].outcome.is_err());
    assert!(sweep(&cfg, SweepAxis::Maturity, &[]).is_err());
}

#[test]
fn rough_scaled_skew_is_flat_in_maturity() {
    let centred = LevySpec::CompoundPoisson(CompoundPoissonParams {
        intensity: 5.0,
        jump_law: JumpLaw::Gaussian { mean: 0.0, sd: 0.2 },
    });
    for levy in [LevySpec::None, centred] {
        let points: Vec<_> = [1e-4, 1e-3, 1e-2]
            .iter()
            .map(|&t| {
                let cfg = ModelConfig::new(100.0, -0.3, fbergomi(0.3, 0.4), levy, t)
                    .with_paths(200_000)
                    .with_steps(64);
                estimate_atm(&cfg).unwrap().scaled_skew
            })
            .collect();
        for w in points.windows(2) {
            assert!(
                w[0].agrees_with(&w[1], 3.0),
                "{levy:?}: {:?} vs {:?}",
                w[0],
                w[1]
            );
        }
    }
}
