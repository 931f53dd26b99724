//! Running scenarios and writing their CSV rows.

use std::io::Write;
use std::path::{Path, PathBuf};

use jdsv_core::asymptotics::{theoretical_skew, AsymptoteReport, SkewLimit};
use jdsv_core::engine::{point_config, sweep, ModelConfig, SweepAxis, SweepOutcome};
use jdsv_core::levy::{C1Provenance, ExtendedReal};

use crate::{CliError, Scenario};

pub const CSV_HEADER: [&str; 11] = [
    "sweep_value",
    "mc_level",
    "mc_level_se",
    "mc_skew",
    "mc_skew_se",
    "mc_scaled_skew",
    "mc_scaled_skew_se",
    "theory_level",
    "theory_skew_or_scaled",
    "regime",
    "c1",
];

const THEORY_HEADER: [&str; 8] = [
    "sweep_value",
    "theory_level",
    "theory_skew_or_scaled",
    "skew_kind",
    "raw_skew_limit",
    "regime",
    "c1",
    "c1_provenance",
];

fn num(x: f64) -> String {
    format!("{x}")
}

fn extended(x: ExtendedReal) -> String {
    match x {
        ExtendedReal::Finite(v) => num(v),
        ExtendedReal::PosInfinity => "inf".into(),
        ExtendedReal::NegInfinity => "-inf".into(),
    }
}

fn provenance(p: C1Provenance) -> &'static str {
    match p {
        C1Provenance::ClosedForm => "closed_form",
        C1Provenance::ZeroBySymmetry => "zero_by_symmetry",
        C1Provenance::Divergent => "divergent",
    }
}

fn theory_target(r: &AsymptoteReport) -> String {
    r.skew.target().map(num).unwrap_or_default()
}

/// The model the theory is evaluated at: the sweep point for a `sigma0` sweep,
/// the template otherwise.
fn theory_config(s: &Scenario, value: f64) -> Result<ModelConfig, CliError> {
    Ok(match s.sweep.axis {
        SweepAxis::Sigma0 => point_config(&s.model, SweepAxis::Sigma0, value)?,
        SweepAxis::Maturity | SweepAxis::Strike => s.model,
    })
}

fn theory(s: &Scenario, value: f64) -> Result<AsymptoteReport, CliError> {
    let c = theory_config(s, value)?;
    Ok(theoretical_skew(&c.vol, &c.levy, c.rho)?)
}

/// Theory columns for every sweep point.
pub fn theory_rows(s: &Scenario) -> Result<Vec<Vec<String>>, CliError> {
    s.validate()?;
    s.sweep
        .values
        .iter()
        .map(|&v| {
            let r = theory(s, v)?;
            let (kind, raw) = match r.skew {
                SkewLimit::Raw(x) => ("raw", num(x)),
                SkewLimit::Scaled { raw, .. } => ("scaled", extended(raw)),
                SkewLimit::NoFiniteSkew => ("none", String::new()),
            };
            Ok(vec![
                num(v),
                num(r.level),
                theory_target(&r),
                kind.into(),
                raw,
                r.regime.as_str().into(),
                extended(r.c1.value),
                provenance(r.c1.provenance).into(),
            ])
        })
        .collect()
}

pub fn write_theory<W: Write>(s: &Scenario, out: W) -> Result<(), CliError> {
    let rows = theory_rows(s)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(THEORY_HEADER)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub files: Vec<PathBuf>,
    /// Sweep values whose implied volatility could not be inverted.
    pub skipped: Vec<f64>,
}

/// Simulates every repetition of `s` and writes one CSV per repetition into `out_dir`.
///
/// A Monte Carlo price at or below intrinsic has no implied volatility; such a
/// strike gets empty estimate fields. Any other numerical failure aborts the run.
pub fn run_scenario<W: Write>(
    s: &Scenario,
    out_dir: &Path,
    mut log: W,
) -> Result<RunSummary, CliError> {
    s.validate()?;
    let theories = s
        .sweep
        .values
        .iter()
        .map(|&v| theory(s, v))
        .collect::<Result<Vec<_>, _>>()?;
    std::fs::create_dir_all(out_dir)?;
    let mut summary = RunSummary {
        files: Vec::new(),
        skipped: Vec::new(),
    };
    for rep in 0..s.repetitions {
        let model = s.model.with_seed(s.model.seed.wrapping_add(rep as u64));
        let rows = sweep(&model, s.sweep.axis, &s.sweep.values)?;
        let path = out_dir.join(s.output_file(rep));
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(CSV_HEADER)?;
        writeln!(
            log,
            "{} ({}), seed {}, {} paths",
            s.name, s.anchor, model.seed, model.n_paths
        )?;
        for (row, th) in rows.into_iter().zip(&theories) {
            let mut rec = vec![num(row.value)];
            match row.outcome {
                Ok(SweepOutcome::Atm(p)) => {
                    for e in [p.level, p.skew, p.scaled_skew] {
                        rec.extend([num(e.mean), num(e.std_error)]);
                    }
                    writeln!(
                        log,
                        "  {:>10}  level {:.6} ± {:.2e}  skew {:.6} ± {:.2e}  theory {}",
                        num(row.value),
                        p.level.mean,
                        p.level.std_error,
                        p.skew.mean,
                        p.skew.std_error,
                        theory_target(th)
                    )?;
                }
                Ok(SweepOutcome::Strike(p)) => {
                    rec.extend([num(p.implied_vol), num(p.implied_vol_se)]);
                    rec.extend(std::iter::repeat_n(String::new(), 4));
                    writeln!(
                        log,
                        "  {:>10}  iv {:.6} ± {:.2e}",
                        num(row.value),
                        p.implied_vol,
                        p.implied_vol_se
                    )?;
                }
                Err(jdsv_core::Error::Domain {
                    module: "gauss",
                    message,
                }) => {
                    rec.extend(std::iter::repeat_n(String::new(), 6));
                    writeln!(
                        log,
                        "  {:>10}  no implied volatility: {message}",
                        num(row.value)
                    )?;
                    if rep == 0 {
                        summary.skipped.push(row.value);
                    }
                }
                Err(e) => return Err(e.into()),
            }
            rec.extend([
                num(th.level),
                theory_target(th),
                th.regime.as_str().into(),
                extended(th.c1.value),
            ]);
            w.write_record(&rec)?;
        }
        w.flush()?;
        writeln!(log, "wrote {}", path.display())?;
        summary.files.push(path);
    }
    Ok(summary)
}
