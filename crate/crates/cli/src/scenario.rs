//! Experiment definitions and the bundled figure scenarios.

use std::path::{Path, PathBuf};

use jdsv_core::engine::{point_config, ModelConfig, SweepAxis};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
}

/// One experiment: a model template swept along one axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    /// Figure or table the scenario reproduces.
    #[serde(default)]
    pub anchor: String,
    #[serde(default)]
    pub description: String,
    pub model: ModelConfig,
    pub sweep: Sweep,
    /// CSV file name inside the output directory; defaults to `<name>.csv`.
    #[serde(default)]
    pub output: Option<PathBuf>,
    /// Independent reruns with consecutive seeds.
    #[serde(default = "one")]
    pub repetitions: usize,
}

fn one() -> usize {
    1
}

const BUNDLED: &[(&str, &str)] = &[
    (
        "fig1_level_H07",
        include_str!("../scenarios/fig1_level_H07.toml"),
    ),
    (
        "fig2_skew_H07_gauss_neg",
        include_str!("../scenarios/fig2_skew_H07_gauss_neg.toml"),
    ),
    (
        "fig2_skew_H07_gauss_zero",
        include_str!("../scenarios/fig2_skew_H07_gauss_zero.toml"),
    ),
    (
        "fig2_skew_H07_laplace",
        include_str!("../scenarios/fig2_skew_H07_laplace.toml"),
    ),
    (
        "fig3a_level_H04_laplace",
        include_str!("../scenarios/fig3a_level_H04_laplace.toml"),
    ),
    (
        "fig3b_skew_T_H04_gauss_neg",
        include_str!("../scenarios/fig3b_skew_T_H04_gauss_neg.toml"),
    ),
    (
        "fig3b_skew_T_H04_gauss_pos",
        include_str!("../scenarios/fig3b_skew_T_H04_gauss_pos.toml"),
    ),
    (
        "fig3b_skew_T_H04_gauss_zero",
        include_str!("../scenarios/fig3b_skew_T_H04_gauss_zero.toml"),
    ),
    (
        "fig4_skew_T_H04_gauss_neg",
        include_str!("../scenarios/fig4_skew_T_H04_gauss_neg.toml"),
    ),
    (
        "fig4_skew_T_H04_gauss_pos",
        include_str!("../scenarios/fig4_skew_T_H04_gauss_pos.toml"),
    ),
    (
        "fig4_skew_T_H04_gauss_zero",
        include_str!("../scenarios/fig4_skew_T_H04_gauss_zero.toml"),
    ),
    (
        "fig4_skew_T_H04_nojump",
        include_str!("../scenarios/fig4_skew_T_H04_nojump.toml"),
    ),
    (
        "fig5_level_H04_cgmy_sym",
        include_str!("../scenarios/fig5_level_H04_cgmy_sym.toml"),
    ),
    (
        "fig6_skew_H07_cgmy_sym",
        include_str!("../scenarios/fig6_skew_H07_cgmy_sym.toml"),
    ),
    (
        "fig7_skew_H05_cgmy_sym",
        include_str!("../scenarios/fig7_skew_H05_cgmy_sym.toml"),
    ),
    (
        "fig8_skew_H04_cgmy_sym",
        include_str!("../scenarios/fig8_skew_H04_cgmy_sym.toml"),
    ),
    (
        "fig9_level_H04_cgmy_asym",
        include_str!("../scenarios/fig9_level_H04_cgmy_asym.toml"),
    ),
    (
        "fig10_skew_H07_cgmy_asym",
        include_str!("../scenarios/fig10_skew_H07_cgmy_asym.toml"),
    ),
    (
        "fig11_nig_smile",
        include_str!("../scenarios/fig11_nig_smile.toml"),
    ),
    (
        "fig12_skew_T_H04_cgmy",
        include_str!("../scenarios/fig12_skew_T_H04_cgmy.toml"),
    ),
    (
        "fig12_skew_T_H04_gauss",
        include_str!("../scenarios/fig12_skew_T_H04_gauss.toml"),
    ),
    (
        "fig12_skew_T_H04_nojump",
        include_str!("../scenarios/fig12_skew_T_H04_nojump.toml"),
    ),
    (
        "fig13_skew_H07_cgmy",
        include_str!("../scenarios/fig13_skew_H07_cgmy.toml"),
    ),
    (
        "fig13_skew_H07_laplace",
        include_str!("../scenarios/fig13_skew_H07_laplace.toml"),
    ),
    (
        "fig13_skew_H07_nojump",
        include_str!("../scenarios/fig13_skew_H07_nojump.toml"),
    ),
    (
        "tab1_nig_strike",
        include_str!("../scenarios/tab1_nig_strike.toml"),
    ),
];

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Checks every sweep point before anything is simulated.
    pub fn validate(&self) -> Result<(), CliError> {
        if self.repetitions == 0 {
            return Err(CliError::Config(
                "invalid parameter `repetitions`: must be at least 1".into(),
            ));
        }
        if self.sweep.values.is_empty() {
            return Err(CliError::Config(
                "invalid parameter `values`: sweep needs at least one value".into(),
            ));
        }
        self.model.validate()?;
        for &v in &self.sweep.values {
            if !v.is_finite() {
                return Err(CliError::Config(format!(
                    "invalid parameter `values`: must be finite, got {v}"
                )));
            }
            point_config(&self.model, self.sweep.axis, v)?;
        }
        Ok(())
    }

    pub fn output_file(&self, repetition: usize) -> PathBuf {
        let base = self
            .output
            .clone()
            .unwrap_or_else(|| PathBuf::from(format!("{}.csv", self.name)));
        if self.repetitions == 1 {
            return base;
        }
        let stem = base
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or(&self.name)
            .to_owned();
        base.with_file_name(format!("{stem}_rep{repetition}.csv"))
    }

    fn matches(&self, needle: &str) -> bool {
        [&self.name, &self.anchor, &self.description]
            .iter()
            .any(|s| s.to_lowercase().contains(needle))
    }
}

/// Every bundled scenario, in figure order.
pub fn bundled() -> Vec<Scenario> {
    BUNDLED
        .iter()
        .map(|(name, text)| {
            let s = Scenario::from_toml(text)
                .unwrap_or_else(|e| panic!("bundled scenario {name}: {e}"));
            debug_assert_eq!(&s.name, name);
            s
        })
        .collect()
}

pub fn find_bundled(name: &str) -> Option<Scenario> {
    BUNDLED
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| Scenario::from_toml(text).expect("bundled scenarios parse"))
}

/// Bundled scenarios whose name, anchor or description contains `filter`
/// (case-insensitive).
pub fn list(filter: Option<&str>) -> Vec<Scenario> {
    let needle = filter.map(str::to_lowercase);
    bundled()
        .into_iter()
        .filter(|s| needle.as_deref().is_none_or(|n| s.matches(n)))
        .collect()
}

/// A path to a config file, or else the name of a bundled scenario.
pub fn resolve(arg: &str) -> Result<Scenario, CliError> {
    let path = Path::new(arg);
    if path.is_file() {
        let text = std::fs::read_to_string(path)?;
        return Scenario::from_toml(&text);
    }
    find_bundled(arg).ok_or_else(|| {
        CliError::Config(format!("no config file or bundled scenario named `{arg}`"))
    })
}
