//! Experiment configuration and its JSON file form.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evt::DEFAULT_BOOTSTRAP;
use crate::mixing::{Family, MixingSpec};
use crate::select::DEFAULT_FAMILIES;

pub const DEFAULT_SEED: u64 = 20_190_601;
pub const MIN_SAMPLE_SIZE: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentTag {
    Table1,
    Table2,
    BetaSweep,
    Maxima,
}

impl ExperimentTag {
    pub const ALL: [ExperimentTag; 4] = [Self::Table1, Self::Table2, Self::BetaSweep, Self::Maxima];

    pub fn name(self) -> &'static str {
        match self {
            Self::Table1 => "table1",
            Self::Table2 => "table2",
            Self::BetaSweep => "beta_sweep",
            Self::Maxima => "maxima",
        }
    }
}

impl fmt::Display for ExperimentTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|t| t.name() == s).ok_or_else(|| {
            Error::Config(format!(
                "unknown experiment '{s}' (expected table1, table2, beta_sweep or maxima)"
            ))
        })
    }
}

/// A fully resolved experiment configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentTag,
    /// Generating mixing laws; unused by `beta_sweep`, which builds Gamma(α, β) from `beta_grid`.
    pub specs: Vec<MixingSpec>,
    pub sample_size: usize,
    pub replicates: usize,
    pub thresholds: Vec<f64>,
    pub bootstrap: usize,
    pub base_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    /// Candidate families for `table1`.
    pub families: Vec<Family>,
    /// Rate parameters for `beta_sweep`.
    pub beta_grid: Vec<f64>,
    /// Shape parameter for `beta_sweep`.
    pub sweep_alpha: f64,
    /// Numbers of draws per maximum for `maxima`.
    pub maxima_sizes: Vec<u64>,
}

/// The same fields, all optional, as read from a file.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub experiment: Option<ExperimentTag>,
    pub specs: Option<Vec<MixingSpec>>,
    pub sample_size: Option<usize>,
    pub replicates: Option<usize>,
    pub thresholds: Option<Vec<f64>>,
    pub bootstrap: Option<usize>,
    pub base_seed: Option<u64>,
    pub output: Option<PathBuf>,
    pub families: Option<Vec<Family>>,
    pub beta_grid: Option<Vec<f64>>,
    pub sweep_alpha: Option<f64>,
    pub maxima_sizes: Option<Vec<u64>>,
}

fn specs(list: Vec<Result<MixingSpec>>) -> Vec<MixingSpec> {
    list.into_iter().map(|s| s.expect("built-in spec is valid")).collect()
}

/// The eight generating laws of the selection and threshold studies.
pub fn study_specs() -> Vec<MixingSpec> {
    specs(vec![
        MixingSpec::frechet(1.0, 1.0),
        MixingSpec::frechet(2.0, 1.0),
        MixingSpec::lognormal(1.0, 1.0),
        MixingSpec::lognormal(0.0, 1.0),
        MixingSpec::gamma(2.0, 1.0),
        MixingSpec::gamma(2.0, 2.0),
        MixingSpec::uniform(10.0),
        MixingSpec::uniform(5.0),
    ])
}

/// Rates β with `(1+β)^{-1}` evenly spaced from 1/9 to 10/11.
pub fn default_beta_grid(points: usize) -> Vec<f64> {
    let (lo, hi) = (1.0 / 9.0, 10.0 / 11.0);
    (0..points)
        .map(|i| {
            let v = if points == 1 {
                lo
            } else {
                lo + (hi - lo) * i as f64 / (points - 1) as f64
            };
            1.0 / v - 1.0
        })
        .collect()
}

impl ExperimentConfig {
    pub fn defaults(experiment: ExperimentTag) -> Self {
        let base = Self {
            experiment,
            specs: study_specs(),
            sample_size: 1000,
            replicates: 200,
            thresholds: vec![0.95, 0.975],
            bootstrap: DEFAULT_BOOTSTRAP,
            base_seed: DEFAULT_SEED,
            output: None,
            families: DEFAULT_FAMILIES.to_vec(),
            beta_grid: default_beta_grid(12),
            sweep_alpha: 2.0,
            maxima_sizes: vec![10, 100, 1_000, 10_000],
        };
        match experiment {
            ExperimentTag::Table1 => Self {
                sample_size: 250,
                replicates: 100,
                ..base
            },
            ExperimentTag::Table2 => base,
            ExperimentTag::BetaSweep => Self {
                specs: Vec::new(),
                replicates: 100,
                thresholds: vec![0.95],
                ..base
            },
            ExperimentTag::Maxima => Self {
                specs: specs(vec![
                    MixingSpec::scaled_beta(5.0, 2.0, 0.25),
                    MixingSpec::scaled_beta(5.0, 2.0, 1.0),
                    MixingSpec::scaled_beta(5.0, 2.0, 2.0),
                    MixingSpec::uniform(5.0),
                ]),
                replicates: 10_000,
                ..base
            },
        }
    }

    /// Defaults for `experiment` overridden by the fields present in `file`.
    pub fn resolve(experiment: ExperimentTag, file: ConfigFile) -> Result<Self> {
        if let Some(tag) = file.experiment {
            if tag != experiment {
                return Err(Error::Config(format!(
                    "config is for experiment '{tag}' but '{experiment}' was requested"
                )));
            }
        }
        let d = Self::defaults(experiment);
        let cfg = Self {
            experiment,
            specs: file.specs.unwrap_or(d.specs),
            sample_size: file.sample_size.unwrap_or(d.sample_size),
            replicates: file.replicates.unwrap_or(d.replicates),
            thresholds: file.thresholds.unwrap_or(d.thresholds),
            bootstrap: file.bootstrap.unwrap_or(d.bootstrap),
            base_seed: file.base_seed.unwrap_or(d.base_seed),
            output: file.output.or(d.output),
            families: file.families.unwrap_or(d.families),
            beta_grid: file.beta_grid.unwrap_or(d.beta_grid),
            sweep_alpha: file.sweep_alpha.unwrap_or(d.sweep_alpha),
            maxima_sizes: file.maxima_sizes.unwrap_or(d.maxima_sizes),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json(experiment: ExperimentTag, text: &str) -> Result<Self> {
        let file: ConfigFile = serde_json::from_str(text).map_err(|e| Error::Config(format!("invalid config: {e}")))?;
        Self::resolve(experiment, file)
    }

    pub fn from_path(experiment: ExperimentTag, path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(experiment, &text)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.replicates < 1 {
            return fail("replicates must be at least 1".into());
        }
        if self.sample_size < MIN_SAMPLE_SIZE {
            return fail(format!(
                "sample_size must be at least {MIN_SAMPLE_SIZE}, got {}",
                self.sample_size
            ));
        }
        if self.thresholds.is_empty() || self.thresholds.iter().any(|&p| !(p > 0.0 && p < 1.0)) {
            return fail("thresholds must be a non-empty set of levels in (0, 1)".into());
        }
        for spec in &self.specs {
            spec.validate()?;
        }
        match self.experiment {
            ExperimentTag::Table1 => {
                if self.specs.is_empty() || self.families.is_empty() {
                    return fail("table1 needs generating specs and candidate families".into());
                }
            }
            ExperimentTag::Table2 | ExperimentTag::BetaSweep => {
                if self.bootstrap < crate::evt::MIN_BOOTSTRAP {
                    return fail(format!("bootstrap must be at least {}", crate::evt::MIN_BOOTSTRAP));
                }
                if self.experiment == ExperimentTag::Table2 && self.specs.is_empty() {
                    return fail("table2 needs generating specs".into());
                }
                if self.experiment == ExperimentTag::BetaSweep {
                    if self.beta_grid.is_empty() || self.beta_grid.iter().any(|&b| !(b > 0.0 && b.is_finite())) {
                        return fail("beta_grid must hold positive rates".into());
                    }
                    if !(self.sweep_alpha > 0.0 && self.sweep_alpha.is_finite()) {
                        return fail("sweep_alpha must be positive".into());
                    }
                }
            }
            ExperimentTag::Maxima => {
                if self.specs.is_empty() || self.maxima_sizes.is_empty() || self.maxima_sizes.contains(&0) {
                    return fail("maxima needs specs and positive sizes".into());
                }
            }
        }
        Ok(())
    }
}
