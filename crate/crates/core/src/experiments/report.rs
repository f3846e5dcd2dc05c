//! Experiment reports and their CSV and JSON layouts.
//!
//! CSV layouts, one row per cell:
//!
//! * `table1`: `generating_family,selected_family,frequency`; failed
//!   replicates appear with `selected_family = failed`.
//! * `table2`: `spec,threshold,replicates,insufficient,fit_failures,
//!   mean_excesses,gpd_tested,gpd_rejected,gpd_rejection_rate,gamma0_tested,
//!   gamma0_not_rejected,gamma0_non_rejection_rate`.
//! * `beta_sweep`: `beta,inv_one_plus_beta,replicates,insufficient,
//!   fit_failures,gpd_tested,gpd_rejected,rejection_proportion`.
//! * `maxima`: `distribution,n,maximum,probability,i_n,oscillation_mass,tv_to_poisson`.
//!
//! Undefined rates are empty in CSV and `null` in JSON.

use std::io::Write;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mixing::{Family, MixingSpec};

use super::config::{ExperimentConfig, ExperimentTag};

pub const VERSION_TAG: &str = concat!("poismix ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Json,
}

impl std::str::FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(Error::Config(format!(
                "unknown format '{other}' (expected csv or json)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionCount {
    pub family: Family,
    pub frequency: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table1Row {
    pub generating: MixingSpec,
    pub label: String,
    pub selected: Vec<SelectionCount>,
    pub failed: usize,
    /// One message per failed replicate, in replicate order.
    pub failures: Vec<String>,
}

impl Table1Row {
    pub fn frequency(&self, family: Family) -> usize {
        self.selected
            .iter()
            .find(|c| c.family == family)
            .map_or(0, |c| c.frequency)
    }
}

/// Counts behind one threshold-study cell.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ThresholdCounts {
    pub replicates: usize,
    /// Replicates with too few excesses to fit.
    pub insufficient: usize,
    /// Replicates whose fit or bootstrap failed.
    pub fit_failures: usize,
    pub total_excesses: u64,
    pub gpd_tested: usize,
    pub gpd_rejected: usize,
    pub gamma0_tested: usize,
    pub gamma0_not_rejected: usize,
}

fn rate(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

impl ThresholdCounts {
    pub fn mean_excesses(&self) -> f64 {
        self.total_excesses as f64 / self.replicates as f64
    }

    /// GPD rejections at 5% among fitted replicates.
    pub fn gpd_rejection_rate(&self) -> Option<f64> {
        rate(self.gpd_rejected, self.gpd_tested)
    }

    /// Non-rejections of γ = 0 among replicates where the GPD was not rejected.
    pub fn gamma0_non_rejection_rate(&self) -> Option<f64> {
        rate(self.gamma0_not_rejected, self.gamma0_tested)
    }

    pub fn merge(mut self, o: Self) -> Self {
        self.replicates += o.replicates;
        self.insufficient += o.insufficient;
        self.fit_failures += o.fit_failures;
        self.total_excesses += o.total_excesses;
        self.gpd_tested += o.gpd_tested;
        self.gpd_rejected += o.gpd_rejected;
        self.gamma0_tested += o.gamma0_tested;
        self.gamma0_not_rejected += o.gamma0_not_rejected;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table2Cell {
    pub spec: MixingSpec,
    pub label: String,
    pub threshold: f64,
    pub counts: ThresholdCounts,
    pub mean_excesses: f64,
    pub gpd_rejection_rate: Option<f64>,
    pub gamma0_non_rejection_rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub beta: f64,
    pub inv_one_plus_beta: f64,
    pub counts: ThresholdCounts,
    pub rejection_proportion: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaxProbability {
    pub maximum: u64,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaximaCell {
    pub label: String,
    /// `None` for the Poisson reference rows.
    pub spec: Option<MixingSpec>,
    pub n: u64,
    pub distribution: Vec<MaxProbability>,
    /// Modal sample maximum.
    pub i_n: u64,
    /// `P(max ∈ {Iₙ, Iₙ+1})`.
    pub oscillation_mass: f64,
    /// Total variation distance to the Poisson(x₀) maxima at the same n.
    pub tv_to_poisson: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Results {
    Table1 {
        rows: Vec<Table1Row>,
    },
    Table2 {
        cells: Vec<Table2Cell>,
    },
    BetaSweep {
        points: Vec<SweepPoint>,
        spearman: Option<f64>,
    },
    Maxima {
        cells: Vec<MaximaCell>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub version: String,
    pub experiment: ExperimentTag,
    pub config: ExperimentConfig,
    pub results: Results,
    /// Wall-clock time; kept out of the written report so reruns compare byte for byte.
    #[serde(skip)]
    pub elapsed: Duration,
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl ExperimentReport {
    pub fn write_json<W: Write>(&self, mut out: W) -> Result<()> {
        serde_json::to_writer_pretty(&mut out, self)?;
        writeln!(out)?;
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let csv_err = |e: csv::Error| Error::Io(e.to_string());
        match &self.results {
            Results::Table1 { rows } => {
                w.write_record(["generating_family", "selected_family", "frequency"])
                    .map_err(csv_err)?;
                for row in rows {
                    for c in &row.selected {
                        w.write_record([row.label.as_str(), c.family.name(), &c.frequency.to_string()])
                            .map_err(csv_err)?;
                    }
                    w.write_record([row.label.as_str(), "failed", &row.failed.to_string()])
                        .map_err(csv_err)?;
                }
            }
            Results::Table2 { cells } => {
                w.write_record([
                    "spec",
                    "threshold",
                    "replicates",
                    "insufficient",
                    "fit_failures",
                    "mean_excesses",
                    "gpd_tested",
                    "gpd_rejected",
                    "gpd_rejection_rate",
                    "gamma0_tested",
                    "gamma0_not_rejected",
                    "gamma0_non_rejection_rate",
                ])
                .map_err(csv_err)?;
                for c in cells {
                    let k = &c.counts;
                    w.write_record([
                        c.label.clone(),
                        c.threshold.to_string(),
                        k.replicates.to_string(),
                        k.insufficient.to_string(),
                        k.fit_failures.to_string(),
                        c.mean_excesses.to_string(),
                        k.gpd_tested.to_string(),
                        k.gpd_rejected.to_string(),
                        opt(c.gpd_rejection_rate),
                        k.gamma0_tested.to_string(),
                        k.gamma0_not_rejected.to_string(),
                        opt(c.gamma0_non_rejection_rate),
                    ])
                    .map_err(csv_err)?;
                }
            }
            Results::BetaSweep { points, .. } => {
                w.write_record([
                    "beta",
                    "inv_one_plus_beta",
                    "replicates",
                    "insufficient",
                    "fit_failures",
                    "gpd_tested",
                    "gpd_rejected",
                    "rejection_proportion",
                ])
                .map_err(csv_err)?;
                for p in points {
                    let k = &p.counts;
                    w.write_record([
                        p.beta.to_string(),
                        p.inv_one_plus_beta.to_string(),
                        k.replicates.to_string(),
                        k.insufficient.to_string(),
                        k.fit_failures.to_string(),
                        k.gpd_tested.to_string(),
                        k.gpd_rejected.to_string(),
                        opt(p.rejection_proportion),
                    ])
                    .map_err(csv_err)?;
                }
            }
            Results::Maxima { cells } => {
                w.write_record([
                    "distribution",
                    "n",
                    "maximum",
                    "probability",
                    "i_n",
                    "oscillation_mass",
                    "tv_to_poisson",
                ])
                .map_err(csv_err)?;
                for c in cells {
                    for p in &c.distribution {
                        w.write_record([
                            c.label.clone(),
                            c.n.to_string(),
                            p.maximum.to_string(),
                            p.probability.to_string(),
                            c.i_n.to_string(),
                            c.oscillation_mass.to_string(),
                            opt(c.tv_to_poisson),
                        ])
                        .map_err(csv_err)?;
                    }
                }
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn write<W: Write>(&self, format: OutputFormat, out: W) -> Result<()> {
        match format {
            OutputFormat::Csv => self.write_csv(out),
            OutputFormat::Json => self.write_json(out),
        }
    }

    pub fn to_bytes(&self, format: OutputFormat) -> Result<Vec<u8>> {
        let mut buf = Vec::new();
        self.write(format, &mut buf)?;
        Ok(buf)
    }
}
