//! Seeded simulation studies: model selection frequencies, threshold
//! excess tests, the Gamma rate sweep and the distribution of sample maxima.
//!
//! Every replicate draws from its own substream keyed by the base seed, a
//! cell label and the replicate index. Replicates run in parallel and are
//! aggregated by counting, so reports are identical across thread counts.

pub mod config;
pub mod report;

use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::evt::{ad_test_gpd, deviance_test, extract_excesses, fit_exponential, fit_gpd_mle};
use crate::mixing::MixingSpec;
use crate::mixture::{poisson_draw, MixtureModel};
use crate::numerics::empirical_quantile;
use crate::rng::{derive_seed, substream};
use crate::select::select_model;

pub use config::{ConfigFile, ExperimentConfig, ExperimentTag};
pub use report::{
    ExperimentReport, MaxProbability, MaximaCell, OutputFormat, Results, SelectionCount, SweepPoint, Table1Row,
    Table2Cell, ThresholdCounts, VERSION_TAG,
};

/// Nominal level of the goodness-of-fit and deviance tests.
pub const TEST_LEVEL: f64 = 0.05;

fn wrap(config: &ExperimentConfig, results: Results, started: Instant) -> ExperimentReport {
    ExperimentReport {
        version: VERSION_TAG.to_string(),
        experiment: config.experiment,
        config: config.clone(),
        results,
        elapsed: started.elapsed(),
    }
}

fn expect_tag(config: &ExperimentConfig, tag: ExperimentTag) -> Result<()> {
    config.validate()?;
    if config.experiment != tag {
        return Err(Error::Config(format!(
            "config is for '{}' but the '{tag}' runner was called",
            config.experiment
        )));
    }
    Ok(())
}

/// Run whichever experiment `config` names.
pub fn run(config: &ExperimentConfig) -> Result<ExperimentReport> {
    match config.experiment {
        ExperimentTag::Table1 => run_table1(config),
        ExperimentTag::Table2 => run_table2(config),
        ExperimentTag::BetaSweep => run_beta_sweep(config),
        ExperimentTag::Maxima => run_maxima(config),
    }
}

/// Selection frequencies of the candidate families for each generating law.
pub fn run_table1(config: &ExperimentConfig) -> Result<ExperimentReport> {
    expect_tag(config, ExperimentTag::Table1)?;
    let started = Instant::now();
    let mut rows = Vec::with_capacity(config.specs.len());
    for spec in &config.specs {
        let model = MixtureModel::new(*spec)?;
        let label = spec.to_string();
        let cell = format!("table1/{label}");
        let outcomes: Vec<std::result::Result<crate::mixing::Family, String>> = (0..config.replicates as u64)
            .into_par_iter()
            .map(|r| {
                let sample = model.sample(config.sample_size, &mut substream(config.base_seed, &cell, r, 0));
                select_model(&sample, &config.families)
                    .map(|s| s.best().family)
                    .map_err(|e| format!("replicate {r}: {e}"))
            })
            .collect();
        let mut selected: Vec<SelectionCount> = config
            .families
            .iter()
            .map(|&family| SelectionCount { family, frequency: 0 })
            .collect();
        let mut failures = Vec::new();
        for outcome in outcomes {
            match outcome {
                Ok(family) => {
                    if let Some(c) = selected.iter_mut().find(|c| c.family == family) {
                        c.frequency += 1;
                    }
                }
                Err(msg) => failures.push(msg),
            }
        }
        rows.push(Table1Row {
            generating: *spec,
            label,
            selected,
            failed: failures.len(),
            failures,
        });
    }
    Ok(wrap(config, Results::Table1 { rows }, started))
}

/// Outcome of the threshold tests on one simulated sample.
fn threshold_replicate(sample: &[u64], p: f64, bootstrap: usize, seed: u64) -> ThresholdCounts {
    let mut c = ThresholdCounts {
        replicates: 1,
        ..ThresholdCounts::default()
    };
    if let Ok(u) = empirical_quantile(sample, p) {
        c.total_excesses = sample.iter().filter(|&&y| y > u).count() as u64;
    }
    let excesses = match extract_excesses(sample, p) {
        Ok(e) => e.excesses,
        Err(_) => {
            c.insufficient = 1;
            return c;
        }
    };
    let gof = match ad_test_gpd(&excesses, bootstrap, seed) {
        Ok(g) => g,
        Err(_) => {
            c.fit_failures = 1;
            return c;
        }
    };
    c.gpd_tested = 1;
    if gof.p_value < TEST_LEVEL {
        c.gpd_rejected = 1;
        return c;
    }
    let deviance = fit_gpd_mle(&excesses).and_then(|free| deviance_test(&free, &fit_exponential(&excesses)?));
    match deviance {
        Ok(d) => {
            c.gamma0_tested = 1;
            if d.p_value >= TEST_LEVEL {
                c.gamma0_not_rejected = 1;
            }
        }
        Err(_) => c.fit_failures = 1,
    }
    c
}

/// Threshold tests for one generating law at every level in `thresholds`.
///
/// Each replicate's sample is shared across levels.
fn threshold_study(spec: &MixingSpec, config: &ExperimentConfig, thresholds: &[f64]) -> Result<Vec<ThresholdCounts>> {
    let model = MixtureModel::new(*spec)?;
    let cell = format!("{}/{spec}", config.experiment);
    let per_replicate: Vec<Vec<ThresholdCounts>> = (0..config.replicates as u64)
        .into_par_iter()
        .map(|r| {
            let sample = model.sample(config.sample_size, &mut substream(config.base_seed, &cell, r, 0));
            thresholds
                .iter()
                .map(|&p| {
                    let seed = derive_seed(config.base_seed, &format!("{cell}/{p}"), r);
                    threshold_replicate(&sample, p, config.bootstrap, seed)
                })
                .collect()
        })
        .collect();
    Ok((0..thresholds.len())
        .map(|i| {
            per_replicate
                .iter()
                .map(|row| row[i])
                .fold(ThresholdCounts::default(), ThresholdCounts::merge)
        })
        .collect())
}

/// Mean excess counts, GPD rejection rates and γ = 0 non-rejection rates.
pub fn run_table2(config: &ExperimentConfig) -> Result<ExperimentReport> {
    expect_tag(config, ExperimentTag::Table2)?;
    let started = Instant::now();
    let mut cells = Vec::new();
    for spec in &config.specs {
        let counts = threshold_study(spec, config, &config.thresholds)?;
        for (&threshold, counts) in config.thresholds.iter().zip(counts) {
            cells.push(Table2Cell {
                spec: *spec,
                label: spec.to_string(),
                threshold,
                mean_excesses: counts.mean_excesses(),
                gpd_rejection_rate: counts.gpd_rejection_rate(),
                gamma0_non_rejection_rate: counts.gamma0_non_rejection_rate(),
                counts,
            });
        }
    }
    Ok(wrap(config, Results::Table2 { cells }, started))
}

/// GPD rejection proportion for Gamma(α, β) mixing across the β grid.
pub fn run_beta_sweep(config: &ExperimentConfig) -> Result<ExperimentReport> {
    expect_tag(config, ExperimentTag::BetaSweep)?;
    let started = Instant::now();
    let threshold = config.thresholds[0];
    let mut points = Vec::with_capacity(config.beta_grid.len());
    for &beta in &config.beta_grid {
        let spec = MixingSpec::gamma(config.sweep_alpha, beta)?;
        let counts = threshold_study(&spec, config, &[threshold])?[0];
        points.push(SweepPoint {
            beta,
            inv_one_plus_beta: 1.0 / (1.0 + beta),
            rejection_proportion: counts.gpd_rejection_rate(),
            counts,
        });
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = points
        .iter()
        .filter_map(|p| p.rejection_proportion.map(|r| (p.inv_one_plus_beta, r)))
        .unzip();
    let spearman = spearman(&xs, &ys);
    Ok(wrap(config, Results::BetaSweep { points, spearman }, started))
}

/// Empirical distribution of the maximum of `n` draws over `replicates` runs.
fn maxima_distribution<F>(n: u64, replicates: usize, base_seed: u64, cell: &str, draw: F) -> BTreeMap<u64, usize>
where
    F: Fn(&mut crate::rng::StreamRng) -> u64 + Sync,
{
    let maxima: Vec<u64> = (0..replicates as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = substream(base_seed, cell, r, 0);
            (0..n).map(|_| draw(&mut rng)).max().unwrap_or(0)
        })
        .collect();
    let mut counts = BTreeMap::new();
    for m in maxima {
        *counts.entry(m).or_insert(0) += 1;
    }
    counts
}

fn summarise(
    label: String,
    spec: Option<MixingSpec>,
    n: u64,
    counts: &BTreeMap<u64, usize>,
    total: usize,
) -> MaximaCell {
    let distribution: Vec<MaxProbability> = counts
        .iter()
        .map(|(&maximum, &c)| MaxProbability {
            maximum,
            probability: c as f64 / total as f64,
        })
        .collect();
    // Smallest maximum among the most frequent.
    let i_n = counts
        .iter()
        .fold((0u64, 0usize), |best, (&m, &c)| if c > best.1 { (m, c) } else { best })
        .0;
    let pair = counts.get(&i_n).copied().unwrap_or(0) + counts.get(&(i_n + 1)).copied().unwrap_or(0);
    MaximaCell {
        label,
        spec,
        n,
        distribution,
        i_n,
        oscillation_mass: pair as f64 / total as f64,
        tv_to_poisson: None,
    }
}

/// Total variation distance between two distributions on the integers.
pub fn total_variation(a: &[MaxProbability], b: &[MaxProbability]) -> f64 {
    let mut diff: BTreeMap<u64, f64> = BTreeMap::new();
    for p in a {
        *diff.entry(p.maximum).or_insert(0.0) += p.probability;
    }
    for q in b {
        *diff.entry(q.maximum).or_insert(0.0) -= q.probability;
    }
    0.5 * diff.values().map(|d| d.abs()).sum::<f64>()
}

/// Sample-maximum distributions for each spec and the Poisson(x₀) reference.
pub fn run_maxima(config: &ExperimentConfig) -> Result<ExperimentReport> {
    expect_tag(config, ExperimentTag::Maxima)?;
    let started = Instant::now();
    let reps = config.replicates;
    let seed = config.base_seed;
    let mut cells = Vec::new();

    let mut endpoints: Vec<f64> = config.specs.iter().filter_map(|s| s.upper_endpoint()).collect();
    endpoints.sort_by(f64::total_cmp);
    endpoints.dedup();
    let mut references: BTreeMap<(u64, u64), Vec<MaxProbability>> = BTreeMap::new();
    for &x0 in &endpoints {
        let label = format!("Poisson({x0})");
        for &n in &config.maxima_sizes {
            let counts = maxima_distribution(n, reps, seed, &format!("maxima/{label}/{n}"), |rng| {
                poisson_draw(x0, rng)
            });
            let cell = summarise(label.clone(), None, n, &counts, reps);
            references.insert((x0.to_bits(), n), cell.distribution.clone());
            cells.push(cell);
        }
    }

    for spec in &config.specs {
        let model = MixtureModel::new(*spec)?;
        let label = spec.to_string();
        for &n in &config.maxima_sizes {
            let counts = maxima_distribution(n, reps, seed, &format!("maxima/{label}/{n}"), |rng| {
                model.sample_one(rng)
            });
            let mut cell = summarise(label.clone(), Some(*spec), n, &counts, reps);
            cell.tv_to_poisson = spec
                .upper_endpoint()
                .and_then(|x0| references.get(&(x0.to_bits(), n)))
                .map(|reference| total_variation(&cell.distribution, reference));
            cells.push(cell);
        }
    }
    Ok(wrap(config, Results::Maxima { cells }, started))
}

/// Average ranks, 1-based, with ties sharing their mean rank.
fn ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let mut out = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start;
        while end + 1 < order.len() && values[order[end + 1]] == values[order[start]] {
            end += 1;
        }
        let shared = (start + end) as f64 / 2.0 + 1.0;
        for &k in &order[start..=end] {
            out[k] = shared;
        }
        start = end + 1;
    }
    out
}

/// Spearman rank correlation; `None` with fewer than two points or a constant input.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    (vx > 0.0 && vy > 0.0).then(|| cov / (vx * vy).sqrt())
}
