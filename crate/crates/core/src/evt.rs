//! Peaks over threshold: excess extraction, generalised Pareto fits, the
//! deviance test of an exponential tail and a bootstrap Anderson–Darling test.
//!
//! The GPD with shape γ and scale σ has
//!
//! ```text
//! H(y) = 1 − (1 + γy/σ)^(−1/γ),   γ ≠ 0
//! H(y) = 1 − exp(−y/σ),           γ = 0
//! ```
//!
//! on `y ≥ 0`, with upper endpoint `−σ/γ` when γ < 0.

use rand::distr::Open01;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::chi2_1_sf;
use crate::numerics::empirical_quantile;
use crate::numerics::optimize::{bracketed_root, golden_section_max};
use crate::rng::substream;

pub const MIN_SAMPLE_SIZE: usize = 20;
pub const MIN_EXCESSES: usize = 5;
pub const MIN_BOOTSTRAP: usize = 99;
pub const DEFAULT_BOOTSTRAP: usize = 199;
pub const REFIT_RETRIES: u32 = 10;

/// Shape range searched by the maximum-likelihood fit.
pub const GAMMA_RANGE: (f64, f64) = (-1.0, 5.0);

const GAMMA_GRID: [f64; 15] = [
    -1.0, -0.75, -0.5, -0.25, 0.0, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 2.5, 3.0, 4.0, 5.0,
];

/// Excesses over an empirical-quantile threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExcessSample {
    pub threshold: f64,
    pub excesses: Vec<f64>,
    pub source_size: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GpdFit {
    pub gamma: f64,
    pub sigma: f64,
    pub log_likelihood: f64,
    pub n_excesses: usize,
    pub constrained_gamma_zero: bool,
    /// The shape estimate sits on an end of [`GAMMA_RANGE`].
    pub at_boundary: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GofResult {
    pub statistic: f64,
    pub p_value: f64,
    pub bootstrap_replicates: usize,
    /// Bootstrap refits that failed and were redrawn.
    pub redrawn: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DevianceResult {
    #[serde(rename = "D")]
    pub d: f64,
    pub p_value: f64,
}

/// Threshold at the type-1 `p`-quantile of `sample` and the excesses above it, in sample order.
pub fn extract_excesses(sample: &[u64], p: f64) -> Result<ExcessSample> {
    if sample.len() < MIN_SAMPLE_SIZE {
        return Err(Error::Precondition(format!(
            "excess extraction needs at least {MIN_SAMPLE_SIZE} observations, got {}",
            sample.len()
        )));
    }
    let u = empirical_quantile(sample, p)?;
    let excesses: Vec<f64> = sample.iter().filter(|&&y| y > u).map(|&y| (y - u) as f64).collect();
    if excesses.len() < MIN_EXCESSES {
        return Err(Error::InsufficientExcesses {
            found: excesses.len(),
            required: MIN_EXCESSES,
        });
    }
    Ok(ExcessSample {
        threshold: u as f64,
        excesses,
        source_size: sample.len(),
    })
}

fn check_scale(sigma: f64) -> Result<()> {
    if sigma > 0.0 && sigma.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "GPD scale must be positive and finite, got {sigma}"
        )))
    }
}

fn cdf_unchecked(gamma: f64, sigma: f64, y: f64) -> f64 {
    if !(y > 0.0) {
        return 0.0;
    }
    if gamma == 0.0 {
        return -(-y / sigma).exp_m1();
    }
    let t = gamma * y / sigma;
    if t <= -1.0 {
        return 1.0;
    }
    -(-(t.ln_1p()) / gamma).exp_m1()
}

fn quantile_unchecked(gamma: f64, sigma: f64, q: f64) -> f64 {
    let ln_tail = (-q).ln_1p();
    if gamma == 0.0 {
        -sigma * ln_tail
    } else {
        sigma * (-gamma * ln_tail).exp_m1() / gamma
    }
}

/// `H(y)`, clamped to 0 below the support and to 1 above it.
pub fn gpd_cdf(gamma: f64, sigma: f64, y: f64) -> Result<f64> {
    check_scale(sigma)?;
    if !gamma.is_finite() || y.is_nan() {
        return Err(Error::Domain(format!("invalid GPD arguments γ={gamma}, y={y}")));
    }
    Ok(cdf_unchecked(gamma, sigma, y))
}

/// `H⁻¹(q)` for `q ∈ (0, 1)`.
pub fn gpd_quantile(gamma: f64, sigma: f64, q: f64) -> Result<f64> {
    check_scale(sigma)?;
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::Domain(format!("GPD quantile level must lie in (0, 1), got {q}")));
    }
    if !gamma.is_finite() {
        return Err(Error::Domain(format!("invalid GPD shape {gamma}")));
    }
    Ok(quantile_unchecked(gamma, sigma, q))
}

/// One GPD draw by inversion.
pub fn gpd_sample<R: Rng + ?Sized>(gamma: f64, sigma: f64, rng: &mut R) -> Result<f64> {
    check_scale(sigma)?;
    let q: f64 = rng.sample(Open01);
    gpd_quantile(gamma, sigma, q)
}

/// GPD log-likelihood of `y` at `(γ, σ)`; `−∞` outside the support.
pub fn gpd_log_likelihood(gamma: f64, sigma: f64, y: &[f64]) -> f64 {
    let n = y.len() as f64;
    if !(sigma > 0.0) {
        return f64::NEG_INFINITY;
    }
    if gamma == 0.0 {
        return -n * sigma.ln() - y.iter().sum::<f64>() / sigma;
    }
    let mut acc = 0.0;
    for &v in y {
        let t = gamma * v / sigma;
        if t <= -1.0 {
            if gamma == -1.0 && t == -1.0 {
                continue;
            }
            return f64::NEG_INFINITY;
        }
        acc += t.ln_1p();
    }
    -n * sigma.ln() - (1.0 + 1.0 / gamma) * acc
}

fn validate_excesses(y: &[f64], minimum: usize) -> Result<()> {
    if y.len() < minimum {
        return Err(Error::InsufficientExcesses {
            found: y.len(),
            required: minimum,
        });
    }
    if y.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(Error::Domain("excesses must be positive and finite".into()));
    }
    Ok(())
}

/// Exponential (γ = 0) fit: `σ̂` is the mean excess.
pub fn fit_exponential(excesses: &[f64]) -> Result<GpdFit> {
    if excesses.is_empty() {
        return Err(Error::EmptyInput("exponential fit needs at least one excess"));
    }
    if excesses.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
        return Err(Error::Domain("excesses must be non-negative and finite".into()));
    }
    let n = excesses.len() as f64;
    let sigma = excesses.iter().sum::<f64>() / n;
    if !(sigma > 0.0) {
        return Err(Error::Domain("exponential fit needs a positive excess".into()));
    }
    Ok(GpdFit {
        gamma: 0.0,
        sigma,
        log_likelihood: -n * (1.0 + sigma.ln()),
        n_excesses: excesses.len(),
        constrained_gamma_zero: true,
        at_boundary: false,
    })
}

/// Profile maximiser `σ̂(γ)` and the profile log-likelihood.
fn profile(gamma: f64, y: &[f64], mean: f64, y_max: f64) -> Result<(f64, f64)> {
    let n = y.len() as f64;
    if gamma == 0.0 {
        return Ok((mean, -n * (1.0 + mean.ln())));
    }
    if gamma <= -1.0 {
        return Ok((y_max, -n * y_max.ln()));
    }
    // h(σ) = (1+γ) Σ y/(σ+γy) − n is decreasing with a single root above max(0, −γ·y_max).
    let h = |sigma: f64| (1.0 + gamma) * y.iter().map(|&v| v / (sigma + gamma * v)).sum::<f64>() - n;
    let floor = (-gamma * y_max).max(0.0);
    let hi = ((1.0 + gamma) * mean + floor) * 1.001 + f64::MIN_POSITIVE;
    let mut lo = if gamma > 0.0 {
        1e-9 * gamma * y.iter().copied().fold(f64::INFINITY, f64::min)
    } else {
        floor * (1.0 + 1e-12)
    };
    let mut tries = 0;
    while !(h(lo) > 0.0) {
        tries += 1;
        if tries > 40 {
            return Err(Error::OptimizerFailed {
                best_point: vec![gamma, lo],
                best_value: gpd_log_likelihood(gamma, lo, y),
            });
        }
        lo = floor + 0.01 * (lo - floor);
    }
    let sigma = bracketed_root(h, lo, hi, 1e-13)?;
    Ok((sigma, gpd_log_likelihood(gamma, sigma, y)))
}

/// Maximum-likelihood GPD fit by profiling over γ on [`GAMMA_RANGE`].
///
/// Needs at least two excesses that are not all equal.
pub fn fit_gpd_mle(excesses: &[f64]) -> Result<GpdFit> {
    validate_excesses(excesses, 2)?;
    // Sorted so the fit does not depend on input order, even in the last bit.
    let mut sorted = excesses.to_vec();
    sorted.sort_by(f64::total_cmp);
    let y = sorted.as_slice();
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    let y_max = y.iter().copied().fold(0.0, f64::max);
    if y.iter().all(|&v| v == y[0]) {
        return Err(Error::Precondition(
            "GPD fit needs excesses that are not all equal".into(),
        ));
    }

    let mut failure = None;
    let mut value = |g: f64| match profile(g, y, mean, y_max) {
        Ok((_, ll)) if ll.is_finite() => ll,
        Ok(_) => f64::NEG_INFINITY,
        Err(e) => {
            failure.get_or_insert(e);
            f64::NEG_INFINITY
        }
    };
    let grid: Vec<f64> = GAMMA_GRID.iter().map(|&g| value(g)).collect();
    let (best, &best_ll) = grid
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("grid is non-empty");
    if best_ll == f64::NEG_INFINITY {
        return Err(failure.unwrap_or(Error::OptimizerFailed {
            best_point: vec![GAMMA_GRID[best], mean],
            best_value: best_ll,
        }));
    }
    let lo = GAMMA_GRID[best.saturating_sub(1)];
    let hi = GAMMA_GRID[(best + 1).min(GAMMA_GRID.len() - 1)];
    let (g_refined, ll_refined) = golden_section_max(&mut value, lo, hi, 1e-9);
    let gamma = if ll_refined >= best_ll {
        g_refined
    } else {
        GAMMA_GRID[best]
    };
    let (sigma, log_likelihood) = profile(gamma, y, mean, y_max)?;
    let at_boundary = gamma <= GAMMA_RANGE.0 + 1e-6 || gamma >= GAMMA_RANGE.1 - 1e-6;
    Ok(GpdFit {
        gamma,
        sigma,
        log_likelihood,
        n_excesses: y.len(),
        constrained_gamma_zero: false,
        at_boundary,
    })
}

/// Likelihood-ratio test of γ = 0: `D = 2(ℓ₁ − ℓ₀)` against χ²₁.
pub fn deviance_test(free: &GpdFit, constrained: &GpdFit) -> Result<DevianceResult> {
    if free.n_excesses != constrained.n_excesses {
        return Err(Error::Mismatch(format!(
            "fits were made on {} and {} excesses",
            free.n_excesses, constrained.n_excesses
        )));
    }
    if !constrained.constrained_gamma_zero {
        return Err(Error::Precondition("the null fit must be the γ = 0 fit".into()));
    }
    let d = (2.0 * (free.log_likelihood - constrained.log_likelihood)).max(0.0);
    Ok(DevianceResult {
        d,
        p_value: chi2_1_sf(d)?,
    })
}

/// Anderson–Darling distance between the excesses and the fitted GPD.
pub fn anderson_darling(excesses: &[f64], fit: &GpdFit) -> f64 {
    let mut z: Vec<f64> = excesses
        .iter()
        .map(|&v| cdf_unchecked(fit.gamma, fit.sigma, v).clamp(1e-15, 1.0 - 1e-15))
        .collect();
    z.sort_by(f64::total_cmp);
    let n = z.len();
    let sum: f64 = (0..n)
        .map(|i| (2 * i + 1) as f64 * (z[i].ln() + (-z[n - 1 - i]).ln_1p()))
        .sum();
    -(n as f64) - sum / n as f64
}

/// Anderson–Darling test of the GPD with a parametric-bootstrap p-value.
///
/// Each of the `b` replicates draws from the fitted GPD on its own substream
/// of `seed`, refits and recomputes the statistic; a replicate whose refit
/// fails is redrawn up to [`REFIT_RETRIES`] times.
pub fn ad_test_gpd(excesses: &[f64], b: usize, seed: u64) -> Result<GofResult> {
    validate_excesses(excesses, MIN_EXCESSES)?;
    if b < MIN_BOOTSTRAP {
        return Err(Error::Precondition(format!(
            "at least {MIN_BOOTSTRAP} bootstrap replicates are needed, got {b}"
        )));
    }
    let fit = fit_gpd_mle(excesses)?;
    let observed = anderson_darling(excesses, &fit);
    let n = excesses.len();

    let replicate = |r: usize| -> Result<(f64, usize)> {
        for attempt in 0..=REFIT_RETRIES {
            let mut rng = substream(seed, "ad-bootstrap", r as u64, attempt);
            let draw: Vec<f64> = (0..n)
                .map(|_| quantile_unchecked(fit.gamma, fit.sigma, rng.sample(Open01)))
                .collect();
            if let Ok(refit) = fit_gpd_mle(&draw) {
                return Ok((anderson_darling(&draw, &refit), attempt as usize));
            }
        }
        Err(Error::OptimizerFailed {
            best_point: vec![fit.gamma, fit.sigma],
            best_value: fit.log_likelihood,
        })
    };
    let results: Vec<(f64, usize)> = (0..b).into_par_iter().map(replicate).collect::<Result<_>>()?;
    let exceed = results.iter().filter(|(a, _)| *a >= observed).count();
    Ok(GofResult {
        statistic: observed,
        p_value: (1 + exceed) as f64 / (b + 1) as f64,
        bootstrap_replicates: b,
        redrawn: results.iter().map(|(_, r)| r).sum(),
    })
}
