//! Maximum-likelihood fits of Poisson-mixture families to count data and
//! ranking by the Bayesian information criterion `−2ℓ + k ln n`.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mixing::{Family, MixingSpec};
use crate::mixture::{negbin_ln_pmf, MixtureModel};
use crate::numerics::optimize::{golden_section_max, nelder_mead};

pub const MIN_SAMPLE_SIZE: usize = 30;

/// Quadrature tolerance used inside the likelihood.
pub const FIT_REL_TOL: f64 = 1e-9;

/// Families compared by default, in tie-break order.
pub const DEFAULT_FAMILIES: [Family; 4] = [Family::Frechet, Family::Lognormal, Family::Gamma, Family::Uniform];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FamilyFit {
    pub family: Family,
    pub spec: MixingSpec,
    pub log_likelihood: f64,
    pub parameter_count: usize,
    pub information_criterion: f64,
}

/// Fits ranked by ascending information criterion, plus the families whose fit failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub ranked: Vec<FamilyFit>,
    pub failures: Vec<(Family, String)>,
}

impl Selection {
    pub fn best(&self) -> &FamilyFit {
        &self.ranked[0]
    }
}

/// Distinct counts with multiplicities.
struct Tally {
    values: Vec<(u64, f64)>,
    n: usize,
    mean: f64,
    var: f64,
    median: f64,
    max: u64,
}

impl Tally {
    fn new(sample: &[u64]) -> Self {
        let mut counts = BTreeMap::new();
        for &x in sample {
            *counts.entry(x).or_insert(0usize) += 1;
        }
        let n = sample.len();
        let mean = sample.iter().map(|&x| x as f64).sum::<f64>() / n as f64;
        let var = sample.iter().map(|&x| (x as f64 - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0).max(1.0);
        let mut sorted = sample.to_vec();
        sorted.sort_unstable();
        Self {
            values: counts.into_iter().map(|(v, c)| (v, c as f64)).collect(),
            n,
            mean,
            var,
            median: sorted[n / 2] as f64,
            max: sorted[n - 1],
        }
    }

    fn log_likelihood(&self, spec: &MixingSpec) -> f64 {
        if let MixingSpec::Gamma { alpha, beta } = *spec {
            return self
                .values
                .iter()
                .map(|&(v, c)| c * negbin_ln_pmf(v, alpha, beta))
                .sum();
        }
        let Ok(model) = MixtureModel::new(*spec).and_then(|m| m.with_rel_tol(FIT_REL_TOL)) else {
            return f64::NEG_INFINITY;
        };
        let mut total = 0.0;
        for &(v, c) in &self.values {
            match model.ln_pmf(v) {
                Ok(lp) if lp.is_finite() => total += c * lp,
                _ => return f64::NEG_INFINITY,
            }
        }
        total
    }
}

/// Method-of-moments starting point, falling back to unit parameters when moments are degenerate.
fn initial_spec(family: Family, t: &Tally) -> Result<MixingSpec> {
    let m = t.mean.max(1e-3);
    let excess = t.var - t.mean;
    match family {
        Family::Gamma => {
            let (alpha, beta) = if excess > 0.0 {
                (m * m / excess, m / excess)
            } else {
                (m, 1.0)
            };
            MixingSpec::gamma(alpha, beta)
        }
        Family::Lognormal => {
            let (mu, sigma) = if excess > 0.0 {
                let s2 = (excess / (m * m)).ln_1p();
                (m.ln() - s2 / 2.0, s2.sqrt())
            } else {
                (m.ln(), 1.0)
            };
            MixingSpec::lognormal(mu, sigma)
        }
        // With α = 1 the median is β/ln 2.
        Family::Frechet => MixingSpec::frechet(1.0, t.median.max(0.5) * std::f64::consts::LN_2),
        Family::Uniform => MixingSpec::uniform(2.0 * m),
        Family::ScaledBeta => {
            let x0 = (t.max as f64).max(2.0 * m).max(1.0);
            MixingSpec::scaled_beta(x0, 1.0, 1.0)
        }
    }
}

fn encode(spec: &MixingSpec) -> Vec<f64> {
    match *spec {
        MixingSpec::Frechet { alpha, beta } | MixingSpec::Gamma { alpha, beta } => vec![alpha.ln(), beta.ln()],
        MixingSpec::Lognormal { mu, sigma } => vec![mu, sigma.ln()],
        MixingSpec::Uniform { x0 } => vec![x0.ln()],
        MixingSpec::ScaledBeta { x0, alpha, beta } => vec![x0.ln(), alpha.ln(), beta.ln()],
    }
}

fn decode(family: Family, z: &[f64]) -> Result<MixingSpec> {
    if z.iter().any(|v| !v.is_finite() || v.abs() > 30.0) {
        return Err(Error::Domain("parameter left the search region".into()));
    }
    match family {
        Family::Frechet => MixingSpec::frechet(z[0].exp(), z[1].exp()),
        Family::Gamma => MixingSpec::gamma(z[0].exp(), z[1].exp()),
        Family::Lognormal => MixingSpec::lognormal(z[0], z[1].exp()),
        Family::Uniform => MixingSpec::uniform(z[0].exp()),
        Family::ScaledBeta => MixingSpec::scaled_beta(z[0].exp(), z[1].exp(), z[2].exp()),
    }
}

fn finish(family: Family, spec: MixingSpec, log_likelihood: f64, n: usize) -> FamilyFit {
    let k = family.parameter_count();
    FamilyFit {
        family,
        spec,
        log_likelihood,
        parameter_count: k,
        information_criterion: -2.0 * log_likelihood + k as f64 * (n as f64).ln(),
    }
}

/// Maximum-likelihood fit of one family.
///
/// Positive parameters are searched on the log scale by Nelder–Mead from
/// `initial` (or a moment-based start); the uniform endpoint by a grid scan
/// and golden-section refinement of `ln x₀`.
pub fn fit_family(sample: &[u64], family: Family, initial: Option<MixingSpec>) -> Result<FamilyFit> {
    if sample.len() < MIN_SAMPLE_SIZE {
        return Err(Error::Precondition(format!(
            "family fits need at least {MIN_SAMPLE_SIZE} observations, got {}",
            sample.len()
        )));
    }
    let t = Tally::new(sample);
    let start = match initial {
        Some(spec) if spec.family() != family => {
            return Err(Error::Mismatch(format!(
                "initial spec {spec} is not in family {family}"
            )))
        }
        Some(spec) => spec,
        None => initial_spec(family, &t)?,
    };

    if family == Family::Uniform {
        return fit_uniform(&t);
    }

    let objective = |z: &[f64]| match decode(family, z) {
        Ok(spec) => -t.log_likelihood(&spec),
        Err(_) => f64::INFINITY,
    };
    let minimum = nelder_mead(objective, &encode(&start), 0.3, 1e-12, 1e-7, 4000)?;
    let spec = decode(family, &minimum.point)?;
    let ll = -minimum.value;
    if !ll.is_finite() {
        return Err(Error::OptimizerFailed {
            best_point: minimum.point,
            best_value: minimum.value,
        });
    }
    Ok(finish(family, spec, ll, t.n))
}

fn fit_uniform(t: &Tally) -> Result<FamilyFit> {
    let ll = |s: f64| t.log_likelihood(&MixingSpec::Uniform { x0: s.exp() });
    // The endpoint lies between a fraction of the mean and a multiple of the largest count.
    let lo = (0.1 * t.mean).max(1e-3).ln();
    let hi = (4.0 * t.max as f64 + 10.0).ln();
    const GRID: usize = 40;
    let at = |i: usize| lo + (hi - lo) * i as f64 / GRID as f64;
    let (best, best_ll) = (0..=GRID)
        .map(|i| (i, ll(at(i))))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("grid is non-empty");
    if best_ll == f64::NEG_INFINITY {
        return Err(Error::OptimizerFailed {
            best_point: vec![at(best)],
            best_value: f64::INFINITY,
        });
    }
    let (s, value) = golden_section_max(ll, at(best.saturating_sub(1)), at((best + 1).min(GRID)), 1e-10);
    let (s, value) = if value >= best_ll {
        (s, value)
    } else {
        (at(best), best_ll)
    };
    Ok(finish(Family::Uniform, MixingSpec::uniform(s.exp())?, value, t.n))
}

fn tie_rank(family: Family) -> usize {
    Family::ALL.iter().position(|&f| f == family).expect("family is listed")
}

/// Order by information criterion, then parameter count, then family order.
pub fn compare_fits(a: &FamilyFit, b: &FamilyFit) -> Ordering {
    a.information_criterion
        .total_cmp(&b.information_criterion)
        .then(a.parameter_count.cmp(&b.parameter_count))
        .then(tie_rank(a.family).cmp(&tie_rank(b.family)))
}

/// Fit every requested family and rank the successful fits.
pub fn select_model(sample: &[u64], families: &[Family]) -> Result<Selection> {
    if families.is_empty() {
        return Err(Error::EmptyInput("select_model needs at least one family"));
    }
    let mut requested = families.to_vec();
    requested.sort_by_key(|&f| tie_rank(f));
    requested.dedup();
    let mut ranked = Vec::new();
    let mut failures = Vec::new();
    for family in requested {
        match fit_family(sample, family, None) {
            Ok(fit) => ranked.push(fit),
            Err(e @ Error::Precondition(_)) => return Err(e),
            Err(e) => failures.push((family, e.to_string())),
        }
    }
    if ranked.is_empty() {
        return Err(Error::OptimizerFailed {
            best_point: Vec::new(),
            best_value: f64::INFINITY,
        });
    }
    ranked.sort_by(compare_fits);
    Ok(Selection { ranked, failures })
}
