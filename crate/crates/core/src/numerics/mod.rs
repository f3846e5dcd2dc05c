//! Numerical building blocks: special functions, quadrature, quantiles and
//! the small optimisers used by the fitting code.

pub mod optimize;
pub mod quadrature;
pub mod special;

pub use quadrature::{integrate_adaptive, Quadrature, QuadratureResult};
pub use special::{chi2_1_sf, ln_factorial, ln_gamma_q, ln_normal_sf, ln_poisson_pmf, log_gamma, log_sum_exp};

use crate::error::{Error, Result};

/// 1-based rank of the type-1 empirical quantile: `⌈n·p⌉`, clamped to `[1, n]`.
///
/// A relative slack of 1e-12 absorbs representation error so that, e.g.,
/// `100 × 0.95` lands on rank 95 rather than 96.
pub fn quantile_rank(n: usize, p: f64) -> usize {
    let raw = n as f64 * p;
    let rank = (raw - 1e-12 * raw.max(1.0)).ceil() as usize;
    rank.clamp(1, n)
}

/// Type-1 empirical quantile (left-continuous inverse of the ecdf).
///
/// The result is always an element of `sample`.
pub fn empirical_quantile<T: Copy + PartialOrd>(sample: &[T], p: f64) -> Result<T> {
    if sample.is_empty() {
        return Err(Error::EmptyInput("empirical_quantile needs a non-empty sample"));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(format!("quantile level must lie in (0, 1), got {p}")));
    }
    let mut sorted = sample.to_vec();
    let mut incomparable = false;
    sorted.sort_by(|a, b| {
        a.partial_cmp(b).unwrap_or_else(|| {
            incomparable = true;
            std::cmp::Ordering::Equal
        })
    });
    if incomparable {
        return Err(Error::Domain("sample contains incomparable values (NaN)".into()));
    }
    Ok(sorted[quantile_rank(sorted.len(), p) - 1])
}
