//! Special functions in log space.

use statrs::function::{erf, gamma};

use crate::error::{Error, Result};

const LN_2PI_HALF: f64 = 0.918_938_533_204_672_8;

/// `ln Γ(x)` for `x > 0`.
pub fn log_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("log_gamma requires x > 0, got {x}")));
    }
    Ok(gamma::ln_gamma(x))
}

/// `ln Γ(x)` without the domain check, for callers that already validated `x`.
#[inline]
pub(crate) fn ln_gamma(x: f64) -> f64 {
    gamma::ln_gamma(x)
}

/// `ln n!`.
#[inline]
pub fn ln_factorial(n: u64) -> f64 {
    gamma::ln_gamma(n as f64 + 1.0)
}

/// Stable `ln Σ exp(vᵢ)`.
pub fn log_sum_exp(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptyInput("log_sum_exp needs at least one value"));
    }
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY || max.is_infinite() || max.is_nan() {
        return Ok(max);
    }
    let sum: f64 = values.iter().map(|v| (v - max).exp()).sum();
    Ok(max + sum.ln())
}

/// `ln(a + b)` given `ln a` and `ln b`.
#[inline]
pub(crate) fn ln_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if lo == f64::NEG_INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// `ln(1 − eˣ)` for `x ≤ 0`, accurate at both ends.
#[inline]
pub(crate) fn ln_one_minus_exp(x: f64) -> f64 {
    if x > -std::f64::consts::LN_2 {
        (-x.exp_m1()).ln()
    } else {
        (-x.exp()).ln_1p()
    }
}

/// Log mass of a Poisson(mean) variable at `n`.
#[inline]
pub fn ln_poisson_pmf(n: u64, mean: f64) -> f64 {
    if mean == 0.0 {
        return if n == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    n as f64 * mean.ln() - mean - ln_factorial(n)
}

/// Log of the standard normal survival function `P(Z > z)`.
pub fn ln_normal_sf(z: f64) -> f64 {
    if z < 30.0 {
        (0.5 * erf::erfc(z / std::f64::consts::SQRT_2)).ln()
    } else {
        // Asymptotic Mills-ratio series; the remainder is below 1e-16 here.
        let z2 = z * z;
        let series = 1.0 - 1.0 / z2 + 3.0 / (z2 * z2) - 15.0 / (z2 * z2 * z2);
        -0.5 * z2 - z.ln() - LN_2PI_HALF + series.ln()
    }
}

/// Log of the regularised upper incomplete gamma function `Q(a, x)`.
pub fn ln_gamma_q(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let prefactor = a * x.ln() - x - ln_gamma(a);
    if x < a + 1.0 {
        // Series for P, then Q = 1 - P.
        let mut term = 1.0 / a;
        let mut sum = term;
        let mut ap = a;
        for _ in 0..10_000 {
            ap += 1.0;
            term *= x / ap;
            sum += term;
            if term.abs() < sum.abs() * 1e-17 {
                break;
            }
        }
        ln_one_minus_exp(prefactor + sum.ln())
    } else {
        // Modified Lentz evaluation of the continued fraction for Q.
        const TINY: f64 = 1e-300;
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / TINY;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..10_000 {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < TINY {
                d = TINY;
            }
            c = b + an / c;
            if c.abs() < TINY {
                c = TINY;
            }
            d = 1.0 / d;
            let delta = d * c;
            h *= delta;
            if (delta - 1.0).abs() < 1e-16 {
                break;
            }
        }
        prefactor + h.ln()
    }
}

/// Survival function of the χ² distribution with one degree of freedom.
///
/// Uses `P(χ²₁ > x) = P(|Z| > √x) = erfc(√(x/2))`.
pub fn chi2_1_sf(x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::Domain(format!("chi2_1_sf requires x >= 0, got {x}")));
    }
    Ok(erf::erfc((0.5 * x).sqrt()).clamp(0.0, 1.0))
}
