//! The Poisson mixture: exact mass and survival, sampling, tail ratios and
//! the asymptotic forms of the tail.
//!
//! Mass and survival are mixed-Poisson integrals
//!
//! ```text
//! P_M(n) = ∫ λⁿe^{−λ}/n! · f(λ) dλ
//! F̄_M(n) = P(X > n) = ∫ λⁿe^{−λ}/n! · (1 − F(λ)) dλ
//! ```
//!
//! evaluated in log space: the log-integrand is maximised first, the
//! integral of `exp(h − h_max)` is taken over panels bracketing the mode and
//! `h_max` is added back. Gamma mixing has the negative-binomial closed form
//! and uses it unless quadrature is forced.

use std::io::Write;

use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::beta as sbeta;

use crate::error::{Error, Result};
use crate::mixing::{MixingSpec, TailClass};
use crate::numerics::optimize::golden_section_max;
use crate::numerics::special::{ln_add_exp, ln_factorial, ln_gamma};
use crate::numerics::Quadrature;

pub const DEFAULT_REL_TOL: f64 = 1e-10;

/// Survival values below this are not trusted by the tail operations.
pub const RELIABLE_SURVIVAL_FLOOR: f64 = 1e-280;

/// Log-integrand drop, in nats, at which the outer breakpoints are placed.
const CUT_DEPTH: f64 = 46.0;

/// A Poisson mixture bound to its mixing distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixtureModel {
    spec: MixingSpec,
    tail: TailClass,
    rel_tol: f64,
    force_quadrature: bool,
}

/// Survival ratios `F̄_M(n+k)/F̄_M(n)` along a grid of `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailRatioCurve {
    pub k: u32,
    pub points: Vec<(u64, f64)>,
    pub limit: f64,
}

/// One row of the exported pmf table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub n: u64,
    pub pmf: f64,
    pub survival: f64,
    pub tail_ratio_k1: Option<f64>,
}

/// A log-value with the relative error estimate of the quadrature behind it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogEstimate {
    pub ln_value: f64,
    pub rel_error: f64,
}

/// Limit of `F̄_M(n+k)/F̄_M(n)` as `n → ∞` for a mixing law of class `tail`.
pub fn tail_ratio_limit(tail: &TailClass, k: u32) -> f64 {
    match *tail {
        TailClass::DPlus { .. } | TailClass::D0H => 1.0,
        TailClass::D0E { beta } => (1.0 + beta).powi(-(k as i32)),
        TailClass::DMinus { .. } | TailClass::D0F { .. } => 0.0,
    }
}

#[derive(Clone, Copy)]
enum Weight {
    Density,
    Survival,
}

impl MixtureModel {
    pub fn new(spec: MixingSpec) -> Result<Self> {
        spec.validate()?;
        Ok(Self {
            spec,
            tail: spec.classify(),
            rel_tol: DEFAULT_REL_TOL,
            force_quadrature: false,
        })
    }

    /// Quadrature relative tolerance, in `(0, 1e-4]`.
    pub fn with_rel_tol(mut self, rel_tol: f64) -> Result<Self> {
        if !(rel_tol > 0.0 && rel_tol <= 1e-4) {
            return Err(Error::Domain(format!("rel_tol must lie in (0, 1e-4], got {rel_tol}")));
        }
        self.rel_tol = rel_tol;
        Ok(self)
    }

    /// Evaluate Gamma mixtures by quadrature instead of the closed form.
    pub fn with_forced_quadrature(mut self) -> Self {
        self.force_quadrature = true;
        self
    }

    pub fn spec(&self) -> &MixingSpec {
        &self.spec
    }

    pub fn tail(&self) -> &TailClass {
        &self.tail
    }

    pub fn rel_tol(&self) -> f64 {
        self.rel_tol
    }

    fn closed_form_gamma(&self) -> Option<(f64, f64)> {
        match self.spec {
            MixingSpec::Gamma { alpha, beta } if !self.force_quadrature => Some((alpha, beta)),
            _ => None,
        }
    }

    // ------------------------------------------------------------------
    // Mass and survival
    // ------------------------------------------------------------------

    pub fn ln_pmf_estimate(&self, n: u64) -> Result<LogEstimate> {
        if let Some((alpha, beta)) = self.closed_form_gamma() {
            return Ok(LogEstimate {
                ln_value: negbin_ln_pmf(n, alpha, beta),
                rel_error: 0.0,
            });
        }
        match self.spec {
            MixingSpec::ScaledBeta { x0, alpha, beta } => self.scaled_beta_ln_pmf(n, x0, alpha, beta),
            _ => self.ln_integral(n, Weight::Density),
        }
    }

    pub fn ln_pmf(&self, n: u64) -> Result<f64> {
        self.ln_pmf_estimate(n).map(|e| e.ln_value)
    }

    pub fn pmf(&self, n: u64) -> Result<f64> {
        self.ln_pmf(n).map(f64::exp)
    }

    /// `ln P(X > n)` with its error estimate.
    pub fn ln_survival_estimate(&self, n: u64) -> Result<LogEstimate> {
        if let Some((alpha, beta)) = self.closed_form_gamma() {
            return Ok(LogEstimate {
                ln_value: negbin_ln_survival(n, alpha, beta),
                rel_error: 0.0,
            });
        }
        self.ln_integral(n, Weight::Survival)
    }

    pub fn ln_survival(&self, n: u64) -> Result<f64> {
        self.ln_survival_estimate(n).map(|e| e.ln_value)
    }

    /// `P(X > n)`.
    pub fn survival(&self, n: u64) -> Result<f64> {
        self.ln_survival(n).map(f64::exp)
    }

    /// `P(X > n − 1) = P(X ≥ n)`, with the base case `P(X ≥ 0) = 1`.
    pub fn survival_before(&self, n: u64) -> Result<f64> {
        match n {
            0 => Ok(1.0),
            _ => self.survival(n - 1),
        }
    }

    fn log_integrand(&self, n: u64, weight: Weight) -> impl Fn(f64) -> f64 + '_ {
        let nf = n as f64;
        let ln_fact = ln_factorial(n);
        move |lambda: f64| {
            if !(lambda > 0.0) {
                return f64::NEG_INFINITY;
            }
            let w = match weight {
                Weight::Density => self.spec.ln_pdf(lambda),
                Weight::Survival => self.spec.ln_survival(lambda),
            };
            let kernel = if n == 0 {
                -lambda
            } else {
                nf * lambda.ln() - lambda - ln_fact
            };
            kernel + w
        }
    }

    /// `ln ∫ exp(h(λ)) dλ` over the mixing support.
    fn ln_integral(&self, n: u64, weight: Weight) -> Result<LogEstimate> {
        let h = self.log_integrand(n, weight);
        let endpoint = self.spec.upper_endpoint();
        let search_hi = endpoint.unwrap_or(2.0 * n as f64 + 60.0);
        let search_lo = (1e-12f64).min(0.5 * search_hi);

        // Mode in log λ: coarse scan, then golden section between the neighbours of the best point.
        let (s_lo, s_hi) = (search_lo.ln(), search_hi.ln());
        const GRID: usize = 48;
        let step = (s_hi - s_lo) / GRID as f64;
        let at = |i: usize| if i == GRID { s_hi } else { s_lo + step * i as f64 };
        let mut best = (0, f64::NEG_INFINITY);
        for i in 0..=GRID {
            let v = h(at(i).exp());
            if v > best.1 {
                best = (i, v);
            }
        }
        if best.1 == f64::NEG_INFINITY {
            return Ok(LogEstimate {
                ln_value: f64::NEG_INFINITY,
                rel_error: 0.0,
            });
        }
        let lo = at(best.0.saturating_sub(1));
        let hi = at((best.0 + 1).min(GRID));
        let (s_mode, h_mode) = golden_section_max(|s| h(s.exp()), lo, hi, 1e-9);
        let (s_mode, h_mode) = if h_mode >= best.1 {
            (s_mode, h_mode)
        } else {
            (at(best.0), best.1)
        };
        let mode = s_mode.exp();

        // Outer breakpoints where the integrand has dropped by CUT_DEPTH nats.
        let cut = |direction: f64| -> Option<f64> {
            let mut inside = s_mode;
            let mut delta = 0.01;
            for _ in 0..60 {
                let s = s_mode + direction * delta;
                if (direction < 0.0 && s <= s_lo) || (direction > 0.0 && endpoint.is_some() && s >= s_hi) {
                    return None;
                }
                if h(s.exp()) < h_mode - CUT_DEPTH {
                    let mut outside = s;
                    for _ in 0..12 {
                        let mid = 0.5 * (inside + outside);
                        if h(mid.exp()) < h_mode - CUT_DEPTH {
                            outside = mid;
                        } else {
                            inside = mid;
                        }
                    }
                    return Some(outside.exp());
                }
                inside = s;
                delta *= 2.0;
            }
            None
        };

        let mut points = vec![0.0];
        if let Some(left) = cut(-1.0) {
            points.push(left);
        }
        if mode > *points.last().unwrap() && endpoint.map_or(true, |x0| mode < x0) {
            points.push(mode);
        }
        if let Some(right) = cut(1.0) {
            if right > *points.last().unwrap() && endpoint.map_or(true, |x0| right < x0) {
                points.push(right);
            }
        }
        points.push(endpoint.unwrap_or(f64::INFINITY));
        points.dedup();

        let quad = Quadrature::with_rel_tol(self.rel_tol);
        let r = quad.integrate(|lambda| (h(lambda) - h_mode).exp(), &points)?;
        finish(h_mode, r.value, r.abs_error_estimate)
    }

    /// Mass under `x₀·Beta(a, b)` mixing, integrated in variables that absorb
    /// the endpoint singularities of the Beta density:
    /// `v = tᵃ` on `[0, ½]` and `u = (1 − t)ᵇ` on `[½, 1]`.
    fn scaled_beta_ln_pmf(&self, n: u64, x0: f64, a: f64, b: f64) -> Result<LogEstimate> {
        let nf = n as f64;
        let ln_fact = ln_factorial(n);
        let ln_b = sbeta::ln_beta(a, b);
        let kernel = move |t: f64| {
            let lambda = x0 * t;
            if n == 0 {
                -lambda
            } else if lambda > 0.0 {
                nf * lambda.ln() - lambda - ln_fact
            } else {
                f64::NEG_INFINITY
            }
        };
        let left = move |v: f64| {
            let t = v.powf(1.0 / a);
            kernel(t) + (b - 1.0) * (-t).ln_1p() - a.ln() - ln_b
        };
        let right = move |u: f64| {
            let t = 1.0 - u.powf(1.0 / b);
            kernel(t) + (a - 1.0) * t.ln() - b.ln() - ln_b
        };
        let v_max = 0.5f64.powf(a);
        let u_max = 0.5f64.powf(b);

        let peak = |g: &dyn Fn(f64) -> f64, hi: f64| -> f64 {
            const GRID: usize = 64;
            let mut best = (0usize, f64::NEG_INFINITY);
            for i in 0..=GRID {
                let x = hi * i as f64 / GRID as f64;
                let v = g(x.max(hi * 1e-300));
                if v > best.1 {
                    best = (i, v);
                }
            }
            let lo = hi * best.0.saturating_sub(1) as f64 / GRID as f64;
            let up = hi * (best.0 + 1).min(GRID) as f64 / GRID as f64;
            let (_, refined) = golden_section_max(g, lo, up, 1e-10);
            refined.max(best.1)
        };
        let shift = peak(&left, v_max).max(peak(&right, u_max));
        if shift == f64::NEG_INFINITY {
            return Ok(LogEstimate {
                ln_value: f64::NEG_INFINITY,
                rel_error: 0.0,
            });
        }
        // Geometric breakpoints near u = 0, where the Poisson kernel varies fastest for large n.
        let mut u_points = vec![0.0];
        let mut p = u_max * 1e-12;
        while p < u_max {
            u_points.push(p);
            p *= 100.0;
        }
        u_points.push(u_max);

        let quad = Quadrature::with_rel_tol(self.rel_tol);
        let l = quad.integrate(|v| (left(v) - shift).exp(), &[0.0, v_max])?;
        let r = quad.integrate(|u| (right(u) - shift).exp(), &u_points)?;
        finish(shift, l.value + r.value, l.abs_error_estimate + r.abs_error_estimate)
    }

    // ------------------------------------------------------------------
    // Sampling
    // ------------------------------------------------------------------

    /// One draw: λ from the mixing law, then Poisson(λ).
    pub fn sample_one<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        poisson_draw(self.spec.sample(rng), rng)
    }

    pub fn sample<R: Rng + ?Sized>(&self, size: usize, rng: &mut R) -> Vec<u64> {
        (0..size).map(|_| self.sample_one(rng)).collect()
    }

    // ------------------------------------------------------------------
    // Tail ratios
    // ------------------------------------------------------------------

    fn reliable(&self, est: &LogEstimate) -> bool {
        est.ln_value >= RELIABLE_SURVIVAL_FLOOR.ln() && est.rel_error <= self.rel_tol
    }

    /// Largest `n ≤ cap` whose survival is at least 1e-280 and whose
    /// quadrature error meets the model tolerance.
    pub fn largest_reliable_n(&self, cap: u64) -> Result<u64> {
        let ok = |n: u64| match self.ln_survival_estimate(n) {
            Ok(est) => self.reliable(&est),
            Err(_) => false,
        };
        if !ok(0) {
            return Err(Error::TailExhausted {
                requested: 0,
                largest_reliable_n: 0,
            });
        }
        let mut good = 0u64;
        let mut probe = 1u64;
        let bad = loop {
            if probe >= cap {
                if ok(cap) {
                    return Ok(cap);
                }
                break cap;
            }
            if !ok(probe) {
                break probe;
            }
            good = probe;
            probe *= 2;
        };
        let mut bad = bad;
        while bad - good > 1 {
            let mid = good + (bad - good) / 2;
            if ok(mid) {
                good = mid;
            } else {
                bad = mid;
            }
        }
        Ok(good)
    }

    /// `F̄_M(n+k)/F̄_M(n)`, from the difference of log survivals.
    pub fn tail_ratio(&self, n: u64, k: u32) -> Result<f64> {
        if k == 0 {
            return Err(Error::Domain("tail ratio needs k >= 1".into()));
        }
        let far = n + k as u64;
        let near_est = self.ln_survival_estimate(n);
        let far_est = self.ln_survival_estimate(far);
        match (near_est, far_est) {
            (Ok(a), Ok(b)) if self.reliable(&a) && self.reliable(&b) => Ok((b.ln_value - a.ln_value).exp()),
            _ => Err(Error::TailExhausted {
                requested: far,
                largest_reliable_n: self.largest_reliable_n(far).unwrap_or(0),
            }),
        }
    }

    pub fn tail_ratio_limit(&self, k: u32) -> f64 {
        tail_ratio_limit(&self.tail, k)
    }

    pub fn tail_ratio_curve(&self, k: u32, ns: &[u64]) -> Result<TailRatioCurve> {
        let points = ns
            .iter()
            .map(|&n| self.tail_ratio(n, k).map(|r| (n, r)))
            .collect::<Result<Vec<_>>>()?;
        Ok(TailRatioCurve {
            k,
            points,
            limit: self.tail_ratio_limit(k),
        })
    }

    // ------------------------------------------------------------------
    // Asymptotic forms
    // ------------------------------------------------------------------

    /// `ln[C·nᵃ·(1+β)^{−(n+a+1)}]` for a mixing density `f(x) ~ C xᵃ e^{−βx}`.
    ///
    /// Only Gamma(α, β) mixing has that form here: `C = βᵅ/Γ(α)`, `a = α − 1`.
    pub fn ln_asymptotic_pmf_willmot(&self, n: u64) -> Result<f64> {
        let MixingSpec::Gamma { alpha, beta } = self.spec else {
            return Err(Error::Precondition(format!(
                "the exponential-tail pmf asymptotic needs a Gamma-type mixing density, got {}",
                self.spec
            )));
        };
        if n == 0 {
            return Err(Error::Domain("asymptotic forms need n >= 1".into()));
        }
        let power = alpha - 1.0;
        let ln_c = alpha * beta.ln() - ln_gamma(alpha);
        Ok(ln_c + power * (n as f64).ln() - (n as f64 + power + 1.0) * beta.ln_1p())
    }

    pub fn asymptotic_pmf_willmot(&self, n: u64) -> Result<f64> {
        self.ln_asymptotic_pmf_willmot(n).map(f64::exp)
    }

    /// Weibull index, endpoint and `ln C(n)` with `C(n) = (1 − F(x₀n/(n+1)))·nᵅ`.
    fn weibull_terms(&self, n: u64) -> Result<(f64, f64, f64)> {
        let TailClass::DMinus { alpha, x0 } = self.tail else {
            return Err(Error::Precondition(format!(
                "finite-endpoint asymptotics need a Weibull-domain mixing law, got {}",
                self.tail
            )));
        };
        if n == 0 {
            return Err(Error::Domain("asymptotic forms need n >= 1".into()));
        }
        let nf = n as f64;
        let ln_c = self.spec.ln_survival(x0 * nf / (nf + 1.0)) + alpha * nf.ln();
        Ok((alpha, x0, ln_c))
    }

    /// `ln[Γ(α+1) C(n) n^{−α} x₀^{n+1} e^{−x₀}/(n+1)!]`.
    pub fn ln_asymptotic_survival_dminus(&self, n: u64) -> Result<f64> {
        let (alpha, x0, ln_c) = self.weibull_terms(n)?;
        let nf = n as f64;
        Ok(ln_gamma(alpha + 1.0) + ln_c - alpha * nf.ln() + (nf + 1.0) * x0.ln() - x0 - ln_factorial(n + 1))
    }

    pub fn asymptotic_survival_dminus(&self, n: u64) -> Result<f64> {
        self.ln_asymptotic_survival_dminus(n).map(f64::exp)
    }

    /// `ln[Γ(α+1) C(n) n^{−α} x₀ⁿ e^{−x₀}/n!]`.
    pub fn ln_asymptotic_pmf_dminus(&self, n: u64) -> Result<f64> {
        let (alpha, x0, ln_c) = self.weibull_terms(n)?;
        let nf = n as f64;
        Ok(ln_gamma(alpha + 1.0) + ln_c - alpha * nf.ln() + nf * x0.ln() - x0 - ln_factorial(n))
    }

    pub fn asymptotic_pmf_dminus(&self, n: u64) -> Result<f64> {
        self.ln_asymptotic_pmf_dminus(n).map(f64::exp)
    }

    // ------------------------------------------------------------------
    // Export
    // ------------------------------------------------------------------

    /// Rows `0..=max_n`; the k = 1 tail ratio is left empty past the reliable range.
    pub fn table(&self, max_n: u64) -> Result<Vec<TableRow>> {
        let ln_surv: Vec<LogEstimate> = (0..=max_n + 1)
            .map(|n| self.ln_survival_estimate(n))
            .collect::<Result<_>>()?;
        (0..=max_n)
            .map(|n| {
                let i = n as usize;
                let ratio = (self.reliable(&ln_surv[i]) && self.reliable(&ln_surv[i + 1]))
                    .then(|| (ln_surv[i + 1].ln_value - ln_surv[i].ln_value).exp());
                Ok(TableRow {
                    n,
                    pmf: self.pmf(n)?,
                    survival: ln_surv[i].ln_value.exp(),
                    tail_ratio_k1: ratio,
                })
            })
            .collect()
    }
}

/// Write table rows as CSV with header `n,pmf,survival,tail_ratio_k1`.
pub fn write_table_csv<W: Write>(rows: &[TableRow], mut out: W) -> Result<()> {
    writeln!(out, "n,pmf,survival,tail_ratio_k1")?;
    for row in rows {
        let ratio = row.tail_ratio_k1.map(|r| format!("{r:e}")).unwrap_or_default();
        writeln!(out, "{},{:e},{:e},{}", row.n, row.pmf, row.survival, ratio)?;
    }
    Ok(())
}

fn finish(shift: f64, value: f64, abs_error: f64) -> Result<LogEstimate> {
    if !(value > 0.0) {
        return Ok(LogEstimate {
            ln_value: f64::NEG_INFINITY,
            rel_error: 0.0,
        });
    }
    Ok(LogEstimate {
        ln_value: shift + value.ln(),
        rel_error: abs_error / value,
    })
}

/// Negative binomial mass of the Poisson–Gamma(α, rate β) mixture.
pub fn negbin_ln_pmf(n: u64, alpha: f64, beta: f64) -> f64 {
    let nf = n as f64;
    ln_gamma(nf + alpha) - ln_gamma(alpha) - ln_factorial(n) + alpha * (beta / (1.0 + beta)).ln() - nf * beta.ln_1p()
}

/// `ln P(X > n)` for the Poisson–Gamma mixture, by summing the tail in log space.
pub fn negbin_ln_survival(n: u64, alpha: f64, beta: f64) -> f64 {
    let mut m = n + 1;
    let mut ln_term = negbin_ln_pmf(m, alpha, beta);
    let mut total = ln_term;
    let ln_q = -beta.ln_1p();
    loop {
        // P(m+1)/P(m) = (m+α)/((m+1)(1+β))
        let mf = m as f64;
        ln_term += ((mf + alpha) / (mf + 1.0)).ln() + ln_q;
        m += 1;
        total = ln_add_exp(total, ln_term);
        let ratio = (mf + alpha) / ((mf + 1.0) * (1.0 + beta));
        if ratio < 1.0 && ln_term - total < -40.0 {
            break;
        }
    }
    total
}

/// Poisson(λ) draw; λ beyond the sampler's range falls back to a normal approximation.
pub(crate) fn poisson_draw<R: Rng + ?Sized>(lambda: f64, rng: &mut R) -> u64 {
    if !(lambda > 0.0) {
        return 0;
    }
    if lambda < Poisson::<f64>::MAX_LAMBDA {
        Poisson::new(lambda).expect("lambda in range").sample(rng) as u64
    } else {
        let z: f64 = rng.sample(StandardNormal);
        (lambda + lambda.sqrt() * z).max(0.0).round() as u64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::special::{ln_gamma_q, ln_poisson_pmf, log_sum_exp};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn model(spec: MixingSpec) -> MixtureModel {
        MixtureModel::new(spec).unwrap()
    }

    /// ln P(Poisson(mean) > n) by direct summation of the upper tail.
    fn ln_poisson_tail(n: u64, mean: f64) -> f64 {
        let terms: Vec<f64> = (n + 1..n + 400).map(|m| ln_poisson_pmf(m, mean)).collect();
        log_sum_exp(&terms).unwrap()
    }

    #[test]
    fn gamma_quadrature_matches_negative_binomial() {
        for &(a, b) in &[(2.0, 1.0), (2.0, 2.0), (1.0, 1.0), (0.7, 0.3)] {
            let m = model(MixingSpec::gamma(a, b).unwrap()).with_forced_quadrature();
            for n in (0..=200).step_by(7) {
                let got = m.ln_pmf(n).unwrap();
                let want = negbin_ln_pmf(n, a, b);
                assert!((got - want).abs() < 1e-9, "({a},{b}) n={n}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn gamma_survival_matches_negative_binomial() {
        let quad = model(MixingSpec::gamma(2.0, 1.0).unwrap()).with_forced_quadrature();
        for n in [0u64, 1, 5, 20, 100, 400] {
            let got = quad.ln_survival(n).unwrap();
            let want = negbin_ln_survival(n, 2.0, 1.0);
            assert!((got - want).abs() < 1e-9, "n={n}: {got} vs {want}");
        }
    }

    #[test]
    fn negbin_survival_closed_form_small_cases() {
        // Geometric(1/2): P(X > n) = 2^{-(n+1)}.
        for n in [0u64, 3, 50, 900] {
            let got = negbin_ln_survival(n, 1.0, 1.0);
            assert!((got + (n as f64 + 1.0) * 2f64.ln()).abs() < 1e-11 * (n as f64 + 1.0));
        }
    }

    #[test]
    fn uniform_pmf_is_poisson_tail_over_x0() {
        let m = model(MixingSpec::uniform(5.0).unwrap());
        for n in [0u64, 1, 4, 5, 10, 30, 80, 150] {
            let got = m.ln_pmf(n).unwrap();
            let want = ln_poisson_tail(n, 5.0) - 5f64.ln();
            assert!((got - want).abs() < 1e-9, "n={n}: {got} vs {want}");
        }
    }

    #[test]
    fn scaled_beta_near_dirac_is_poisson() {
        let m = model(MixingSpec::scaled_beta(5.0, 2.0, 1e-3).unwrap());
        for n in 0..=20u64 {
            let got = m.pmf(n).unwrap();
            let want = ln_poisson_pmf(n, 5.0).exp();
            assert!((got - want).abs() < 1e-2, "n={n}: {got} vs {want}");
        }
    }

    #[test]
    fn scaled_beta_pmf_agrees_with_lambda_space_integral() {
        // For b >= 1 the density is bounded and the plain λ-space path is exact too.
        let spec = MixingSpec::scaled_beta(5.0, 2.0, 2.0).unwrap();
        let m = model(spec);
        for n in [0u64, 3, 10, 40, 120] {
            let direct = m.ln_integral(n, Weight::Density).unwrap().ln_value;
            let transformed = m.ln_pmf(n).unwrap();
            assert!((direct - transformed).abs() < 1e-9, "n={n}");
        }
    }

    #[test]
    fn normalisation_and_telescoping() {
        let specs = [
            MixingSpec::frechet(1.0, 1.0).unwrap(),
            MixingSpec::frechet(2.0, 1.0).unwrap(),
            MixingSpec::lognormal(0.0, 1.0).unwrap(),
            MixingSpec::lognormal(1.0, 1.0).unwrap(),
            MixingSpec::gamma(2.0, 1.0).unwrap(),
            MixingSpec::uniform(5.0).unwrap(),
            MixingSpec::scaled_beta(5.0, 2.0, 0.25).unwrap(),
        ];
        for spec in specs {
            let m = model(spec);
            let mut mass = 0.0;
            let mut previous = 1.0;
            for n in 0..=300u64 {
                let p = m.pmf(n).unwrap();
                let s = m.survival(n).unwrap();
                assert!((previous - s - p).abs() < 1e-10, "{spec} n={n}");
                previous = s;
                mass += p;
            }
            let total = mass + m.survival(300).unwrap();
            assert!((total - 1.0).abs() < 1e-8, "{spec}: {total}");
        }
    }

    #[test]
    fn survival_strictly_decreasing() {
        for spec in [
            MixingSpec::lognormal(0.0, 1.0).unwrap(),
            MixingSpec::uniform(5.0).unwrap(),
        ] {
            let m = model(spec);
            let mut last = f64::INFINITY;
            for n in 0..150u64 {
                let s = m.ln_survival(n).unwrap();
                assert!(s < last, "{spec} n={n}");
                last = s;
            }
        }
    }

    #[test]
    fn sample_moments_gamma_mixture() {
        let m = model(MixingSpec::gamma(2.0, 1.0).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let xs = m.sample(100_000, &mut rng);
        let n = xs.len() as f64;
        let mean = xs.iter().map(|&x| x as f64).sum::<f64>() / n;
        let var = xs.iter().map(|&x| (x as f64 - mean).powi(2)).sum::<f64>() / (n - 1.0);
        // E X = E λ = 2; Var X = E λ + Var λ = 2 + 2 = 4.
        assert!((mean - 2.0).abs() < 0.05, "mean {mean}");
        assert!((var - 4.0).abs() < 0.2, "var {var}");
    }

    #[test]
    fn sampling_is_reproducible() {
        let m = model(MixingSpec::frechet(1.0, 1.0).unwrap());
        let a = m.sample(500, &mut ChaCha8Rng::seed_from_u64(3));
        let b = m.sample(500, &mut ChaCha8Rng::seed_from_u64(3));
        assert_eq!(a, b);
    }

    #[test]
    fn tail_ratio_limit_cases() {
        assert_eq!(tail_ratio_limit(&TailClass::DPlus { alpha: 2.0 }, 3), 1.0);
        assert_eq!(tail_ratio_limit(&TailClass::D0H, 1), 1.0);
        assert!((tail_ratio_limit(&TailClass::D0E { beta: 1.0 }, 2) - 0.25).abs() < 1e-15);
        assert_eq!(tail_ratio_limit(&TailClass::DMinus { alpha: 1.0, x0: 5.0 }, 4), 0.0);
        assert_eq!(tail_ratio_limit(&TailClass::D0F { x0: 5.0 }, 1), 0.0);
    }

    #[test]
    fn tail_ratio_examples() {
        let g = model(MixingSpec::gamma(2.0, 1.0).unwrap());
        assert!((g.tail_ratio(200, 1).unwrap() - 0.5).abs() < 0.02);

        let f = model(MixingSpec::frechet(1.0, 1.0).unwrap());
        let ratios: Vec<f64> = [10u64, 40, 160, 640]
            .iter()
            .map(|&n| f.tail_ratio(n, 1).unwrap())
            .collect();
        assert!(ratios.windows(2).all(|w| w[1] > w[0]), "{ratios:?}");
        assert!(ratios[3] > 0.99);

        let u = model(MixingSpec::uniform(5.0).unwrap());
        for n in 0..150u64 {
            assert!(u.tail_ratio(n, 1).unwrap() <= 5.0 / (n as f64 + 1.0) + 1e-12, "n={n}");
        }
    }

    #[test]
    fn tail_exhaustion_is_loud() {
        let u = model(MixingSpec::uniform(5.0).unwrap());
        let reliable = u.largest_reliable_n(10_000).unwrap();
        assert!(reliable > 100 && reliable < 1000, "{reliable}");
        match u.tail_ratio(reliable + 5, 1) {
            Err(Error::TailExhausted { largest_reliable_n, .. }) => assert_eq!(largest_reliable_n, reliable),
            other => panic!("expected exhaustion, got {other:?}"),
        }
        assert!(u.survival(reliable).unwrap() >= RELIABLE_SURVIVAL_FLOOR);
    }

    #[test]
    fn willmot_examples() {
        let geometric = model(MixingSpec::gamma(1.0, 1.0).unwrap());
        for n in [1u64, 50, 300] {
            let exact = geometric.ln_pmf(n).unwrap();
            let approx = geometric.ln_asymptotic_pmf_willmot(n).unwrap();
            assert!((exact - approx).abs() < 1e-12, "n={n}");
        }
        let g = model(MixingSpec::gamma(2.0, 1.0).unwrap());
        let ratio = g.pmf(100).unwrap() / g.asymptotic_pmf_willmot(100).unwrap();
        assert!((0.95..=1.05).contains(&ratio), "{ratio}");
        let f = model(MixingSpec::frechet(1.0, 1.0).unwrap());
        assert!(matches!(f.asymptotic_pmf_willmot(10), Err(Error::Precondition(_))));
    }

    #[test]
    fn dminus_asymptotics_reject_infinite_support() {
        let g = model(MixingSpec::gamma(2.0, 1.0).unwrap());
        assert!(matches!(g.asymptotic_survival_dminus(10), Err(Error::Precondition(_))));
        assert!(matches!(g.asymptotic_pmf_dminus(10), Err(Error::Precondition(_))));
    }

    #[test]
    fn scaled_beta_pmf_asymptotic_has_closed_limit() {
        // Γ(α+β)/Γ(α)·n^{−β}·x₀ⁿe^{−x₀}/n! is the limit of the pointwise form.
        for &b in &[0.25, 0.5, 1.0, 2.0] {
            let m = model(MixingSpec::scaled_beta(5.0, 2.0, b).unwrap());
            let n = 20_000u64;
            let ours = m.ln_asymptotic_pmf_dminus(n).unwrap();
            let closed = ln_gamma(2.0 + b) - ln_gamma(2.0) - b * (n as f64).ln() + ln_poisson_pmf(n, 5.0);
            assert!((ours - closed).abs() < 1e-3, "b={b}");
        }
    }

    #[test]
    fn table_rows_and_csv() {
        let m = model(MixingSpec::gamma(2.0, 1.0).unwrap());
        let rows = m.table(5).unwrap();
        assert_eq!(rows.len(), 6);
        assert!((rows[0].pmf - 0.25).abs() < 1e-14);
        let mut buf = Vec::new();
        write_table_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("n,pmf,survival,tail_ratio_k1\n0,"));
        assert_eq!(text.lines().count(), 7);
    }

    #[test]
    fn sampler_agrees_with_pmf_chi_square() {
        let specs = [
            MixingSpec::lognormal(0.0, 1.0).unwrap(),
            MixingSpec::frechet(2.0, 1.0).unwrap(),
            MixingSpec::uniform(5.0).unwrap(),
            MixingSpec::scaled_beta(5.0, 2.0, 0.25).unwrap(),
        ];
        for (i, spec) in specs.into_iter().enumerate() {
            let m = model(spec);
            let draws = 100_000usize;
            let xs = m.sample(draws, &mut ChaCha8Rng::seed_from_u64(100 + i as u64));
            // Cells 0..last, the last pooling the tail, each with expected count >= 5.
            let mut expected = Vec::new();
            let mut n = 0u64;
            loop {
                let e = draws as f64 * m.pmf(n).unwrap();
                let tail = draws as f64 * m.survival(n).unwrap();
                if tail < 5.0 {
                    expected.push(e + tail);
                    break;
                }
                expected.push(e);
                n += 1;
            }
            let last = expected.len() - 1;
            let mut observed = vec![0.0; expected.len()];
            for &x in &xs {
                observed[(x as usize).min(last)] += 1.0;
            }
            let stat: f64 = observed.iter().zip(&expected).map(|(o, e)| (o - e).powi(2) / e).sum();
            let df = last as f64;
            let p = ln_gamma_q(df / 2.0, stat / 2.0).exp();
            assert!(p > 0.01, "{spec}: chi2 = {stat} on {df} df, p = {p}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn telescoping_holds_for_random_lognormals(mu in -1.0f64..2.0, sigma in 0.3f64..1.5, n in 1u64..120) {
            let m = model(MixingSpec::lognormal(mu, sigma).unwrap());
            let lhs = m.pmf(n).unwrap();
            let rhs = m.survival(n - 1).unwrap() - m.survival(n).unwrap();
            prop_assert!((lhs - rhs).abs() < 1e-10);
        }

        #[test]
        fn tail_ratio_lies_in_unit_interval(x0 in 1.0f64..20.0, a in 0.5f64..4.0, b in 0.2f64..4.0, n in 0u64..80, k in 1u32..4) {
            let m = model(MixingSpec::scaled_beta(x0, a, b).unwrap());
            let r = m.tail_ratio(n, k).unwrap();
            prop_assert!(r > 0.0 && r < 1.0);
        }

        #[test]
        fn frechet_survival_is_decreasing(alpha in 0.5f64..3.0, beta in 0.5f64..3.0, n in 0u64..500) {
            let m = model(MixingSpec::frechet(alpha, beta).unwrap());
            prop_assert!(m.ln_survival(n + 1).unwrap() < m.ln_survival(n).unwrap());
        }
    }

    #[test]
    fn rel_tol_is_bounded() {
        let m = model(MixingSpec::uniform(5.0).unwrap());
        assert!(m.with_rel_tol(1e-3).is_err());
        assert!(m.with_rel_tol(0.0).is_err());
        assert!(m.with_rel_tol(1e-6).is_ok());
    }
}
