//! Parametric mixing distributions for the Poisson intensity λ.
//!
//! Five families are supported, one representative for each tail regime
//! the mixture can end up in:
//!
//! | family        | support   | tail class |
//! |---------------|-----------|------------|
//! | Fréchet(α, β) | (0, ∞)    | `DPlus(α)` |
//! | lognormal(μ, σ) | (0, ∞)  | `D0H`      |
//! | Gamma(α, β)   | (0, ∞)    | `D0E(β)`   |
//! | Uniform(0, x₀)| (0, x₀)   | `DMinus(1, x₀)` |
//! | x₀·Beta(α, β) | (0, x₀)   | `DMinus(β, x₀)` |
//!
//! Gamma is parameterised by shape and *rate*. The classification is
//! declarative: each family is known to sit in one class, the map is not
//! derived from the tail conditions at run time.

use std::fmt;

use rand::distr::Open01;
use rand::Rng;
use rand_distr::{Beta, Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::{beta as sbeta, erf, gamma as sgamma};

use crate::error::{Error, Result};
use crate::numerics::special::{ln_gamma, ln_gamma_q, ln_normal_sf, ln_one_minus_exp};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Family tag, also the JSON `"family"` name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Frechet,
    Lognormal,
    Gamma,
    Uniform,
    ScaledBeta,
}

impl Family {
    pub const ALL: [Family; 5] = [
        Family::Frechet,
        Family::Lognormal,
        Family::Gamma,
        Family::Uniform,
        Family::ScaledBeta,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Frechet => "frechet",
            Family::Lognormal => "lognormal",
            Family::Gamma => "gamma",
            Family::Uniform => "uniform",
            Family::ScaledBeta => "scaled_beta",
        }
    }

    /// Number of free parameters.
    pub fn parameter_count(self) -> usize {
        match self {
            Family::Uniform => 1,
            Family::ScaledBeta => 3,
            _ => 2,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown mixing family '{s}'")))
    }
}

/// A mixing distribution. Construct through the checked constructors or
/// call [`MixingSpec::validate`] before use.
///
/// Serialises as `{"family": "gamma", "params": {"alpha": 2, "beta": 1}}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpec", into = "RawSpec")]
pub enum MixingSpec {
    Frechet { alpha: f64, beta: f64 },
    Lognormal { mu: f64, sigma: f64 },
    Gamma { alpha: f64, beta: f64 },
    Uniform { x0: f64 },
    ScaledBeta { x0: f64, alpha: f64, beta: f64 },
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "family", content = "params", rename_all = "snake_case", deny_unknown_fields)]
enum RawSpec {
    Frechet { alpha: f64, beta: f64 },
    Lognormal { mu: f64, sigma: f64 },
    Gamma { alpha: f64, beta: f64 },
    Uniform { x0: f64 },
    ScaledBeta { x0: f64, alpha: f64, beta: f64 },
}

impl TryFrom<RawSpec> for MixingSpec {
    type Error = Error;

    fn try_from(raw: RawSpec) -> Result<Self> {
        let spec = match raw {
            RawSpec::Frechet { alpha, beta } => MixingSpec::Frechet { alpha, beta },
            RawSpec::Lognormal { mu, sigma } => MixingSpec::Lognormal { mu, sigma },
            RawSpec::Gamma { alpha, beta } => MixingSpec::Gamma { alpha, beta },
            RawSpec::Uniform { x0 } => MixingSpec::Uniform { x0 },
            RawSpec::ScaledBeta { x0, alpha, beta } => MixingSpec::ScaledBeta { x0, alpha, beta },
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl From<MixingSpec> for RawSpec {
    fn from(spec: MixingSpec) -> Self {
        match spec {
            MixingSpec::Frechet { alpha, beta } => RawSpec::Frechet { alpha, beta },
            MixingSpec::Lognormal { mu, sigma } => RawSpec::Lognormal { mu, sigma },
            MixingSpec::Gamma { alpha, beta } => RawSpec::Gamma { alpha, beta },
            MixingSpec::Uniform { x0 } => RawSpec::Uniform { x0 },
            MixingSpec::ScaledBeta { x0, alpha, beta } => RawSpec::ScaledBeta { x0, alpha, beta },
        }
    }
}

/// Tail class of a mixing distribution.
///
/// `DPlus` is the Fréchet domain with index α, `D0H` the Gumbel domain under
/// the hazard condition, `D0E` the Gumbel domain with exponential tail of
/// rate β, `D0F` a finite endpoint outside the Weibull domain and `DMinus`
/// the Weibull domain with index α and endpoint x₀.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum TailClass {
    DPlus { alpha: f64 },
    D0H,
    D0E { beta: f64 },
    D0F { x0: f64 },
    DMinus { alpha: f64, x0: f64 },
}

impl TailClass {
    /// Right endpoint of the mixing support, `None` when infinite.
    pub fn endpoint(&self) -> Option<f64> {
        match *self {
            TailClass::D0F { x0 } | TailClass::DMinus { x0, .. } => Some(x0),
            _ => None,
        }
    }

    /// Shape γ of the limiting GEV of the *mixing* law, where one exists.
    pub fn gev_shape(&self) -> Option<f64> {
        match *self {
            TailClass::DPlus { alpha } => Some(1.0 / alpha),
            TailClass::D0H | TailClass::D0E { .. } | TailClass::D0F { .. } => Some(0.0),
            TailClass::DMinus { alpha, .. } => Some(-1.0 / alpha),
        }
    }
}

impl fmt::Display for TailClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            TailClass::DPlus { alpha } => write!(f, "D+(α={alpha})"),
            TailClass::D0H => write!(f, "D0H"),
            TailClass::D0E { beta } => write!(f, "D0E(β={beta})"),
            TailClass::D0F { x0 } => write!(f, "D0F(x₀={x0})"),
            TailClass::DMinus { alpha, x0 } => write!(f, "D-(α={alpha}, x₀={x0})"),
        }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be positive and finite, got {v}")))
    }
}

impl MixingSpec {
    pub fn frechet(alpha: f64, beta: f64) -> Result<Self> {
        let s = MixingSpec::Frechet { alpha, beta };
        s.validate().map(|_| s)
    }

    pub fn lognormal(mu: f64, sigma: f64) -> Result<Self> {
        let s = MixingSpec::Lognormal { mu, sigma };
        s.validate().map(|_| s)
    }

    /// Gamma with shape `alpha` and rate `beta`.
    pub fn gamma(alpha: f64, beta: f64) -> Result<Self> {
        let s = MixingSpec::Gamma { alpha, beta };
        s.validate().map(|_| s)
    }

    pub fn uniform(x0: f64) -> Result<Self> {
        let s = MixingSpec::Uniform { x0 };
        s.validate().map(|_| s)
    }

    /// `x0 · Beta(alpha, beta)`.
    pub fn scaled_beta(x0: f64, alpha: f64, beta: f64) -> Result<Self> {
        let s = MixingSpec::ScaledBeta { x0, alpha, beta };
        s.validate().map(|_| s)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            MixingSpec::Frechet { alpha, beta } | MixingSpec::Gamma { alpha, beta } => {
                positive("alpha", alpha)?;
                positive("beta", beta)
            }
            MixingSpec::Lognormal { mu, sigma } => {
                if !mu.is_finite() {
                    return Err(Error::Domain(format!("mu must be finite, got {mu}")));
                }
                positive("sigma", sigma)
            }
            MixingSpec::Uniform { x0 } => positive("x0", x0),
            MixingSpec::ScaledBeta { x0, alpha, beta } => {
                positive("x0", x0)?;
                positive("alpha", alpha)?;
                positive("beta", beta)
            }
        }
    }

    pub fn family(&self) -> Family {
        match self {
            MixingSpec::Frechet { .. } => Family::Frechet,
            MixingSpec::Lognormal { .. } => Family::Lognormal,
            MixingSpec::Gamma { .. } => Family::Gamma,
            MixingSpec::Uniform { .. } => Family::Uniform,
            MixingSpec::ScaledBeta { .. } => Family::ScaledBeta,
        }
    }

    /// Parameters in declaration order.
    pub fn params(&self) -> Vec<f64> {
        match *self {
            MixingSpec::Frechet { alpha, beta } | MixingSpec::Gamma { alpha, beta } => vec![alpha, beta],
            MixingSpec::Lognormal { mu, sigma } => vec![mu, sigma],
            MixingSpec::Uniform { x0 } => vec![x0],
            MixingSpec::ScaledBeta { x0, alpha, beta } => vec![x0, alpha, beta],
        }
    }

    /// Inverse of [`MixingSpec::params`].
    pub fn from_params(family: Family, p: &[f64]) -> Result<Self> {
        if p.len() != family.parameter_count() {
            return Err(Error::Domain(format!(
                "{family} takes {} parameters, got {}",
                family.parameter_count(),
                p.len()
            )));
        }
        match family {
            Family::Frechet => Self::frechet(p[0], p[1]),
            Family::Lognormal => Self::lognormal(p[0], p[1]),
            Family::Gamma => Self::gamma(p[0], p[1]),
            Family::Uniform => Self::uniform(p[0]),
            Family::ScaledBeta => Self::scaled_beta(p[0], p[1], p[2]),
        }
    }

    /// Right endpoint of the support; `None` means `+∞`.
    pub fn upper_endpoint(&self) -> Option<f64> {
        match *self {
            MixingSpec::Uniform { x0 } | MixingSpec::ScaledBeta { x0, .. } => Some(x0),
            _ => None,
        }
    }

    pub fn classify(&self) -> TailClass {
        match *self {
            MixingSpec::Frechet { alpha, .. } => TailClass::DPlus { alpha },
            MixingSpec::Lognormal { .. } => TailClass::D0H,
            MixingSpec::Gamma { beta, .. } => TailClass::D0E { beta },
            MixingSpec::Uniform { x0 } => TailClass::DMinus { alpha: 1.0, x0 },
            MixingSpec::ScaledBeta { x0, beta, .. } => TailClass::DMinus { alpha: beta, x0 },
        }
    }

    /// Log density; `-∞` outside the support.
    pub fn ln_pdf(&self, x: f64) -> f64 {
        if !(x > 0.0) {
            return f64::NEG_INFINITY;
        }
        match *self {
            MixingSpec::Frechet { alpha, beta } => {
                let ln_z = -alpha * (x.ln() - beta.ln());
                alpha.ln() - x.ln() + ln_z - ln_z.exp()
            }
            MixingSpec::Lognormal { mu, sigma } => {
                let lx = x.ln();
                let z = (lx - mu) / sigma;
                -lx - sigma.ln() - LN_SQRT_2PI - 0.5 * z * z
            }
            MixingSpec::Gamma { alpha, beta } => {
                alpha * beta.ln() - ln_gamma(alpha) + (alpha - 1.0) * x.ln() - beta * x
            }
            MixingSpec::Uniform { x0 } => {
                if x < x0 {
                    -x0.ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
            MixingSpec::ScaledBeta { x0, alpha, beta } => {
                if x >= x0 {
                    return f64::NEG_INFINITY;
                }
                let t = x / x0;
                let one_minus_t = (x0 - x) / x0;
                (alpha - 1.0) * t.ln() + (beta - 1.0) * one_minus_t.ln() - sbeta::ln_beta(alpha, beta) - x0.ln()
            }
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.ln_pdf(x).exp()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if !(x > 0.0) {
            return 0.0;
        }
        match *self {
            MixingSpec::Frechet { alpha, beta } => (-(x / beta).powf(-alpha)).exp(),
            MixingSpec::Lognormal { mu, sigma } => 0.5 * erf::erfc(-(x.ln() - mu) / (sigma * std::f64::consts::SQRT_2)),
            MixingSpec::Gamma { alpha, beta } => sgamma::gamma_lr(alpha, beta * x),
            MixingSpec::Uniform { x0 } => (x / x0).min(1.0),
            MixingSpec::ScaledBeta { x0, alpha, beta } => {
                if x >= x0 {
                    1.0
                } else {
                    sbeta::beta_reg(alpha, beta, x / x0)
                }
            }
        }
    }

    pub fn survival(&self, x: f64) -> f64 {
        self.ln_survival(x).exp()
    }

    /// `ln(1 − F(x))`, accurate deep in the upper tail.
    pub fn ln_survival(&self, x: f64) -> f64 {
        if !(x > 0.0) {
            return 0.0;
        }
        match *self {
            MixingSpec::Frechet { alpha, beta } => {
                let z = (x / beta).powf(-alpha);
                ln_one_minus_exp(-z)
            }
            MixingSpec::Lognormal { mu, sigma } => ln_normal_sf((x.ln() - mu) / sigma),
            MixingSpec::Gamma { alpha, beta } => ln_gamma_q(alpha, beta * x),
            MixingSpec::Uniform { x0 } => {
                if x >= x0 {
                    f64::NEG_INFINITY
                } else {
                    ((x0 - x) / x0).ln()
                }
            }
            MixingSpec::ScaledBeta { x0, alpha, beta } => {
                if x >= x0 {
                    f64::NEG_INFINITY
                } else {
                    // 1 - I_t(a, b) = I_{1-t}(b, a)
                    sbeta::beta_reg(beta, alpha, (x0 - x) / x0).ln()
                }
            }
        }
    }

    /// Closed-form inverse cdf, available for Fréchet and uniform mixing.
    pub fn inverse_cdf(&self, u: f64) -> Option<f64> {
        if !(u > 0.0 && u < 1.0) {
            return None;
        }
        match *self {
            MixingSpec::Frechet { alpha, beta } => Some(beta * (-u.ln()).powf(-1.0 / alpha)),
            MixingSpec::Uniform { x0 } => Some(u * x0),
            _ => None,
        }
    }

    /// Draw one λ.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            MixingSpec::Frechet { .. } | MixingSpec::Uniform { .. } => {
                let u: f64 = rng.sample(Open01);
                self.inverse_cdf(u).expect("closed-form inverse")
            }
            MixingSpec::Lognormal { mu, sigma } => {
                let z: f64 = rng.sample(StandardNormal);
                (mu + sigma * z).exp()
            }
            MixingSpec::Gamma { alpha, beta } => {
                Gamma::new(alpha, 1.0 / beta).expect("validated parameters").sample(rng)
            }
            MixingSpec::ScaledBeta { x0, alpha, beta } => {
                x0 * Beta::new(alpha, beta).expect("validated parameters").sample(rng)
            }
        }
    }

    /// Mean of λ, when finite.
    pub fn mean(&self) -> Option<f64> {
        match *self {
            MixingSpec::Frechet { alpha, beta } => (alpha > 1.0).then(|| beta * sgamma::gamma(1.0 - 1.0 / alpha)),
            MixingSpec::Lognormal { mu, sigma } => Some((mu + 0.5 * sigma * sigma).exp()),
            MixingSpec::Gamma { alpha, beta } => Some(alpha / beta),
            MixingSpec::Uniform { x0 } => Some(0.5 * x0),
            MixingSpec::ScaledBeta { x0, alpha, beta } => Some(x0 * alpha / (alpha + beta)),
        }
    }

    /// Variance of λ, when finite.
    pub fn variance(&self) -> Option<f64> {
        match *self {
            MixingSpec::Frechet { alpha, beta } => (alpha > 2.0).then(|| {
                let g1 = sgamma::gamma(1.0 - 1.0 / alpha);
                beta * beta * (sgamma::gamma(1.0 - 2.0 / alpha) - g1 * g1)
            }),
            MixingSpec::Lognormal { mu, sigma } => {
                let s2 = sigma * sigma;
                Some((s2.exp() - 1.0) * (2.0 * mu + s2).exp())
            }
            MixingSpec::Gamma { alpha, beta } => Some(alpha / (beta * beta)),
            MixingSpec::Uniform { x0 } => Some(x0 * x0 / 12.0),
            MixingSpec::ScaledBeta { x0, alpha, beta } => {
                let s = alpha + beta;
                Some(x0 * x0 * alpha * beta / (s * s * (s + 1.0)))
            }
        }
    }
}

impl fmt::Display for MixingSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            MixingSpec::Frechet { alpha, beta } => write!(f, "Frechet({alpha},{beta})"),
            MixingSpec::Lognormal { mu, sigma } => write!(f, "Lognormal({mu},{sigma})"),
            MixingSpec::Gamma { alpha, beta } => write!(f, "Gamma({alpha},{beta})"),
            MixingSpec::Uniform { x0 } => write!(f, "Uniform(0,{x0})"),
            MixingSpec::ScaledBeta { x0, alpha, beta } => write!(f, "{x0}Beta({alpha},{beta})"),
        }
    }
}
