//! Globally adaptive Gauss–Kronrod (G10/K21) quadrature.
//!
//! Panels are bisected in order of decreasing error estimate until the
//! summed estimate drops below `max(rel_tol·|value|, abs_tol)`. A half-line
//! `[a, ∞)` is mapped onto `[0, 1)` with `λ = a + t/(1 − t)`. Running out of
//! panels is reported as [`Error::QuadratureBudget`].

#![allow(clippy::excessive_precision)]

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

/// Kronrod abscissae on `[0, 1]`; odd indices are the Gauss nodes.
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

/// Gauss weights for `XGK[1], XGK[3], …, XGK[9]`.
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

pub const DEFAULT_PANEL_BUDGET: usize = 10_000;

/// Outcome of a converged integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureResult {
    pub value: f64,
    pub abs_error_estimate: f64,
    pub evaluations: usize,
}

/// Tolerances and budget for [`Quadrature::integrate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_panels: usize,
}

impl Default for Quadrature {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-300,
            max_panels: DEFAULT_PANEL_BUDGET,
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Map {
    Identity,
    /// `λ = base + t/(1 − t)`
    HalfLine(f64),
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    lo: f64,
    hi: f64,
    map: Map,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

impl Quadrature {
    pub fn with_rel_tol(rel_tol: f64) -> Self {
        Self {
            rel_tol,
            ..Self::default()
        }
    }

    /// Integrate `f` over consecutive segments `points[0]..points[1]..…`.
    ///
    /// Only the last point may be `+∞`.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, points: &[f64]) -> Result<QuadratureResult> {
        if points.len() < 2 {
            return Err(Error::Domain("integration needs at least two points".into()));
        }
        if !(self.rel_tol > 0.0) {
            return Err(Error::Domain(format!("rel_tol must be positive, got {}", self.rel_tol)));
        }
        for (i, w) in points.windows(2).enumerate() {
            let last = i + 2 == points.len();
            if w[0].is_nan() || w[1].is_nan() || !w[0].is_finite() || !(w[0] < w[1]) {
                return Err(Error::Domain(format!(
                    "invalid integration segment [{}, {}]",
                    w[0], w[1]
                )));
            }
            if w[1].is_infinite() && !last {
                return Err(Error::Domain("only the final limit may be infinite".into()));
            }
        }

        let mut evaluations = 0usize;
        let mut heap = BinaryHeap::new();
        let mut total = 0.0;
        let mut total_err = 0.0;
        for w in points.windows(2) {
            let (lo, hi, map) = if w[1].is_infinite() {
                (0.0, 1.0, Map::HalfLine(w[0]))
            } else {
                (w[0], w[1], Map::Identity)
            };
            let panel = rule(&f, lo, hi, map, &mut evaluations)?;
            total += panel.value;
            total_err += panel.error;
            heap.push(panel);
        }

        let mut panels = heap.len();
        loop {
            if total_err <= (self.rel_tol * total.abs()).max(self.abs_tol) {
                return Ok(QuadratureResult {
                    value: total,
                    abs_error_estimate: total_err,
                    evaluations,
                });
            }
            if panels >= self.max_panels {
                return Err(Error::QuadratureBudget {
                    value: total,
                    abs_error: total_err,
                    panels,
                });
            }
            let worst = heap.pop().expect("heap is never empty");
            let mid = 0.5 * (worst.lo + worst.hi);
            let resolution = 64.0 * f64::EPSILON * worst.lo.abs().max(worst.hi.abs()).max(f64::MIN_POSITIVE);
            if worst.hi - worst.lo <= resolution {
                // Panel is at floating-point resolution; splitting further only hides the error.
                return Err(Error::QuadratureBudget {
                    value: total,
                    abs_error: total_err,
                    panels,
                });
            }
            let left = rule(&f, worst.lo, mid, worst.map, &mut evaluations)?;
            let right = rule(&f, mid, worst.hi, worst.map, &mut evaluations)?;
            total += left.value + right.value - worst.value;
            total_err += left.error + right.error - worst.error;
            heap.push(left);
            heap.push(right);
            panels += 1;

            // Refresh the running sums now and then so cancellation cannot drift.
            if panels % 64 == 0 {
                total = heap.iter().map(|p| p.value).sum();
                total_err = heap.iter().map(|p| p.error).sum();
            }
        }
    }
}

/// `∫ₐᵇ f` with `b` possibly `+∞`, at the default budget and the given relative tolerance.
pub fn integrate_adaptive<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> Result<QuadratureResult> {
    Quadrature::with_rel_tol(rel_tol).integrate(f, &[a, b])
}

fn rule<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64, map: Map, evaluations: &mut usize) -> Result<Panel> {
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let eval = |t: f64| -> Result<f64> {
        let v = match map {
            Map::Identity => f(t),
            Map::HalfLine(base) => {
                let s = 1.0 - t;
                f(base + t / s) / (s * s)
            }
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Domain(format!("integrand is not finite near {t}")))
        }
    };

    let mut kronrod = WGK[10] * eval(center)?;
    let mut gauss = 0.0;
    for j in 0..10 {
        let dx = half * XGK[j];
        let pair = eval(center - dx)? + eval(center + dx)?;
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    *evaluations += 21;
    let value = kronrod * half;
    let error = ((kronrod - gauss) * half).abs();
    Ok(Panel {
        lo,
        hi,
        map,
        value,
        error,
    })
}
