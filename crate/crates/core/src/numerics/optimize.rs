//! Small derivative-free optimisers used by the fitting code.

use crate::error::{Error, Result};

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section search for the maximum of a unimodal `f` on `[lo, hi]`.
///
/// Returns `(argmax, max)`. Stops when the bracket is narrower than
/// `x_tol·(1 + |x|)`.
pub fn golden_section_max<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, x_tol: f64) -> (f64, f64) {
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..200 {
        if (b - a).abs() <= x_tol * (1.0 + c.abs().max(d.abs())) {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Root of a continuous `h` with `h(lo) > 0 > h(hi)` (or the reverse),
/// by the Illinois variant of regula falsi with a bisection fallback.
pub fn bracketed_root<F: FnMut(f64) -> f64>(mut h: F, mut lo: f64, mut hi: f64, x_tol: f64) -> Result<f64> {
    let mut f_lo = h(lo);
    let mut f_hi = h(hi);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() || f_lo.is_nan() || f_hi.is_nan() {
        return Err(Error::Domain(format!(
            "root not bracketed on [{lo}, {hi}]: h = {f_lo}, {f_hi}"
        )));
    }
    let mut side = 0i8;
    for iter in 0..300 {
        let width = hi - lo;
        if width.abs() <= x_tol * (1.0 + lo.abs().max(hi.abs())) {
            return Ok(0.5 * (lo + hi));
        }
        let mut x = if f_lo.is_finite() && f_hi.is_finite() {
            (lo * f_hi - hi * f_lo) / (f_hi - f_lo)
        } else {
            f64::NAN
        };
        // Fall back to bisection every few steps or when the secant leaves the bracket.
        if !(x > lo.min(hi) && x < lo.max(hi)) || iter % 8 == 7 {
            x = 0.5 * (lo + hi);
        }
        let fx = h(x);
        if fx == 0.0 {
            return Ok(x);
        }
        if fx.signum() == f_hi.signum() {
            hi = x;
            f_hi = fx;
            if side == -1 {
                f_lo *= 0.5;
            }
            side = -1;
        } else {
            lo = x;
            f_lo = fx;
            if side == 1 {
                f_hi *= 0.5;
            }
            side = 1;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Result of a Nelder–Mead minimisation.
#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub point: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
}

/// Nelder–Mead simplex minimisation of `f` from `start` with initial edge `step`.
///
/// Converges when the spread of objective values across the simplex is below
/// `f_tol` and the simplex diameter is below `x_tol`.
pub fn nelder_mead<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    start: &[f64],
    step: f64,
    f_tol: f64,
    x_tol: f64,
    max_iter: usize,
) -> Result<Minimum> {
    let dim = start.len();
    if dim == 0 {
        return Err(Error::EmptyInput("nelder_mead needs at least one parameter"));
    }
    let mut eval = |x: &[f64]| {
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(dim + 1);
    simplex.push((start.to_vec(), eval(start)));
    for i in 0..dim {
        let mut p = start.to_vec();
        p[i] += step;
        let v = eval(&p);
        simplex.push((p, v));
    }

    for iter in 0..max_iter {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = simplex[0].1;
        let worst = simplex[dim].1;
        let spread = (worst - best).abs();
        let diameter = simplex[1..]
            .iter()
            .map(|(p, _)| {
                p.iter()
                    .zip(&simplex[0].0)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if best.is_finite() && spread <= f_tol * (1.0 + best.abs()) && diameter <= x_tol {
            return Ok(Minimum {
                point: simplex[0].0.clone(),
                value: best,
                iterations: iter,
            });
        }

        let centroid: Vec<f64> = (0..dim)
            .map(|j| simplex[..dim].iter().map(|(p, _)| p[j]).sum::<f64>() / dim as f64)
            .collect();
        let along =
            |t: f64, worst: &[f64]| -> Vec<f64> { centroid.iter().zip(worst).map(|(c, w)| c + t * (w - c)).collect() };

        let worst_point = simplex[dim].0.clone();
        let reflected = along(-1.0, &worst_point);
        let f_reflected = eval(&reflected);
        if f_reflected < simplex[0].1 {
            let expanded = along(-2.0, &worst_point);
            let f_expanded = eval(&expanded);
            simplex[dim] = if f_expanded < f_reflected {
                (expanded, f_expanded)
            } else {
                (reflected, f_reflected)
            };
            continue;
        }
        if f_reflected < simplex[dim - 1].1 {
            simplex[dim] = (reflected, f_reflected);
            continue;
        }
        let (contracted, f_contracted) = if f_reflected < worst {
            let c = along(-0.5, &worst_point);
            let v = eval(&c);
            (c, v)
        } else {
            let c = along(0.5, &worst_point);
            let v = eval(&c);
            (c, v)
        };
        if f_contracted < worst.min(f_reflected) {
            simplex[dim] = (contracted, f_contracted);
            continue;
        }
        // Shrink towards the best vertex.
        let best_point = simplex[0].0.clone();
        for vertex in simplex.iter_mut().skip(1) {
            let p: Vec<f64> = vertex
                .0
                .iter()
                .zip(&best_point)
                .map(|(x, b)| b + 0.5 * (x - b))
                .collect();
            let v = eval(&p);
            *vertex = (p, v);
        }
    }

    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    Err(Error::OptimizerFailed {
        best_point: simplex[0].0.clone(),
        best_value: simplex[0].1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_finds_parabola_peak() {
        let (x, fx) = golden_section_max(|x| -(x - 1.7).powi(2) + 3.0, -5.0, 5.0, 1e-10);
        assert!((x - 1.7).abs() < 1e-6);
        assert!((fx - 3.0).abs() < 1e-12);
    }

    #[test]
    fn root_of_decreasing_function() {
        let r = bracketed_root(|x: f64| 2.0 - x.exp(), 0.0, 5.0, 1e-14).unwrap();
        assert!((r - 2f64.ln()).abs() < 1e-12);
        assert!(bracketed_root(|x| x * x + 1.0, -1.0, 1.0, 1e-10).is_err());
    }

    #[test]
    fn nelder_mead_rosenbrock() {
        let m = nelder_mead(
            |p| (1.0 - p[0]).powi(2) + 100.0 * (p[1] - p[0] * p[0]).powi(2),
            &[-1.2, 1.0],
            0.5,
            1e-14,
            1e-8,
            5000,
        )
        .unwrap();
        assert!((m.point[0] - 1.0).abs() < 1e-4 && (m.point[1] - 1.0).abs() < 1e-4);
    }

    #[test]
    fn nelder_mead_reports_best_iterate_on_failure() {
        let err = nelder_mead(|p| p[0] * p[0] + p[1] * p[1], &[5.0, 5.0], 1.0, 1e-16, 1e-16, 3).unwrap_err();
        match err {
            Error::OptimizerFailed { best_point, best_value } => {
                assert_eq!(best_point.len(), 2);
                assert!(best_value <= 50.0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
