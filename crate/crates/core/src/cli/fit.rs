//! Least-squares fits used by the analysis experiments.

use std::f64::consts::PI;

use faer::linalg::solvers::SolveLstsq;
use faer::Mat;

/// y ≈ intercept + slope·x with standard errors of both parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub slope_err: f64,
    pub intercept: f64,
    pub intercept_err: f64,
}

pub fn fit_line(x: &[f64], y: &[f64]) -> Option<LineFit> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if !(sxx > 0.0) {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let (slope_err, intercept_err) = if n > 2 {
        let rss: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
        let s2 = rss / (nf - 2.0);
        ((s2 / sxx).sqrt(), (s2 * (1.0 / nf + mx * mx / sxx)).sqrt())
    } else {
        (f64::NAN, f64::NAN)
    };
    Some(LineFit { slope, slope_err, intercept, intercept_err })
}

/// Exponent p of |y| ∝ x^p from a line fit in log-log coordinates.
pub fn fit_power_law(x: &[f64], y: &[f64]) -> Option<LineFit> {
    let (lx, ly): (Vec<f64>, Vec<f64>) =
        x.iter().zip(y).filter(|(a, b)| **a > 0.0 && b.abs() > 0.0).map(|(a, b)| (a.ln(), b.abs().ln())).unzip();
    fit_line(&lx, &ly)
}

/// Local fit y(d) ≈ A + A'(d − d_c) + B cos ωd + C sin ωd on one run of
/// distances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Oscillation {
    pub center: f64,
    pub average: f64,
    pub amplitude: f64,
    pub wavenumber: f64,
    pub rms_residual: f64,
}

/// Columns of the local model: a linear trend plus either a free
/// oscillation B cos ωd + C sin ωd, or at the lattice Nyquist wavenumber an
/// alternating term (−1)^d (B + B'(d − d_c)) whose envelope is resolved.
fn design(d: &[f64], omega: Option<f64>) -> (Mat<f64>, f64) {
    let n = d.len();
    let center = d.iter().sum::<f64>() / n as f64;
    let mut a = Mat::<f64>::zeros(n, 4);
    for (i, &di) in d.iter().enumerate() {
        let x = (di - center) / n as f64;
        a[(i, 0)] = 1.0;
        a[(i, 1)] = x;
        match omega {
            Some(w) => {
                a[(i, 2)] = (w * di).cos();
                a[(i, 3)] = (w * di).sin();
            }
            None => {
                let alt = if di.rem_euclid(2.0) < 0.5 { 1.0 } else { -1.0 };
                a[(i, 2)] = alt;
                a[(i, 3)] = alt * x;
            }
        }
    }
    (a, center)
}

struct BlockFit {
    coef: [f64; 4],
    rms: f64,
    center: f64,
}

fn solve_block(d: &[f64], y: &[f64], omega: Option<f64>) -> BlockFit {
    let n = d.len();
    let scale = y.iter().map(|v| v.abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let (a, center) = design(d, omega);
    let b = Mat::<f64>::from_fn(n, 1, |i, _| y[i] / scale);
    let x = a.qr().solve_lstsq(&b);
    let rss: f64 = (0..n)
        .map(|i| {
            let fit: f64 = (0..4).map(|j| a[(i, j)] * x[(j, 0)]).sum();
            (fit - b[(i, 0)]).powi(2)
        })
        .sum();
    BlockFit { coef: [0, 1, 2, 3].map(|j| x[(j, 0)] * scale), rms: (rss / n as f64).sqrt() * scale, center }
}

/// Fits one run of distances, locating ω in (0, π] by a grid scan of the
/// residual followed by golden-section refinement. At ω = π the residual
/// is that of the alternating model, which also lets the amplitude vary.
pub fn fit_oscillation(d: &[f64], y: &[f64]) -> Oscillation {
    let residual = |w: f64| {
        if w == PI {
            solve_block(d, y, None).rms
        } else {
            solve_block(d, y, Some(w)).rms
        }
    };
    let grid = 400;
    let h = PI / grid as f64;
    let best = (1..=grid).map(|i| i as f64 * h).min_by(|a, b| residual(*a).total_cmp(&residual(*b))).expect("non-empty grid");
    let (mut lo, mut hi) = ((best - h).max(1e-6), (best + h).min(PI));
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut x1, mut x2) = (hi - g * (hi - lo), lo + g * (hi - lo));
    let (mut f1, mut f2) = (residual(x1), residual(x2));
    for _ in 0..80 {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = residual(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = residual(x2);
        }
    }
    let mut omega = 0.5 * (lo + hi);
    // The golden section cannot reach the interval end; keep it if better.
    if residual(PI) <= residual(omega) {
        omega = PI;
    }
    // Closer to π than this, the beat (π − ω)d stays below 0.1 rad across
    // the block: cos and sin are then indistinguishable alternating
    // columns, and the envelope is fitted as such.
    let span = d.iter().fold(f64::NEG_INFINITY, |m, &x| m.max(x)) - d.iter().fold(f64::INFINITY, |m, &x| m.min(x));
    let nyquist = (PI - omega) * span.max(1.0) < 0.1;
    let fit = solve_block(d, y, if nyquist { None } else { Some(omega) });
    let amplitude = if nyquist { fit.coef[2].abs() } else { fit.coef[2].hypot(fit.coef[3]) };
    Oscillation { center: fit.center, average: fit.coef[0], amplitude, wavenumber: omega, rms_residual: fit.rms }
}
