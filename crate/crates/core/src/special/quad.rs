//! Adaptive quadrature on finite intervals.
//!
//! Two schemes are provided. Globally adaptive Gauss–Kronrod (10/21 point)
//! bisects the panel with the largest error estimate until the summed
//! estimate meets the tolerance. Tanh–sinh refines a double-exponential
//! trapezoidal rule level by level and copes with integrable endpoint
//! singularities such as `ln x` or `x^{-1/2}`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use thiserror::Error;

/// Which rule `integrate` uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    GaussKronrod,
    TanhSinh,
}

/// Tolerances and refinement limits for one integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Maximal bisection depth (Gauss–Kronrod) or refinement level (tanh–sinh).
    pub max_depth: u32,
    pub scheme: Scheme,
}

impl QuadratureSpec {
    pub const MIN_ABS_TOL: f64 = 1e-15;
    pub const MAX_DEPTH: u32 = 30;

    pub fn new(abs_tol: f64, rel_tol: f64, max_depth: u32, scheme: Scheme) -> Result<Self, QuadError> {
        if !(abs_tol >= Self::MIN_ABS_TOL) || !(rel_tol >= 0.0) {
            return Err(QuadError::InvalidSpec(format!(
                "tolerances must satisfy abs_tol >= {} and rel_tol >= 0 (got {abs_tol}, {rel_tol})",
                Self::MIN_ABS_TOL
            )));
        }
        if max_depth == 0 || max_depth > Self::MAX_DEPTH {
            return Err(QuadError::InvalidSpec(format!(
                "max_depth must lie in 1..={} (got {max_depth})",
                Self::MAX_DEPTH
            )));
        }
        Ok(Self { abs_tol, rel_tol, max_depth, scheme })
    }

    pub fn gauss_kronrod(abs_tol: f64) -> Self {
        Self { abs_tol: abs_tol.max(Self::MIN_ABS_TOL), rel_tol: 0.0, max_depth: Self::MAX_DEPTH, scheme: Scheme::GaussKronrod }
    }

    pub fn tanh_sinh(abs_tol: f64) -> Self {
        Self { abs_tol: abs_tol.max(Self::MIN_ABS_TOL), rel_tol: 0.0, max_depth: 12, scheme: Scheme::TanhSinh }
    }

    pub fn with_rel_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }
}

/// Integral estimate with a conservative error bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: Complex64,
    pub err_est: f64,
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum QuadError {
    #[error("invalid quadrature spec: {0}")]
    InvalidSpec(String),
    #[error("invalid interval [{a}, {b}]")]
    InvalidInterval { a: f64, b: f64 },
    #[error("integrand is not finite at x = {x}")]
    NonFinite { x: f64 },
    #[error("quadrature did not converge: estimate {estimate} with error {err_est:e}")]
    NoConvergence { estimate: Complex64, err_est: f64 },
}

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
    0.123_491_976_262_065_851_077_208_463_404_100,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

/// Gauss weights attached to the odd-indexed Kronrod nodes `XGK[1], XGK[3], ...`.
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

/// Cap on the number of live panels, independent of depth.
const MAX_PANELS: usize = 50_000;

pub fn integrate<F>(f: F, a: f64, b: f64, spec: &QuadratureSpec) -> Result<Quadrature, QuadError>
where
    F: Fn(f64) -> Complex64,
{
    if !(a.is_finite() && b.is_finite()) || a > b {
        return Err(QuadError::InvalidInterval { a, b });
    }
    if a == b {
        return Ok(Quadrature { value: Complex64::new(0.0, 0.0), err_est: 0.0 });
    }
    match spec.scheme {
        Scheme::GaussKronrod => gauss_kronrod(&f, a, b, spec),
        Scheme::TanhSinh => tanh_sinh(&f, a, b, spec),
    }
}

/// Real-valued convenience wrapper around [`integrate`].
pub fn integrate_real<F>(f: F, a: f64, b: f64, spec: &QuadratureSpec) -> Result<f64, QuadError>
where
    F: Fn(f64) -> f64,
{
    integrate(|x| Complex64::new(f(x), 0.0), a, b, spec).map(|q| q.value.re)
}

/// Integrates over consecutive intervals `[breaks[i], breaks[i+1]]`, so that
/// kinks and jumps of `f` at the breakpoints never fall inside a panel.
pub fn integrate_pieces<F>(f: F, breaks: &[f64], spec: &QuadratureSpec) -> Result<Quadrature, QuadError>
where
    F: Fn(f64) -> Complex64,
{
    let pieces = breaks.len().saturating_sub(1).max(1) as f64;
    let piece_spec = QuadratureSpec { abs_tol: (spec.abs_tol / pieces).max(QuadratureSpec::MIN_ABS_TOL), ..*spec };
    let mut total = Quadrature { value: Complex64::new(0.0, 0.0), err_est: 0.0 };
    for w in breaks.windows(2) {
        let q = integrate(&f, w[0], w[1], &piece_spec)?;
        total.value += q.value;
        total.err_est += q.err_est;
    }
    Ok(total)
}

struct Panel {
    a: f64,
    b: f64,
    value: Complex64,
    err: f64,
    depth: u32,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
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
        self.err.total_cmp(&other.err)
    }
}

/// One Gauss–Kronrod 21 panel: (Kronrod value, error estimate, rounding floor).
fn gk21<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64) -> Result<(Complex64, f64, f64), QuadError> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    if !(fc.re.is_finite() && fc.im.is_finite()) {
        return Err(QuadError::NonFinite { x: c });
    }
    let mut kron = fc * WGK[10];
    let mut gauss = Complex64::new(0.0, 0.0);
    let mut abs_int = fc.norm() * WGK[10];
    for j in 0..10 {
        let dx = h * XGK[j];
        let (xl, xr) = (c - dx, c + dx);
        let (fl, fr) = (f(xl), f(xr));
        if !(fl.re.is_finite() && fl.im.is_finite()) {
            return Err(QuadError::NonFinite { x: xl });
        }
        if !(fr.re.is_finite() && fr.im.is_finite()) {
            return Err(QuadError::NonFinite { x: xr });
        }
        kron += (fl + fr) * WGK[j];
        abs_int += (fl.norm() + fr.norm()) * WGK[j];
        if j % 2 == 1 {
            gauss += (fl + fr) * WG[j / 2];
        }
    }
    let value = kron * h;
    let err = ((kron - gauss) * h).norm();
    // Below this the estimate is dominated by rounding in the sum itself.
    let floor = 50.0 * f64::EPSILON * abs_int * h.abs();
    Ok((value, err.max(floor), floor))
}

fn gauss_kronrod<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64, spec: &QuadratureSpec) -> Result<Quadrature, QuadError> {
    let (v0, e0, _) = gk21(f, a, b)?;
    let mut heap = BinaryHeap::new();
    heap.push(Panel { a, b, value: v0, err: e0, depth: 0 });
    let mut live_value = v0;
    let mut live_err = e0;
    let mut settled_value = Complex64::new(0.0, 0.0);
    let mut settled_err = 0.0;
    let mut stuck = false;

    loop {
        let value = settled_value + live_value;
        let err = settled_err + live_err.max(0.0);
        let tol = spec.abs_tol.max(spec.rel_tol * value.norm());
        if err <= tol {
            return Ok(Quadrature { value, err_est: err });
        }
        let Some(worst) = heap.pop() else {
            // Every panel is either at the depth limit or at the rounding floor.
            if stuck {
                return Err(QuadError::NoConvergence { estimate: value, err_est: err });
            }
            return Ok(Quadrature { value, err_est: err });
        };
        live_value -= worst.value;
        live_err -= worst.err;
        let width = worst.b - worst.a;
        let mid = 0.5 * (worst.a + worst.b);
        let resolvable = mid > worst.a && mid < worst.b && width > 4.0 * f64::EPSILON * (worst.a.abs() + worst.b.abs());
        if worst.depth >= spec.max_depth || !resolvable || heap.len() >= MAX_PANELS {
            stuck = true;
            settled_value += worst.value;
            settled_err += worst.err;
            continue;
        }
        let (vl, el, fl) = gk21(f, worst.a, mid)?;
        let (vr, er, fr) = gk21(f, mid, worst.b)?;
        for (lo, hi, v, e, floor) in [(worst.a, mid, vl, el, fl), (mid, worst.b, vr, er, fr)] {
            if e <= floor {
                settled_value += v;
                settled_err += e;
            } else {
                live_value += v;
                live_err += e;
                heap.push(Panel { a: lo, b: hi, value: v, err: e, depth: worst.depth + 1 });
            }
        }
        if heap.is_empty() {
            live_value = Complex64::new(0.0, 0.0);
            live_err = 0.0;
        }
    }
}

fn tanh_sinh<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64, spec: &QuadratureSpec) -> Result<Quadrature, QuadError> {
    const T_MAX: f64 = 4.0;
    let c = 0.5 * (a + b);
    let hw = 0.5 * (b - a);

    // Sum over nodes t = t0 + j*step for j >= 0 and their mirrors, weights without the step factor.
    let eval_sum = |t0: f64, step: f64| -> Result<Complex64, QuadError> {
        let mut sum = Complex64::new(0.0, 0.0);
        let mut t = t0;
        while t <= T_MAX {
            let y = FRAC_PI_2 * t.sinh();
            let cy = y.cosh();
            let w = hw * FRAC_PI_2 * t.cosh() / (cy * cy);
            if t == 0.0 {
                let fc = f(c);
                if !(fc.re.is_finite() && fc.im.is_finite()) {
                    return Err(QuadError::NonFinite { x: c });
                }
                sum += fc * w;
            } else {
                // distance from the nearer endpoint, computed without cancellation
                let delta = hw * 2.0 / ((2.0 * y).exp() + 1.0);
                let (xl, xr) = (a + delta, b - delta);
                if xl > a && xl < b {
                    let fl = f(xl);
                    if !(fl.re.is_finite() && fl.im.is_finite()) {
                        return Err(QuadError::NonFinite { x: xl });
                    }
                    sum += fl * w;
                }
                if xr < b && xr > a {
                    let fr = f(xr);
                    if !(fr.re.is_finite() && fr.im.is_finite()) {
                        return Err(QuadError::NonFinite { x: xr });
                    }
                    sum += fr * w;
                }
            }
            t += step;
        }
        Ok(sum)
    };

    let mut h = 1.0;
    let mut sum = eval_sum(0.0, h)?;
    let mut estimate = sum * h;
    for level in 1..=spec.max_depth {
        h *= 0.5;
        sum += eval_sum(h, 2.0 * h)?;
        let next = sum * h;
        let err = (next - estimate).norm();
        estimate = next;
        let tol = spec.abs_tol.max(spec.rel_tol * estimate.norm()).max(1e2 * f64::EPSILON * estimate.norm());
        if level >= 3 && err <= tol {
            return Ok(Quadrature { value: estimate, err_est: err });
        }
        if level == spec.max_depth {
            return Err(QuadError::NoConvergence { estimate, err_est: err });
        }
    }
    unreachable!("loop returns at max_depth")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gk(tol: f64) -> QuadratureSpec {
        QuadratureSpec::gauss_kronrod(tol)
    }

    #[test]
    fn constant_and_log() {
        let q = integrate(|_| Complex64::new(1.0, 0.0), 0.0, 1.0, &gk(1e-14)).unwrap();
        assert!((q.value.re - 1.0).abs() < 1e-15);
        let q = integrate(|x| Complex64::new(x.ln(), 0.0), 0.0, 1.0, &QuadratureSpec::tanh_sinh(1e-13)).unwrap();
        assert!((q.value.re + 1.0).abs() < 1e-13, "{}", q.value);
    }

    #[test]
    fn kronrod_rule_is_exact_for_degree_31() {
        for deg in [0, 5, 19, 20, 31] {
            let (v, _, _) = gk21(&|x: f64| Complex64::new(x.powi(deg), 0.0), 0.0, 1.0).unwrap();
            assert!((v.re - 1.0 / (deg as f64 + 1.0)).abs() < 1e-15, "degree {deg}");
        }
    }

    #[test]
    fn gauss_kronrod_handles_log_singularity() {
        let q = integrate(|x| Complex64::new(x.ln(), 0.0), 0.0, 1.0, &gk(1e-10)).unwrap();
        assert!((q.value.re + 1.0).abs() < 1e-10);
    }

    #[test]
    fn depth_limit_reports_best_estimate() {
        let spec = QuadratureSpec::new(1e-15, 0.0, 2, Scheme::GaussKronrod).unwrap();
        match integrate(|x| Complex64::new(1.0 / x.sqrt(), 0.0), 0.0, 1.0, &spec) {
            Err(QuadError::NoConvergence { estimate, .. }) => assert!((estimate.re - 2.0).abs() < 0.1),
            other => panic!("expected NoConvergence, got {other:?}"),
        }
    }

    #[test]
    fn spec_validation() {
        assert!(QuadratureSpec::new(1e-16, 0.0, 10, Scheme::GaussKronrod).is_err());
        assert!(QuadratureSpec::new(1e-12, 0.0, 31, Scheme::GaussKronrod).is_err());
        assert!(QuadratureSpec::new(1e-12, 0.0, 30, Scheme::TanhSinh).is_ok());
    }

    #[test]
    fn pieces_respect_jumps() {
        let step = |x: f64| Complex64::new(if x < 0.3 { 1.0 } else { 2.0 }, 0.0);
        let q = integrate_pieces(step, &[0.0, 0.3, 1.0], &gk(1e-14)).unwrap();
        assert!((q.value.re - (0.3 + 1.4)).abs() < 1e-14);
    }

    #[test]
    fn error_estimates_are_honest() {
        type Case = (fn(f64) -> f64, f64, f64, f64);
        let cases: [Case; 20] = [
            (|x| x.exp(), 0.0, 1.0, std::f64::consts::E - 1.0),
            (|x| x.sin(), 0.0, std::f64::consts::PI, 2.0),
            (|x| x.cos(), 0.0, 1.0, 1.0f64.sin()),
            (|x| 1.0 / (1.0 + x * x), 0.0, 1.0, std::f64::consts::FRAC_PI_4),
            (|x| x.sqrt(), 0.0, 1.0, 2.0 / 3.0),
            (|x| 1.0 / x.sqrt(), 0.0, 1.0, 2.0),
            (|x| x.ln(), 0.0, 1.0, -1.0),
            (|x| x * x.ln(), 0.0, 1.0, -0.25),
            (|x| (-x).exp(), 0.0, 40.0, 1.0 - (-40.0f64).exp()),
            (|x| 1.0 / (1.0 + 25.0 * x * x), -1.0, 1.0, 0.4 * 5.0f64.atan()),
            (|x| (50.0 * x).cos(), 0.0, 1.0, 50.0f64.sin() / 50.0),
            (|x| x.powi(7), -1.0, 2.0, (256.0 - 1.0) / 8.0),
            (|x| (1.0 + x).ln() / x, 1e-300, 1.0, std::f64::consts::PI.powi(2) / 12.0),
            (|x| x.abs(), -1.0, 1.0, 1.0),
            (|x| (x * x).exp() * x, 0.0, 2.0, 0.5 * (4.0f64.exp() - 1.0)),
            (|x| 1.0 / (1e-2 + x * x), -1.0, 1.0, 2.0 * 10.0 * (10.0f64).atan()),
            (|x| x.sin().powi(2), 0.0, 10.0, 5.0 - 20.0f64.sin() / 4.0),
            (|x| 1.0 / x, 1.0, 100.0, 100.0f64.ln()),
            // erf(10) rounds to 1 in double precision
            (|x| (-(x * x)).exp(), -10.0, 10.0, std::f64::consts::PI.sqrt()),
            (|x| (1.0 - x * x).sqrt(), -1.0, 1.0, std::f64::consts::FRAC_PI_2),
        ];
        for (i, (f, a, b, exact)) in cases.iter().enumerate() {
            for spec in [gk(1e-10), QuadratureSpec::tanh_sinh(1e-10)] {
                if let Ok(q) = integrate(|x| Complex64::new(f(x), 0.0), *a, *b, &spec) {
                    let true_err = (q.value.re - exact).abs();
                    assert!(true_err <= q.err_est.max(4.0 * f64::EPSILON * exact.abs()), "case {i} {:?}: {true_err:e} > {:e}", spec.scheme, q.err_est);
                }
            }
        }
    }

    #[test]
    fn halving_tolerance_does_not_explode_panels() {
        use std::cell::Cell;
        let count = |tol: f64| {
            let n = Cell::new(0usize);
            integrate(|x| { n.set(n.get() + 1); Complex64::new((3.0 * x).sin() * (-x).exp(), 0.0) }, 0.0, 10.0, &gk(tol)).unwrap();
            n.get()
        };
        for tol in [1e-6, 1e-8, 1e-10, 1e-12] {
            assert!(count(tol / 2.0) <= 2 * count(tol), "tol {tol}");
        }
    }
}
