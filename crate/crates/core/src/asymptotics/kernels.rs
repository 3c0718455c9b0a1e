//! The kernel e_n^{(α)} and the jump integrals built on it.
//!
//! A jump of the symbol v = 2τ − 1 between the values a and b contributes
//!
//!   J(a, b) = (1/2π²) ∫_a^b ln|(x−b)/(x−a)| ∂_x e_n^{(α)}(1, x) dx
//!
//! to the coefficient of ln L, and the Gamma-function analogue Y(a, b) to
//! the constant term. Both are symmetric in (a, b); with b = 1 they are the
//! usual Q_n(a, α) and Υ_n(a, α).
//!
//! The integrals are evaluated after u = ln((x−a)/(b−x)), which sends the
//! logarithmic endpoint singularities to ±∞ where the integrand decays
//! exponentially, and turns the weights into −u/2π² and
//! (1/π) Im ln Γ(½ + iu/2π). Near α = ±π the derivative of e has a pole
//! close to x = 0; it is subtracted analytically.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::AsymError;
use crate::special::{complex_log_gamma, integrate_pieces, QuadratureSpec};

const KERNEL_TOL: f64 = 1e-12;
/// e^{−DECAY_SPAN} times a polynomial in u is below the tolerance.
const DECAY_SPAN: f64 = 45.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelKind {
    /// Weight ln|(x−b)/(x−a)| / 2π², giving Q_n.
    Log,
    /// Gamma-function log-ratio weight, giving Υ_n.
    Gamma,
}

/// Which α-derivative of the kernel to integrate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlphaOrder {
    Value,
    First,
    Second,
}

fn phase(alpha: f64) -> Complex64 {
    if alpha.abs() == PI {
        Complex64::new(-1.0, 0.0)
    } else {
        Complex64::from_polar(1.0, alpha)
    }
}

/// e_n^{(α)}(x, ν) = ln[((x+ν)/2)^n e^{iα} + ((x−ν)/2)^n], principal branch.
/// A vanishing argument returns a real part of −∞.
pub fn kernel_e(n: f64, alpha: f64, x: f64, nu: f64) -> Complex64 {
    let (p, q) = (0.5 * (x + nu), 0.5 * (x - nu));
    let w = phase(alpha) * p.max(0.0).powf(n) + q.max(0.0).powf(n);
    if w == Complex64::new(0.0, 0.0) {
        Complex64::new(f64::NEG_INFINITY, 0.0)
    } else {
        w.ln()
    }
}

/// ∂_α^k e_n^{(α)}(1, v) for k = 0, 1, 2.
pub(crate) fn kernel_e_alpha(n: f64, alpha: f64, v: f64, order: AlphaOrder) -> Complex64 {
    let (p, q) = (0.5 * (1.0 + v), 0.5 * (1.0 - v));
    let big_p = phase(alpha) * p.max(0.0).powf(n);
    let big_q = q.max(0.0).powf(n);
    let d = big_p + big_q;
    match order {
        AlphaOrder::Value => kernel_e(n, alpha, 1.0, v),
        AlphaOrder::First => Complex64::i() * big_p / d,
        AlphaOrder::Second => -big_p * big_q / (d * d),
    }
}

/// J(−1, 1) in closed form: (1/12)(1/n − n) − α²/(4π²n), and its α-derivatives.
pub(crate) fn full_jump(n: f64, alpha: f64, order: AlphaOrder) -> f64 {
    match order {
        AlphaOrder::Value => (1.0 / n - n) / 12.0 - alpha * alpha / (4.0 * PI * PI * n),
        AlphaOrder::First => -alpha / (2.0 * PI * PI * n),
        AlphaOrder::Second => -1.0 / (2.0 * PI * PI * n),
    }
}

fn log_weight(u: Complex64) -> Complex64 {
    -u / (2.0 * PI * PI)
}

fn gamma_weight(u: Complex64) -> Complex64 {
    let w = u * Complex64::i() / (2.0 * PI);
    let half = Complex64::new(0.5, 0.0);
    let plus = complex_log_gamma(half + w).expect("no poles near Re z = 1/2");
    let minus = complex_log_gamma(half - w).expect("no poles near Re z = 1/2");
    (plus - minus) / Complex64::new(0.0, 2.0 * PI)
}

fn gamma_weight_real(u: f64) -> f64 {
    let g = complex_log_gamma(Complex64::new(0.5, u / (2.0 * PI))).expect("no poles on Re z = 1/2");
    g.im / PI
}

/// e^z − 1 without cancellation for small |z|.
fn complex_exp_m1(z: Complex64) -> Complex64 {
    let half = (0.5 * z.im).sin();
    Complex64::new(z.re.exp_m1() * z.im.cos() - 2.0 * half * half, z.re.exp() * z.im.sin())
}

/// Pole of ∂_x e_n^{(α)}(1, x) nearest the real axis, at x = ±i tan((π∓α)/2n).
fn pole(n: f64, alpha: f64) -> Option<Complex64> {
    let theta = (PI - alpha.abs()) / (2.0 * n);
    if theta >= 0.5 * PI {
        return None;
    }
    Some(Complex64::new(0.0, alpha.signum() * theta.tan()))
}

/// The jump integral J(a, b) (`Log`) or Y(a, b) (`Gamma`), or one of its
/// α-derivatives.
pub fn jump_kernel(kind: KernelKind, n: f64, alpha: f64, a: f64, b: f64, order: AlphaOrder) -> Result<Complex64, AsymError> {
    if !(n > 0.0) {
        return Err(AsymError::Domain(format!("Rényi order must be positive (got {n})")));
    }
    if !(a.abs() <= 1.0 && b.abs() <= 1.0) {
        return Err(AsymError::Domain(format!("jump values must lie in [−1, 1] (got {a}, {b})")));
    }
    if a == b {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let (lo, hi) = (a.min(b), a.max(b));
    if kind == KernelKind::Log && lo == -1.0 && hi == 1.0 {
        return Ok(Complex64::new(full_jump(n, alpha, order), 0.0));
    }
    if order == AlphaOrder::Value && alpha.abs() == PI && (lo == 0.0 || hi == 0.0) {
        return Err(AsymError::Divergent { a, b, alpha });
    }
    jump_quadrature(kind, n, alpha, lo, hi, order)
}

/// Quadrature for J or Y on lo < hi, in the u variable.
fn jump_quadrature(kind: KernelKind, n: f64, alpha: f64, lo: f64, hi: f64, order: AlphaOrder) -> Result<Complex64, AsymError> {

    let ph = phase(alpha);
    let width = hi - lo;
    // Near x = 0, where the pole lives, x is rebuilt from u − u_0 and the
    // denominator as −q^n expm1(n ln(p/q) + i(α ∓ π)), avoiding the
    // cancellation that would otherwise swamp a pole close to the axis.
    let u0 = (lo < 0.0 && hi > 0.0).then(|| (-lo / hi).ln());
    let turn = alpha - PI.copysign(alpha);
    let integrand_e = move |u: f64| -> Complex64 {
        let (s_lo, s_hi) = if u > 0.0 {
            let e = (-u).exp();
            (e / (1.0 + e), 1.0 / (1.0 + e))
        } else {
            let e = u.exp();
            (1.0 / (1.0 + e), e / (1.0 + e))
        };
        let p = 0.5 * ((1.0 + lo) * s_lo + (1.0 + hi) * s_hi);
        let q = 0.5 * ((1.0 - lo) * s_lo + (1.0 - hi) * s_hi);
        let dxdu = width * s_lo * s_hi;
        let big_p = ph * p.powf(n);
        let big_q = q.powf(n);
        let d = match u0 {
            Some(u0) if (u - u0).abs() < 1.0 => {
                let x = -lo * (u - u0).exp_m1() * s_lo;
                -big_q * complex_exp_m1(Complex64::new(n * (x.ln_1p() - (-x).ln_1p()), turn))
            }
            _ => big_p + big_q,
        };
        match order {
            AlphaOrder::Value => (big_p / p - big_q / q) / d * (0.5 * n * dxdu),
            AlphaOrder::First => Complex64::i() * big_p * big_q / (d * d) * (0.5 * n * dxdu / (p * q)),
            AlphaOrder::Second => -big_p * big_q * (big_q - big_p) / (d * d * d) * (0.5 * n * dxdu / (p * q)),
        }
    };
    let weight = move |u: f64| -> f64 {
        match kind {
            KernelKind::Log => -u / (2.0 * PI * PI),
            KernelKind::Gamma => gamma_weight_real(u),
        }
    };
    let span = DECAY_SPAN / n.min(1.0);
    let mut breaks = vec![-span, -0.5 * span, -10.0, -2.0, 0.0, 2.0, 10.0, 0.5 * span, span];

    // Pole subtraction: G E = [G E − G(u_c)/(u − u_c)] + G(u_c)/(u − u_c).
    let mut pole_term = None;
    if order == AlphaOrder::Value && lo < 0.0 && hi > 0.0 && alpha != 0.0 {
        if let Some(x0) = pole(n, alpha) {
            let uc = match u0.filter(|_| alpha.abs() == PI) {
                Some(u) => Complex64::new(u, 0.0),
                None => ((x0 - lo) / (hi - x0)).ln(),
            };
            if uc.im.abs() < 1.0 && uc.re.abs() < span {
                let g_c = match kind {
                    KernelKind::Log => log_weight(uc),
                    KernelKind::Gamma => gamma_weight(uc),
                };
                let (u_lo, u_hi) = (-span, span);
                let log_diff = if uc.im == 0.0 {
                    // On the real axis: principal value plus the half residue
                    // of the limit taken from inside (−π, π).
                    Complex64::new(((u_hi - uc.re) / (uc.re - u_lo)).ln(), PI * alpha.signum())
                } else {
                    (Complex64::new(u_hi, 0.0) - uc).ln() - (Complex64::new(u_lo, 0.0) - uc).ln()
                };
                pole_term = Some((uc, g_c, g_c * log_diff));
                breaks.push(uc.re);
            }
        }
    }
    breaks.sort_by(|x, y| x.partial_cmp(y).expect("finite breakpoints"));
    breaks.dedup();

    let spec = QuadratureSpec::gauss_kronrod(KERNEL_TOL);
    let value = match pole_term {
        None => integrate_pieces(|u| integrand_e(u) * weight(u), &breaks, &spec)?.value,
        Some((uc, g_c, analytic)) => {
            let smooth = |u: f64| integrand_e(u) * weight(u) - g_c / (Complex64::new(u, 0.0) - uc);
            integrate_pieces(smooth, &breaks, &spec)?.value + analytic
        }
    };
    Ok(value)
}

/// Q_n(ν, α).
pub fn q_n_kernel(n: f64, nu: f64, alpha: f64) -> Result<Complex64, AsymError> {
    jump_kernel(KernelKind::Log, n, alpha, nu, 1.0, AlphaOrder::Value)
}

/// Υ_n(ν, α).
pub fn upsilon_kernel(n: f64, nu: f64, alpha: f64) -> Result<Complex64, AsymError> {
    jump_kernel(KernelKind::Gamma, n, alpha, nu, 1.0, AlphaOrder::Value)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q1_closed(nu: f64, alpha: f64) -> Complex64 {
        let (c, s) = ((0.5 * alpha).cos(), (0.5 * alpha).sin());
        let z = Complex64::from_polar(1.0, -0.5 * alpha) * Complex64::new(c, nu * s);
        let l = z.ln();
        l * l / (4.0 * PI * PI)
    }

    #[test]
    fn pole_on_or_near_the_axis() {
        for nu in [-0.1, -0.5, -0.001] {
            for alpha in [PI, -PI, PI - 1e-7, PI - 1e-3, -PI + 1e-10] {
                let q = q_n_kernel(1.0, nu, alpha).unwrap();
                assert!((q - q1_closed(nu, alpha)).norm() < 1e-9, "ν={nu} α={alpha}: {q}");
            }
        }
    }

    #[test]
    fn kernel_e_examples() {
        assert_eq!(kernel_e(2.0, 0.0, 1.0, 1.0), Complex64::new(0.0, 0.0));
        assert!((kernel_e(1.0, 0.8, 1.0, 1.0) - Complex64::new(0.0, 0.8)).norm() < 1e-15);
        assert!((kernel_e(2.0, 0.0, 1.0, 0.0).re - 0.5f64.ln()).abs() < 1e-15);
        assert_eq!(kernel_e(1.0, PI, 1.0, 0.0).re, f64::NEG_INFINITY);
    }

    #[test]
    fn kernel_e_small_alpha_expansion() {
        for x in [-0.7, 0.0, 0.4] {
            let a = 1e-3;
            let expect = Complex64::new((x * x - 1.0) / 8.0 * a * a, 0.5 * (1.0 + x) * a);
            assert!((kernel_e(1.0, a, 1.0, x) - expect).norm() < 1e-9);
        }
    }

    #[test]
    fn zero_jump_vanishes() {
        for alpha in [0.0, 1.0, -2.5, PI] {
            assert_eq!(q_n_kernel(1.7, 1.0, alpha).unwrap(), Complex64::new(0.0, 0.0));
            assert_eq!(upsilon_kernel(0.6, 1.0, alpha).unwrap(), Complex64::new(0.0, 0.0));
        }
    }

    #[test]
    fn q1_matches_closed_form_spot_values() {
        for &(nu, alpha) in &[(0.3, 1.0), (-0.6, -2.0), (0.9, 3.0), (-0.999, 0.1), (0.2, PI), (0.05, -3.1)] {
            let q = q_n_kernel(1.0, nu, alpha).unwrap();
            assert!((q - q1_closed(nu, alpha)).norm() < 1e-9, "ν={nu} α={alpha}: {q} vs {}", q1_closed(nu, alpha));
        }
    }

    #[test]
    fn full_jump_quadrature_agrees_with_closed_form() {
        for (n, alpha) in [(1.0, 0.5), (2.0, -1.0), (0.5, 2.0)] {
            let near = jump_quadrature(KernelKind::Log, n, alpha, -1.0, 1.0, AlphaOrder::Value).unwrap();
            assert!((near.re - full_jump(n, alpha, AlphaOrder::Value)).abs() < 1e-9, "{near}");
            assert!(near.im.abs() < 1e-9);
        }
    }

    #[test]
    fn divergence_is_flagged() {
        assert!(matches!(q_n_kernel(2.0, 0.0, PI), Err(AsymError::Divergent { .. })));
        assert!(matches!(upsilon_kernel(1.0, 0.0, -PI), Err(AsymError::Divergent { .. })));
        assert!(q_n_kernel(2.0, 0.0, 3.0).is_ok());
    }

    #[test]
    fn symmetric_in_jump_orientation() {
        for kind in [KernelKind::Log, KernelKind::Gamma] {
            let x = jump_kernel(kind, 1.5, 0.7, -0.3, 0.8, AlphaOrder::Value).unwrap();
            let y = jump_kernel(kind, 1.5, 0.7, 0.8, -0.3, AlphaOrder::Value).unwrap();
            assert_eq!(x, y);
        }
    }

    #[test]
    fn alpha_derivatives_match_differences() {
        for kind in [KernelKind::Log, KernelKind::Gamma] {
            for (n, a, b) in [(1.0, 0.3, 1.0), (2.0, -1.0, 0.4), (0.7, -0.5, 0.9)] {
                let f = |al: f64| -> Result<Complex64, AsymError> { jump_kernel(kind, n, al, a, b, AlphaOrder::Value) };
                let d1 = crate::special::richardson_derivative(f, 0.0, 1e-2, 1).unwrap();
                let d2 = crate::special::richardson_derivative(f, 0.0, 1e-2, 2).unwrap();
                let e1 = jump_kernel(kind, n, 0.0, a, b, AlphaOrder::First).unwrap();
                let e2 = jump_kernel(kind, n, 0.0, a, b, AlphaOrder::Second).unwrap();
                assert!((d1 - e1).norm() < 1e-7, "{kind:?} n={n}: {d1} vs {e1}");
                assert!((d2 - e2).norm() < 1e-6, "{kind:?} n={n}: {d2} vs {e2}");
            }
        }
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(24))]
        #[test]
        fn q1_closed_form_everywhere(nu in -1.0f64..1.0, alpha in -PI..PI) {
            let q = q_n_kernel(1.0, nu, alpha).unwrap();
            proptest::prop_assert!((q - q1_closed(nu, alpha)).norm() < 1e-8);
        }

        #[test]
        fn small_alpha_expansions(nu in -1.0f64..0.99, alpha in -0.1f64..0.1) {
            let w = (1.0 - nu) * (1.0 - nu) / (16.0 * PI * PI) * alpha * alpha;
            let q = q_n_kernel(1.0, nu, alpha).unwrap();
            let y = upsilon_kernel(1.0, nu, alpha).unwrap();
            let bound = 10.0 * alpha.abs().powi(3);
            proptest::prop_assert!((q - Complex64::new(-w, 0.0)).norm() <= bound);
            let euler = crate::special::euler_gamma();
            proptest::prop_assert!((y - Complex64::new(-w * (1.0 + euler), 0.0)).norm() <= bound);
        }

        #[test]
        fn kernels_vanish_at_the_top(n in 0.2f64..4.0, alpha in -PI..PI) {
            proptest::prop_assert_eq!(q_n_kernel(n, 1.0, alpha).unwrap(), Complex64::new(0.0, 0.0));
            proptest::prop_assert_eq!(upsilon_kernel(n, 1.0, alpha).unwrap(), Complex64::new(0.0, 0.0));
        }
    }
}
