//! Numerical foundations: quadrature, complex log-Gamma, the constants γ_E
//! and κ₀, and Richardson-extrapolated central differences.

mod gamma;
mod quad;

use std::sync::OnceLock;

use num_complex::Complex64;

pub use gamma::{complex_log_gamma, log_gamma_ratio, GammaPole};
pub use quad::{integrate, integrate_pieces, integrate_real, QuadError, Quadrature, QuadratureSpec, Scheme};

/// Upper cutoff for the semi-infinite constant integrals; the integrands
/// decay at least like e^{-z/2}, so the tail beyond is below 1e-17.
const Z_CUT: f64 = 80.0;

/// Euler–Mascheroni constant from ∫₀^∞ (e^{-t} + t − 1) / (t (e^t − 1)) dt.
pub fn euler_gamma() -> f64 {
    static CELL: OnceLock<f64> = OnceLock::new();
    *CELL.get_or_init(|| {
        let f = |t: f64| ((-t).exp_m1() + t) / (t * t.exp_m1());
        integrate_real(f, 0.0, Z_CUT, &QuadratureSpec::gauss_kronrod(1e-15).with_rel_tol(1e-15))
            .expect("smooth integrand on a finite interval")
    })
}

/// κ₀ = ∫₀^∞ [1/(z² sinh(z/2)) − 1/(2z sinh²(z/2)) − e^{-z}/(12z)] dz ≈ 0.1399.
pub fn kappa0() -> f64 {
    static CELL: OnceLock<f64> = OnceLock::new();
    *CELL.get_or_init(|| {
        integrate_real(kappa0_integrand, 0.0, Z_CUT, &QuadratureSpec::gauss_kronrod(1e-13).with_rel_tol(1e-12))
            .expect("smooth integrand on a finite interval")
    })
}

fn kappa0_integrand(z: f64) -> f64 {
    if z < 0.02 {
        // The three terms cancel to O(1) from O(z^-3); use the Taylor series.
        const C3: f64 = -31.0 / 483_840.0 + 1.0 / 3024.0 - 1.0 / 288.0;
        return 1.0 / 12.0 + z * (-137.0 / 2880.0 + z * (1.0 / 72.0 + z * C3));
    }
    let s = (0.5 * z).sinh();
    1.0 / (z * z * s) - 1.0 / (2.0 * z * s * s) - (-z).exp() / (12.0 * z)
}

/// Central-difference derivative of order 1 or 2 at `x` with step `h`,
/// improved by one Richardson step (h and h/2), so the error is O(h⁴).
pub fn richardson_derivative<F, E>(f: F, x: f64, h: f64, order: u8) -> Result<Complex64, E>
where
    F: Fn(f64) -> Result<Complex64, E>,
{
    let stencil = |h: f64| -> Result<Complex64, E> {
        match order {
            1 => Ok((f(x + h)? - f(x - h)?) / (2.0 * h)),
            2 => Ok((f(x + h)? - f(x)? * 2.0 + f(x - h)?) / (h * h)),
            _ => panic!("only first and second derivatives are supported"),
        }
    };
    let coarse = stencil(h)?;
    let fine = stencil(0.5 * h)?;
    Ok((fine * 4.0 - coarse) / 3.0)
}
