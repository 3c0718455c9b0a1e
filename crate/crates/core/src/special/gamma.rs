//! Complex log-Gamma.
//!
//! For `Re z >= 1/4` the argument is shifted upward by the recurrence until
//! `Re z >= 12` and Stirling's series is summed there. The imaginary part is
//! the branch that is continuous in the right half-plane (the same convention
//! as SciPy's `loggamma`), so `Im ln Γ(1/2 + iw)` grows smoothly with `w`
//! instead of wrapping at ±π. Smaller real parts go through the reflection
//! formula.

use std::f64::consts::PI;

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Clone, Copy, Error, PartialEq)]
#[error("Gamma has a pole at z = {0}")]
pub struct GammaPole(pub f64);

/// `B_{2k} / (2k (2k-1))` for k = 1..=10.
const STIRLING: [f64; 10] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360_360.0,
    1.0 / 156.0,
    -3617.0 / 122_400.0,
    43_867.0 / 244_188.0,
    -174_611.0 / 125_400.0,
];

const SHIFT_TARGET: f64 = 12.0;

pub fn complex_log_gamma(z: Complex64) -> Result<Complex64, GammaPole> {
    if z.im == 0.0 && z.re <= 0.0 && z.re.fract() == 0.0 {
        return Err(GammaPole(z.re));
    }
    if z.re < 0.25 {
        let one = Complex64::new(1.0, 0.0);
        let reflected = complex_log_gamma(one - z)?;
        return Ok(Complex64::new(PI.ln(), 0.0) - (z * PI).sin().ln() - reflected);
    }
    let mut w = z;
    let mut shift = Complex64::new(0.0, 0.0);
    while w.re < SHIFT_TARGET {
        shift += w.ln();
        w += 1.0;
    }
    Ok(stirling(w) - shift)
}

fn stirling(w: Complex64) -> Complex64 {
    let half_ln_2pi = 0.5 * (2.0 * PI).ln();
    let inv = w.inv();
    let inv2 = inv * inv;
    let mut series = Complex64::new(0.0, 0.0);
    let mut power = inv;
    for c in STIRLING {
        series += power * c;
        power *= inv2;
    }
    (w - 0.5) * w.ln() - w + half_ln_2pi + series
}

/// `ln Γ(1/2 − iw) − ln Γ(1/2 + iw)`, a purely imaginary number.
pub fn log_gamma_ratio(w: f64) -> Complex64 {
    let g = complex_log_gamma(Complex64::new(0.5, w)).expect("Re z = 1/2 is never a pole");
    Complex64::new(0.0, -2.0 * g.im)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lg(re: f64, im: f64) -> Complex64 {
        complex_log_gamma(Complex64::new(re, im)).unwrap()
    }

    #[test]
    fn special_values() {
        assert!(lg(1.0, 0.0).norm() < 1e-14);
        assert!(lg(2.0, 0.0).norm() < 1e-14);
        assert!((lg(0.5, 0.0).re - 0.5 * PI.ln()).abs() < 1e-14);
        // ln Γ(10) = ln 362880
        assert!((lg(10.0, 0.0).re - 362_880f64.ln()).abs() < 1e-13);
        // Γ(-1/2) = -2√π, so the real part is ln(2√π)
        assert!((lg(-0.5, 0.0).re - (2.0 * PI.sqrt()).ln()).abs() < 1e-14);
    }

    #[test]
    fn poles() {
        assert!(complex_log_gamma(Complex64::new(0.0, 0.0)).is_err());
        assert!(complex_log_gamma(Complex64::new(-3.0, 0.0)).is_err());
    }

    #[test]
    fn modulus_on_critical_line() {
        // |Γ(1/2 + iy)|² = π / cosh(πy)
        for y in [0.3, 1.0, 5.0, 20.0, 50.0] {
            let expect = 0.5 * (PI / (PI * y).cosh()).ln();
            assert!((lg(0.5, y).re - expect).abs() < 1e-12 * expect.abs().max(1.0), "y={y}");
        }
    }

    #[test]
    fn recurrence_holds_on_strip() {
        for (x, y) in [(0.25, 0.0), (0.3, 7.0), (1.1, -13.0), (1.9, 49.0), (0.6, 0.01)] {
            let z = Complex64::new(x, y);
            let lhs = lg(x + 1.0, y);
            let rhs = lg(x, y) + z.ln();
            let d = lhs - rhs;
            assert!(d.norm() < 1e-12 * lhs.norm().max(1.0), "z={z}");
        }
    }
}
