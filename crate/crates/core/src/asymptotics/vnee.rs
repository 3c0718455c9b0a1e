//! Von Neumann entanglement entropy S ≈ C_lin·L + C_log·ln L + C_const.
//!
//! The per-jump contributions are −∂_n at n = 1 of Q_n and Υ_n at α = 0,
//! written as the one-dimensional integrals q(p) and υ(p) with
//! p = (1 + ν)/2.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::{symbol_log, AlphaOrder, AsymError, SingleScatterer, Validity, N_STEP};
use crate::scatter::{FermiWindow, ScattererModel};
use crate::special::{integrate_real, kappa0, richardson_derivative, QuadratureSpec};
use crate::symbols::{SymbolSpec, TwoScatterer};

const AUX_TOL: f64 = 1e-12;
/// Beyond this z the integrand of K(x) is below 1e−14.
const Z_MAX: f64 = 70.0;

fn x_ln_x(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

/// Binary entropy −[p ln p + (1 − p) ln(1 − p)].
fn binary_entropy(p: f64) -> f64 {
    let p = p.clamp(0.0, 1.0);
    -(x_ln_x(p) + x_ln_x(1.0 - p))
}

/// K(x) = ∫₀^∞ [cos(βz)/(2 sinh(z/2)) − e^{−z}/z] dz with β = ln x / 2π.
pub fn kernel_k(x: f64) -> f64 {
    let beta = x.ln() / (2.0 * PI);
    let integrand = |z: f64| -> f64 {
        // Regrouped so that no term is singular at z = 0.
        let s = (0.5 * beta * z).sin();
        let half_csch = (-0.5 * z).exp() / -(-z).exp_m1();
        let osc = -2.0 * s * s * half_csch;
        let diff = if z < 1e-3 {
            -z / 24.0 + 7.0 * z * z * z / 5760.0
        } else {
            half_csch - 1.0 / z
        };
        osc + diff + (-(-z).exp_m1()) / z
    };
    let breaks: Vec<f64> = {
        // Roughly one panel per oscillation keeps the adaptive refinement shallow.
        let periods = (beta.abs() * Z_MAX / (2.0 * PI)).ceil().max(4.0) as usize;
        (0..=periods).map(|i| Z_MAX * i as f64 / periods as f64).collect()
    };
    let spec = QuadratureSpec::gauss_kronrod(1e-14);
    crate::special::integrate_pieces(|z| Complex64::new(integrand(z), 0.0), &breaks, &spec)
        .map(|q| q.value.re)
        .unwrap_or(f64::NAN)
}

/// The n-derivative bracket shared by q and υ, without the x ln x term.
fn bracket(p: f64, x: f64) -> f64 {
    (x_ln_x(1.0 + p * x) + x_ln_x(x + p)) / (1.0 + x) - x_ln_x(p)
}

/// q(p) = −∂_n Q_n(2p − 1, 0) at n = 1.
pub fn q_aux(p: f64) -> f64 {
    let spec = QuadratureSpec::tanh_sinh(AUX_TOL);
    let integral = integrate_real(|x| bracket(p, x) / x, 0.0, 1.0, &spec).unwrap_or(f64::NAN);
    0.125 - p / 24.0 - integral / (2.0 * PI * PI)
}

/// υ(p) = −∂_n Υ_n(2p − 1, 0) at n = 1.
pub fn upsilon_aux(p: f64) -> f64 {
    let spec = QuadratureSpec::tanh_sinh(AUX_TOL);
    let integral = integrate_real(
        |x| (bracket(p, x) + (1.0 - p) * x_ln_x(x) / (1.0 + x)) / x * kernel_k(x),
        0.0,
        1.0,
        &spec,
    )
    .unwrap_or(f64::NAN);
    kappa0() - integral / (2.0 * PI * PI)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VneeCoefficients {
    pub c_lin: f64,
    pub c_log: f64,
    pub c_const: f64,
    pub flags: Validity,
}

impl VneeCoefficients {
    pub fn entropy(&self, l: f64) -> f64 {
        let base = self.c_lin * l + self.c_log * l.ln();
        if self.flags.const_unavailable {
            base
        } else {
            base + self.c_const
        }
    }
}

/// Coefficients of the vNEE of a subsystem right of a single scatterer.
pub fn vnee_coefficients(window: FermiWindow, scatterer: &ScattererModel) -> Result<VneeCoefficients, AsymError> {
    let mut flags = Validity {
        equilibrium: window.is_empty(),
        const_approx: window.dk() > super::CONST_APPROX_DK,
        ..Validity::default()
    };
    let (k0, kfr, kfl) = (window.k0(), window.k_fr(), window.k_fl());
    if window.is_empty() {
        let s0 = k0.sin();
        let c_const = if s0 == 0.0 {
            flags.const_unavailable = true;
            f64::NAN
        } else {
            (2.0 * s0).abs().ln() / 3.0 + 2.0 * upsilon_aux(0.0)
        };
        return Ok(VneeCoefficients { c_lin: 0.0, c_log: 1.0 / 3.0, c_const, flags });
    }

    let spec = QuadratureSpec::gauss_kronrod(1e-13);
    let mixing = |k: f64| scatterer.eval_closed(k).map(|s| binary_entropy(s.t_l2)).unwrap_or(f64::NAN);
    let c_lin = integrate_real(mixing, window.k_minus(), window.k_plus(), &spec)? / (2.0 * PI);

    let on_edge = |k: f64| k == 0.0 || k == PI;
    let c_log = if on_edge(kfr) {
        // A Fermi point on the band edge merges jumps, so the per-edge
        // formula no longer applies; differentiate the merged log term.
        let symbol = SymbolSpec::tau_single(window, scatterer)?;
        let log_at = |n: f64| -> Result<Complex64, AsymError> {
            let mut f = Validity::default();
            symbol_log(&symbol, n, 0.0, AlphaOrder::Value, &mut f)
        };
        -richardson_derivative(log_at, 1.0, N_STEP, 1)?.re
    } else {
        let at_fr = scatterer.eval_closed(kfr)?;
        let at_fl = scatterer.eval_closed(kfl)?;
        1.0 / 6.0 + q_aux(at_fr.t_l2) + q_aux(at_fl.r_r2)
    };

    let s_fr = kfr.sin();
    let s_0 = k0.sin();
    let s_d = (0.5 * window.dk()).sin();
    let c_const = if s_fr == 0.0 || s_0 == 0.0 {
        flags.const_unavailable = true;
        f64::NAN
    } else {
        let at_0 = scatterer.eval_closed(k0)?;
        let (t2, r2) = (at_0.t_l2, at_0.r_r2);
        (2.0 * s_fr * s_d / s_0).abs().ln() * q_aux(t2)
            + (2.0 * s_0 * s_d / s_fr).abs().ln() * q_aux(r2)
            + (2.0 * s_fr * s_0 / s_d).abs().ln() / 6.0
            + upsilon_aux(t2)
            + upsilon_aux(r2)
            + upsilon_aux(0.0)
    };
    Ok(VneeCoefficients { c_lin, c_log, c_const, flags })
}

/// −∂_n at n = 1 of the single-scatterer generating-function coefficients,
/// an independent route to [`vnee_coefficients`].
pub fn vnee_by_differentiation(single: &SingleScatterer) -> Result<(f64, f64, f64), AsymError> {
    let part = |pick: fn(&super::AsymptoticTerms) -> Complex64| {
        move |n: f64| -> Result<Complex64, AsymError> { Ok(pick(&single.terms(n, 0.0, AlphaOrder::Value)?)) }
    };
    let lin = -richardson_derivative(part(|t| t.lin), 1.0, N_STEP, 1)?.re;
    let log = -richardson_derivative(part(|t| t.log), 1.0, N_STEP, 1)?.re;
    let cst = -richardson_derivative(part(|t| t.const_), 1.0, N_STEP, 1)?.re;
    Ok((lin, log, cst))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoScattererVnee {
    pub c_lin: f64,
    pub c_log: f64,
}

/// Linear and log coefficients of the vNEE of a subsystem between two
/// scatterers.
pub fn two_scatterer_vnee(window: FermiWindow, left: &ScattererModel, right: &ScattererModel) -> Result<TwoScattererVnee, AsymError> {
    let pair = TwoScatterer::new(window, left.clone(), right.clone())?;
    if window.is_empty() {
        return Ok(TwoScattererVnee { c_lin: 0.0, c_log: 1.0 / 3.0 });
    }
    let spec = QuadratureSpec::gauss_kronrod(1e-13);
    let mixing = |k: f64| {
        pair.probabilities(k).map(|(t1, t2)| binary_entropy(t1) + binary_entropy(t2)).unwrap_or(f64::NAN)
    };
    let c_lin = integrate_real(mixing, window.k_minus(), window.k_plus(), &spec)? / (2.0 * PI);
    let (t1_fr, t2_fr) = pair.probabilities(window.k_fr())?;
    let (t1_fl, t2_fl) = pair.probabilities(window.k_fl())?;
    let c_log = q_aux(t1_fr) + q_aux(1.0 - t1_fl) + q_aux(t2_fl) + q_aux(1.0 - t2_fr);
    Ok(TwoScattererVnee { c_lin, c_log })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::asymptotics::{jump_kernel, KernelKind};
    use crate::special::euler_gamma;

    /// Re ψ(½ + iβ) by upward recurrence and the asymptotic series.
    fn digamma_half_re(beta: f64) -> f64 {
        let mut z = Complex64::new(0.5, beta);
        let mut acc = Complex64::new(0.0, 0.0);
        while z.re < 20.0 {
            acc -= 1.0 / z;
            z += 1.0;
        }
        let w = 1.0 / (z * z);
        let series = z.ln() - 0.5 / z - w * (1.0 / 12.0 - w * (1.0 / 120.0 - w * (1.0 / 252.0 - w / 240.0)));
        (acc + series).re
    }

    #[test]
    fn kernel_k_matches_digamma() {
        for x in [1.0, 0.5, 0.1, 1e-3, 1e-8] {
            let beta = f64::ln(x) / (2.0 * PI);
            let k = kernel_k(x);
            let oracle = -digamma_half_re(beta);
            assert!((k - oracle).abs() < 1e-11, "x={x}: {k} vs {oracle}");
        }
        assert!((kernel_k(1.0) - (euler_gamma() + 2.0 * 2f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn q_endpoints() {
        assert!(q_aux(1.0).abs() < 1e-12, "{}", q_aux(1.0));
        assert!((q_aux(0.0) - 1.0 / 6.0).abs() < 1e-12, "{}", q_aux(0.0));
    }

    #[test]
    fn q_and_upsilon_are_minus_n_derivatives_of_kernels() {
        for p in [0.2, 0.5, 0.9] {
            let nu = 2.0 * p - 1.0;
            for (kind, aux) in [(KernelKind::Log, q_aux(p)), (KernelKind::Gamma, upsilon_aux(p))] {
                let f = |n: f64| jump_kernel(kind, n, 0.0, nu, 1.0, AlphaOrder::Value);
                let d = -richardson_derivative(f, 1.0, 1e-3, 1).unwrap().re;
                assert!((d - aux).abs() < 1e-8, "{kind:?} p={p}: {d} vs {aux}");
            }
        }
    }

    #[test]
    fn equilibrium_constant() {
        // 2υ(0) is the constant of the half-filled XX chain, ≈ 0.4950.
        assert!((2.0 * upsilon_aux(0.0) - 0.495_018).abs() < 1e-5, "{}", 2.0 * upsilon_aux(0.0));
    }

    #[test]
    fn homogeneous_log_coefficient() {
        let w = FermiWindow::new(2.0, 1.0).unwrap();
        let c = vnee_coefficients(w, &ScattererModel::transparent()).unwrap();
        assert!((c.c_log - 1.0 / 3.0).abs() < 1e-12 && c.c_lin == 0.0);
    }

    #[test]
    fn upper_edge_weak_impurity_halves_log() {
        let w = FermiWindow::new(PI, 1.0).unwrap();
        let c = vnee_coefficients(w, &ScattererModel::impurity(1e-4)).unwrap();
        assert!((c.c_log - 1.0 / 6.0).abs() < 1e-6, "{}", c.c_log);
    }

    #[test]
    fn coefficients_agree_with_differentiated_terms() {
        for dk in [0.1, 0.5] {
            let w = FermiWindow::above(PI / 2.0, dk).unwrap();
            let m = ScattererModel::impurity(1.0);
            let direct = vnee_coefficients(w, &m).unwrap();
            let (lin, log, cst) = vnee_by_differentiation(&SingleScatterer::new(w, &m).unwrap()).unwrap();
            assert!((direct.c_lin - lin).abs() < 1e-7, "{} vs {lin}", direct.c_lin);
            assert!((direct.c_log - log).abs() < 1e-7, "{} vs {log}", direct.c_log);
            assert!((direct.c_const - cst).abs() < 1e-7, "{} vs {cst}", direct.c_const);
        }
    }

    #[test]
    fn two_scatterer_examples() {
        let w = FermiWindow::new(1.7, 1.2).unwrap();
        let t = ScattererModel::transparent();
        let c = two_scatterer_vnee(w, &t, &t).unwrap();
        assert_eq!(c.c_lin, 0.0);
        assert!((c.c_log - 1.0 / 3.0).abs() < 1e-12);

        // Two t² = ⅔ barriers: 𝒯 = t²/(1 − r⁴) = ¾ on both sides.
        let table = crate::scatter::TableModel::new(&[(0.0, 2.0 / 3.0), (PI, 2.0 / 3.0)]).unwrap();
        let m = ScattererModel::Table(table);
        let c = two_scatterer_vnee(w, &m, &m).unwrap();
        let expect = 0.5 / (2.0 * PI) * 2.0 * binary_entropy(0.75);
        assert!((c.c_lin - expect).abs() < 1e-12, "{}", c.c_lin);

        // A half-transmitting left barrier alone: 𝒯_I = ½, 𝒯_II = 1.
        let half = ScattererModel::Table(crate::scatter::TableModel::new(&[(0.0, 0.5), (PI, 0.5)]).unwrap());
        let c = two_scatterer_vnee(w, &half, &t).unwrap();
        assert!((c.c_lin - 0.5 / (2.0 * PI) * 2f64.ln()).abs() < 1e-12, "{}", c.c_lin);
    }

    #[test]
    fn two_scatterer_log_agrees_with_differentiated_jumps() {
        let w = FermiWindow::new(1.9, 1.3).unwrap();
        let (a, b) = (ScattererModel::impurity(0.7), ScattererModel::impurity(1.4));
        let direct = two_scatterer_vnee(w, &a, &b).unwrap();
        let symbol = SymbolSpec::tau_two_scatterer(w, &a, &b).unwrap();
        let f = |n: f64| {
            let mut flags = Validity::default();
            symbol_log(&symbol, n, 0.0, AlphaOrder::Value, &mut flags)
        };
        let d = -richardson_derivative(f, 1.0, N_STEP, 1).unwrap().re;
        assert!((direct.c_log - d).abs() < 1e-7, "{} vs {d}", direct.c_log);
    }
}
