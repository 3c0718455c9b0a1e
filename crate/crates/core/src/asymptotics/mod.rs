//! Fisher–Hartwig asymptotics of the charge generating function
//!
//!   ln Z_n(α) ≈ lin·L + log·ln L + const
//!
//! for a subsystem of length L next to a scatterer, and everything derived
//! from it: charge statistics, von Neumann coefficients, the Gaussian
//! approximation of the resolved moments and the two-scatterer terms.
//!
//! The log coefficient is a sum over the jumps of v = 2τ − 1 on the circle,
//! each contributing the kernel J of [`kernels`]. The constant term uses the
//! small-window approximation in which ν(k) is replaced by ν(k₀); it is
//! flagged as approximate once Δk > 0.3.

pub mod kernels;
mod resolution;
mod vnee;

use std::f64::consts::PI;

use num_complex::Complex64;
use thiserror::Error;

use crate::scatter::{FermiWindow, NuProfile, ScatterError, ScattererModel};
use crate::special::{euler_gamma, integrate, richardson_derivative, QuadError, QuadratureSpec};
use crate::symbols::{Piece, SymbolError, SymbolSpec};

pub use crate::special::log_gamma_ratio;
pub use kernels::{jump_kernel, kernel_e, q_n_kernel, upsilon_kernel, AlphaOrder, KernelKind};
pub use resolution::{analytic_resolved_moments, analytic_resolved_vnee, AnalyticResolution};
pub use vnee::{
    kernel_k, q_aux, two_scatterer_vnee, upsilon_aux, vnee_by_differentiation, vnee_coefficients, TwoScattererVnee,
    VneeCoefficients,
};

/// Window above which the constant term is reported as approximate.
pub const CONST_APPROX_DK: f64 = 0.3;
/// Step in n for finite differences.
pub const N_STEP: f64 = 1e-4;
const LIN_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum AsymError {
    #[error(transparent)]
    Scatter(#[from] ScatterError),
    #[error(transparent)]
    Symbol(#[from] SymbolError),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
    #[error("jump ({a}, {b}) at α = {alpha} is not integrable")]
    Divergent { a: f64, b: f64, alpha: f64 },
    #[error("{0}")]
    Domain(String),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Validity {
    /// Δk is not small, so the constant term is only indicative.
    pub const_approx: bool,
    /// The constant term could not be formed (vanishing sine prefactor or
    /// not derived for this geometry); `const_` is NaN.
    pub const_unavailable: bool,
    /// Empty window: the result is the equilibrium one.
    pub equilibrium: bool,
    /// A kernel diverged at |α| = π; the affected coefficient is infinite.
    pub divergent: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct AsymptoticTerms {
    pub lin: Complex64,
    pub log: Complex64,
    pub const_: Complex64,
    pub n: f64,
    pub alpha: f64,
    pub window: FermiWindow,
    pub flags: Validity,
}

impl AsymptoticTerms {
    /// lin·L + log·ln L + const, dropping an unavailable constant term.
    pub fn ln_z(&self, l: f64) -> Complex64 {
        let base = self.lin * l + self.log * l.ln();
        if self.flags.const_unavailable {
            base
        } else {
            base + self.const_
        }
    }
}

fn divergent_value() -> Complex64 {
    Complex64::new(f64::INFINITY, 0.0)
}

/// Runs a jump kernel, turning a divergence into +∞ and a raised flag.
fn guarded(
    flags: &mut Validity,
    kind: KernelKind,
    n: f64,
    alpha: f64,
    a: f64,
    b: f64,
    order: AlphaOrder,
) -> Result<Complex64, AsymError> {
    match jump_kernel(kind, n, alpha, a, b, order) {
        Err(AsymError::Divergent { .. }) => {
            flags.divergent = true;
            Ok(divergent_value())
        }
        other => other,
    }
}

fn occupation_to_v(tau: Complex64) -> f64 {
    (2.0 * tau.re - 1.0).clamp(-1.0, 1.0)
}

/// (1/2π)∫ ∂_α^k e_n^{(α)}(1, v(k)) dk over the circle for an occupation symbol.
/// At |α| = π the kernel is −∞ wherever v = 0; that is reported as a
/// divergence with lin = −∞.
pub(crate) fn symbol_lin(
    sym: &SymbolSpec,
    n: f64,
    alpha: f64,
    order: AlphaOrder,
    flags: &mut Validity,
) -> Result<Complex64, AsymError> {
    let spec = QuadratureSpec::gauss_kronrod(LIN_TOL);
    let mut total = Complex64::new(0.0, 0.0);
    for seg in sym.segments() {
        let part = match &seg.piece {
            Piece::Const(c) => kernels::kernel_e_alpha(n, alpha, occupation_to_v(*c), order) * (seg.b - seg.a),
            Piece::Func(f) => {
                match integrate(|k| kernels::kernel_e_alpha(n, alpha, occupation_to_v(f(k)), order), seg.a, seg.b, &spec) {
                    Ok(q) => q.value,
                    Err(QuadError::NonFinite { .. }) if alpha.abs() == PI => Complex64::new(f64::NEG_INFINITY, 0.0),
                    Err(e) => return Err(e.into()),
                }
            }
        };
        if part.re == f64::NEG_INFINITY {
            flags.divergent = true;
            return Ok(Complex64::new(f64::NEG_INFINITY, 0.0));
        }
        total += part;
    }
    Ok(total / (2.0 * PI))
}

/// Σ over jumps of J(v₋, v₊) for an occupation symbol.
pub(crate) fn symbol_log(
    sym: &SymbolSpec,
    n: f64,
    alpha: f64,
    order: AlphaOrder,
    flags: &mut Validity,
) -> Result<Complex64, AsymError> {
    let mut total = Complex64::new(0.0, 0.0);
    for jump in sym.jumps() {
        let (a, b) = (occupation_to_v(jump.left), occupation_to_v(jump.right));
        total += guarded(flags, KernelKind::Log, n, alpha, a, b, order)?;
    }
    Ok(total)
}

fn abs_ln(x: f64) -> f64 {
    x.abs().ln()
}

/// Constant term of a single scatterer with ν frozen at ν₀.
fn single_const(window: &FermiWindow, nu0: f64, n: f64, alpha: f64, order: AlphaOrder, flags: &mut Validity) -> Result<Complex64, AsymError> {
    let full_log = Complex64::new(kernels::full_jump(n, alpha, order), 0.0);
    if window.is_empty() {
        let s = (window.k0()).sin();
        if s == 0.0 {
            flags.const_unavailable = true;
            return Ok(Complex64::new(f64::NAN, f64::NAN));
        }
        let y = guarded(flags, KernelKind::Gamma, n, alpha, -1.0, 1.0, order)?;
        return Ok(full_log * (2.0 * abs_ln(2.0 * s)) + y * 2.0);
    }
    let (km, kp, kfr) = (window.k_minus(), window.k_plus(), window.k_fr());
    let s_m = (0.5 * (km + kfr)).sin();
    let s_p = (0.5 * (kp + kfr)).sin();
    let s_d = (0.5 * window.dk()).sin();
    let s_fr = kfr.sin();
    let s_0 = window.k0().sin();
    if [s_m, s_p, s_d, s_fr, s_0].contains(&0.0) {
        flags.const_unavailable = true;
        return Ok(Complex64::new(f64::NAN, f64::NAN));
    }
    let c_minus = abs_ln(2.0 * s_m * s_d / s_p);
    let c_plus = abs_ln(2.0 * s_p * s_d / s_m);
    let c_full = abs_ln(2.0 * s_fr * s_0 / s_d);
    let q_upper = guarded(flags, KernelKind::Log, n, alpha, nu0, 1.0, order)?;
    let q_lower = guarded(flags, KernelKind::Log, n, alpha, -1.0, nu0, order)?;
    let y_upper = guarded(flags, KernelKind::Gamma, n, alpha, nu0, 1.0, order)?;
    let y_lower = guarded(flags, KernelKind::Gamma, n, alpha, -1.0, nu0, order)?;
    let y_full = guarded(flags, KernelKind::Gamma, n, alpha, -1.0, 1.0, order)?;
    Ok(q_upper * c_minus + q_lower * c_plus + full_log * c_full + y_upper + y_lower + y_full)
}

/// Precomputed single-scatterer data reused across many (n, α) points.
#[derive(Clone)]
pub struct SingleScatterer {
    pub window: FermiWindow,
    pub profile: NuProfile,
    symbol: SymbolSpec,
}

impl SingleScatterer {
    pub fn new(window: FermiWindow, scatterer: &ScattererModel) -> Result<Self, AsymError> {
        let profile = NuProfile::new(window, scatterer.clone())?;
        let symbol = SymbolSpec::tau_single(window, scatterer)?;
        Ok(Self { window, profile, symbol })
    }

    /// The coefficients, or their α-derivative of the given order.
    pub fn terms(&self, n: f64, alpha: f64, order: AlphaOrder) -> Result<AsymptoticTerms, AsymError> {
        if !(n > 0.0) {
            return Err(AsymError::Domain(format!("Rényi order must be positive (got {n})")));
        }
        let mut flags = Validity { equilibrium: self.window.is_empty(), ..Validity::default() };
        flags.const_approx = self.window.dk() > CONST_APPROX_DK;
        let lin = symbol_lin(&self.symbol, n, alpha, order, &mut flags)?;
        let log = symbol_log(&self.symbol, n, alpha, order, &mut flags)?;
        let const_ = single_const(&self.window, self.profile.nu0, n, alpha, order, &mut flags)?;
        Ok(AsymptoticTerms { lin, log, const_, n, alpha, window: self.window, flags })
    }

    /// ln Z_n(α) at length L.
    pub fn ln_z(&self, n: f64, alpha: f64, l: f64) -> Result<Complex64, AsymError> {
        Ok(self.terms(n, alpha, AlphaOrder::Value)?.ln_z(l))
    }

    /// (⟨Q⟩_n, (ΔQ)²_n) from the first two α-derivatives at α = 0.
    pub fn moments(&self, n: f64, l: f64) -> Result<(f64, f64), AsymError> {
        let d1 = self.terms(n, 0.0, AlphaOrder::First)?.ln_z(l);
        let d2 = self.terms(n, 0.0, AlphaOrder::Second)?.ln_z(l);
        Ok(((-Complex64::i() * d1).re, -d2.re))
    }

    pub fn gaussian(&self, n: f64, l: f64) -> Result<GaussianResolution, AsymError> {
        let (mean_n, var_n) = self.moments(n, l)?;
        let mean = |m: f64| self.moments(m, l).map(|(x, _)| Complex64::new(x, 0.0));
        let var = |m: f64| self.moments(m, l).map(|(_, v)| Complex64::new(v, 0.0));
        let dmean_dn = richardson_derivative(mean, 1.0, N_STEP, 1)?.re;
        let dvar_dn = richardson_derivative(var, 1.0, N_STEP, 1)?.re;
        Ok(GaussianResolution { mean_n, var_n, dmean_dn, dvar_dn })
    }
}

/// lin, log and const of ln Z_n(α) for a single scatterer.
pub fn coefficients(window: FermiWindow, scatterer: &ScattererModel, n: f64, alpha: f64) -> Result<AsymptoticTerms, AsymError> {
    SingleScatterer::new(window, scatterer)?.terms(n, alpha, AlphaOrder::Value)
}

/// ln Z_n(α) of a homogeneous chain filled up to k₀.
pub fn equilibrium_gen_fun(k0: f64, n: f64, alpha: f64, l: f64) -> Result<Complex64, AsymError> {
    if !(k0 > 0.0 && k0 < PI) {
        return Err(AsymError::Domain(format!("k₀ must lie in (0, π) (got {k0})")));
    }
    let full_log = 2.0 * kernels::full_jump(n, alpha, AlphaOrder::Value);
    let y = upsilon_kernel(n, -1.0, alpha)?;
    Ok(Complex64::new(0.0, alpha * k0 * l / PI) + full_log * (2.0 * l * k0.sin()).abs().ln() + y * 2.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChargeStatistics {
    pub mean_shift: f64,
    pub var_shift: f64,
    pub mean_eq: f64,
    pub var_eq: f64,
}

impl ChargeStatistics {
    pub fn mean(&self) -> f64 {
        self.mean_eq + self.mean_shift
    }

    pub fn var(&self) -> f64 {
        self.var_eq + self.var_shift
    }
}

/// Mean and variance of the subsystem charge at n = 1, split into the
/// equilibrium values at k₀ and the shifts caused by the bias and scatterer.
pub fn charge_statistics(window: FermiWindow, scatterer: &ScattererModel, l: f64) -> Result<ChargeStatistics, AsymError> {
    let (k0, kfl, kfr) = (window.k0(), window.k_fl(), window.k_fr());
    let mean_eq = k0 * l / PI;
    let var_eq = ((2.0 * l * k0.sin()).abs().ln() + 1.0 + euler_gamma()) / (PI * PI);
    if window.is_empty() {
        return Ok(ChargeStatistics { mean_shift: 0.0, var_shift: 0.0, mean_eq, var_eq });
    }
    let spec = QuadratureSpec::gauss_kronrod(1e-13);
    let r2 = |k: f64| scatterer.eval_closed(k).map(|s| s.r_r2).unwrap_or(f64::NAN);
    let t2r2 = |k: f64| scatterer.eval_closed(k).map(|s| s.t_l2 * s.r_r2).unwrap_or(f64::NAN);
    let refl = integrate(|k| Complex64::new(r2(k), 0.0), window.k_minus(), window.k_plus(), &spec)?.value.re;
    let signed = if kfl > kfr { refl } else { -refl };
    let mean_shift = -l / (2.0 * PI) * signed;
    let noise = integrate(|k| Complex64::new(t2r2(k), 0.0), window.k_minus(), window.k_plus(), &spec)?.value.re;
    let at_fr = scatterer.eval_closed(kfr)?;
    let at_fl = scatterer.eval_closed(kfl)?;
    let at_0 = scatterer.eval_closed(k0)?;
    let var_shift = noise * l / (2.0 * PI)
        - (1.0 - at_fr.r_r2 * at_fr.r_r2 - at_fl.t_l2 * at_fl.t_l2) * l.ln() / (2.0 * PI * PI)
        + at_0.r_r2 * (kfr.sin() / k0.sin()).abs().ln() / (PI * PI)
        - at_0.t_l2 * at_0.r_r2 * (1.0 + euler_gamma() + (2.0 * (0.5 * window.dk()).sin()).abs().ln()) / (PI * PI);
    Ok(ChargeStatistics { mean_shift, var_shift, mean_eq, var_eq })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianResolution {
    pub mean_n: f64,
    pub var_n: f64,
    pub dmean_dn: f64,
    pub dvar_dn: f64,
}

/// ⟨Q⟩_n = −i∂_α ln Z_n(α)|₀ from the asymptotic generating function.
pub fn generalized_mean_charge(window: FermiWindow, scatterer: &ScattererModel, n: f64, l: f64) -> Result<f64, AsymError> {
    Ok(SingleScatterer::new(window, scatterer)?.moments(n, l)?.0)
}

/// Mean and variance of the Gaussian approximation to Z_n(Q) at order n,
/// with their n-derivatives at n = 1.
pub fn gaussian_resolution(window: FermiWindow, scatterer: &ScattererModel, n: f64, l: f64) -> Result<GaussianResolution, AsymError> {
    let single = SingleScatterer::new(window, scatterer)?;
    let mut out = single.gaussian(1.0, l)?;
    if n != 1.0 {
        let (mean_n, var_n) = single.moments(n, l)?;
        out.mean_n = mean_n;
        out.var_n = var_n;
    }
    Ok(out)
}

/// Entropy after a projective measurement with outcome Q, from the
/// Gaussian approximation and the total entropy `s`.
pub fn sigma_gaussian(res: &GaussianResolution, s: f64, q: i64) -> f64 {
    let sd = res.var_n.sqrt();
    let dsd_dn = res.dvar_dn / (2.0 * sd);
    let x = (q as f64 - res.mean_n) / sd;
    s - 0.5 * (2.0 * PI * res.var_n).ln() - res.dmean_dn / res.var_n * (q as f64 - res.mean_n) - 0.5 * x * x
        + dsd_dn / sd * (1.0 - x * x)
}

/// Slope of σ(Q) in Q that breaks equipartition: the (1 − ν²)-weighted
/// average of ln((1 − ν)/(1 + ν)) over the window. Zero when the weight
/// vanishes.
pub fn equipartition_slope(window: FermiWindow, scatterer: &ScattererModel) -> Result<f64, AsymError> {
    if window.is_empty() {
        return Ok(0.0);
    }
    let profile = NuProfile::new(window, scatterer.clone())?;
    let spec = QuadratureSpec::gauss_kronrod(1e-13);
    let weight = |k: f64| {
        let nu = profile.nu(k);
        1.0 - nu * nu
    };
    let den = integrate(|k| Complex64::new(weight(k), 0.0), window.k_minus(), window.k_plus(), &spec)?.value.re;
    if den <= 1e-14 * window.dk() {
        return Ok(0.0);
    }
    let num = integrate(
        |k| {
            let nu = profile.nu(k);
            let w = 1.0 - nu * nu;
            Complex64::new(if w == 0.0 { 0.0 } else { w * ((1.0 - nu) / (1.0 + nu)).ln() }, 0.0)
        },
        window.k_minus(),
        window.k_plus(),
        &spec,
    )?
    .value
    .re;
    Ok(num / den)
}

/// ⌈½⌊2·mean⌋⌉: the integer charge nearest the mean, half-integers rounded up.
pub fn rounded_mean_charge(mean: f64) -> i64 {
    ((2.0 * mean).floor() / 2.0).ceil() as i64
}

/// lin and log of ln Z_n(α) for a subsystem between two scatterers; the
/// constant term is not available and is flagged as such.
pub fn two_scatterer_asymptotics(
    window: FermiWindow,
    left: &ScattererModel,
    right: &ScattererModel,
    n: f64,
    alpha: f64,
) -> Result<AsymptoticTerms, AsymError> {
    let symbol = SymbolSpec::tau_two_scatterer(window, left, right)?;
    let mut flags = Validity { equilibrium: window.is_empty(), const_unavailable: true, ..Validity::default() };
    flags.const_approx = window.dk() > CONST_APPROX_DK;
    let lin = symbol_lin(&symbol, n, alpha, AlphaOrder::Value, &mut flags)?;
    let log = symbol_log(&symbol, n, alpha, AlphaOrder::Value, &mut flags)?;
    Ok(AsymptoticTerms { lin, log, const_: Complex64::new(f64::NAN, f64::NAN), n, alpha, window, flags })
}
