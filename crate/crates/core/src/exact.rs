//! Exact entanglement measures from the spectrum {ν_l} of 2C − I.
//!
//! Every eigenvalue is an independent fermionic mode occupied with
//! probability p_l = (1+ν_l)/2, so Tr[ρ^n e^{iαQ}] factorizes into
//! Π_l (p_l^n e^{iα} + q_l^n). Its logarithm is always accumulated factor by
//! factor with principal logs.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use thiserror::Error;

use crate::symbols::CorrelationSpectrum;

/// Sectors with a smaller probability are treated as empty.
pub const SECTOR_THRESHOLD: f64 = 1e-10;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ExactError {
    #[error("{samples} α-samples cannot resolve charges 0..={l} without aliasing (need at least {need})")]
    Aliasing { samples: usize, l: usize, need: usize },
    #[error("charge sector Q = {q} has probability {weight:e}, below {SECTOR_THRESHOLD:e}")]
    EmptySector { q: i64, weight: f64 },
    #[error("Rényi order must be positive (got {0})")]
    Order(f64),
}

/// One value of ln Z_n(α). A vanishing factor is reported as `ln_z.re = −∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenFunSample {
    pub n: f64,
    pub alpha: f64,
    pub ln_z: Complex64,
}

impl GenFunSample {
    pub fn is_zero(&self) -> bool {
        self.ln_z.re == f64::NEG_INFINITY
    }

    pub fn z(&self) -> Complex64 {
        if self.is_zero() {
            Complex64::new(0.0, 0.0)
        } else {
            self.ln_z.exp()
        }
    }
}

/// Charge-resolved weights for Q = 0..=L.
#[derive(Debug, Clone, PartialEq)]
pub struct ChargeTable {
    pub weights: Vec<Complex64>,
}

impl ChargeTable {
    pub fn q_values(&self) -> std::ops::RangeInclusive<i64> {
        0..=(self.weights.len() as i64 - 1)
    }

    pub fn get(&self, q: i64) -> Complex64 {
        usize::try_from(q).ok().and_then(|i| self.weights.get(i)).copied().unwrap_or_default()
    }

    pub fn total(&self) -> Complex64 {
        self.weights.iter().sum()
    }
}

fn occupations(nu: f64) -> (f64, f64) {
    (0.5 * (1.0 + nu), 0.5 * (1.0 - nu))
}

/// e^{iα}, exact at α = ±π so that a ν = 0 factor vanishes there exactly.
fn phase(alpha: f64) -> Complex64 {
    if alpha.abs() == PI {
        Complex64::new(-1.0, 0.0)
    } else {
        Complex64::from_polar(1.0, alpha)
    }
}

fn x_ln_x(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

/// ln(p^n e^{iα} + q^n) for one mode, with the pure cases exact.
fn factor_log(nu: f64, n: f64, alpha: f64) -> Complex64 {
    if nu == 1.0 {
        return Complex64::new(0.0, alpha);
    }
    if nu == -1.0 {
        return Complex64::new(0.0, 0.0);
    }
    let (p, q) = occupations(nu);
    let w = phase(alpha) * p.powf(n) + q.powf(n);
    if w == Complex64::new(0.0, 0.0) {
        Complex64::new(f64::NEG_INFINITY, 0.0)
    } else {
        w.ln()
    }
}

pub fn gen_fun_from_nus(nus: &[f64], n: f64, alpha: f64) -> GenFunSample {
    let ln_z = nus.iter().map(|&nu| factor_log(nu, n, alpha)).sum();
    GenFunSample { n, alpha, ln_z }
}

pub fn gen_fun_exact(spec: &CorrelationSpectrum, n: f64, alpha: f64) -> GenFunSample {
    gen_fun_from_nus(&spec.nus, n, alpha)
}

/// Tr ρ^n.
pub fn renyi_moment(spec: &CorrelationSpectrum, n: f64) -> f64 {
    gen_fun_exact(spec, n, 0.0).ln_z.re.exp()
}

/// Σ_l H((1+ν_l)/2) with the binary entropy H.
pub fn vnee_exact(spec: &CorrelationSpectrum) -> f64 {
    spec.nus
        .iter()
        .map(|&nu| {
            let (p, q) = occupations(nu);
            -x_ln_x(p) - x_ln_x(q)
        })
        .sum()
}

/// Σ_l of the per-mode term of ∂_n ln Z_n(α) at n = 1.
fn dn_log_sum(nus: &[f64], alpha: f64) -> Complex64 {
    let phase = phase(alpha);
    nus.iter()
        .map(|&nu| {
            let (p, q) = occupations(nu);
            let num = phase * x_ln_x(p) + x_ln_x(q);
            if num == Complex64::new(0.0, 0.0) {
                return num;
            }
            num / (phase * p + q)
        })
        .sum()
}

/// ∂_n Z_n(α) at n = 1. An infinite value signals a vanishing denominator.
pub fn dzn_dn_exact(spec: &CorrelationSpectrum, alpha: f64) -> Complex64 {
    let z1 = gen_fun_exact(spec, 1.0, alpha);
    if z1.is_zero() {
        return Complex64::new(f64::NEG_INFINITY, 0.0);
    }
    z1.z() * dn_log_sum(&spec.nus, alpha)
}

/// Smallest power of two at or above 2(L+1).
pub fn alpha_grid_size(l: usize) -> usize {
    (2 * (l + 1)).next_power_of_two()
}

/// Midpoint grid α_j = −π + (j + ½)·2π/N. It is uniform, avoids α = ±π
/// where single factors may vanish, and inverts exactly like the endpoint
/// grid.
pub fn alpha_grid(samples: usize) -> Vec<f64> {
    let h = 2.0 * PI / samples as f64;
    (0..samples).map(|j| -PI + (j as f64 + 0.5) * h).collect()
}

/// Inverts samples of a generating function taken on [`alpha_grid`] into
/// weights for Q = 0..=L: weights[Q] = (1/N) Σ_j Z(α_j) e^{−iα_j Q}.
pub fn resolve_charge(samples: &[Complex64], l: usize) -> Result<ChargeTable, ExactError> {
    let n = samples.len();
    let need = 2 * (l + 1);
    if n < need {
        return Err(ExactError::Aliasing { samples: n, l, need });
    }
    let mut buf = samples.to_vec();
    FftPlanner::<f64>::new().plan_fft_forward(n).process(&mut buf);
    let weights = (0..=l)
        .map(|q| {
            let shift = Complex64::from_polar(1.0 / n as f64, PI * q as f64 * (1.0 - 1.0 / n as f64));
            buf[q] * shift
        })
        .collect();
    Ok(ChargeTable { weights })
}

/// Z_n(Q) for Q = 0..=L.
pub fn resolved_moments(spec: &CorrelationSpectrum, n: f64) -> Result<ChargeTable, ExactError> {
    if !(n > 0.0) {
        return Err(ExactError::Order(n));
    }
    let grid = alpha_grid(alpha_grid_size(spec.l));
    let samples: Vec<Complex64> = grid.iter().map(|&a| gen_fun_exact(spec, n, a).z()).collect();
    resolve_charge(&samples, spec.l)
}

/// S(Q) for Q = 0..=L, from −∂_n Z_n(α)|_{n=1} on the α grid.
pub fn resolved_vnee(spec: &CorrelationSpectrum) -> Result<ChargeTable, ExactError> {
    let grid = alpha_grid(alpha_grid_size(spec.l));
    let samples: Vec<Complex64> = grid.iter().map(|&a| -dzn_dn_exact(spec, a)).collect();
    resolve_charge(&samples, spec.l)
}

/// σ(Q) = ln Z_1(Q) + S(Q)/Z_1(Q).
pub fn post_projection_vnee(z1: &ChargeTable, s: &ChargeTable, q: i64) -> Result<f64, ExactError> {
    let weight = z1.get(q).re;
    if !(weight > SECTOR_THRESHOLD) {
        return Err(ExactError::EmptySector { q, weight });
    }
    Ok(weight.ln() + s.get(q).re / weight)
}
