//! Scatterer models and the transmission imbalance ν(k) on the bias window.
//!
//! Momenta live in [0, π]. A left-incoming state at momentum k is transmitted
//! with probability `t_l2` and a right-incoming one reflected with `r_r2`;
//! unitarity of the 2×2 scattering matrix forces `t_l2 + r_r2 = 1`,
//! `t_r2 + r_l2 = 1` and `t_l2 = t_r2`.

use std::f64::consts::PI;

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ScatterError {
    #[error("momentum {k} lies outside (0, π)")]
    Domain { k: f64 },
    #[error("Fermi momenta must lie in [0, π] (got k_fl = {k_fl}, k_fr = {k_fr})")]
    Window { k_fl: f64, k_fr: f64 },
    #[error("scatterer pair is perfectly reflecting at k = {k}")]
    PerfectlyReflecting { k: f64 },
    #[error("invalid transmission table: {0}")]
    Table(String),
}

/// The bias window between the two Fermi momenta.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FermiWindow {
    k_fl: f64,
    k_fr: f64,
}

impl FermiWindow {
    pub fn new(k_fl: f64, k_fr: f64) -> Result<Self, ScatterError> {
        let ok = |k: f64| (0.0..=PI).contains(&k);
        if !(ok(k_fl) && ok(k_fr)) {
            return Err(ScatterError::Window { k_fl, k_fr });
        }
        Ok(Self { k_fl, k_fr })
    }

    /// Window of width `dk` placed above `k_fr` (k_fl = k_fr + dk).
    pub fn above(k_fr: f64, dk: f64) -> Result<Self, ScatterError> {
        Self::new(k_fr + dk, k_fr)
    }

    pub fn k_fl(&self) -> f64 {
        self.k_fl
    }
    pub fn k_fr(&self) -> f64 {
        self.k_fr
    }
    pub fn k_minus(&self) -> f64 {
        self.k_fl.min(self.k_fr)
    }
    pub fn k_plus(&self) -> f64 {
        self.k_fl.max(self.k_fr)
    }
    pub fn k0(&self) -> f64 {
        0.5 * (self.k_fl + self.k_fr)
    }
    pub fn dk(&self) -> f64 {
        (self.k_fl - self.k_fr).abs()
    }
    pub fn is_empty(&self) -> bool {
        self.k_fl == self.k_fr
    }
    /// True when the left Fermi momentum is the upper edge, k_fr < k_fl.
    pub fn left_is_upper(&self) -> bool {
        self.k_fr < self.k_fl
    }

    /// Window with the two Fermi momenta exchanged.
    pub fn swapped(&self) -> Self {
        Self { k_fl: self.k_fr, k_fr: self.k_fl }
    }
}

/// Scattering probabilities at one momentum, plus the right reflection
/// amplitude used by the Hankel part of the correlation matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scattering {
    pub t_l2: f64,
    pub r_r2: f64,
    pub t_r2: f64,
    pub r_l2: f64,
    pub r_r: Complex64,
}

impl Scattering {
    /// Symmetric scatterer with transmission `t2` and a real non-negative
    /// reflection amplitude.
    pub fn from_transmission(t2: f64) -> Self {
        let t2 = t2.clamp(0.0, 1.0);
        let r2 = 1.0 - t2;
        Self { t_l2: t2, r_r2: r2, t_r2: t2, r_l2: r2, r_r: Complex64::new(r2.sqrt(), 0.0) }
    }

    pub fn transparent() -> Self {
        Self::from_transmission(1.0)
    }
}

/// On-site potential ε₀ on a single bond-symmetric site. The reflection
/// amplitude is r_R(k) = −i(ε₀/2t) / (sin k + iε₀/2t).
pub fn single_impurity_probabilities(k: f64, eps0_over_t: f64) -> Result<Scattering, ScatterError> {
    if !(k > 0.0 && k < PI) {
        return Err(ScatterError::Domain { k });
    }
    Ok(impurity_at(k, eps0_over_t))
}

fn impurity_at(k: f64, eps0_over_t: f64) -> Scattering {
    let s = k.sin();
    let g = 0.5 * eps0_over_t;
    if g == 0.0 {
        return Scattering::transparent();
    }
    let t2 = s * s / (s * s + g * g);
    let r2 = g * g / (s * s + g * g);
    let r_r = Complex64::new(0.0, -g) / Complex64::new(s, g);
    Scattering { t_l2: t2, r_r2: r2, t_r2: t2, r_l2: r2, r_r }
}

/// Incoherent composition of a left scatterer `I` and a right scatterer `II`
/// at one momentum: multiple reflections between them are summed in
/// probability, the inter-scatterer phase having been averaged out.
pub fn combine_probabilities(left: &Scattering, right: &Scattering, k: f64) -> Result<Scattering, ScatterError> {
    let bounce = left.r_r2 * right.r_l2;
    let denom = 1.0 - bounce;
    if denom <= 0.0 {
        return Err(ScatterError::PerfectlyReflecting { k });
    }
    let t_l2 = left.t_l2 * right.t_l2 / denom;
    let r_l2 = left.r_l2 + left.t_r2 * left.t_l2 * right.r_l2 / denom;
    let t_r2 = right.t_r2 * left.t_r2 / denom;
    let r_r2 = right.r_r2 + right.t_l2 * right.t_r2 * left.r_r2 / denom;
    Ok(Scattering { t_l2, r_r2, t_r2, r_l2, r_r: Complex64::new(r_r2.sqrt(), 0.0) })
}

/// Transmission probability tabulated on a momentum grid and interpolated by
/// a monotone (Fritsch–Carlson) cubic; reflection is `1 − t²`.
#[derive(Debug, Clone, PartialEq)]
pub struct TableModel {
    k: Vec<f64>,
    t2: Vec<f64>,
    slopes: Vec<f64>,
}

impl TableModel {
    pub fn new(points: &[(f64, f64)]) -> Result<Self, ScatterError> {
        if points.len() < 2 {
            return Err(ScatterError::Table("at least two (k, t²) points are required".into()));
        }
        for (i, &(k, t2)) in points.iter().enumerate() {
            if !(0.0..=PI).contains(&k) {
                return Err(ScatterError::Table(format!("row {i}: momentum {k} outside [0, π]")));
            }
            if !(0.0..=1.0).contains(&t2) {
                return Err(ScatterError::Table(format!("row {i}: t² = {t2} outside [0, 1]")));
            }
            if i > 0 && k <= points[i - 1].0 {
                return Err(ScatterError::Table(format!("row {i}: momenta must be strictly increasing")));
            }
        }
        let k: Vec<f64> = points.iter().map(|p| p.0).collect();
        let t2: Vec<f64> = points.iter().map(|p| p.1).collect();
        let slopes = monotone_slopes(&k, &t2);
        Ok(Self { k, t2, slopes })
    }

    /// Interpolated transmission; constant beyond the grid ends.
    pub fn transmission(&self, k: f64) -> f64 {
        let n = self.k.len();
        if k <= self.k[0] {
            return self.t2[0];
        }
        if k >= self.k[n - 1] {
            return self.t2[n - 1];
        }
        let i = self.k.partition_point(|&x| x <= k) - 1;
        let h = self.k[i + 1] - self.k[i];
        let s = (k - self.k[i]) / h;
        let (y0, y1) = (self.t2[i], self.t2[i + 1]);
        let (m0, m1) = (self.slopes[i] * h, self.slopes[i + 1] * h);
        let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        let h10 = s * (1.0 - s) * (1.0 - s);
        let h01 = s * s * (3.0 - 2.0 * s);
        let h11 = s * s * (s - 1.0);
        (h00 * y0 + h10 * m0 + h01 * y1 + h11 * m1).clamp(0.0, 1.0)
    }
}

fn monotone_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let secant: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / (x[i + 1] - x[i])).collect();
    let mut m = vec![0.0; n];
    m[0] = secant[0];
    m[n - 1] = secant[n - 2];
    for i in 1..n - 1 {
        m[i] = if secant[i - 1] * secant[i] <= 0.0 { 0.0 } else { 0.5 * (secant[i - 1] + secant[i]) };
    }
    for i in 0..n - 1 {
        if secant[i] == 0.0 {
            m[i] = 0.0;
            m[i + 1] = 0.0;
            continue;
        }
        let a = m[i] / secant[i];
        let b = m[i + 1] / secant[i];
        let r = a * a + b * b;
        if r > 9.0 {
            let tau = 3.0 / r.sqrt();
            m[i] = tau * a * secant[i];
            m[i + 1] = tau * b * secant[i];
        }
    }
    m
}

/// A k-resolved scatterer.
#[derive(Debug, Clone, PartialEq)]
pub enum ScattererModel {
    SingleImpurity { eps0_over_t: f64 },
    Table(TableModel),
    /// Scatterers ordered left to right, composed incoherently.
    Composite(Vec<ScattererModel>),
}

impl ScattererModel {
    pub fn transparent() -> Self {
        Self::SingleImpurity { eps0_over_t: 0.0 }
    }

    pub fn impurity(eps0_over_t: f64) -> Self {
        Self::SingleImpurity { eps0_over_t }
    }

    pub fn eval(&self, k: f64) -> Result<Scattering, ScatterError> {
        if !(k > 0.0 && k < PI) {
            return Err(ScatterError::Domain { k });
        }
        self.eval_unchecked(k)
    }

    /// Evaluates on the closed interval [0, π], replacing the band edges by
    /// their one-sided limits.
    pub fn eval_closed(&self, k: f64) -> Result<Scattering, ScatterError> {
        const EDGE: f64 = 1e-12;
        self.eval_unchecked(k.clamp(EDGE, PI - EDGE))
    }

    fn eval_unchecked(&self, k: f64) -> Result<Scattering, ScatterError> {
        match self {
            Self::SingleImpurity { eps0_over_t } => Ok(impurity_at(k, *eps0_over_t)),
            Self::Table(table) => Ok(Scattering::from_transmission(table.transmission(k))),
            Self::Composite(parts) => {
                let mut acc = Scattering::transparent();
                for part in parts {
                    acc = combine_probabilities(&acc, &part.eval_unchecked(k)?, k)?;
                }
                Ok(acc)
            }
        }
    }

    pub fn is_transparent(&self) -> bool {
        match self {
            Self::SingleImpurity { eps0_over_t } => *eps0_over_t == 0.0,
            Self::Table(t) => t.t2.iter().all(|&x| x == 1.0),
            Self::Composite(parts) => parts.iter().all(Self::is_transparent),
        }
    }
}

/// Incoherent composition `left` then `right`.
pub fn combine_incoherent(left: ScattererModel, right: ScattererModel) -> ScattererModel {
    ScattererModel::Composite(vec![left, right])
}

/// Maps a probability `p` on the window to ν so that (1±ν)/2 = p for k_fl = k±.
pub(crate) fn nu_from(window: &FermiWindow, p: f64) -> f64 {
    if window.left_is_upper() {
        2.0 * p - 1.0
    } else {
        1.0 - 2.0 * p
    }
}

/// ν(k) = |t_L|² − |r_R|² for k_fr < k_fl and the negative otherwise.
#[derive(Debug, Clone)]
pub struct NuProfile {
    pub window: FermiWindow,
    pub model: ScattererModel,
    pub nu_minus: f64,
    pub nu_plus: f64,
    pub nu0: f64,
}

impl NuProfile {
    pub fn new(window: FermiWindow, model: ScattererModel) -> Result<Self, ScatterError> {
        let at = |k: f64| model.eval_closed(k).map(|s| nu_from(&window, s.t_l2));
        let (nu_minus, nu_plus, nu0) = (at(window.k_minus())?, at(window.k_plus())?, at(window.k0())?);
        // Probe the interior so composition failures surface here rather than inside quadrature.
        if !window.is_empty() {
            for i in 1..64 {
                let k = window.k_minus() + window.dk() * i as f64 / 64.0;
                at(k)?;
            }
        }
        Ok(Self { window, model, nu_minus, nu_plus, nu0 })
    }

    pub fn is_empty(&self) -> bool {
        self.window.is_empty()
    }

    /// ν at momentum `k`, NaN if the model cannot be evaluated there.
    pub fn nu(&self, k: f64) -> f64 {
        self.model.eval_closed(k).map(|s| nu_from(&self.window, s.t_l2)).unwrap_or(f64::NAN)
    }

    pub fn scattering(&self, k: f64) -> Result<Scattering, ScatterError> {
        self.model.eval_closed(k)
    }
}
