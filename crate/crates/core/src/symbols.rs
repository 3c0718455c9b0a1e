//! Piecewise momentum-space symbols and the correlation matrices they
//! generate.
//!
//! A symbol is a list of segments covering (−π, π]. Constant segments are
//! Fourier-transformed in closed form; the others by adaptive Gauss–Kronrod
//! with the segment ends as hard panel boundaries, so the jumps of the
//! occupation never land inside a panel.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use thiserror::Error;

use crate::scatter::{nu_from, FermiWindow, NuProfile, ScatterError, ScattererModel};
use crate::special::{integrate, QuadError, QuadratureSpec};

/// Per-coefficient absolute tolerance.
const COEFF_TOL: f64 = 1e-13;
/// Largest tolerated excursion of an eigenvalue of 2C − I beyond [−1, 1].
const SPECTRUM_SLACK: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum SymbolError {
    #[error(transparent)]
    Scatter(#[from] ScatterError),
    #[error("Fourier coefficient {l}: {source}")]
    Quadrature { l: i64, source: QuadError },
    #[error("{0}")]
    Domain(String),
    #[error("eigenvalue {value} of 2C − I lies outside [−1, 1] by more than {SPECTRUM_SLACK:e} (L = {l}, max |C − C†| = {asymmetry:e})")]
    Spectrum { value: f64, l: usize, asymmetry: f64 },
}

#[derive(Clone)]
pub enum Piece {
    Const(Complex64),
    Func(Arc<dyn Fn(f64) -> Complex64 + Send + Sync>),
}

impl Piece {
    fn real(v: f64) -> Self {
        Piece::Const(Complex64::new(v, 0.0))
    }

    pub fn eval(&self, k: f64) -> Complex64 {
        match self {
            Piece::Const(c) => *c,
            Piece::Func(f) => f(k),
        }
    }
}

impl fmt::Debug for Piece {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Piece::Const(c) => write!(f, "Const({c})"),
            Piece::Func(_) => write!(f, "Func(..)"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SymbolKind {
    /// Steady-state occupation τ(k) right of a single scatterer.
    TauSingle,
    /// Reflection symbol h(k) of the Hankel term.
    HankelH,
    /// Occupation τ̄(k) between two incoherently composed scatterers.
    TauTwoScatterer,
    /// λ − (2τ(k) − 1), the symbol whose determinant is the characteristic
    /// polynomial of 2C − I.
    LambdaShifted(Complex64),
    /// Anything assembled by hand.
    Custom,
}

#[derive(Debug, Clone)]
pub struct Segment {
    pub a: f64,
    pub b: f64,
    pub piece: Piece,
}

/// Piecewise symbol on (−π, π]. Segments are sorted, non-overlapping,
/// non-empty and cover the whole circle.
#[derive(Debug, Clone)]
pub struct SymbolSpec {
    segments: Vec<Segment>,
    pub kind: SymbolKind,
}

/// A discontinuity of a symbol on the circle, with the one-sided limits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jump {
    pub k: f64,
    pub left: Complex64,
    pub right: Complex64,
}

impl SymbolSpec {
    /// Builds a symbol from `(a, b, piece)` triples; empty segments are dropped.
    pub fn from_segments(parts: Vec<(f64, f64, Piece)>, kind: SymbolKind) -> Result<Self, SymbolError> {
        let segments: Vec<Segment> =
            parts.into_iter().filter(|(a, b, _)| b > a).map(|(a, b, piece)| Segment { a, b, piece }).collect();
        let covered = segments.first().map(|s| s.a) == Some(-PI)
            && segments.last().map(|s| s.b) == Some(PI)
            && segments.windows(2).all(|w| w[0].b == w[1].a);
        if !covered {
            return Err(SymbolError::Domain("symbol segments must tile [−π, π] in order".into()));
        }
        Ok(Self { segments, kind })
    }

    pub fn constant(value: f64) -> Self {
        Self { segments: vec![Segment { a: -PI, b: PI, piece: Piece::real(value) }], kind: SymbolKind::Custom }
    }

    /// Indicator of the Fermi sea (−k_f, k_f).
    pub fn fermi_sea(k_f: f64) -> Self {
        Self::from_segments(
            vec![(-PI, -k_f, Piece::real(0.0)), (-k_f, k_f, Piece::real(1.0)), (k_f, PI, Piece::real(0.0))],
            SymbolKind::Custom,
        )
        .expect("segments tile the circle")
    }

    /// τ(k): 1 on (−k_fr, k−), (1+ν(k))/2 on the window, 0 elsewhere.
    pub fn tau_single(window: FermiWindow, model: &ScattererModel) -> Result<Self, SymbolError> {
        let profile = NuProfile::new(window, model.clone())?;
        let occ = move |k: f64| Complex64::new(0.5 * (1.0 + profile.nu(k)), 0.0);
        Self::from_segments(
            vec![
                (-PI, -window.k_fr(), Piece::real(0.0)),
                (-window.k_fr(), window.k_minus(), Piece::real(1.0)),
                (window.k_minus(), window.k_plus(), Piece::Func(Arc::new(occ))),
                (window.k_plus(), PI, Piece::real(0.0)),
            ],
            SymbolKind::TauSingle,
        )
    }

    /// h(k): r_R(−k) on (−k_fr, 0), r_R(k)* on (0, k_fr), 0 elsewhere.
    pub fn hankel(window: FermiWindow, model: &ScattererModel) -> Result<Self, SymbolError> {
        let (m1, m2) = (model.clone(), model.clone());
        let neg = move |k: f64| m1.eval_closed(-k).map(|s| s.r_r).unwrap_or(Complex64::new(f64::NAN, 0.0));
        let pos = move |k: f64| m2.eval_closed(k).map(|s| s.r_r.conj()).unwrap_or(Complex64::new(f64::NAN, 0.0));
        let k_fr = window.k_fr();
        Self::from_segments(
            vec![
                (-PI, -k_fr, Piece::real(0.0)),
                (-k_fr, 0.0, Piece::Func(Arc::new(neg))),
                (0.0, k_fr, Piece::Func(Arc::new(pos))),
                (k_fr, PI, Piece::real(0.0)),
            ],
            SymbolKind::HankelH,
        )
    }

    /// τ̄(k) between a left scatterer `left` (I) and a right one `right` (II).
    pub fn tau_two_scatterer(
        window: FermiWindow,
        left: &ScattererModel,
        right: &ScattererModel,
    ) -> Result<Self, SymbolError> {
        let pair = TwoScatterer::new(window, left.clone(), right.clone())?;
        let (p1, p2) = (pair.clone(), pair);
        let upper = move |k: f64| Complex64::new(0.5 * (1.0 + p1.nu_bar_one(k)), 0.0);
        let lower = move |k: f64| Complex64::new(0.5 * (1.0 - p2.nu_bar_two(-k)), 0.0);
        let (km, kp) = (window.k_minus(), window.k_plus());
        Self::from_segments(
            vec![
                (-PI, -kp, Piece::real(0.0)),
                (-kp, -km, Piece::Func(Arc::new(lower))),
                (-km, km, Piece::real(1.0)),
                (km, kp, Piece::Func(Arc::new(upper))),
                (kp, PI, Piece::real(0.0)),
            ],
            SymbolKind::TauTwoScatterer,
        )
    }

    /// λ − (2τ − 1) built from an occupation symbol.
    pub fn lambda_shifted(tau: &SymbolSpec, lambda: Complex64) -> Self {
        Self { segments: tau.map_values(move |t| lambda - (t * 2.0 - 1.0)).segments, kind: SymbolKind::LambdaShifted(lambda) }
    }

    /// Pointwise image `k ↦ g(sym(k))`, same segmentation.
    pub fn map_values<G>(&self, g: G) -> Self
    where
        G: Fn(Complex64) -> Complex64 + Send + Sync + Clone + 'static,
    {
        let segments = self
            .segments
            .iter()
            .map(|s| {
                let piece = match &s.piece {
                    Piece::Const(c) => Piece::Const(g(*c)),
                    Piece::Func(f) => {
                        let (f, g) = (f.clone(), g.clone());
                        Piece::Func(Arc::new(move |k| g(f(k))))
                    }
                };
                Segment { a: s.a, b: s.b, piece }
            })
            .collect();
        Self { segments, kind: SymbolKind::Custom }
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn breakpoints(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self.segments.iter().map(|s| s.a).collect();
        out.push(PI);
        out
    }

    pub fn eval(&self, k: f64) -> Complex64 {
        let i = self.segments.partition_point(|s| s.b < k).min(self.segments.len() - 1);
        self.segments[i].piece.eval(k)
    }

    /// Discontinuities on the circle. Breakpoints that coincide modulo 2π
    /// (−π and π in particular) are one point, so a symbol that is
    /// continuous across them reports no jump there.
    pub fn jumps(&self) -> Vec<Jump> {
        let n = self.segments.len();
        let mut out = Vec::new();
        for i in 0..n {
            let seg = &self.segments[i];
            let prev = &self.segments[(i + n - 1) % n];
            let left = prev.piece.eval(prev.b);
            let right = seg.piece.eval(seg.a);
            if left != right {
                out.push(Jump { k: seg.a, left, right });
            }
        }
        out
    }
}

/// (1/2π)∫ sym(k) e^{−ilk} dk over (−π, π].
pub fn fourier_coefficient(sym: &SymbolSpec, l: i64) -> Result<Complex64, SymbolError> {
    let lf = l as f64;
    let tol = COEFF_TOL / sym.segments.len() as f64;
    let spec = QuadratureSpec::gauss_kronrod(tol);
    let mut total = Complex64::new(0.0, 0.0);
    for seg in &sym.segments {
        total += match &seg.piece {
            Piece::Const(c) => {
                if l == 0 {
                    c * (seg.b - seg.a)
                } else {
                    // ∫_a^b e^{−ilk} dk = (e^{−ila} − e^{−ilb}) / (il)
                    let ea = Complex64::from_polar(1.0, -lf * seg.a);
                    let eb = Complex64::from_polar(1.0, -lf * seg.b);
                    c * (ea - eb) / Complex64::new(0.0, lf)
                }
            }
            Piece::Func(f) => {
                let g = |k: f64| f(k) * Complex64::from_polar(1.0, -lf * k);
                integrate(g, seg.a, seg.b, &spec).map_err(|source| SymbolError::Quadrature { l, source })?.value
            }
        };
    }
    Ok(total / (2.0 * PI))
}

/// Fourier coefficients `φ_l` for `l` in `-(max)..=max`, computed once each.
#[derive(Debug, Clone)]
pub struct CoefficientTable {
    max: i64,
    values: Vec<Complex64>,
}

impl CoefficientTable {
    pub fn new(sym: &SymbolSpec, max: usize) -> Result<Self, SymbolError> {
        let max = max as i64;
        let values = (-max..=max).map(|l| fourier_coefficient(sym, l)).collect::<Result<_, _>>()?;
        Ok(Self { max, values })
    }

    pub fn get(&self, l: i64) -> Complex64 {
        assert!(l.abs() <= self.max, "coefficient index {l} beyond table size {}", self.max);
        self.values[(l + self.max) as usize]
    }
}

/// Hermitian correlation matrix of a block of L sites and the spectrum of 2C − I.
#[derive(Debug, Clone)]
pub struct CorrelationSpectrum {
    pub l: usize,
    /// Row-major L×L entries.
    pub c: Vec<Complex64>,
    /// Eigenvalues of 2C − I in ascending order, clipped to [−1, 1].
    pub nus: Vec<f64>,
}

impl CorrelationSpectrum {
    pub fn from_matrix(l: usize, c: Vec<Complex64>) -> Result<Self, SymbolError> {
        assert_eq!(c.len(), l * l, "matrix must be L×L");
        let mut asymmetry = 0.0f64;
        for i in 0..l {
            for j in 0..i {
                asymmetry = asymmetry.max((c[i * l + j] - c[j * l + i].conj()).norm());
            }
            asymmetry = asymmetry.max(c[i * l + i].im.abs());
        }
        let m = faer::Mat::<faer::c64>::from_fn(l, l, |i, j| {
            // Symmetrize so the solver sees an exactly Hermitian matrix.
            let z = if i == j { Complex64::new(c[i * l + i].re, 0.0) } else { 0.5 * (c[i * l + j] + c[j * l + i].conj()) };
            faer::c64::new(z.re, z.im)
        });
        let eig = m.self_adjoint_eigenvalues(faer::Side::Lower).map_err(|_| SymbolError::Spectrum {
            value: f64::NAN,
            l,
            asymmetry,
        })?;
        let mut nus = Vec::with_capacity(l);
        for lambda in eig {
            let nu = 2.0 * lambda - 1.0;
            if !(nu.abs() <= 1.0 + SPECTRUM_SLACK) {
                return Err(SymbolError::Spectrum { value: nu, l, asymmetry });
            }
            nus.push(nu.clamp(-1.0, 1.0));
        }
        Ok(Self { l, c, nus })
    }

    pub fn entry(&self, m: usize, n: usize) -> Complex64 {
        self.c[m * self.l + n]
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.l).map(|i| self.entry(i, i)).sum()
    }

    /// Pure spectrum without a matrix, for tests and toy states.
    pub fn from_nus(nus: Vec<f64>) -> Self {
        Self { l: nus.len(), c: Vec::new(), nus }
    }
}

/// Toeplitz matrix (T)_{mn} = φ_{m−n} of a symbol.
pub fn toeplitz_matrix(table: &CoefficientTable, l: usize) -> Vec<Complex64> {
    let mut c = vec![Complex64::new(0.0, 0.0); l * l];
    for m in 0..l {
        for n in 0..l {
            c[m * l + n] = table.get(m as i64 - n as i64);
        }
    }
    c
}

pub fn toeplitz_from_symbol(sym: &SymbolSpec, l: usize) -> Result<CorrelationSpectrum, SymbolError> {
    if l == 0 {
        return Err(SymbolError::Domain("L must be at least 1".into()));
    }
    let table = CoefficientTable::new(sym, l - 1)?;
    CorrelationSpectrum::from_matrix(l, toeplitz_matrix(&table, l))
}

/// Correlation matrix of L sites far to the right of the scatterer.
pub fn build_toeplitz_correlation(
    window: FermiWindow,
    scatterer: &ScattererModel,
    l: usize,
) -> Result<CorrelationSpectrum, SymbolError> {
    toeplitz_from_symbol(&SymbolSpec::tau_single(window, scatterer)?, l)
}

/// Hankel coefficients (1/2π)∫ e^{−isk} h(k) dk, memoized by s = m + n.
pub struct HankelCache {
    sym: SymbolSpec,
    values: HashMap<i64, Complex64>,
}

impl HankelCache {
    pub fn new(window: FermiWindow, scatterer: &ScattererModel) -> Result<Self, SymbolError> {
        Ok(Self { sym: SymbolSpec::hankel(window, scatterer)?, values: HashMap::new() })
    }

    pub fn get(&mut self, s: i64) -> Result<Complex64, SymbolError> {
        if let Some(v) = self.values.get(&s) {
            return Ok(*v);
        }
        let v = fourier_coefficient(&self.sym, s)?;
        self.values.insert(s, v);
        Ok(v)
    }
}

/// Toeplitz plus Hankel correlation matrix of sites d..d+L−1.
pub fn build_full_correlation(
    window: FermiWindow,
    scatterer: &ScattererModel,
    l: usize,
    d: i64,
) -> Result<CorrelationSpectrum, SymbolError> {
    let mut hankel = HankelCache::new(window, scatterer)?;
    build_full_correlation_cached(window, scatterer, l, d, &mut hankel)
}

/// As [`build_full_correlation`], reusing Hankel coefficients across calls.
pub fn build_full_correlation_cached(
    window: FermiWindow,
    scatterer: &ScattererModel,
    l: usize,
    d: i64,
    hankel: &mut HankelCache,
) -> Result<CorrelationSpectrum, SymbolError> {
    if d <= 0 {
        return Err(SymbolError::Domain(format!("subsystem must start right of the scatterer (d = {d})")));
    }
    if l == 0 {
        return Err(SymbolError::Domain("L must be at least 1".into()));
    }
    let table = CoefficientTable::new(&SymbolSpec::tau_single(window, scatterer)?, l - 1)?;
    let mut c = toeplitz_matrix(&table, l);
    for m in 0..l {
        for n in 0..l {
            c[m * l + n] += hankel.get(2 * d + (m + n) as i64)?;
        }
    }
    CorrelationSpectrum::from_matrix(l, c)
}

/// Correlation matrix of L sites between a left scatterer and a right one.
pub fn build_between_scatterers(
    window: FermiWindow,
    left: &ScattererModel,
    right: &ScattererModel,
    l: usize,
) -> Result<CorrelationSpectrum, SymbolError> {
    toeplitz_from_symbol(&SymbolSpec::tau_two_scatterer(window, left, right)?, l)
}

/// Transmission-like probabilities 𝒯_I, 𝒯_II for a subsystem between a
/// left scatterer (I) and a right one (II).
#[derive(Debug, Clone)]
pub struct TwoScatterer {
    pub window: FermiWindow,
    pub left: ScattererModel,
    pub right: ScattererModel,
}

impl TwoScatterer {
    pub fn new(window: FermiWindow, left: ScattererModel, right: ScattererModel) -> Result<Self, ScatterError> {
        let pair = Self { window, left, right };
        pair.probabilities(window.k_minus())?;
        pair.probabilities(window.k_plus())?;
        for i in 1..64 {
            pair.probabilities(window.k_minus() + window.dk() * i as f64 / 64.0)?;
        }
        Ok(pair)
    }

    /// (𝒯_I(k), 𝒯_II(k)).
    pub fn probabilities(&self, k: f64) -> Result<(f64, f64), ScatterError> {
        let a = self.left.eval_closed(k)?;
        let b = self.right.eval_closed(k)?;
        let denom = 1.0 - a.r_r2 * b.r_l2;
        if denom <= 0.0 {
            return Err(ScatterError::PerfectlyReflecting { k });
        }
        Ok((a.t_l2 / denom, b.t_r2 / denom))
    }

    pub fn nu_bar_one(&self, k: f64) -> f64 {
        self.probabilities(k).map(|(t1, _)| nu_from(&self.window, t1)).unwrap_or(f64::NAN)
    }

    pub fn nu_bar_two(&self, k: f64) -> f64 {
        self.probabilities(k).map(|(_, t2)| nu_from(&self.window, t2)).unwrap_or(f64::NAN)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn half_filling_coefficients() {
        let sea = SymbolSpec::fermi_sea(PI / 2.0);
        assert!(close(fourier_coefficient(&sea, 0).unwrap(), Complex64::new(0.5, 0.0), 1e-15));
        assert!(fourier_coefficient(&sea, 2).unwrap().norm() < 1e-16);
        assert!(close(fourier_coefficient(&sea, 1).unwrap(), Complex64::new(1.0 / PI, 0.0), 1e-15));
    }

    #[test]
    fn sine_kernel_matrix() {
        let spec = toeplitz_from_symbol(&SymbolSpec::fermi_sea(PI / 2.0), 2).unwrap();
        assert!(close(spec.entry(0, 1), Complex64::new(1.0 / PI, 0.0), 1e-15));
        assert!(close(spec.entry(0, 0), Complex64::new(0.5, 0.0), 1e-15));
    }

    #[test]
    fn filled_and_empty_bands() {
        let full = toeplitz_from_symbol(&SymbolSpec::constant(1.0), 6).unwrap();
        assert!(full.nus.iter().all(|&v| (v - 1.0).abs() < 1e-14));
        let empty = toeplitz_from_symbol(&SymbolSpec::constant(0.0), 6).unwrap();
        assert!(empty.nus.iter().all(|&v| v == -1.0));
    }

    #[test]
    fn transparent_scatterer_has_no_hankel_part() {
        let w = FermiWindow::new(2.0 * PI / 3.0, PI / 2.0).unwrap();
        let free = ScattererModel::transparent();
        let a = build_toeplitz_correlation(w, &free, 12).unwrap();
        let b = build_full_correlation(w, &free, 12, 3).unwrap();
        assert!(a.c.iter().zip(&b.c).all(|(x, y)| (x - y).norm() < 1e-15));
        assert!(build_full_correlation(w, &free, 12, 0).is_err());
    }

    #[test]
    fn jumps_merge_across_the_zone_edge() {
        let whole = SymbolSpec::tau_single(FermiWindow::new(0.0, PI).unwrap(), &ScattererModel::impurity(1.0)).unwrap();
        for j in whole.jumps() {
            assert!((j.left - j.right).norm() < 1e-12, "{j:?}");
        }
        let eq = SymbolSpec::fermi_sea(1.0);
        let ks: Vec<f64> = eq.jumps().iter().map(|j| j.k).collect();
        assert_eq!(ks, vec![-1.0, 1.0]);
    }

    #[test]
    fn right_transparent_pair_matches_single_scatterer() {
        let w = FermiWindow::new(PI / 2.0 + 0.3, PI / 2.0).unwrap();
        let imp = ScattererModel::impurity(1.0);
        let single = SymbolSpec::tau_single(w, &imp).unwrap();
        let pair = SymbolSpec::tau_two_scatterer(w, &imp, &ScattererModel::transparent()).unwrap();
        for l in [0, 1, 7, 40] {
            let (a, b) = (fourier_coefficient(&single, l).unwrap(), fourier_coefficient(&pair, l).unwrap());
            assert!(close(a, b, 1e-13), "l={l}: {a} vs {b}");
        }
    }

    #[test]
    fn both_transparent_pair_is_a_shifted_sea() {
        let w = FermiWindow::new(2.0, 1.5).unwrap();
        let free = ScattererModel::transparent();
        let pair = SymbolSpec::tau_two_scatterer(w, &free, &free).unwrap();
        for k in [-2.5, -1.8, -1.0, 0.0, 1.7, 2.2] {
            let expect = if (-1.5..2.0).contains(&k) { 1.0 } else { 0.0 };
            assert_eq!(pair.eval(k).re, expect, "k={k}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn toeplitz_structure_and_bounds(eps in 0.0..4.0f64, a in 0.05..3.1f64, b in 0.05..3.1f64, l in 2usize..24) {
            let w = FermiWindow::new(a, b).unwrap();
            let tau = SymbolSpec::tau_single(w, &ScattererModel::impurity(eps)).unwrap();
            let spec = toeplitz_from_symbol(&tau, l).unwrap();
            let phi0 = fourier_coefficient(&tau, 0).unwrap();
            for m in 0..l - 1 {
                for n in 0..l - 1 {
                    prop_assert_eq!(spec.entry(m + 1, n + 1), spec.entry(m, n));
                }
                prop_assert_eq!(spec.entry(m, m), phi0);
            }
            prop_assert!(spec.trace().im.abs() < 1e-10);
            prop_assert!(spec.nus.iter().all(|v| v.abs() <= 1.0));
            let flipped = toeplitz_from_symbol(&tau.map_values(|t| Complex64::new(1.0, 0.0) - t), l).unwrap();
            for (x, y) in spec.nus.iter().zip(flipped.nus.iter().rev()) {
                prop_assert!((x + y).abs() < 1e-10);
            }
        }
    }
}
