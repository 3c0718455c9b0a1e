//! Brute-force reference: the 2^L-dimensional Fock-space density matrix of a
//! Gaussian state, assembled charge sector by charge sector with nalgebra.
//!
//! With C U = U Λ and mode operators a_k† = Σ_i U_ik c_i†, the state is
//! ρ = Π_k [λ_k a_k† a_k + (1 − λ_k) a_k a_k†]. In the sector with Q
//! particles its matrix elements between occupation configurations S, S'
//! are Σ_K w_K det U[S, K] det U[S', K]^*, with w_K the product of λ over K
//! and of 1 − λ over the complement.

#![allow(dead_code)]

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

pub struct BruteForce {
    pub l: usize,
    /// Eigenvalues of the density matrix in each charge sector Q = 0..=L.
    pub sectors: Vec<Vec<f64>>,
    /// ⟨c_i† c_j⟩ recomputed from the Fock-space state, row-major.
    pub correlations: Vec<Complex64>,
}

fn subsets(l: usize, q: usize) -> Vec<Vec<usize>> {
    (0u32..(1 << l))
        .filter(|m| m.count_ones() as usize == q)
        .map(|m| (0..l).filter(|i| m >> i & 1 == 1).collect())
        .collect()
}

fn det(mut a: DMatrix<Complex64>) -> Complex64 {
    let n = a.nrows();
    if n == 0 {
        return Complex64::new(1.0, 0.0);
    }
    let mut d = Complex64::new(1.0, 0.0);
    for col in 0..n {
        let pivot = (col..n).max_by(|&x, &y| a[(x, col)].norm().partial_cmp(&a[(y, col)].norm()).unwrap()).unwrap();
        if a[(pivot, col)].norm() == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        if pivot != col {
            a.swap_rows(pivot, col);
            d = -d;
        }
        let p = a[(col, col)];
        d *= p;
        for r in col + 1..n {
            let f = a[(r, col)] / p;
            for c in col..n {
                let v = a[(col, c)];
                a[(r, c)] -= f * v;
            }
        }
    }
    d
}

/// JW-signed action of c_i† c_j on configuration bitmask `s`.
fn hop(s: u32, i: usize, j: usize) -> Option<(u32, f64)> {
    if s >> j & 1 == 0 {
        return None;
    }
    let after = s & !(1 << j);
    if i != j && after >> i & 1 == 1 {
        return None;
    }
    let below = |m: u32, k: usize| (m & ((1u32 << k) - 1)).count_ones();
    let sign = if (below(s, j) + below(after, i)) % 2 == 0 { 1.0 } else { -1.0 };
    Some((after | (1 << i), sign))
}

impl BruteForce {
    /// `c` is the row-major L×L correlation matrix ⟨c_i† c_j⟩ (up to transposition).
    pub fn new(l: usize, c: &[Complex64]) -> Self {
        assert!(l <= 14, "2^L brute force is for small L");
        let m = DMatrix::from_fn(l, l, |i, j| 0.5 * (c[i * l + j] + c[j * l + i].conj()));
        let eig = SymmetricEigen::new(m);
        let lambda: Vec<f64> = eig.eigenvalues.iter().map(|x| x.clamp(0.0, 1.0)).collect();
        let u = eig.eigenvectors;

        let mut sectors = Vec::with_capacity(l + 1);
        let mut blocks = Vec::with_capacity(l + 1);
        for q in 0..=l {
            let configs = subsets(l, q);
            let dim = configs.len();
            let weights: Vec<f64> = configs
                .iter()
                .map(|k| (0..l).map(|i| if k.contains(&i) { lambda[i] } else { 1.0 - lambda[i] }).product())
                .collect();
            // amp[(S, K)] = det U[S, K]
            let amp = DMatrix::from_fn(dim, dim, |si, ki| {
                let (s, k) = (&configs[si], &configs[ki]);
                det(DMatrix::from_fn(q, q, |a, b| u[(s[a], k[b])]))
            });
            let scaled = DMatrix::from_fn(dim, dim, |si, ki| amp[(si, ki)] * weights[ki]);
            let rho = &scaled * amp.adjoint();
            let spectrum = SymmetricEigen::new(rho.clone()).eigenvalues.iter().map(|p| p.max(0.0)).collect();
            sectors.push(spectrum);
            let masks: Vec<u32> = configs.iter().map(|s| s.iter().map(|&i| 1u32 << i).sum()).collect();
            blocks.push((masks, rho));
        }

        let mut correlations = vec![Complex64::new(0.0, 0.0); l * l];
        for i in 0..l {
            for j in 0..l {
                let mut acc = Complex64::new(0.0, 0.0);
                for (masks, rho) in &blocks {
                    for (a, &s) in masks.iter().enumerate() {
                        if let Some((t, sign)) = hop(s, i, j) {
                            let b = masks.binary_search(&t).expect("hopping conserves charge");
                            acc += rho[(a, b)] * sign;
                        }
                    }
                }
                correlations[i * l + j] = acc;
            }
        }
        Self { l, sectors, correlations }
    }

    pub fn renyi_resolved(&self, n: f64, q: usize) -> f64 {
        self.sectors[q].iter().filter(|&&p| p > 0.0).map(|p| p.powf(n)).sum()
    }

    pub fn vnee_resolved(&self, q: usize) -> f64 {
        -self.sectors[q].iter().filter(|&&p| p > 0.0).map(|p| p * p.ln()).sum::<f64>()
    }

    pub fn vnee(&self) -> f64 {
        (0..=self.l).map(|q| self.vnee_resolved(q)).sum()
    }

    /// Tr ρ^n e^{iαQ}.
    pub fn gen_fun(&self, n: f64, alpha: f64) -> Complex64 {
        (0..=self.l).map(|q| Complex64::from_polar(1.0, alpha * q as f64) * self.renyi_resolved(n, q)).sum()
    }
}
