//! Exact-path quantities against the 2^L Fock-space density matrix.

mod common;

use common::BruteForce;
use ness_entanglement::exact::{gen_fun_exact, resolved_moments, resolved_vnee, vnee_exact};
use ness_entanglement::scatter::{FermiWindow, ScattererModel};
use ness_entanglement::symbols::{build_full_correlation, CorrelationSpectrum};
use num_complex::Complex64;

fn case(k_fl: f64, k_fr: f64, eps: f64, l: usize, d: i64) -> (CorrelationSpectrum, BruteForce) {
    let spec = build_full_correlation(FermiWindow::new(k_fl, k_fr).unwrap(), &ScattererModel::impurity(eps), l, d).unwrap();
    let brute = BruteForce::new(l, &spec.c);
    (spec, brute)
}

#[test]
fn fock_state_reproduces_correlations() {
    let (spec, brute) = case(2.1, 1.3, 0.9, 6, 2);
    for i in 0..6 {
        for j in 0..6 {
            let got = brute.correlations[i * 6 + j];
            assert!((got - spec.entry(j, i)).norm() < 1e-12, "({i}, {j}): {got} vs {}", spec.entry(j, i));
        }
    }
}

#[test]
fn resolved_quantities_match() {
    for &(k_fl, k_fr, eps, l, d) in &[(1.9, 1.2, 1.0, 7, 1), (0.8, 1.6, 2.5, 9, 3)] {
        let (spec, brute) = case(k_fl, k_fr, eps, l, d);
        assert!((vnee_exact(&spec) - brute.vnee()).abs() < 1e-10);
        let s_q = resolved_vnee(&spec).unwrap();
        for n in [0.5, 1.0, 2.0, 3.0] {
            let z_q = resolved_moments(&spec, n).unwrap();
            // p^n with n < 1 lifts roundoff-level brute-force eigenvalues (~1e-17 each) to ~1e-9.
            let tol = if n < 1.0 { 1e-6 } else { 1e-10 };
            for q in 0..=l {
                assert!((z_q.get(q as i64) - brute.renyi_resolved(n, q)).norm() < tol, "n={n} Q={q}: {} vs {}", z_q.get(q as i64), brute.renyi_resolved(n, q));
            }
            for alpha in [0.0, 0.9, -2.2, 3.1] {
                let exact = gen_fun_exact(&spec, n, alpha).z();
                assert!((exact - brute.gen_fun(n, alpha)).norm() < tol, "n={n} α={alpha}");
            }
        }
        for q in 0..=l {
            let want = Complex64::new(brute.vnee_resolved(q), 0.0);
            assert!((s_q.get(q as i64) - want).norm() < 1e-10, "S({q})");
        }
    }
}
