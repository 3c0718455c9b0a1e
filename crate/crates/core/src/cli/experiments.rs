//! The experiments behind `run`. Each returns a [`Report`] whose rows come
//! out in the order of the parameter lists, whatever order the worker pool
//! finishes them in.
//!
//! Asymptotic results for a single scatterer are compared with the
//! Toeplitz part of the correlation matrix, i.e. a block far from the
//! scatterer; the Hankel part enters only in `friedel`.

use std::f64::consts::PI;

use anyhow::{Context, Result};
use num_complex::Complex64;
use rayon::prelude::*;

use super::config::{Experiment, NamedModel, Plan, Quantity};
use super::fit::{fit_line, fit_oscillation, fit_power_law, Oscillation};
use super::output::{Report, Table, Value};
use crate::asymptotics::{
    analytic_resolved_moments, analytic_resolved_vnee, equipartition_slope, gaussian_resolution, rounded_mean_charge,
    sigma_gaussian, two_scatterer_vnee, vnee_coefficients, AlphaOrder, SingleScatterer, Validity,
};
use crate::exact::{gen_fun_exact, post_projection_vnee, resolved_moments, resolved_vnee, vnee_exact, ChargeTable};
use crate::scatter::FermiWindow;
use crate::symbols::{build_between_scatterers, build_full_correlation_cached, build_toeplitz_correlation, HankelCache};

pub fn run_experiment(plan: &Plan) -> Result<Report> {
    match plan.experiment {
        Experiment::VneeScaling => vnee_scaling(plan),
        Experiment::CoefficientSweep => coefficient_sweep(plan),
        Experiment::ResolvedProfile => resolved_profile(plan),
        Experiment::Equipartition => equipartition(plan),
        Experiment::GenfunDeviation => genfun_deviation(plan),
        Experiment::Friedel => friedel(plan),
        Experiment::TwoScatterer => two_scatterer(plan),
    }
}

const WINDOW_COLUMNS: [&str; 4] = ["model", "k_fr", "k_fl", "dk"];

fn window_values(model: &str, w: &FermiWindow) -> Vec<Value> {
    vec![model.into(), w.k_fr().into(), w.k_fl().into(), (w.k_fl() - w.k_fr()).into()]
}

fn columns(extra: &[&'static str]) -> Vec<&'static str> {
    WINDOW_COLUMNS.iter().chain(extra).copied().collect()
}

fn row(model: &str, w: &FermiWindow, extra: Vec<Value>) -> Vec<Value> {
    let mut r = window_values(model, w);
    r.extend(extra);
    r
}

/// `ok`, or the raised validity flags joined by `|`.
fn flag_text(f: &Validity) -> String {
    let names = [
        (f.divergent, "divergent"),
        (f.const_unavailable, "const_unavailable"),
        (f.const_approx, "const_approx"),
        (f.equilibrium, "equilibrium"),
    ];
    let raised: Vec<&str> = names.iter().filter(|(on, _)| *on).map(|(_, n)| *n).collect();
    if raised.is_empty() {
        "ok".into()
    } else {
        raised.join("|")
    }
}

/// Absolute difference of two logarithms, ignoring multiples of 2πi.
fn log_distance(a: Complex64, b: Complex64) -> f64 {
    let d = a - b;
    let im = d.im - 2.0 * PI * (d.im / (2.0 * PI)).round();
    Complex64::new(d.re, im).norm()
}

fn grid<A: Sync, B: Sync>(a: &[A], b: &[B]) -> Vec<(usize, usize)> {
    (0..a.len()).flat_map(|i| (0..b.len()).map(move |j| (i, j))).collect()
}

fn vnee_scaling(plan: &Plan) -> Result<Report> {
    let m = &plan.scatterer;
    let coeffs = plan
        .windows
        .par_iter()
        .map(|w| vnee_coefficients(*w, &m.model).with_context(|| format!("vNEE coefficients for {w:?}")))
        .collect::<Result<Vec<_>>>()?;
    let points = grid(&plan.windows, &plan.lengths);
    let numeric = points
        .par_iter()
        .map(|&(i, j)| Ok(vnee_exact(&build_toeplitz_correlation(plan.windows[i], &m.model, plan.lengths[j])?)))
        .collect::<Result<Vec<f64>>>()?;
    let mut t = Table::new(
        "",
        &columns(&["L", "analytic", "numeric", "abs_dev", "c_lin", "c_log", "c_const", "analytic_flags", "divergent"]),
    );
    for (&(i, j), s_num) in points.iter().zip(numeric) {
        let (w, c, l) = (&plan.windows[i], &coeffs[i], plan.lengths[j]);
        let s_ana = c.entropy(l as f64);
        t.push(row(
            &m.label,
            w,
            vec![
                l.into(),
                s_ana.into(),
                s_num.into(),
                (s_ana - s_num).abs().into(),
                c.c_lin.into(),
                c.c_log.into(),
                c.c_const.into(),
                flag_text(&c.flags).into(),
                c.flags.divergent.into(),
            ],
        ));
    }
    Ok(Report { tables: vec![t], summary: Vec::new() })
}

fn coefficient_sweep(plan: &Plan) -> Result<Report> {
    let m = &plan.scatterer;
    if plan.quantity == Quantity::Vnee {
        let coeffs = plan
            .windows
            .par_iter()
            .map(|w| Ok(vnee_coefficients(*w, &m.model)?))
            .collect::<Result<Vec<_>>>()?;
        let mut t = Table::new("", &columns(&["c_lin", "c_log", "c_const", "analytic_flags", "divergent"]));
        for (w, c) in plan.windows.iter().zip(coeffs) {
            t.push(row(
                &m.label,
                w,
                vec![c.c_lin.into(), c.c_log.into(), c.c_const.into(), flag_text(&c.flags).into(), c.flags.divergent.into()],
            ));
        }
        return Ok(Report { tables: vec![t], summary: Vec::new() });
    }
    let singles = plan
        .windows
        .iter()
        .map(|w| Ok(SingleScatterer::new(*w, &m.model)?))
        .collect::<Result<Vec<_>>>()?;
    let points: Vec<(usize, usize, usize)> = (0..plan.windows.len())
        .flat_map(|i| grid(&plan.orders, &plan.alphas).into_iter().map(move |(j, k)| (i, j, k)))
        .collect();
    let terms = points
        .par_iter()
        .map(|&(i, j, k)| Ok(singles[i].terms(plan.orders[j], plan.alphas[k], AlphaOrder::Value)?))
        .collect::<Result<Vec<_>>>()?;
    let mut t = Table::new(
        "",
        &columns(&[
            "n", "alpha", "lin_re", "lin_im", "log_re", "log_im", "const_re", "const_im", "analytic_flags", "divergent",
        ]),
    );
    for (&(i, j, k), c) in points.iter().zip(terms) {
        t.push(row(
            &m.label,
            &plan.windows[i],
            vec![
                plan.orders[j].into(),
                plan.alphas[k].into(),
                c.lin.re.into(),
                c.lin.im.into(),
                c.log.re.into(),
                c.log.im.into(),
                c.const_.re.into(),
                c.const_.im.into(),
                flag_text(&c.flags).into(),
                c.flags.divergent.into(),
            ],
        ));
    }
    Ok(Report { tables: vec![t], summary: Vec::new() })
}

/// Q values within `width` of the integer charge nearest `mean`, clipped to 0..=L.
fn charges_near(mean: f64, width: i64, l: usize) -> Vec<i64> {
    let q0 = rounded_mean_charge(mean);
    ((q0 - width).max(0)..=(q0 + width).min(l as i64)).collect()
}

fn resolved_profile(plan: &Plan) -> Result<Report> {
    let m = &plan.scatterer;
    let points = grid(&plan.windows, &plan.lengths);
    let blocks = points
        .par_iter()
        .map(|&(i, j)| -> Result<Vec<Vec<Value>>> {
            let (w, l) = (plan.windows[i], plan.lengths[j]);
            let spec = build_toeplitz_correlation(w, &m.model, l)?;
            let single = SingleScatterer::new(w, &m.model)?;
            let mut out = Vec::new();
            // Each profile is sampled around the mean of its own distribution:
            // ⟨Q⟩_n = Σ Q Z_n(Q) / Z_n, which for n = 1 is tr C.
            let mut emit = |quantity: &str, n: f64, ana: &ChargeTable, num: &ChargeTable, patched: usize| {
                let mean = match quantity {
                    "S" => spec.trace().re,
                    _ => num.q_values().map(|q| q as f64 * num.get(q).re).sum::<f64>() / num.total().re,
                };
                for q in charges_near(mean, plan.q_width, l) {
                    let (a, b) = (ana.get(q).re, num.get(q).re);
                    out.push(row(
                        &m.label,
                        &w,
                        vec![
                            l.into(),
                            quantity.into(),
                            n.into(),
                            q.into(),
                            a.into(),
                            b.into(),
                            (a - b).abs().into(),
                            ((a - b) / b).abs().into(),
                            patched.into(),
                        ],
                    ));
                }
            };
            for &n in &plan.orders {
                let ana = analytic_resolved_moments(&single, n, l)?;
                emit("Z_n", n, &ana.table, &resolved_moments(&spec, n)?, ana.patched);
            }
            let ana = analytic_resolved_vnee(&single, l)?;
            emit("S", 1.0, &ana.table, &resolved_vnee(&spec)?, ana.patched);
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut t = Table::new(
        "",
        &columns(&["L", "quantity", "n", "Q", "analytic", "numeric", "abs_dev", "rel_dev", "patched_alpha_samples"]),
    );
    blocks.into_iter().flatten().for_each(|r| t.push(r));
    Ok(Report { tables: vec![t], summary: Vec::new() })
}

fn equipartition(plan: &Plan) -> Result<Report> {
    let m = &plan.scatterer;
    let per_window = plan
        .windows
        .par_iter()
        .map(|w| -> Result<(f64, f64, f64)> {
            let nu0 = SingleScatterer::new(*w, &m.model)?.profile.nu0;
            let at_nu0 = ((1.0 - nu0) / (1.0 + nu0)).ln();
            Ok((at_nu0, equipartition_slope(*w, &m.model)?, nu0))
        })
        .collect::<Result<Vec<_>>>()?;
    let points = grid(&plan.windows, &plan.lengths);
    let blocks = points
        .par_iter()
        .map(|&(i, j)| -> Result<Vec<Vec<Value>>> {
            let (w, l) = (plan.windows[i], plan.lengths[j]);
            let lf = l as f64;
            let (at_nu0, averaged, nu0) = per_window[i];
            let spec = build_toeplitz_correlation(w, &m.model, l)?;
            let z1 = resolved_moments(&spec, 1.0)?;
            let s = resolved_vnee(&spec)?;
            let mean = spec.trace().re;
            let q0 = rounded_mean_charge(mean);
            let gauss = gaussian_resolution(w, &m.model, 1.0, lf)?;
            let s_total = vnee_coefficients(w, &m.model)?.entropy(lf);
            let sigma_num = |q: i64| post_projection_vnee(&z1, &s, q).unwrap_or(f64::NAN);
            let sigma_ana = |q: i64| sigma_gaussian(&gauss, s_total, q);
            Ok(charges_near(mean, plan.q_width, l)
                .into_iter()
                .map(|q| {
                    let (a, b) = (sigma_ana(q), sigma_num(q));
                    row(
                        &m.label,
                        &w,
                        vec![
                            l.into(),
                            q.into(),
                            (q == q0).into(),
                            (q as f64 - mean).into(),
                            a.into(),
                            b.into(),
                            (a - b).abs().into(),
                            (sigma_ana(q + 1) - a).into(),
                            (sigma_num(q + 1) - b).into(),
                            nu0.into(),
                            at_nu0.into(),
                            averaged.into(),
                        ],
                    )
                })
                .collect())
        })
        .collect::<Result<Vec<_>>>()?;
    let mut t = Table::new(
        "",
        &columns(&[
            "L",
            "Q",
            "is_rounded_mean",
            "q_minus_mean",
            "analytic",
            "numeric",
            "abs_dev",
            "step_analytic",
            "step_numeric",
            "nu0",
            "slope_nu0",
            "slope_window_average",
        ]),
    );
    blocks.into_iter().flatten().for_each(|r| t.push(r));
    Ok(Report { tables: vec![t], summary: Vec::new() })
}

fn genfun_deviation(plan: &Plan) -> Result<Report> {
    let m = &plan.scatterer;
    let singles = plan
        .windows
        .iter()
        .map(|w| Ok(SingleScatterer::new(*w, &m.model)?))
        .collect::<Result<Vec<_>>>()?;
    let ana_points: Vec<(usize, usize, usize)> = (0..plan.windows.len())
        .flat_map(|i| grid(&plan.orders, &plan.alphas).into_iter().map(move |(j, k)| (i, j, k)))
        .collect();
    let terms = ana_points
        .par_iter()
        .map(|&(i, j, k)| Ok(singles[i].terms(plan.orders[j], plan.alphas[k], AlphaOrder::Value)?))
        .collect::<Result<Vec<_>>>()?;
    let spectra = grid(&plan.windows, &plan.lengths)
        .par_iter()
        .map(|&(i, j)| Ok(build_toeplitz_correlation(plan.windows[i], &m.model, plan.lengths[j])?))
        .collect::<Result<Vec<_>>>()?;
    let mut t = Table::new(
        "",
        &columns(&[
            "L",
            "n",
            "alpha",
            "analytic_re",
            "analytic_im",
            "numeric_re",
            "numeric_im",
            "abs_dev",
            "analytic_flags",
            "divergent",
        ]),
    );
    let per_window = plan.orders.len() * plan.alphas.len();
    for (i, w) in plan.windows.iter().enumerate() {
        for (j, &l) in plan.lengths.iter().enumerate() {
            let spec = &spectra[i * plan.lengths.len() + j];
            for (jn, &n) in plan.orders.iter().enumerate() {
                for (k, &alpha) in plan.alphas.iter().enumerate() {
                    let c = &terms[i * per_window + jn * plan.alphas.len() + k];
                    let ana = c.ln_z(l as f64);
                    let num = gen_fun_exact(spec, n, alpha).ln_z;
                    t.push(row(
                        &m.label,
                        w,
                        vec![
                            l.into(),
                            n.into(),
                            alpha.into(),
                            ana.re.into(),
                            ana.im.into(),
                            num.re.into(),
                            num.im.into(),
                            log_distance(ana, num).into(),
                            flag_text(&c.flags).into(),
                            c.flags.divergent.into(),
                        ],
                    ));
                }
            }
        }
    }
    Ok(Report { tables: vec![t], summary: Vec::new() })
}

/// Start distances of `count` runs of `len` consecutive distances,
/// log-spaced between `lo` and `hi − len + 1`, without overlaps.
fn block_starts(lo: i64, hi: i64, count: usize, len: usize) -> Vec<i64> {
    let last = (hi - len as i64 + 1).max(lo);
    let (a, b) = ((lo as f64).ln(), (last as f64).ln());
    let mut starts: Vec<i64> = Vec::new();
    for i in 0..count {
        let x = if count == 1 { a } else { a + (b - a) * i as f64 / (count - 1) as f64 };
        let s = x.exp().round() as i64;
        let s = match starts.last() {
            Some(&prev) => s.max(prev + len as i64),
            None => s,
        };
        if s + len as i64 - 1 <= hi.max(lo + len as i64 - 1) {
            starts.push(s);
        }
    }
    starts
}

fn add_fit(t: &mut Table, ctx: &[Value], quantity: &str, value: f64, err: f64, reference: f64) {
    let mut r = ctx.to_vec();
    r.extend([quantity.into(), value.into(), err.into(), reference.into()]);
    t.push(r);
}

fn friedel(plan: &Plan) -> Result<Report> {
    let m = &plan.scatterer;
    let lo = *plan.distances.iter().min().expect("validated");
    let hi = *plan.distances.iter().max().expect("validated");
    let starts = block_starts(lo, hi, plan.blocks, plan.block_len);
    let mut samples = Table::new("", &columns(&["L", "d", "s_full", "s_bulk", "delta"]));
    let mut envelope = Table::new("envelope", &columns(&["L", "d_center", "r_mid", "average", "amplitude", "wavenumber", "rms_residual"]));
    let mut fits = Table::new("fit", &columns(&["L", "quantity", "value", "stderr", "reference"]));
    let mut summary = Vec::new();
    let single_case = plan.windows.len() * plan.lengths.len() == 1;
    for w in &plan.windows {
        for &l in &plan.lengths {
            let bulk = vnee_exact(&build_toeplitz_correlation(*w, &m.model, l)?);
            let runs = starts
                .par_iter()
                .map(|&s| -> Result<(Vec<(i64, f64)>, Oscillation)> {
                    let mut cache = HankelCache::new(*w, &m.model)?;
                    let mut run = Vec::with_capacity(plan.block_len);
                    for d in s..s + plan.block_len as i64 {
                        let spec = build_full_correlation_cached(*w, &m.model, l, d, &mut cache)?;
                        run.push((d, vnee_exact(&spec)));
                    }
                    let ds: Vec<f64> = run.iter().map(|p| p.0 as f64).collect();
                    let ys: Vec<f64> = run.iter().map(|p| p.1 - bulk).collect();
                    Ok((run, fit_oscillation(&ds, &ys)))
                })
                .collect::<Result<Vec<_>>>()?;
            let ctx = [window_values(&m.label, w), vec![l.into()]].concat();
            // Envelopes are fitted against the distance from the scatterer
            // to the middle of the block, r = d + (L − 1)/2. It agrees with d
            // for d ≫ L but removes most of the finite-L curvature.
            let mid = 0.5 * (l as f64 - 1.0);
            let mut centers = Vec::new();
            let mut amps = Vec::new();
            let mut avgs = Vec::new();
            let mut omegas = Vec::new();
            for (run, osc) in &runs {
                for &(d, s) in run {
                    samples.push(row(&m.label, w, vec![l.into(), d.into(), s.into(), bulk.into(), (s - bulk).into()]));
                }
                envelope.push(row(
                    &m.label,
                    w,
                    vec![
                        l.into(),
                        osc.center.into(),
                        (osc.center + mid).into(),
                        osc.average.into(),
                        osc.amplitude.into(),
                        osc.wavenumber.into(),
                        osc.rms_residual.into(),
                    ],
                ));
                centers.push(osc.center + mid);
                amps.push(osc.amplitude);
                avgs.push(osc.average);
                omegas.push(osc.wavenumber);
            }
            let amp_fit = fit_power_law(&centers, &amps);
            let avg_fit = fit_power_law(&centers, &avgs);
            let nb = omegas.len() as f64;
            let omega = omegas.iter().sum::<f64>() / nb;
            let omega_err = (omegas.iter().map(|o| (o - omega).powi(2)).sum::<f64>() / (nb * (nb - 1.0).max(1.0))).sqrt();
            // Wavenumbers above π alias onto 2π − ω on the integer lattice.
            let two_kf = 2.0 * w.k_fr();
            let expected = if two_kf > PI { 2.0 * PI - two_kf } else { two_kf };
            let (pa, pa_err) = amp_fit.map_or((f64::NAN, f64::NAN), |f| (f.slope, f.slope_err));
            let (pv, pv_err) = avg_fit.map_or((f64::NAN, f64::NAN), |f| (f.slope, f.slope_err));
            add_fit(&mut fits, &ctx, "amplitude_exponent", pa, pa_err, -1.0);
            add_fit(&mut fits, &ctx, "average_exponent", pv, pv_err, -2.0);
            add_fit(&mut fits, &ctx, "wavenumber", omega, omega_err, expected);
            if single_case {
                summary = vec![
                    ("amplitude_exponent".into(), pa.into()),
                    ("amplitude_exponent_stderr".into(), pa_err.into()),
                    ("average_exponent".into(), pv.into()),
                    ("average_exponent_stderr".into(), pv_err.into()),
                    ("wavenumber".into(), omega.into()),
                    ("wavenumber_stderr".into(), omega_err.into()),
                    ("wavenumber_expected".into(), expected.into()),
                ];
            }
        }
    }
    Ok(Report { tables: vec![samples, envelope, fits], summary })
}

fn two_scatterer(plan: &Plan) -> Result<Report> {
    let (left, right): (&NamedModel, &NamedModel) = (&plan.scatterer, plan.right.as_ref().expect("validated"));
    let label = format!("{} | {}", left.label, right.label);
    let coeffs = plan
        .windows
        .par_iter()
        .map(|w| Ok(two_scatterer_vnee(*w, &left.model, &right.model)?))
        .collect::<Result<Vec<_>>>()?;
    let points = grid(&plan.windows, &plan.lengths);
    let numeric = points
        .par_iter()
        .map(|&(i, j)| Ok(vnee_exact(&build_between_scatterers(plan.windows[i], &left.model, &right.model, plan.lengths[j])?)))
        .collect::<Result<Vec<f64>>>()?;
    let mut t = Table::new(
        "",
        &columns(&["L", "analytic_lin_log", "numeric", "abs_dev", "c_lin", "c_log", "analytic_flags", "divergent"]),
    );
    let mut fits = Table::new("fit", &columns(&["quantity", "value", "stderr", "reference"]));
    let mut summary = Vec::new();
    for (i, w) in plan.windows.iter().enumerate() {
        let c = &coeffs[i];
        let mut ls = Vec::new();
        let mut ss = Vec::new();
        for (j, &l) in plan.lengths.iter().enumerate() {
            let s_num = numeric[i * plan.lengths.len() + j];
            let s_ana = c.c_lin * l as f64 + c.c_log * (l as f64).ln();
            t.push(row(
                &label,
                w,
                vec![
                    l.into(),
                    s_ana.into(),
                    s_num.into(),
                    (s_ana - s_num).abs().into(),
                    c.c_lin.into(),
                    c.c_log.into(),
                    "const_unavailable".into(),
                    false.into(),
                ],
            ));
            ls.push(l as f64);
            ss.push(s_num);
        }
        let f = fit_line(&ls, &ss);
        let (slope, err) = f.map_or((f64::NAN, f64::NAN), |f| (f.slope, f.slope_err));
        let rel = ((slope - c.c_lin) / c.c_lin).abs();
        let ctx = window_values(&label, w);
        add_fit(&mut fits, &ctx, "linear_slope", slope, err, c.c_lin);
        if plan.windows.len() == 1 {
            summary = vec![
                ("linear_slope".into(), slope.into()),
                ("linear_slope_stderr".into(), err.into()),
                ("c_lin".into(), c.c_lin.into()),
                ("relative_deviation".into(), rel.into()),
            ];
        }
    }
    Ok(Report { tables: vec![t, fits], summary })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_distance_ignores_branch() {
        let a = Complex64::new(1.0, 0.5);
        let b = Complex64::new(1.25, 0.5 + 4.0 * PI);
        assert!((log_distance(a, b) - 0.25).abs() < 1e-12);
    }

    #[test]
    fn block_starts_are_disjoint_and_in_range() {
        let s = block_starts(100, 2000, 12, 16);
        assert_eq!(s.len(), 12);
        assert_eq!(s[0], 100);
        assert!(s.windows(2).all(|p| p[1] >= p[0] + 16));
        assert!(*s.last().unwrap() + 15 <= 2000);
    }

    #[test]
    fn charges_clip_to_range() {
        assert_eq!(charges_near(1.2, 3, 10), vec![0, 1, 2, 3, 4]);
        assert_eq!(charges_near(9.6, 2, 10), vec![8, 9, 10]);
    }

    #[test]
    fn flags_are_spelled_out() {
        assert_eq!(flag_text(&Validity::default()), "ok");
        let f = Validity { divergent: true, const_approx: true, ..Validity::default() };
        assert_eq!(flag_text(&f), "divergent|const_approx");
    }
}
