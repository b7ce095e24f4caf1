//! Acceptance suite: one test per primary criterion. Each prints a single
//! `PASS`/`FAIL` line with the measured quantities before asserting.

use std::f64::consts::PI;
use std::io::Write;

use nalgebra::DMatrix;
use nvlab::evolver::{amplification_eigenvalues, max_stable_dt, stability_condition_holds};
use nvlab::harness::{run_perturbation, PerturbConfig};
use nvlab::instability::{
    band_summary, characteristic_roots, curve_distance, det_mismatch, det_mismatch_k0, discriminant,
    perturbation_shape, small_gamma_roots, trace_closed_curve, DetMethod, MatchConfig, ShapeOptions,
    TraceOptions,
};
use nvlab::planar::{kappa, kdv_soliton, planar_from_kdv, PlanarParams};
use nvlab::{evolve, RealField, SchemeParams, TorusGrid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Written straight to stderr so the line shows without `--nocapture`.
fn report(id: u32, title: &str, pass: bool, detail: &str) -> bool {
    let line = format!("ACCEPTANCE {id} {}: {title} | {detail}\n", if pass { "PASS" } else { "FAIL" });
    let _ = std::io::stderr().write_all(line.as_bytes());
    pass
}

fn sech(x: f64) -> f64 {
    1.0 / x.cosh()
}

#[test]
fn criterion_1_kernel_at_the_known_solution() {
    let d = det_mismatch(1.0, 0.0, &MatchConfig::default(), DetMethod::Bidirectional)
        .unwrap()
        .residual();
    let s = perturbation_shape(1.0, 0.0, &ShapeOptions::default()).unwrap();
    let mut worst: f64 = 0.0;
    for (i, &x) in s.xs.iter().enumerate() {
        worst = worst
            .max((s.f[i] - sech(x).powi(3)).abs())
            .max((s.g[i] + sech(x) * x.tanh().powi(2)).abs())
            .max((s.h_imag[i] + sech(x) * x.tanh()).abs());
    }
    let pass = d < 1e-6 && worst < 1e-6;
    assert!(report(
        1,
        "normalized |D(1,0)| < 1e-6 and profiles match sech^3, -sech tanh^2 to 1e-6",
        pass,
        &format!("|D| = {d:.3e}, max profile error = {worst:.3e} over {} samples", s.xs.len()),
    ));
}

#[test]
fn criterion_2_neutral_mode_at_the_origin() {
    let s = perturbation_shape(0.0, 0.0, &ShapeOptions::default()).unwrap();
    let peak = 2.0 / (3.0 * 3f64.sqrt());
    let mut worst: f64 = 0.0;
    let mut f_eq_g = true;
    let mut h_zero = true;
    for (i, &x) in s.xs.iter().enumerate() {
        let expect = sech(x).powi(2) * x.tanh() / peak;
        worst = worst.max((s.f[i].abs() - expect.abs()).abs());
        f_eq_g &= s.f[i] == s.g[i];
        h_zero &= s.h_imag[i] == 0.0;
    }
    let cfg = MatchConfig::default();
    let values: Vec<(f64, f64)> = (0..200)
        .map(|i| {
            let g = 0.5 * i as f64 / 199.0;
            (g, det_mismatch_k0(g, &cfg, DetMethod::Bidirectional).unwrap().normalized)
        })
        .collect();
    let at_zero = values[0].1.abs();
    let rest = &values[1..];
    let min_rest = rest.iter().map(|v| v.1.abs()).fold(f64::INFINITY, f64::min);
    let sign_definite = rest.iter().all(|v| v.1.signum() == rest[0].1.signum());
    let pass = worst < 1e-6
        && f_eq_g
        && h_zero
        && s.kernel_residual < 1e-6
        && s.residual < 1e-6
        && at_zero < 1e-6
        && min_rest > 1e-6
        && sign_definite;
    assert!(report(
        2,
        "k = 0 shape is sech^2 tanh with f = g, h = 0; D0 vanishes on [0, 0.5] only at gamma = 0",
        pass,
        &format!(
            "profile error {worst:.3e}, kernel residual {:.3e}, |D0(0)| = {at_zero:.3e}, min |D0| for gamma > 0 = {min_rest:.3e}, sign-definite = {sign_definite}",
            s.kernel_residual
        ),
    ));
}

#[test]
fn criterion_3_instability_band() {
    let trace = trace_closed_curve(&TraceOptions::default()).unwrap();
    let upper = &trace.points[..trace.upper_len];
    let band = band_summary(upper).unwrap();
    let dist = curve_distance(upper, 0.504, 0.296);
    // supplementary: where the traced arc actually sits at k = 0.504
    let gamma_at = upper
        .windows(2)
        .find(|w| (w[0].k - 0.504) * (w[1].k - 0.504) <= 0.0)
        .map(|w| w[0].gamma + (0.504 - w[0].k) / (w[1].k - w[0].k) * (w[1].gamma - w[0].gamma))
        .unwrap_or(f64::NAN);
    let pass = (band.k_min - 0.363).abs() <= 0.01 && band.k_max == 1.0 && dist < 0.01;
    assert!(report(
        3,
        "gamma > 0 arc spans (0.363 +/- 0.01, 1] and passes within 0.01 of (0.504, 0.296)",
        pass,
        &format!(
            "k_min = {:.4}, k_max = {:.4}, closed = {}, distance to (0.504, 0.296) = {dist:.4}; traced gamma(0.504) = {gamma_at:.5}",
            band.k_min, band.k_max, trace.closed
        ),
    ));
}

#[test]
fn criterion_4_direct_growth_confirmation() {
    // the stated point, with the on-curve gate lifted so the run happens
    let cfg = PerturbConfig {
        k: 0.504,
        gamma: 0.296,
        epsilon: 0.01,
        c: 1.0,
        check_on_curve: false,
        ..PerturbConfig::default()
    };
    let o = run_perturbation(&cfg).unwrap();
    let fit = o.fit.unwrap();
    // supplementary: the same experiment on the traced curve
    let on = run_perturbation(&PerturbConfig {
        gamma: 0.37398,
        check_on_curve: true,
        ..cfg
    })
    .unwrap();
    let on_fit = on.fit.unwrap();
    let pass = (0.266..=0.326).contains(&fit.gamma) && o.correlation > 0.95;
    assert!(report(
        4,
        "perturbed soliton at (0.504, 0.296): gamma_est in [0.266, 0.326], shape correlation > 0.95",
        pass,
        &format!(
            "gamma_est = {:.5} (R^2 {:.6}), correlation = {:.4}, |D| = {:.2e}; on-curve (0.504, 0.37398): gamma_est = {:.5}, correlation = {:.4}",
            fit.gamma, fit.r_squared, o.correlation, o.shape.residual, on_fit.gamma, on.correlation
        ),
    ));
}

/// Peak of the y-averaged profile of `-u`, by parabolic interpolation.
fn trough_position(u: &RealField) -> f64 {
    let g = u.grid();
    let prof = u.y_average();
    let n = prof.len();
    let i = (0..n).min_by(|a, b| prof[*a].total_cmp(&prof[*b])).unwrap();
    let (a, b, c) = (prof[(i + n - 1) % n], prof[i], prof[(i + 1) % n]);
    let off = 0.5 * (a - c) / (a - 2.0 * b + c);
    g.x(i) + off * g.dx()
}

fn soliton_run(t_final: f64) -> (TorusGrid, RealField, RealField, f64) {
    let grid = TorusGrid::new(12.0 * PI, 2.0 * PI, 512, 8).unwrap();
    let sol = kdv_soliton(1.0, 10.0).unwrap();
    let u0 = sol.sample(&grid, 0.0);
    let params = SchemeParams::new(1e-3).with_reference(std::sync::Arc::new(move |g, t| sol.sample(g, t)));
    let out = evolve(&u0, t_final, params, 5000).unwrap();
    let (last, _) = out.into_iter().last().unwrap();
    (grid, u0, last.u, last.t)
}

#[test]
fn criterion_5_soliton_fidelity() {
    let (grid, u0, u, t) = soliton_run(5.0);
    let sol = kdv_soliton(1.0, 10.0).unwrap();
    let exact = sol.sample(&grid, t);
    let peak_err = (trough_position(&u) - (10.0 + t)).abs();
    let drift = (u.l2_norm() - u0.l2_norm()).abs() / u0.l2_norm();
    let shape = u.sub(&exact).unwrap().max_abs();
    let pass = peak_err < 2.0 * grid.dx() && drift < 1e-6 && shape < 1e-3;
    assert!(report(
        5,
        "c = 1 soliton to t = 5: peak error < 2 dx, relative L2 drift < 1e-6, Linf shape error < 1e-3",
        pass,
        &format!(
            "peak error = {peak_err:.3e} (2 dx = {:.3e}), L2 drift = {drift:.3e}, Linf error = {shape:.3e}",
            2.0 * grid.dx()
        ),
    ));
}

#[test]
fn criterion_6_scheme_stability_law() {
    let mut rng = ChaCha8Rng::seed_from_u64(20240611);
    let mut held = 0usize;
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let theta = rng.gen_range(0.0..=1.0);
        let lambda = rng.gen_range(-100.0..100.0);
        let gamma = rng.gen_range(-100.0..100.0);
        let dt = 10f64.powf(rng.gen_range(-4.0..0.0));
        if stability_condition_holds(theta, lambda, gamma, dt) {
            held += 1;
            let (z1, z2) = amplification_eigenvalues(theta, lambda, gamma, dt);
            worst = worst.max(z1.norm()).max(z2.norm());
        }
    }
    let sweep_ok = held >= 1000 && worst <= 1.0 + 1e-12;

    // lattice modes at the step bound, theta = 1/2
    let mut lattice_worst: f64 = 0.0;
    for &dx in &[0.2, 0.1, 0.05] {
        for &alpha in &[-10.0, -2.0, -0.5, 0.5, 2.0, 10.0] {
            let n = 64usize;
            let grid = TorusGrid::new(dx * n as f64, dx * n as f64, n, n).unwrap();
            let dt = max_stable_dt(alpha, dx);
            for i in 0..n {
                for j in 0..n {
                    let (xi, eta) = (grid.xi(i), grid.eta(j));
                    let r2 = xi * xi + eta * eta;
                    if r2 == 0.0 || grid.is_unpaired(i, j) {
                        continue;
                    }
                    let lambda = xi * xi * xi - 3.0 * xi * eta * eta;
                    let gamma = lambda * 3.0 * alpha / r2;
                    let (z1, z2) = amplification_eigenvalues(0.5, lambda, gamma, dt);
                    lattice_worst = lattice_worst.max(z1.norm()).max(z2.norm());
                }
            }
        }
    }
    let lattice_ok = lattice_worst <= 1.0 + 1e-12;

    let (z1, z2) = amplification_eigenvalues(0.0, 10.0, 0.0, 1.0);
    let counter = z1.norm().max(z2.norm());
    let counter_ok = counter > 1.0 && !stability_condition_holds(0.0, 10.0, 0.0, 1.0);

    assert!(report(
        6,
        "condition => max|z| <= 1 + 1e-12 on 1e4 samples; theta = 1/2 lattice at the step bound stable; theta = 0 counterexample",
        sweep_ok && lattice_ok && counter_ok,
        &format!(
            "{held} samples met the condition, max|z| - 1 = {:.2e}; lattice max|z| - 1 = {:.2e}; theta = 0, lambda = 10, dt = 1: max|z| = {counter:.4}",
            worst - 1.0,
            lattice_worst - 1.0
        ),
    ));
}

fn companion_roots(k: f64, gamma: f64) -> Vec<f64> {
    // λ³ + 0·λ² + (3k²−4)λ + 4γ
    let m = DMatrix::from_row_slice(
        3,
        3,
        &[0.0, -(3.0 * k * k - 4.0), -4.0 * gamma, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0],
    );
    let ev = m.complex_eigenvalues();
    let mut r: Vec<f64> = ev.iter().map(|z| z.re).collect();
    r.sort_by(|a, b| a.total_cmp(b));
    r
}

#[test]
fn criterion_7_cubic_root_oracle() {
    let mut worst: f64 = 0.0;
    let mut cells = 0;
    for i in 0..50 {
        for j in 0..50 {
            let k = i as f64 / 49.0;
            let gamma = -0.5 + j as f64 / 49.0;
            if discriminant(k, gamma) >= 0.0 {
                continue;
            }
            cells += 1;
            let r = characteristic_roots(k, gamma).unwrap();
            let mut mine = vec![r.p1, r.p2, r.p3];
            mine.sort_by(|a, b| a.total_cmp(b));
            for (a, b) in mine.iter().zip(companion_roots(k, gamma)) {
                worst = worst.max((a - b).abs());
            }
        }
    }
    // expansion error divided by γ² stays bounded as γ shrinks
    let mut ratios = Vec::new();
    for &k in &[0.0, 0.3, 0.7, 1.0] {
        for &g in &[1e-2, 5e-3, 2.5e-3, 1.25e-3] {
            let r = characteristic_roots(k, g).unwrap();
            let (a, b, c) = small_gamma_roots(k, g);
            let e = (r.p1 - a).abs().max((r.p2 - b).abs()).max((r.p3 - c).abs());
            ratios.push(e / (g * g));
        }
    }
    let max_ratio = ratios.iter().cloned().fold(0.0, f64::max);
    let pass = cells > 0 && worst < 1e-10 && max_ratio < 10.0;
    assert!(report(
        7,
        "cubic roots match a companion-matrix oracle to 1e-10; small-gamma expansions are O(gamma^2)",
        pass,
        &format!("{cells} grid cells, max root difference {worst:.3e}; max |expansion error|/gamma^2 = {max_ratio:.3}"),
    ));
}

#[test]
fn criterion_8_planar_reduction() {
    let mut sym: f64 = 0.0;
    for i in 0..3600 {
        let a = 2.0 * PI * i as f64 / 3600.0;
        sym = sym.max((kappa(a + 2.0 * PI / 3.0) - kappa(a)).abs());
    }
    let sol = kdv_soliton(1.0, 0.0).unwrap();
    let mut worst: f64 = 0.0;
    for j in 0..8 {
        let alpha = 2.0 * PI * j as f64 / 8.0 + 0.1;
        let p = planar_from_kdv(sol.standard_kdv(), PlanarParams::along(alpha)).unwrap();
        worst = worst.max(p.kdv_form_residual(0.5, -20.0, 40.0, 512, 1e-3));
    }
    let (grid, u0, u, t) = soliton_run(5.0);
    let travelled = (trough_position(&u) - trough_position(&u0)).rem_euclid(grid.wx());
    let speed = travelled / t;
    let pass = sym < 1e-12 && worst < 1e-8 && (speed - 1.0).abs() < 0.02;
    assert!(report(
        8,
        "kappa threefold symmetric; planar residual < 1e-8 at 8 angles; measured speed at alpha = 0 within 2% of c",
        pass,
        &format!("symmetry defect {sym:.2e}, max residual {worst:.3e}, measured speed {speed:.6}"),
    ));
}
