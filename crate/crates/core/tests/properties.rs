use std::f64::consts::PI;

use num_complex::Complex64;
use nvlab::evolver::{amplification_eigenvalues, stability_condition_holds};
use nvlab::grid::{derivative, solve_auxiliary};
use nvlab::harness::RunConfig;
use nvlab::instability::{characteristic_roots, growth_rate_fit, max_gamma};
use nvlab::planar::{kappa, planar_speed};
use nvlab::{snapshot, AuxMean, Fft2, NvSystem, RealField, SpectralField, TorusGrid};
use proptest::prelude::*;

fn grid_strategy() -> impl Strategy<Value = TorusGrid> {
    (3usize..7, 3usize..6, 0.5f64..20.0, 0.5f64..20.0)
        .prop_map(|(px, py, wx, wy)| TorusGrid::new(wx, wy, 1 << px, 1 << py).unwrap())
}

fn field_strategy() -> impl Strategy<Value = RealField> {
    grid_strategy().prop_flat_map(|g| {
        prop::collection::vec(-10.0f64..10.0, g.len())
            .prop_map(move |data| RealField::from_vec(g, data).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn crank_nicolson_keeps_every_linear_mode_modulus(
        dt in 1e-4f64..1.0,
        seed in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 64),
    ) {
        let g = TorusGrid::new(2.0 * PI, 3.0, 8, 8).unwrap();
        let sys = NvSystem::new(&g, false, AuxMean::FollowU);
        let zero = SpectralField::zeros(g);
        let prev = SpectralField::from_modes(g, |i, j| {
            let (a, b) = seed[g.index(i, j)];
            Complex64::new(a, b)
        });
        let next = sys.step_with_forcing(&zero, &prev, &zero, 0.5, dt);
        for (a, b) in next.as_slice().iter().zip(prev.as_slice()) {
            prop_assert!((a.norm() - b.norm()).abs() <= 1e-12 * (1.0 + b.norm()));
        }
    }

    #[test]
    fn amplification_product_has_unit_modulus(
        theta in 0.0f64..1.0,
        lambda in -1e3f64..1e3,
        gamma in -50.0f64..50.0,
        dt in 1e-5f64..1.0,
    ) {
        let (z1, z2) = amplification_eigenvalues(theta, lambda, gamma, dt);
        prop_assert!(((z1 * z2).norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn half_implicit_linear_part_is_neutral(lambda in -1e4f64..1e4, dt in 1e-5f64..1.0) {
        let (z1, z2) = amplification_eigenvalues(0.5, lambda, 0.0, dt);
        prop_assert!((z1.norm() - 1.0).abs() < 1e-12);
        prop_assert!((z2.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn stability_condition_bounds_both_eigenvalues(
        theta in 0.0f64..1.0,
        lambda in -1e3f64..1e3,
        gamma in -50.0f64..50.0,
        dt in 1e-5f64..1.0,
    ) {
        let (z1, z2) = amplification_eigenvalues(theta, lambda, gamma, dt);
        let stable = z1.norm().max(z2.norm()) <= 1.0 + 1e-9;
        if stability_condition_holds(theta, lambda, gamma, dt) {
            prop_assert!(stable, "|z| = {} {}", z1.norm(), z2.norm());
        }
    }

    #[test]
    fn asymptotic_roots_satisfy_vieta(k in 0.0f64..1.15, frac in 0.0f64..0.999) {
        let gamma = frac * max_gamma(k);
        let r = characteristic_roots(k, gamma).unwrap();
        let [p1, p2, p3] = r.as_array();
        let scale = 1.0 + gamma.abs();
        prop_assert!((p1 + p2 + p3).abs() < 1e-12 * scale);
        prop_assert!((p1 * p2 + p2 * p3 + p3 * p1 - (3.0 * k * k - 4.0)).abs() < 1e-11 * scale);
        prop_assert!((p1 * p2 * p3 + 4.0 * gamma).abs() < 1e-11 * scale);
        prop_assert!(p3 <= p1 && p1 <= p2);
        prop_assert!(p1.abs() <= p2.abs() && p1.abs() <= p3.abs());
    }

    #[test]
    fn speed_factor_has_threefold_symmetry(alpha in -10.0f64..10.0, c in 0.01f64..10.0) {
        let k = kappa(alpha);
        prop_assert!((k - kappa(alpha + 2.0 * PI / 3.0)).abs() < 1e-12);
        prop_assert!((k - kappa(-alpha)).abs() < 1e-12);
        prop_assert!((planar_speed(c, alpha) - c * k).abs() < 1e-12 * c);
        prop_assert!(k.abs() <= 1.0);
    }

    #[test]
    fn snapshots_round_trip_bit_exactly(field in field_strategy(), t in -1e6f64..1e6) {
        let (back, t_back) = snapshot::decode(&snapshot::encode(&field, t)).unwrap();
        prop_assert_eq!(t_back.to_bits(), t.to_bits());
        prop_assert_eq!(back.grid(), field.grid());
        prop_assert_eq!(back.as_slice(), field.as_slice());
    }

    #[test]
    fn fft_round_trips(field in field_strategy()) {
        let fft = Fft2::new(field.grid());
        let back = fft.inverse(&fft.forward(&field).unwrap()).unwrap();
        let err = back.sub(&field).unwrap().max_abs();
        prop_assert!(err < 1e-12 * (1.0 + field.max_abs()));
    }

    #[test]
    fn auxiliary_fields_solve_the_dbar_system(field in field_strategy()) {
        let fft = Fft2::new(field.grid());
        let u = fft.forward(&field).unwrap();
        let (v, w) = solve_auxiliary(&u, AuxMean::FollowU);
        // v_x − w_y = u_x and v_y + w_x = −u_y, Nyquist lines excluded
        let g = *field.grid();
        let (vx, wy, ux) = (derivative(&v, 1, 0), derivative(&w, 0, 1), derivative(&u, 1, 0));
        let (vy, wx, uy) = (derivative(&v, 0, 1), derivative(&w, 1, 0), derivative(&u, 0, 1));
        let scale = 1.0 + u.max_abs() * (g.nx() as f64 / g.wx() + g.ny() as f64 / g.wy()) * 2.0 * PI;
        for j in 0..g.ny() {
            for i in 0..g.nx() {
                if g.is_nyquist_x(i) || g.is_nyquist_y(j) {
                    continue;
                }
                let n = g.index(i, j);
                let (a, b) = (vx.as_slice()[n] - wy.as_slice()[n], ux.as_slice()[n]);
                prop_assert!((a - b).norm() < 1e-12 * scale);
                let (a, b) = (vy.as_slice()[n] + wx.as_slice()[n], -uy.as_slice()[n]);
                prop_assert!((a - b).norm() < 1e-12 * scale);
                // the map is an isometry mode by mode
                let (uu, vv, ww) = (u.as_slice()[n], v.as_slice()[n], w.as_slice()[n]);
                prop_assert!((vv.norm_sqr() + ww.norm_sqr() - uu.norm_sqr()).abs() < 1e-12 * (1.0 + uu.norm_sqr()));
            }
        }
        prop_assert_eq!(v.as_slice()[0], u.as_slice()[0]);
        prop_assert_eq!(w.as_slice()[0], Complex64::new(0.0, 0.0));
    }

    #[test]
    fn growth_fit_recovers_exponentials(gamma in -2.0f64..2.0, a in 1e-6f64..1e3, n in 5usize..200) {
        let pts: Vec<(f64, f64)> = (0..n).map(|i| {
            let t = 5.0 * i as f64 / (n - 1) as f64;
            (t, a * (gamma * t).exp())
        }).collect();
        let fit = growth_rate_fit(&pts, None).unwrap();
        prop_assert!((fit.gamma - gamma).abs() < 1e-9);
        prop_assert!((fit.intercept - a.ln()).abs() < 1e-8);
    }

    #[test]
    fn config_survives_toml_round_trip(
        dt in 1e-6f64..1e-1,
        k in 0.0f64..1.0,
        nk in 1usize..500,
        workers in 0usize..64,
    ) {
        let mut cfg = RunConfig::default();
        cfg.evolve.dt = dt;
        cfg.perturb.k = k;
        cfg.scan.nk = nk;
        cfg.workers = workers;
        let back = RunConfig::from_toml_str(&cfg.to_toml()).unwrap();
        prop_assert_eq!(back, cfg);
    }
}
