mod common;

use std::f64::consts::PI;

use common::rng;
use hlbm::bench::*;
use hlbm::regime::Permeability;
use rand::Rng;

/// Fourth-order central second derivative.
fn d2(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (-f(x + 2.0 * h) + 16.0 * f(x + h) - 30.0 * f(x) + 16.0 * f(x - h) - f(x - 2.0 * h))
        / (12.0 * h * h)
}

/// Fourth-order central first derivative.
fn d1(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (-f(x + 2.0 * h) + 8.0 * f(x + h) - 8.0 * f(x - h) + f(x - 2.0 * h)) / (12.0 * h)
}

#[test]
fn brinkman_reference_solves_the_channel_equation() {
    let (h, nu, f) = (1.0, 0.1, 1.0);
    for k in [1e-2, 1e-1, 1.0, 100.0] {
        let u = |y: f64| reference_brinkman_channel(y, h, nu, Permeability::Finite(k), f);
        assert!(u(0.0).abs() < 1e-14 && u(h).abs() < 1e-14);
        for i in 1..20 {
            let y = i as f64 / 20.0;
            let residual = nu * d2(u, y, 1e-3) - nu / k * u(y) + f;
            assert!(residual.abs() < 1e-8 * f, "K {k}, y {y}: {residual}");
        }
    }
}

#[test]
fn brinkman_reference_approaches_the_parabola() {
    let (h, nu, f) = (1.0, 0.1, 1.0);
    let k = 1e6 * h * h;
    let peak = f * h * h / (8.0 * nu);
    for i in 0..=20 {
        let y = i as f64 / 20.0;
        let parabola = f / (2.0 * nu) * y * (h - y);
        let brinkman = reference_brinkman_channel(y, h, nu, Permeability::Finite(k), f);
        assert!((brinkman - parabola).abs() < 1e-4 * peak);
        assert!(
            (reference_brinkman_channel(y, h, nu, Permeability::Infinite, f) - parabola).abs()
                < 1e-15
        );
    }
}

#[test]
fn brinkman_reference_survives_tiny_permeability() {
    let u = reference_brinkman_channel(0.5, 1.0, 0.1, Permeability::Finite(1e-8), 1.0);
    assert!(u.is_finite() && (u - 1e-7).abs() < 1e-20);
}

#[test]
fn taylor_green_reference_solves_navier_stokes() {
    let (nu, u0, k) = (0.1, 1.0, 2.0 * PI);
    let mut r = rng(41);
    let e = 1e-4;
    for _ in 0..50 {
        let (x, y, t) = (r.gen::<f64>(), r.gen::<f64>(), r.gen_range(0.0..0.2));
        let vel = |x: f64, y: f64, t: f64| reference_taylor_green(x, y, t, nu, u0, k).0;
        let pres = |x: f64, y: f64| reference_taylor_green(x, y, t, nu, u0, k).1;
        let u = vel(x, y, t);
        let px = d1(|s| pres(s, y), x, e);
        let py = d1(|s| pres(x, s), y, e);
        for a in 0..2 {
            let dt = d1(|s| vel(x, y, s)[a], t, e);
            let dx = d1(|s| vel(s, y, t)[a], x, e);
            let dy = d1(|s| vel(x, s, t)[a], y, e);
            let lap = d2(|s| vel(s, y, t)[a], x, e) + d2(|s| vel(x, s, t)[a], y, e);
            let grad_p = if a == 0 { px } else { py };
            let residual = dt + u[0] * dx + u[1] * dy + grad_p - nu * lap;
            assert!(residual.abs() < 1e-6 * u0 * u0 * k, "{residual}");
        }
        let div = d1(|s| vel(s, y, t)[0], x, e) + d1(|s| vel(x, s, t)[1], y, e);
        assert!(div.abs() < 1e-8);
    }
}

#[test]
fn darcy_references_solve_the_damped_ode() {
    let (nu, k, f) = (0.1, 1e-4, [1.0, -0.5]);
    let steady = reference_darcy_uniform(nu, k, f);
    assert_eq!(steady, [1e-3, -5e-4]);
    for i in 0..=10 {
        let t = i as f64 * 0.3 * k / nu;
        for a in 0..2 {
            let u = |s: f64| reference_darcy_transient(nu, k, f, s)[a];
            let residual = d1(u, t + 1e-6, 1e-7) - f[a] + nu / k * u(t + 1e-6);
            assert!(residual.abs() < 1e-6, "{residual}");
        }
    }
    assert_eq!(reference_darcy_transient(nu, k, f, 0.0), [0.0, 0.0]);
}

#[test]
fn eoc_examples() {
    let v = eoc(&[(1.0, 4.0), (0.5, 1.0), (0.25, 0.25)]).unwrap();
    assert!(v.iter().all(|p| (p - 2.0).abs() < 1e-14));
    let v = eoc(&[(0.1, 1e-2), (0.05, 5e-3)]).unwrap();
    assert!((v[0] - 1.0).abs() < 1e-14);
    assert!(eoc(&[(1.0, 1.0)]).is_err());
    assert!(eoc(&[(1.0, 1.0), (0.5, 0.0)]).is_err());
    assert!(eoc(&[(1.0, 1.0), (0.3, 0.5)]).is_err());
}

#[test]
fn boundary_layer_width_of_the_reference_is_three_root_k() {
    for k in [1e-4, 1e-3, 1e-2] {
        let n = 20_000;
        let y: Vec<f64> = (0..n / 2).map(|j| (j as f64 + 0.5) / n as f64).collect();
        let u: Vec<f64> = y
            .iter()
            .map(|y| reference_brinkman_channel(*y, 1.0, 0.1, Permeability::Finite(k), 1.0))
            .collect();
        let w = boundary_layer_width(&y, &u, k / 0.1).unwrap();
        assert!((w / (3.0 * k.sqrt()) - 1.0).abs() < 0.01, "K {k}: {w}");
    }
}

#[test]
fn poiseuille_ladder_is_exact() {
    let report = run_benchmark(&BenchmarkCase::poiseuille(&[8, 16]).unwrap()).unwrap();
    assert!(report.rungs.iter().all(|r| r.u_max < ROUND_OFF));
    assert!(report.passed(), "{}", report.summary());
}

#[test]
fn brinkman_ladder_converges_at_second_order() {
    let report = run_benchmark(&BenchmarkCase::brinkman_channel(&[8, 16, 32]).unwrap()).unwrap();
    let orders = report.u_eoc.clone().unwrap();
    assert!(orders.iter().all(|p| *p > 1.7), "{orders:?}");
    assert!(report.monotone);
}

#[test]
fn taylor_green_coarse_ladder() {
    let report = run_benchmark(&BenchmarkCase::taylor_green(&[16, 32]).unwrap()).unwrap();
    let order = report.u_eoc.clone().unwrap()[0];
    assert!((order - 2.0).abs() < 0.4, "{order}");
    assert!((report.decay_ratio.unwrap() - 1.0).abs() < 0.02);
}

#[test]
fn report_csv_has_one_row_per_rung() {
    let report = run_benchmark(&BenchmarkCase::poiseuille(&[8, 16, 32]).unwrap()).unwrap();
    let csv = report.to_csv();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 4);
    assert!(lines[0].starts_with("case,nx,ny,h,steps"));
    assert!(lines[1].starts_with("poiseuille,1,8,"));
}

#[test]
fn malformed_ladders_are_rejected() {
    assert!(BenchmarkCase::taylor_green(&[16, 24]).is_err());
    assert!(BenchmarkCase::brinkman_channel(&[]).is_err());
    assert!(BenchmarkCase::by_kind(CaseKind::DarcyUniform, &[8, 16]).is_err());
    assert!(CaseKind::parse("couette").is_err());
    for kind in [
        CaseKind::TaylorGreen,
        CaseKind::BrinkmanChannel,
        CaseKind::DarcyUniform,
        CaseKind::Poiseuille,
    ] {
        assert_eq!(CaseKind::parse(kind.name()).unwrap(), kind);
    }
}

#[test]
fn sweep_resolution_resolves_root_k() {
    assert_eq!(sweep_resolution(1e-2), 128);
    assert_eq!(sweep_resolution(1e-4), 1024);
    assert_eq!(sweep_resolution(1.0), 64);
}
