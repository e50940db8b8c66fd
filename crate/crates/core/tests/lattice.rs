mod common;

use common::rng;
use hlbm::bench::{channel_profile, reference_brinkman_channel};
use hlbm::lattice::*;
use hlbm::regime::{porosity_control, Permeability};
use hlbm::Error;
use proptest::prelude::*;
use rand::Rng;

fn sums(f: &[f64; Q]) -> (f64, [f64; 2], [[f64; 2]; 2]) {
    let mut rho = 0.0;
    let mut m = [0.0; 2];
    let mut pi = [[0.0; 2]; 2];
    for q in 0..Q {
        let c = [VELOCITIES[q][0] as f64, VELOCITIES[q][1] as f64];
        rho += f[q];
        for a in 0..2 {
            m[a] += c[a] * f[q];
            for b in 0..2 {
                pi[a][b] += c[a] * c[b] * f[q];
            }
        }
    }
    (rho, m, pi)
}

#[test]
fn equilibrium_moments_over_random_draws() {
    let mut r = rng(31);
    for _ in 0..100 {
        let rho = r.gen_range(0.5..2.0);
        let u = [r.gen_range(-0.2..0.2), r.gen_range(-0.2..0.2)];
        let varpi = r.gen_range(0.0..=1.0);
        let f = equilibrium(rho, u, varpi).unwrap();
        let (s0, s1, s2) = sums(&f);
        let v = [varpi * u[0], varpi * u[1]];
        assert!((s0 - rho).abs() < 1e-14);
        for a in 0..2 {
            assert!((s1[a] - rho * v[a]).abs() < 1e-14);
            for b in 0..2 {
                let want = rho * v[a] * v[b] + if a == b { rho / 3.0 } else { 0.0 };
                assert!((s2[a][b] - want).abs() < 1e-14);
            }
        }
    }
}

#[test]
fn equilibrium_first_moment_example() {
    let f = equilibrium(1.0, [0.1, 0.0], 0.9).unwrap();
    let (_, m, _) = sums(&f);
    assert!((m[0] - 0.09).abs() < 1e-14 && m[1].abs() < 1e-14);
}

#[test]
fn macroscopic_reads_weights_and_equilibria() {
    let mut sim = Simulation::new(&SimulationConfig::new(2, 2, 0.8)).unwrap();
    sim.set_populations(vec![WEIGHTS; 4]).unwrap();
    let m = sim.macroscopic();
    assert!(m.rho.iter().all(|r| (r - 1.0).abs() < 1e-15));
    assert!(m.u.iter().all(|u| u[0].abs() < 1e-17 && u[1].abs() < 1e-17));
    let f = equilibrium(1.0, [0.05, 0.0], 1.0).unwrap();
    sim.set_populations(vec![f; 4]).unwrap();
    let m = sim.macroscopic();
    assert!(m
        .u
        .iter()
        .all(|u| (u[0] - 0.05).abs() < 1e-15 && u[1].abs() < 1e-15));
}

#[test]
fn damping_equivalence() {
    let mut r = rng(32);
    for _ in 0..1000 {
        let tau = r.gen_range(0.51..2.0);
        let nu = (tau - 0.5) / 3.0;
        let k = nu * tau / r.gen_range(0.001..1.0);
        let varpi = porosity_control(nu, tau, Permeability::Finite(k)).unwrap();
        assert!(((1.0 - varpi) / tau - nu / k).abs() <= 1e-14 * (nu / k).max(1.0));
    }
}

#[test]
fn porous_decay_tracks_exponential() {
    let tau = 0.9;
    let nu = (tau - 0.5) / 3.0;
    for k in [10.0, 20.0, 40.0, 80.0] {
        let u0 = [0.05, -0.02];
        let config = SimulationConfig::new(4, 4, tau)
            .with_permeability(Permeability::Finite(k))
            .with_initial(InitialCondition::Uniform { rho: 1.0, u: u0 });
        let mut sim = Simulation::new(&config).unwrap();
        sim.collide_stream().unwrap();
        let factor = sim.macroscopic().u[0][0] / u0[0];
        let exact = (-nu / k).exp();
        let h = nu / k;
        assert!(
            (factor - exact).abs() <= h * h,
            "K {k}: {factor} vs {exact}"
        );
    }
}

#[test]
fn poiseuille_profile_off_the_magic_relaxation_time() {
    let prof = channel_profile(
        64,
        0.8,
        1.0,
        0.1,
        Permeability::Infinite,
        1.0,
        1e-12,
        10_000_000,
    )
    .unwrap();
    let peak = 1.0 / (8.0 * 0.1);
    let err = prof
        .y
        .iter()
        .zip(&prof.u)
        .map(|(y, u)| {
            (u - reference_brinkman_channel(*y, 1.0, 0.1, Permeability::Infinite, 1.0)).abs()
        })
        .fold(0.0, f64::max);
    assert!(err / peak < 1e-3, "{}", err / peak);
}

fn perturbed_state(nx: usize, ny: usize, seed: u64) -> InitialCondition {
    let mut r = rng(seed);
    let n = nx * ny;
    InitialCondition::Fields {
        rho: (0..n).map(|_| 1.0 + r.gen_range(-0.01..0.01)).collect(),
        u: (0..n)
            .map(|_| [r.gen_range(-0.05..0.05), r.gen_range(-0.05..0.05)])
            .collect(),
        grad_u: None,
    }
}

#[test]
fn mass_is_conserved_on_periodic_domains() {
    let config = SimulationConfig::new(32, 32, 0.7).with_initial(perturbed_state(32, 32, 33));
    let mut sim = Simulation::new(&config).unwrap();
    let m0 = sim.total_mass();
    sim.advance(10_000).unwrap();
    assert!(((sim.total_mass() - m0) / m0).abs() < 1e-12);
}

#[test]
fn mass_is_conserved_in_a_duct_with_obstacle() {
    let (nx, ny) = (24, 16);
    let mut flags = vec![CellFlag::Fluid; nx * ny];
    for y in 6..10 {
        for x in 10..14 {
            flags[y * nx + x] = CellFlag::Solid;
        }
    }
    let mut init = perturbed_state(nx, ny, 34);
    if let InitialCondition::Fields { u, .. } = &mut init {
        for (cell, f) in flags.iter().enumerate() {
            if *f == CellFlag::Solid {
                u[cell] = [0.0, 0.0];
            }
        }
    }
    let config = SimulationConfig::new(nx, ny, 0.8)
        .with_boundaries(Boundaries::CHANNEL)
        .with_flags(flags)
        .with_initial(init);
    let mut sim = Simulation::new(&config).unwrap();
    let m0 = sim.total_mass();
    sim.advance(10_000).unwrap();
    assert!(((sim.total_mass() - m0) / m0).abs() < 1e-12);
}

fn forced_porous_config() -> SimulationConfig {
    SimulationConfig::new(16, 12, 0.75)
        .with_boundaries(Boundaries::CHANNEL)
        .with_permeability(Permeability::Finite(50.0))
        .with_force([1e-5, 2e-6])
        .with_initial(perturbed_state(16, 12, 35))
}

#[test]
fn serial_reruns_are_bitwise_identical() {
    let run = || {
        let mut sim = Simulation::new(&forced_porous_config())
            .unwrap()
            .with_execution(Execution::Serial);
        sim.advance(500).unwrap();
        sim.populations().to_vec()
    };
    let a = run();
    let b = run();
    assert!(a
        .iter()
        .flatten()
        .zip(b.iter().flatten())
        .all(|(x, y)| x.to_bits() == y.to_bits()));
}

#[test]
fn parallel_fields_match_serial_bitwise() {
    let mut serial = Simulation::new(&forced_porous_config())
        .unwrap()
        .with_execution(Execution::Serial);
    let mut pooled = Simulation::new(&forced_porous_config())
        .unwrap()
        .with_execution(Execution::with_threads(3));
    serial.advance(300).unwrap();
    pooled.advance(300).unwrap();
    assert_eq!(serial.macroscopic(), pooled.macroscopic());
}

#[test]
fn brinkman_channel_reaches_small_residual_with_uniform_pressure() {
    let config = SimulationConfig::new(1, 32, 0.9)
        .with_boundaries(Boundaries::CHANNEL)
        .with_permeability(Permeability::Finite(20.0))
        .with_force([1e-5, 0.0]);
    let mut sim = Simulation::new(&config).unwrap();
    let st = sim.run_to_steady(1_000_000, 50, 1e-10 * 1e-5).unwrap();
    assert!(st.residual < 1e-15);
    let m = sim.macroscopic();
    let (lo, hi) =
        m.p.iter()
            .fold((f64::MAX, f64::MIN), |(a, b), p| (a.min(*p), b.max(*p)));
    assert!(hi - lo < 1e-12, "pressure spread {}", hi - lo);
}

#[test]
fn wide_channel_pressure_is_uniform_along_flow() {
    let config = SimulationConfig::new(8, 16, 0.9)
        .with_boundaries(Boundaries::CHANNEL)
        .with_permeability(Permeability::Finite(20.0))
        .with_force([1e-5, 0.0]);
    let mut sim = Simulation::new(&config).unwrap();
    sim.run_to_steady(1_000_000, 50, 1e-14).unwrap();
    let m = sim.macroscopic();
    for y in 0..16 {
        let row: Vec<f64> = (0..8).map(|x| m.p[m.index(x, y)]).collect();
        assert!(row.iter().all(|p| (p - row[0]).abs() < 1e-15));
    }
}

#[test]
fn runaway_force_trips_the_guard() {
    let config = SimulationConfig::new(4, 4, 0.8).with_force([0.05, 0.0]);
    let mut sim = Simulation::new(&config).unwrap();
    match sim.advance(100) {
        Err(Error::Instability { step, .. }) => assert!(step > 0 && step <= 10),
        other => panic!("expected instability, got {other:?}"),
    }
}

#[test]
fn run_echoes_initial_state_and_records_cadence() {
    let config = SimulationConfig::new(6, 5, 0.8)
        .with_initial(perturbed_state(6, 5, 36))
        .with_steps(10, 4);
    let snaps = run(&config).unwrap();
    let steps: Vec<u64> = snaps.iter().map(|s| s.step).collect();
    assert_eq!(steps, vec![0, 4, 8, 10]);
    let fresh = Simulation::new(&config).unwrap().macroscopic();
    assert_eq!(snaps[0].fields, fresh);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn uniform_flow_is_a_fixed_point(rho in 0.5f64..2.0, ux in -0.2f64..0.2, uy in -0.2f64..0.2, tau in 0.55f64..2.0) {
        let config = SimulationConfig::new(5, 4, tau)
            .with_initial(InitialCondition::Uniform { rho, u: [ux, uy] });
        let mut sim = Simulation::new(&config).unwrap();
        let before = sim.populations().to_vec();
        sim.advance(20).unwrap();
        for (a, b) in before.iter().flatten().zip(sim.populations().iter().flatten()) {
            prop_assert!((a - b).abs() < 1e-14 * rho);
        }
    }

    #[test]
    fn uniform_force_adds_exactly_one_increment(gx in -1e-3f64..1e-3, gy in -1e-3f64..1e-3, tau in 0.55f64..2.0) {
        let config = SimulationConfig::new(3, 3, tau).with_force([gx, gy]);
        let mut sim = Simulation::new(&config).unwrap();
        sim.collide_stream().unwrap();
        let u = sim.macroscopic().u[4];
        prop_assert!((u[0] - gx).abs() < 1e-16 && (u[1] - gy).abs() < 1e-16);
    }
}
