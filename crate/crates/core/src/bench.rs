//! Analytic reference solutions and the convergence harness built on them.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::time::Instant;

use crate::cellperm::magic_tau;
use crate::error::{domain, Error, Result};
use crate::lattice::{Boundaries, InitialCondition, MacroFields, Simulation, SimulationConfig};
use crate::regime::Permeability;

/// Errors below this (relative) are indistinguishable from round-off, and an
/// order of convergence measured from them is meaningless.
pub const ROUND_OFF: f64 = 1e-11;

/// Taylor–Green vortex on a periodic square: `(u, p)` at `(x, y, t)`.
pub fn reference_taylor_green(x: f64, y: f64, t: f64, nu: f64, u0: f64, k: f64) -> ([f64; 2], f64) {
    let decay = (-2.0 * nu * k * k * t).exp();
    let u = [
        -u0 * (k * x).cos() * (k * y).sin() * decay,
        u0 * (k * x).sin() * (k * y).cos() * decay,
    ];
    let p = -(u0 * u0 / 4.0) * ((2.0 * k * x).cos() + (2.0 * k * y).cos()) * decay * decay;
    (u, p)
}

/// Steady force-driven flow between no-slip walls at `y = 0` and `y = h`.
/// An infinite permeability gives the Poiseuille parabola.
pub fn reference_brinkman_channel(y: f64, h: f64, nu: f64, k: Permeability, f: f64) -> f64 {
    match k {
        Permeability::Infinite => f * y * (h - y) / (2.0 * nu),
        Permeability::Finite(k) => {
            let s = k.sqrt();
            let m = h / (2.0 * s);
            let a = ((y - h / 2.0) / s).abs();
            // 1 - cosh(a)/cosh(m), free of cancellation for thick layers and
            // of overflow for thin ones
            let gap = if m < 20.0 {
                2.0 * (0.5 * (m + a)).sinh() * (0.5 * (m - a)).sinh() / m.cosh()
            } else {
                1.0 - (a - m).exp() * (1.0 + (-2.0 * a).exp()) / (1.0 + (-2.0 * m).exp())
            };
            f * k / nu * gap
        }
    }
}

/// Steady velocity under uniform forcing on a periodic domain.
pub fn reference_darcy_uniform(nu: f64, k: f64, f: [f64; 2]) -> [f64; 2] {
    [k / nu * f[0], k / nu * f[1]]
}

/// Spin-up from rest towards [`reference_darcy_uniform`].
pub fn reference_darcy_transient(nu: f64, k: f64, f: [f64; 2], t: f64) -> [f64; 2] {
    let g = 1.0 - (-nu * t / k).exp();
    let u = reference_darcy_uniform(nu, k, f);
    [u[0] * g, u[1] * g]
}

/// Observed orders `log2(e_i / e_{i+1})` for a ladder halving `h` each rung.
pub fn eoc(errors: &[(f64, f64)]) -> Result<Vec<f64>> {
    if errors.len() < 2 {
        return domain("at least two resolutions are needed");
    }
    for &(h, e) in errors {
        if !(e > 0.0) || !e.is_finite() {
            return domain(format!("error {e} at h = {h} is not positive"));
        }
    }
    errors
        .windows(2)
        .map(|w| {
            let ratio = w[0].0 / w[1].0;
            if (ratio - 2.0).abs() > 1e-9 {
                return domain(format!("h ratio {ratio} is not 2"));
            }
            Ok((w[0].1 / w[1].1).log2())
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaseKind {
    TaylorGreen,
    BrinkmanChannel,
    DarcyUniform,
    Poiseuille,
}

impl CaseKind {
    pub fn name(&self) -> &'static str {
        match self {
            CaseKind::TaylorGreen => "taylor_green",
            CaseKind::BrinkmanChannel => "brinkman_channel",
            CaseKind::DarcyUniform => "darcy_uniform",
            CaseKind::Poiseuille => "poiseuille",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "taylor_green" => Ok(CaseKind::TaylorGreen),
            "brinkman_channel" => Ok(CaseKind::BrinkmanChannel),
            "darcy_uniform" => Ok(CaseKind::DarcyUniform),
            "poiseuille" => Ok(CaseKind::Poiseuille),
            other => domain(format!(
                "unknown case '{other}' (expected taylor_green, brinkman_channel, darcy_uniform or poiseuille)"
            )),
        }
    }
}

/// One grid of a resolution ladder. For steady cases `steps` is the cap.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rung {
    pub nx: usize,
    pub ny: usize,
    pub steps: u64,
}

/// Accepted range for an observed order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Band {
    AtLeast(f64),
    Within(f64, f64),
}

impl Band {
    fn contains(&self, x: f64) -> bool {
        match *self {
            Band::AtLeast(lo) => x >= lo,
            Band::Within(c, w) => (x - c).abs() <= w,
        }
    }
}

impl std::fmt::Display for Band {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Band::AtLeast(lo) => write!(f, ">= {lo}"),
            Band::Within(c, w) => write!(f, "{c} +/- {w}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkCase {
    pub kind: CaseKind,
    pub nu: f64,
    pub permeability: Permeability,
    pub force: f64,
    /// Side of the periodic square, or channel height.
    pub length: f64,
    /// Comparison time for transient cases.
    pub end_time: Option<f64>,
    /// Velocity amplitude of the Taylor–Green vortex.
    pub amplitude: f64,
    pub tau: f64,
    /// Fraction of the slowest transient left when a steady run stops.
    pub steady_tolerance: f64,
    pub ladder: Vec<Rung>,
    pub velocity_band: Option<Band>,
    pub pressure_band: Option<Band>,
}

impl BenchmarkCase {
    /// Decaying vortex at `nu = 0.1`, `U0 = 1`, `k = 2π` up to `t = 1/(2νk²)`.
    pub fn taylor_green(sizes: &[usize]) -> Result<Self> {
        let k = 2.0 * PI;
        let nu = 0.1;
        let mut case = Self {
            kind: CaseKind::TaylorGreen,
            nu,
            permeability: Permeability::Infinite,
            force: 0.0,
            length: 1.0,
            end_time: Some(1.0 / (2.0 * nu * k * k)),
            amplitude: 1.0,
            tau: 0.8,
            steady_tolerance: 0.0,
            ladder: Vec::new(),
            velocity_band: Some(Band::Within(2.0, 0.3)),
            pressure_band: None,
        };
        case.ladder = sizes.iter().map(|&n| case.transient_rung(n, n)).collect();
        case.validate()?;
        Ok(case)
    }

    /// Force-driven channel `H = 1`, `K = 0.01`, `nu = 0.1`, `F = 1`.
    pub fn brinkman_channel(sizes: &[usize]) -> Result<Self> {
        Self::channel(CaseKind::BrinkmanChannel, Permeability::Finite(0.01), sizes)
    }

    /// The channel without porous drag.
    pub fn poiseuille(sizes: &[usize]) -> Result<Self> {
        Self::channel(CaseKind::Poiseuille, Permeability::Infinite, sizes)
    }

    fn channel(kind: CaseKind, k: Permeability, sizes: &[usize]) -> Result<Self> {
        let brinkman = kind == CaseKind::BrinkmanChannel;
        let case = Self {
            kind,
            nu: 0.1,
            permeability: k,
            force: 1.0,
            length: 1.0,
            end_time: None,
            amplitude: 0.0,
            tau: magic_tau(),
            steady_tolerance: 1e-14,
            ladder: sizes
                .iter()
                .map(|&ny| Rung {
                    nx: 1,
                    ny,
                    steps: 20_000_000,
                })
                .collect(),
            velocity_band: Some(Band::AtLeast(1.0)),
            pressure_band: brinkman.then_some(Band::Within(2.0, 0.3)),
        };
        case.validate()?;
        Ok(case)
    }

    /// Uniform forcing on a periodic `0.01 × 0.01` box with `K = 1e-4`; the
    /// single rung runs to `t = K/ν` for the transient comparison.
    pub fn darcy_uniform(n: usize) -> Result<Self> {
        let k = 1e-4;
        let nu = 0.1;
        let mut case = Self {
            kind: CaseKind::DarcyUniform,
            nu,
            permeability: Permeability::Finite(k),
            force: 1.0,
            length: 0.01,
            end_time: Some(k / nu),
            amplitude: 0.0,
            tau: magic_tau(),
            steady_tolerance: 1e-14,
            ladder: Vec::new(),
            velocity_band: None,
            pressure_band: None,
        };
        case.ladder = vec![case.transient_rung(n, n)];
        case.validate()?;
        Ok(case)
    }

    pub fn by_kind(kind: CaseKind, sizes: &[usize]) -> Result<Self> {
        match kind {
            CaseKind::TaylorGreen => Self::taylor_green(sizes),
            CaseKind::BrinkmanChannel => Self::brinkman_channel(sizes),
            CaseKind::Poiseuille => Self::poiseuille(sizes),
            CaseKind::DarcyUniform => match sizes {
                [n] => Self::darcy_uniform(*n),
                _ => domain("darcy_uniform takes a single resolution"),
            },
        }
    }

    /// The ladder used when none is given.
    pub fn default_sizes(kind: CaseKind) -> Vec<usize> {
        match kind {
            CaseKind::TaylorGreen => vec![32, 64, 128],
            CaseKind::BrinkmanChannel | CaseKind::Poiseuille => vec![16, 32, 64],
            CaseKind::DarcyUniform => vec![16],
        }
    }

    fn transient_rung(&self, nx: usize, ny: usize) -> Rung {
        let units = self.units(ny);
        let steps = self.end_time.map_or(0, |t| (t / units.dt).round() as u64);
        Rung { nx, ny, steps }
    }

    /// Lattice spacing and step for a rung under diffusive scaling.
    pub fn units(&self, n: usize) -> Units {
        let dx = self.length / n as f64;
        let nu_lb = (self.tau - 0.5) / 3.0;
        Units {
            dx,
            dt: nu_lb * dx * dx / self.nu,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.ladder.is_empty() {
            return domain("empty resolution ladder");
        }
        if !(self.nu > 0.0) || !(self.length > 0.0) || !(self.tau > 0.5) {
            return domain("nu, length must be positive and tau must exceed 0.5");
        }
        for w in self.ladder.windows(2) {
            let refined = match self.kind {
                CaseKind::TaylorGreen => w[1].nx == 2 * w[0].nx && w[1].ny == 2 * w[0].ny,
                _ => w[1].nx == w[0].nx && w[1].ny == 2 * w[0].ny,
            };
            if !refined {
                return domain(format!(
                    "ladder must double the resolution: {}x{} -> {}x{}",
                    w[0].nx, w[0].ny, w[1].nx, w[1].ny
                ));
            }
        }
        if self.kind == CaseKind::DarcyUniform && self.permeability == Permeability::Infinite {
            return domain("darcy_uniform needs a finite permeability");
        }
        Ok(())
    }
}

/// Diffusive-scaling conversion between lattice and physical units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Units {
    pub dx: f64,
    pub dt: f64,
}

impl Units {
    pub fn velocity(&self) -> f64 {
        self.dx / self.dt
    }

    pub fn lattice_force(&self, f: f64) -> f64 {
        f * self.dt * self.dt / self.dx
    }

    pub fn lattice_permeability(&self, k: Permeability) -> Permeability {
        match k {
            Permeability::Infinite => Permeability::Infinite,
            Permeability::Finite(k) => Permeability::Finite(k / (self.dx * self.dx)),
        }
    }
}

/// Errors on one grid, relative to the reference norm.
#[derive(Debug, Clone, PartialEq)]
pub struct RungReport {
    pub nx: usize,
    pub ny: usize,
    pub h: f64,
    pub steps: u64,
    pub u_l2: f64,
    pub u_max: f64,
    pub p_l2: Option<f64>,
    pub p_max: Option<f64>,
    pub seconds_per_step: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BandCheck {
    pub quantity: &'static str,
    pub band: Band,
    /// Empty when the order could not be measured.
    pub observed: Vec<f64>,
    pub pass: bool,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub case: CaseKind,
    pub rungs: Vec<RungReport>,
    pub u_eoc: Option<Vec<f64>>,
    pub p_eoc: Option<Vec<f64>>,
    /// Measured energy decay rate over `2νk²` on the finest grid.
    pub decay_ratio: Option<f64>,
    /// Relative deviation from the spin-up curve at `t = K/ν`.
    pub transient_error: Option<f64>,
    pub monotone: bool,
    pub checks: Vec<BandCheck>,
}

impl ErrorReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn to_csv(&self) -> String {
        let mut s =
            String::from("case,nx,ny,h,steps,u_l2,u_max,p_l2,p_max,seconds_per_step,u_eoc,p_eoc\n");
        for (i, r) in self.rungs.iter().enumerate() {
            let order = |e: &Option<Vec<f64>>| match (i, e) {
                (0, _) | (_, None) => String::new(),
                (i, Some(v)) => format!("{:.17e}", v[i - 1]),
            };
            let opt = |x: Option<f64>| x.map(|x| format!("{x:.17e}")).unwrap_or_default();
            let _ = writeln!(
                s,
                "{},{},{},{:.17e},{},{:.17e},{:.17e},{},{},{:.6e},{},{}",
                self.case.name(),
                r.nx,
                r.ny,
                r.h,
                r.steps,
                r.u_l2,
                r.u_max,
                opt(r.p_l2),
                opt(r.p_max),
                r.seconds_per_step,
                order(&self.u_eoc),
                order(&self.p_eoc)
            );
        }
        s
    }

    pub fn summary(&self) -> String {
        let mut s = format!("{}\n", self.case.name());
        for r in &self.rungs {
            let _ = write!(
                s,
                "  {:>4}x{:<4} steps {:>8}  u_l2 {:.3e}  u_max {:.3e}",
                r.nx, r.ny, r.steps, r.u_l2, r.u_max
            );
            if let Some(p) = r.p_l2 {
                let _ = write!(s, "  p_l2 {p:.3e}");
            }
            let _ = writeln!(s, "  {:.2e} s/step", r.seconds_per_step);
        }
        if let Some(v) = &self.u_eoc {
            let _ = writeln!(s, "  velocity EOC {}", fmt_orders(v));
        }
        if let Some(v) = &self.p_eoc {
            let _ = writeln!(s, "  pressure EOC {}", fmt_orders(v));
        }
        if let Some(r) = self.decay_ratio {
            let _ = writeln!(s, "  decay rate / 2 nu k^2 = {r:.6}");
        }
        if let Some(e) = self.transient_error {
            let _ = writeln!(s, "  transient error at t = K/nu: {e:.3e}");
        }
        if !self.monotone {
            let _ = writeln!(s, "  warning: error ladder is not monotone");
        }
        for c in &self.checks {
            let _ = writeln!(
                s,
                "  [{}] {} order {} observed {}{}",
                if c.pass { "ok" } else { "FAIL" },
                c.quantity,
                c.band,
                fmt_orders(&c.observed),
                if c.note.is_empty() {
                    String::new()
                } else {
                    format!(" ({})", c.note)
                }
            );
        }
        s
    }
}

fn fmt_orders(v: &[f64]) -> String {
    if v.is_empty() {
        return "-".into();
    }
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.3}")).collect();
    parts.join(", ")
}

fn band_check(quantity: &'static str, band: Band, errors: &[(f64, f64)]) -> BandCheck {
    let worst = errors.iter().map(|e| e.1).fold(0.0, f64::max);
    if worst < ROUND_OFF {
        // exact up to round-off: faster than any lower bound, but no order to compare
        let pass = matches!(band, Band::AtLeast(_));
        return BandCheck {
            quantity,
            band,
            observed: Vec::new(),
            pass,
            note: format!("errors at round-off level (max {worst:.1e}); order undefined"),
        };
    }
    match eoc(errors) {
        Ok(orders) => BandCheck {
            quantity,
            band,
            pass: orders.iter().all(|&o| band.contains(o)),
            observed: orders,
            note: String::new(),
        },
        Err(e) => BandCheck {
            quantity,
            band,
            observed: Vec::new(),
            pass: false,
            note: e.to_string(),
        },
    }
}

/// Runs every rung of the ladder and compares against the reference.
pub fn run_benchmark(case: &BenchmarkCase) -> Result<ErrorReport> {
    case.validate()?;
    let mut rungs = Vec::new();
    let mut decay_ratio = None;
    let mut transient_error = None;
    for rung in &case.ladder {
        let out = match case.kind {
            CaseKind::TaylorGreen => {
                let (r, ratio) = run_taylor_green(case, rung)?;
                decay_ratio = Some(ratio);
                r
            }
            CaseKind::BrinkmanChannel | CaseKind::Poiseuille => run_channel(case, rung)?,
            CaseKind::DarcyUniform => {
                let (r, transient) = run_darcy(case, rung)?;
                transient_error = Some(transient);
                r
            }
        };
        rungs.push(out);
    }
    let u_errors: Vec<(f64, f64)> = rungs.iter().map(|r| (r.h, r.u_l2)).collect();
    let p_errors: Option<Vec<(f64, f64)>> =
        rungs.iter().map(|r| r.p_l2.map(|p| (r.h, p))).collect();
    let measurable = |e: &[(f64, f64)]| e.iter().any(|x| x.1 >= ROUND_OFF);
    let u_eoc = (rungs.len() > 1 && measurable(&u_errors))
        .then(|| eoc(&u_errors).ok())
        .flatten();
    let p_eoc = p_errors
        .as_ref()
        .filter(|e| e.len() > 1 && measurable(e))
        .and_then(|e| eoc(e).ok());
    let monotone = u_errors
        .windows(2)
        .all(|w| w[1].1 <= w[0].1 || w[0].1 < ROUND_OFF);

    let mut checks = Vec::new();
    if rungs.len() > 1 {
        if let Some(band) = case.velocity_band {
            checks.push(band_check("velocity", band, &u_errors));
        }
        if let (Some(band), Some(p)) = (case.pressure_band, &p_errors) {
            checks.push(band_check("pressure", band, p));
        }
    }
    Ok(ErrorReport {
        case: case.kind,
        rungs,
        u_eoc,
        p_eoc,
        decay_ratio,
        transient_error,
        monotone,
        checks,
    })
}

/// Runs independent cases concurrently.
pub fn run_benchmarks(cases: &[BenchmarkCase]) -> Vec<Result<ErrorReport>> {
    use rayon::prelude::*;
    cases.par_iter().map(run_benchmark).collect()
}

fn kinetic_energy(m: &MacroFields) -> f64 {
    m.u.iter().map(|v| v[0] * v[0] + v[1] * v[1]).sum()
}

fn run_taylor_green(case: &BenchmarkCase, rung: &Rung) -> Result<(RungReport, f64)> {
    let n = rung.nx;
    let units = case.units(n);
    let cu = 1.0 / units.velocity();
    let k = 2.0 * PI / case.length;
    let (nu, u0) = (case.nu, case.amplitude);
    let cells = n * rung.ny;
    let mut rho = Vec::with_capacity(cells);
    let mut u = Vec::with_capacity(cells);
    let mut grad = Vec::with_capacity(cells);
    for j in 0..rung.ny {
        for i in 0..n {
            let (x, y) = (i as f64 * units.dx, j as f64 * units.dx);
            let (v, p) = reference_taylor_green(x, y, 0.0, nu, u0, k);
            rho.push(1.0 + 3.0 * p * cu * cu);
            u.push([v[0] * cu, v[1] * cu]);
            // lattice gradient ∂_a u_b, per cell spacing
            let a = u0 * k * cu * units.dx;
            let (sx, cx, sy, cy) = ((k * x).sin(), (k * x).cos(), (k * y).sin(), (k * y).cos());
            grad.push([[a * sx * sy, a * cx * cy], [-a * cx * cy, -a * sx * sy]]);
        }
    }
    let config =
        SimulationConfig::new(n, rung.ny, case.tau).with_initial(InitialCondition::Fields {
            rho,
            u,
            grad_u: Some(grad),
        });
    let mut sim = Simulation::new(&config)?;
    let half = rung.steps / 2;
    let start = Instant::now();
    sim.advance(half)?;
    let e_half = kinetic_energy(&sim.macroscopic());
    sim.advance(rung.steps - half)?;
    let elapsed = start.elapsed().as_secs_f64();
    let m = sim.macroscopic();
    let t = rung.steps as f64 * units.dt;
    let rate = (e_half / kinetic_energy(&m)).ln() / (2.0 * (rung.steps - half) as f64 * units.dt);

    let p_mean = m.p.iter().sum::<f64>() / cells as f64;
    let (mut eu, mut ru, mut eu_max, mut ru_max) = (0.0, 0.0, 0.0f64, 0.0f64);
    let (mut ep, mut rp, mut ep_max, mut rp_max) = (0.0, 0.0, 0.0f64, 0.0f64);
    for j in 0..rung.ny {
        for i in 0..n {
            let c = m.index(i, j);
            let (x, y) = (i as f64 * units.dx, j as f64 * units.dx);
            let (v, p) = reference_taylor_green(x, y, t, nu, u0, k);
            let du = [m.u[c][0] / cu - v[0], m.u[c][1] / cu - v[1]];
            let d2 = du[0] * du[0] + du[1] * du[1];
            let r2 = v[0] * v[0] + v[1] * v[1];
            eu += d2;
            ru += r2;
            eu_max = eu_max.max(d2.sqrt());
            ru_max = ru_max.max(r2.sqrt());
            let dp = (m.p[c] - p_mean) / (cu * cu) - p;
            ep += dp * dp;
            rp += p * p;
            ep_max = ep_max.max(dp.abs());
            rp_max = rp_max.max(p.abs());
        }
    }
    let report = RungReport {
        nx: n,
        ny: rung.ny,
        h: units.dx,
        steps: rung.steps,
        u_l2: (eu / ru).sqrt(),
        u_max: eu_max / ru_max,
        p_l2: Some((ep / rp).sqrt()),
        p_max: Some(ep_max / rp_max),
        seconds_per_step: elapsed / rung.steps.max(1) as f64,
    };
    Ok((report, rate / (2.0 * nu * k * k)))
}

/// Velocity changes below this are round-off in populations of order one.
const CHANGE_FLOOR: f64 = 1e-15;

/// Relative per-step change that confirms a settled run is steady.
const CONFIRM_TOLERANCE: f64 = 1e-9;

/// Slowest decay rate per step of the linear Brinkman operator in a channel
/// of `ny` cells (`None` for a periodic box): `nu (pi^2/H^2 + 1/K)`.
fn slowest_rate(nu_lb: f64, ny: Option<usize>, k_lb: Permeability) -> f64 {
    let wall = ny.map_or(0.0, |n| (PI / n as f64).powi(2));
    nu_lb * (wall + k_lb.inverse())
}

/// Runs until the slowest transient has decayed to `tol` of its initial
/// size, then checks that the streamwise velocity has stopped changing.
/// The residual alone cannot certify this for slowly decaying modes, since
/// per-step changes sink into round-off long before the field converges.
fn run_steady(sim: &mut Simulation, rate: f64, tol: f64, max_steps: u64) -> Result<u64> {
    let settle = ((1.0 / tol).ln() / rate).ceil() as u64;
    if settle > max_steps {
        return Err(Error::NotConverged {
            steps: 0,
            residual: f64::NAN,
            history: Vec::new(),
        });
    }
    sim.advance(settle)?;
    let st = sim.run_to_steady_by(max_steps - settle, 100, CONFIRM_TOLERANCE, |prev, next| {
        let scale = next.iter().map(|v| v[0].abs()).fold(0.0, f64::max);
        let change = prev
            .iter()
            .zip(next)
            .map(|(a, b)| (a[0] - b[0]).abs())
            .fold(0.0, f64::max);
        let change = (change - CHANGE_FLOOR).max(0.0);
        if scale > 0.0 {
            change / scale
        } else {
            change
        }
    })?;
    Ok(settle + st.steps)
}

/// Steady channel profile in physical units at cell centres `y = (j + 1/2) dx`.
#[allow(clippy::too_many_arguments)]
pub fn channel_profile(
    ny: usize,
    tau: f64,
    h: f64,
    nu: f64,
    k: Permeability,
    f: f64,
    tol: f64,
    max_steps: u64,
) -> Result<ChannelProfile> {
    let units = {
        let dx = h / ny as f64;
        Units {
            dx,
            dt: (tau - 0.5) / 3.0 * dx * dx / nu,
        }
    };
    let config = SimulationConfig::new(1, ny, tau)
        .with_boundaries(Boundaries::CHANNEL)
        .with_permeability(units.lattice_permeability(k))
        .with_force([units.lattice_force(f), 0.0]);
    let mut sim = Simulation::new(&config)?;
    let rate = slowest_rate((tau - 0.5) / 3.0, Some(ny), units.lattice_permeability(k));
    let start = Instant::now();
    let steps = run_steady(&mut sim, rate, tol, max_steps)?;
    let elapsed = start.elapsed().as_secs_f64();
    let m = sim.macroscopic();
    let c = units.velocity();
    Ok(ChannelProfile {
        y: (0..ny).map(|j| (j as f64 + 0.5) * units.dx).collect(),
        u: m.u.iter().map(|v| v[0] * c).collect(),
        p: m.p.iter().map(|p| p * c * c).collect(),
        steps,
        seconds_per_step: elapsed / steps.max(1) as f64,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelProfile {
    pub y: Vec<f64>,
    pub u: Vec<f64>,
    pub p: Vec<f64>,
    pub steps: u64,
    pub seconds_per_step: f64,
}

fn run_channel(case: &BenchmarkCase, rung: &Rung) -> Result<RungReport> {
    let prof = channel_profile(
        rung.ny,
        case.tau,
        case.length,
        case.nu,
        case.permeability,
        case.force,
        case.steady_tolerance,
        rung.steps,
    )?;
    let (mut e2, mut r2, mut emax, mut rmax) = (0.0, 0.0, 0.0f64, 0.0f64);
    for (y, u) in prof.y.iter().zip(&prof.u) {
        let ex =
            reference_brinkman_channel(*y, case.length, case.nu, case.permeability, case.force);
        e2 += (u - ex).powi(2);
        r2 += ex * ex;
        emax = emax.max((u - ex).abs());
        rmax = rmax.max(ex.abs());
    }
    // the reference pressure is uniform: measure the spread against rho0 F H
    let scale = case.force * case.length;
    let p_mean = prof.p.iter().sum::<f64>() / prof.p.len() as f64;
    let dev: Vec<f64> = prof.p.iter().map(|p| (p - p_mean) / scale).collect();
    let p_l2 = (dev.iter().map(|d| d * d).sum::<f64>() / dev.len() as f64).sqrt();
    let p_max = dev.iter().fold(0.0f64, |a, d| a.max(d.abs()));
    Ok(RungReport {
        nx: rung.nx,
        ny: rung.ny,
        h: case.length / rung.ny as f64,
        steps: prof.steps,
        u_l2: (e2 / r2).sqrt(),
        u_max: emax / rmax,
        p_l2: Some(p_l2),
        p_max: Some(p_max),
        seconds_per_step: prof.seconds_per_step,
    })
}

fn run_darcy(case: &BenchmarkCase, rung: &Rung) -> Result<(RungReport, f64)> {
    let Permeability::Finite(k) = case.permeability else {
        return Err(Error::Domain(
            "darcy_uniform needs a finite permeability".into(),
        ));
    };
    let units = case.units(rung.ny);
    let f = [case.force, 0.0];
    let config = SimulationConfig::new(rung.nx, rung.ny, case.tau)
        .with_permeability(units.lattice_permeability(case.permeability))
        .with_force([units.lattice_force(f[0]), 0.0]);
    let c = units.velocity();

    let mut sim = Simulation::new(&config)?;
    sim.advance(rung.steps)?;
    let t = rung.steps as f64 * units.dt;
    let want = reference_darcy_transient(case.nu, k, f, t)[0];
    let got = mean_x_velocity(&sim.macroscopic()) * c;
    let transient = ((got - want) / want).abs();

    let mut sim = Simulation::new(&config)?;
    let start = Instant::now();
    let rate = slowest_rate(
        (case.tau - 0.5) / 3.0,
        None,
        units.lattice_permeability(case.permeability),
    );
    let steps = run_steady(&mut sim, rate, case.steady_tolerance, 50_000_000)?;
    let elapsed = start.elapsed().as_secs_f64();
    let m = sim.macroscopic();
    let want = reference_darcy_uniform(case.nu, k, f);
    let norm = want[0].hypot(want[1]);
    let (mut e2, mut emax) = (0.0, 0.0f64);
    for v in &m.u {
        let d = (v[0] * c - want[0]).hypot(v[1] * c - want[1]);
        e2 += d * d;
        emax = emax.max(d);
    }
    let report = RungReport {
        nx: rung.nx,
        ny: rung.ny,
        h: units.dx,
        steps,
        u_l2: (e2 / m.u.len() as f64).sqrt() / norm,
        u_max: emax / norm,
        p_l2: None,
        p_max: None,
        seconds_per_step: elapsed / steps.max(1) as f64,
    };
    Ok((report, transient))
}

fn mean_x_velocity(m: &MacroFields) -> f64 {
    m.u.iter().map(|v| v[0]).sum::<f64>() / m.u.len() as f64
}

/// Distance from the wall at which the profile first reaches 95% of
/// `plug`, linearly interpolated between cell centres with `u(0) = 0`.
pub fn boundary_layer_width(y: &[f64], u: &[f64], plug: f64) -> Option<f64> {
    let target = 0.95 * plug;
    let (mut y0, mut u0) = (0.0, 0.0);
    for (&y1, &u1) in y.iter().zip(u) {
        if u1 >= target {
            return Some(y0 + (target - u0) / (u1 - u0) * (y1 - y0));
        }
        (y0, u0) = (y1, u1);
    }
    None
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub k: f64,
    pub ny: usize,
    /// `None` when the profile never reaches 95% of the plug value.
    pub width: Option<f64>,
    /// Mean over maximum velocity: 2/3 for the parabola, 1 for a plug.
    pub flatness: f64,
    pub steps: u64,
}

impl SweepPoint {
    /// `width / (3 sqrt K) - 1`.
    pub fn width_deviation(&self) -> Option<f64> {
        self.width.map(|w| w / (3.0 * self.k.sqrt()) - 1.0)
    }
}

/// Resolution putting about ten cells across `sqrt K`, at least 64.
pub fn sweep_resolution(k: f64) -> usize {
    let n = (10.0 / k.sqrt()).ceil() as usize;
    n.next_power_of_two().max(64)
}

/// Steady channel flow (`H = 1`, `nu = 0.1`, `F = 1`) for each permeability.
/// `ny = None` picks [`sweep_resolution`].
pub fn k_sweep(ks: &[f64], ny: Option<usize>) -> Result<Vec<SweepPoint>> {
    use rayon::prelude::*;
    let (h, nu, f) = (1.0, 0.1, 1.0);
    ks.par_iter()
        .map(|&k| {
            let n = ny.unwrap_or_else(|| sweep_resolution(k));
            let perm = Permeability::finite(k)?;
            let prof = channel_profile(n, magic_tau(), h, nu, perm, f, 1e-12, 50_000_000)?;
            let half = n / 2;
            let umax = prof.u.iter().cloned().fold(0.0, f64::max);
            let mean = prof.u.iter().sum::<f64>() / n as f64;
            Ok(SweepPoint {
                k,
                ny: n,
                width: boundary_layer_width(&prof.y[..half], &prof.u[..half], f * k / nu),
                flatness: mean / umax,
                steps: prof.steps,
            })
        })
        .collect()
}

pub fn sweep_csv(points: &[SweepPoint]) -> String {
    let mut s = String::from("k,ny,width,expected,deviation,flatness,steps\n");
    for p in points {
        let _ = writeln!(
            s,
            "{:.17e},{},{},{:.17e},{},{:.17e},{}",
            p.k,
            p.ny,
            p.width.map(|w| format!("{w:.17e}")).unwrap_or_default(),
            3.0 * p.k.sqrt(),
            p.width_deviation()
                .map(|d| format!("{d:.17e}"))
                .unwrap_or_default(),
            p.flatness,
            p.steps
        );
    }
    s
}
