//! D2Q9 realization of the homogenized BGK equation.
//!
//! The collision relaxes towards an equilibrium evaluated at `varpi * u`
//! instead of `u`. With `varpi = 1 - nu tau / K` each step removes
//! `(1 - varpi)/tau * rho u = nu/K * rho u` of momentum, which is the
//! Brinkman drag; `K = ∞` gives `varpi = 1` and plain BGK.
//!
//! One step runs collide → force → stream → boundaries → moments. Body
//! forces enter through a second-order source term and the reported
//! velocity carries the half-force correction `u = (Σ c f + F/2) / rho`.

pub mod d2q9;
mod exec;
pub mod geometry;

use std::sync::atomic::{AtomicUsize, Ordering};

pub use d2q9::{check_isotropy, equilibrium, CS2, OPPOSITE, Q, VELOCITIES, WEIGHTS};
pub use exec::{Execution, THREADS_ENV};
pub use geometry::{Boundaries, CellFlag, EdgeKind, Geometry};

use crate::error::{domain, Error, Result};
use crate::regime::{porosity_control, Permeability};

/// Largest lattice speed accepted before a run is declared unstable.
pub const MAX_LATTICE_SPEED: f64 = 0.3;

/// A value that is either shared by all cells or given per cell.
#[derive(Debug, Clone, PartialEq)]
pub enum CellField<T> {
    Uniform(T),
    PerCell(Vec<T>),
}

impl<T: Copy> CellField<T> {
    #[inline(always)]
    pub fn get(&self, cell: usize) -> T {
        match self {
            CellField::Uniform(v) => *v,
            CellField::PerCell(v) => v[cell],
        }
    }

    fn check_len(&self, n: usize, what: &str) -> Result<()> {
        match self {
            CellField::PerCell(v) if v.len() != n => {
                domain(format!("{what}: {} values for {n} cells", v.len()))
            }
            _ => Ok(()),
        }
    }

    fn try_map<U>(&self, f: impl Fn(T) -> Result<U>) -> Result<CellField<U>> {
        Ok(match self {
            CellField::Uniform(v) => CellField::Uniform(f(*v)?),
            CellField::PerCell(v) => {
                CellField::PerCell(v.iter().map(|x| f(*x)).collect::<Result<_>>()?)
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialCondition {
    Uniform {
        rho: f64,
        u: [f64; 2],
    },
    /// Per-cell fields. With `grad_u` (entries `∂_a u_b` as `[a][b]`) the
    /// populations also carry the first-order non-equilibrium part, which
    /// suppresses the start-up acoustic transient.
    Fields {
        rho: Vec<f64>,
        u: Vec<[f64; 2]>,
        grad_u: Option<Vec<[[f64; 2]; 2]>>,
    },
}

/// Everything needed to set up a lattice run, in lattice units (`Δx = Δt = 1`).
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub nx: usize,
    pub ny: usize,
    /// Relaxation time, > 1/2.
    pub tau: f64,
    pub permeability: CellField<Permeability>,
    /// Body force per unit mass.
    pub force: CellField<[f64; 2]>,
    pub boundaries: Boundaries,
    /// Per-cell flags; `None` means every cell is fluid.
    pub flags: Option<Vec<CellFlag>>,
    pub initial: InitialCondition,
    pub steps: u64,
    /// Snapshot cadence for [`run`]; 0 keeps only the first and last state.
    pub output_every: u64,
}

impl SimulationConfig {
    /// Periodic, force-free, non-porous fluid at rest with unit density.
    pub fn new(nx: usize, ny: usize, tau: f64) -> Self {
        Self {
            nx,
            ny,
            tau,
            permeability: CellField::Uniform(Permeability::Infinite),
            force: CellField::Uniform([0.0, 0.0]),
            boundaries: Boundaries::PERIODIC,
            flags: None,
            initial: InitialCondition::Uniform {
                rho: 1.0,
                u: [0.0, 0.0],
            },
            steps: 0,
            output_every: 0,
        }
    }

    pub fn with_permeability(mut self, k: Permeability) -> Self {
        self.permeability = CellField::Uniform(k);
        self
    }

    pub fn with_force(mut self, g: [f64; 2]) -> Self {
        self.force = CellField::Uniform(g);
        self
    }

    pub fn with_boundaries(mut self, b: Boundaries) -> Self {
        self.boundaries = b;
        self
    }

    pub fn with_flags(mut self, flags: Vec<CellFlag>) -> Self {
        self.flags = Some(flags);
        self
    }

    pub fn with_initial(mut self, initial: InitialCondition) -> Self {
        self.initial = initial;
        self
    }

    pub fn with_steps(mut self, steps: u64, output_every: u64) -> Self {
        self.steps = steps;
        self.output_every = output_every;
        self
    }

    /// Lattice kinematic viscosity `(tau - 1/2) / 3`.
    pub fn nu(&self) -> f64 {
        CS2 * (self.tau - 0.5)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.5) || !self.tau.is_finite() {
            return domain(format!("relaxation time must exceed 0.5, got {}", self.tau));
        }
        let n = self.nx * self.ny;
        self.permeability.check_len(n, "permeability")?;
        self.force.check_len(n, "force")?;
        if let Some(flags) = &self.flags {
            if flags.len() != n {
                return Err(Error::Geometry(format!(
                    "{} flags for {n} cells",
                    flags.len()
                )));
            }
        }
        self.varpi()?;
        match &self.initial {
            InitialCondition::Uniform { rho, u } => {
                if !(*rho > 0.0) {
                    return domain(format!("initial density must be positive, got {rho}"));
                }
                check_speed(*u)?;
            }
            InitialCondition::Fields { rho, u, grad_u } => {
                if rho.len() != n || u.len() != n || grad_u.as_ref().is_some_and(|g| g.len() != n) {
                    return domain(format!("initial fields must have {n} entries"));
                }
                if let Some(r) = rho.iter().find(|r| !(**r > 0.0)) {
                    return domain(format!("initial density must be positive, got {r}"));
                }
                for v in u {
                    check_speed(*v)?;
                }
            }
        }
        Ok(())
    }

    /// Per-cell porosity control `1 - nu tau / K` (`Δt = 1`).
    pub fn varpi(&self) -> Result<CellField<f64>> {
        let nu = self.nu();
        let tau = self.tau;
        self.permeability.try_map(|k| porosity_control(nu, tau, k))
    }
}

fn check_speed(u: [f64; 2]) -> Result<()> {
    let s = (u[0] * u[0] + u[1] * u[1]).sqrt();
    if !(s <= MAX_LATTICE_SPEED) {
        return domain(format!(
            "initial speed {s} exceeds the lattice limit {MAX_LATTICE_SPEED}"
        ));
    }
    Ok(())
}

/// Density, velocity and pressure per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct MacroFields {
    pub nx: usize,
    pub ny: usize,
    pub rho: Vec<f64>,
    pub u: Vec<[f64; 2]>,
    /// `c_s^2 (rho - rho_ref)`.
    pub p: Vec<f64>,
}

impl MacroFields {
    pub fn index(&self, x: usize, y: usize) -> usize {
        y * self.nx + x
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub step: u64,
    pub fields: MacroFields,
}

/// Result of [`Simulation::run_to_steady`].
#[derive(Debug, Clone)]
pub struct SteadyState {
    pub steps: u64,
    pub residual: f64,
    pub history: Vec<f64>,
}

pub struct Simulation {
    geometry: Geometry,
    tau: f64,
    varpi: CellField<f64>,
    force: CellField<[f64; 2]>,
    f: Vec<[f64; Q]>,
    scratch: Vec<[f64; Q]>,
    step: u64,
    rho_ref: f64,
    exec: Execution,
}

impl Simulation {
    /// Builds the geometry and fills populations with the equilibrium of the
    /// initial fields. The raw moment is shifted by `-F/2` so that the
    /// reported velocity equals the prescribed one at step 0.
    pub fn new(config: &SimulationConfig) -> Result<Self> {
        check_isotropy()?;
        config.validate()?;
        let n = config.nx * config.ny;
        let flags = config
            .flags
            .clone()
            .unwrap_or_else(|| vec![CellFlag::Fluid; n]);
        let geometry = Geometry::new(config.nx, config.ny, config.boundaries, flags)?;
        let varpi = config.varpi()?;
        let mut f = vec![[0.0; Q]; n];
        let mut mass = 0.0;
        for (cell, fc) in f.iter_mut().enumerate() {
            if !geometry.is_fluid(cell) {
                continue;
            }
            let (rho, u, grad) = match &config.initial {
                InitialCondition::Uniform { rho, u } => (*rho, *u, None),
                InitialCondition::Fields { rho, u, grad_u } => {
                    (rho[cell], u[cell], grad_u.as_ref().map(|g| g[cell]))
                }
            };
            let g = config.force.get(cell);
            *fc = d2q9::equilibrium_at(rho, [u[0] - 0.5 * g[0], u[1] - 0.5 * g[1]]);
            if let Some(grad) = grad {
                // f_neq = -3 tau w rho (c_a c_b - δ_ab/3) ∂_a u_b
                for q in 0..Q {
                    let c = [VELOCITIES[q][0] as f64, VELOCITIES[q][1] as f64];
                    let mut s = 0.0;
                    for a in 0..2 {
                        for b in 0..2 {
                            let delta = if a == b { CS2 } else { 0.0 };
                            s += (c[a] * c[b] - delta) * grad[a][b];
                        }
                    }
                    fc[q] -= 3.0 * config.tau * WEIGHTS[q] * rho * s;
                }
            }
            mass += rho;
        }
        let rho_ref = mass / geometry.fluid_count() as f64;
        Ok(Self {
            geometry,
            tau: config.tau,
            varpi,
            force: config.force.clone(),
            scratch: f.clone(),
            f,
            step: 0,
            rho_ref,
            exec: Execution::from_env(),
        })
    }

    pub fn with_execution(mut self, exec: Execution) -> Self {
        self.exec = exec;
        self
    }

    pub fn execution(&self) -> &Execution {
        &self.exec
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn nu(&self) -> f64 {
        CS2 * (self.tau - 0.5)
    }

    pub fn reference_density(&self) -> f64 {
        self.rho_ref
    }

    pub fn populations(&self) -> &[[f64; Q]] {
        &self.f
    }

    /// Replaces the populations, e.g. to restart from a known state.
    pub fn set_populations(&mut self, f: Vec<[f64; Q]>) -> Result<()> {
        if f.len() != self.f.len() {
            return domain(format!("{} cells expected, got {}", self.f.len(), f.len()));
        }
        self.f = f;
        Ok(())
    }

    /// One collide–stream update.
    ///
    /// Each fluid cell is collided and its post-collision populations are
    /// pushed straight to their destinations, so the state always holds
    /// pre-collision populations.
    pub fn collide_stream(&mut self) -> Result<()> {
        let omega = 1.0 / self.tau;
        let source_weight = 1.0 - 0.5 * omega;
        let flags = self.geometry.flags();
        let dest = self.geometry.destinations();
        let varpi = &self.varpi;
        let force = &self.force;
        let f = &self.f;
        let first_bad = AtomicUsize::new(usize::MAX);
        let out = exec::Scatter::new(&mut self.scratch);
        self.exec.for_each_index(f.len(), |cell| {
            if flags[cell] == CellFlag::Solid {
                return;
            }
            match collide_cell(
                &f[cell],
                omega,
                source_weight,
                varpi.get(cell),
                force.get(cell),
            ) {
                Some(post) => {
                    let d = &dest[cell];
                    for q in 0..Q {
                        // SAFETY: streaming is a bijection on fluid links, so
                        // every (cell, direction) slot is written exactly once.
                        unsafe {
                            if d[q] == geometry::BOUNCE {
                                out.write(cell, OPPOSITE[q], post[q]);
                            } else {
                                out.write(d[q] as usize, q, post[q]);
                            }
                        }
                    }
                }
                None => {
                    first_bad.fetch_min(cell, Ordering::Relaxed);
                }
            }
        });
        let bad = first_bad.into_inner();
        if bad != usize::MAX {
            return Err(self.instability(bad));
        }
        std::mem::swap(&mut self.f, &mut self.scratch);
        self.step += 1;
        Ok(())
    }

    /// Advances `n` steps.
    pub fn advance(&mut self, n: u64) -> Result<()> {
        for _ in 0..n {
            self.collide_stream()?;
        }
        Ok(())
    }

    fn instability(&self, cell: usize) -> Error {
        let (rho, m) = d2q9::moments(&self.f[cell]);
        let g = self.force.get(cell);
        let u = [
            (m[0] + 0.5 * rho * g[0]) / rho,
            (m[1] + 0.5 * rho * g[1]) / rho,
        ];
        let speed = (u[0] * u[0] + u[1] * u[1]).sqrt();
        let reason = if speed.is_finite() && rho.is_finite() {
            format!("speed {speed:.4} exceeds {MAX_LATTICE_SPEED} (rho = {rho:.4})")
        } else {
            "non-finite populations".to_string()
        };
        let nx = self.geometry.nx();
        Error::Instability {
            step: self.step,
            x: cell % nx,
            y: cell / nx,
            reason,
        }
    }

    /// Density, half-force corrected velocity and pressure. Solid cells report
    /// the reference density and zero velocity.
    pub fn macroscopic(&self) -> MacroFields {
        let n = self.f.len();
        let mut rho = vec![self.rho_ref; n];
        let mut u = vec![[0.0; 2]; n];
        let mut p = vec![0.0; n];
        for cell in 0..n {
            if !self.geometry.is_fluid(cell) {
                continue;
            }
            let (r, m) = d2q9::moments(&self.f[cell]);
            let g = self.force.get(cell);
            rho[cell] = r;
            u[cell] = [(m[0] + 0.5 * r * g[0]) / r, (m[1] + 0.5 * r * g[1]) / r];
            p[cell] = CS2 * (r - self.rho_ref);
        }
        MacroFields {
            nx: self.geometry.nx(),
            ny: self.geometry.ny(),
            rho,
            u,
            p,
        }
    }

    /// Sum of all fluid populations.
    pub fn total_mass(&self) -> f64 {
        self.f
            .iter()
            .enumerate()
            .filter(|(c, _)| self.geometry.is_fluid(*c))
            .map(|(_, f)| f.iter().sum::<f64>())
            .sum()
    }

    /// Steps until the per-step change `max |u(n+1) - u(n)|`, measured every
    /// `check_every` steps, falls below `tol`.
    pub fn run_to_steady(
        &mut self,
        max_steps: u64,
        check_every: u64,
        tol: f64,
    ) -> Result<SteadyState> {
        self.run_to_steady_by(max_steps, check_every, tol, |prev, next| {
            prev.iter()
                .zip(next)
                .map(|(a, b)| (a[0] - b[0]).abs().max((a[1] - b[1]).abs()))
                .fold(0.0, f64::max)
        })
    }

    /// [`run_to_steady`](Self::run_to_steady) with a caller-supplied residual
    /// of two consecutive velocity fields.
    pub fn run_to_steady_by(
        &mut self,
        max_steps: u64,
        check_every: u64,
        tol: f64,
        residual: impl Fn(&[[f64; 2]], &[[f64; 2]]) -> f64,
    ) -> Result<SteadyState> {
        let check_every = check_every.max(2);
        let start = self.step;
        let mut history = Vec::new();
        loop {
            self.advance(check_every - 1)?;
            let before = self.macroscopic().u;
            self.collide_stream()?;
            let after = self.macroscopic().u;
            let r = residual(&before, &after);
            history.push(r);
            if r < tol {
                return Ok(SteadyState {
                    steps: self.step - start,
                    residual: r,
                    history,
                });
            }
            if self.step - start >= max_steps {
                return Err(Error::NotConverged {
                    steps: self.step - start,
                    residual: r,
                    history,
                });
            }
        }
    }
}

/// BGK relaxation towards the equilibrium at `varpi * u` plus the forcing
/// source; `None` when the cell violates the stability guard.
#[inline(always)]
fn collide_cell(
    f: &[f64; Q],
    omega: f64,
    source_weight: f64,
    varpi: f64,
    g: [f64; 2],
) -> Option<[f64; Q]> {
    let (rho, m) = d2q9::moments(f);
    let fx = rho * g[0];
    let fy = rho * g[1];
    let ux = (m[0] + 0.5 * fx) / rho;
    let uy = (m[1] + 0.5 * fy) / rho;
    if !(ux * ux + uy * uy <= MAX_LATTICE_SPEED * MAX_LATTICE_SPEED) || !(rho > 0.0) {
        return None;
    }
    let v = [varpi * ux, varpi * uy];
    let feq = d2q9::equilibrium_at(rho, v);
    let mut post = [0.0; Q];
    for q in 0..Q {
        post[q] = f[q] - omega * (f[q] - feq[q]);
    }
    if fx != 0.0 || fy != 0.0 {
        let vf = v[0] * fx + v[1] * fy;
        for q in 0..Q {
            let (cx, cy) = (d2q9::CX[q], d2q9::CY[q]);
            let cv = cx * v[0] + cy * v[1];
            let source = 3.0 * (cx * fx + cy * fy - vf) + 9.0 * cv * (cx * fx + cy * fy);
            post[q] += source_weight * WEIGHTS[q] * source;
        }
    }
    Some(post)
}

/// Runs `config.steps` steps and returns snapshots at step 0, every
/// `output_every` steps, and at the end.
pub fn run(config: &SimulationConfig) -> Result<Vec<Snapshot>> {
    run_with(Simulation::new(config)?, config.steps, config.output_every)
}

pub fn run_with(mut sim: Simulation, steps: u64, output_every: u64) -> Result<Vec<Snapshot>> {
    let mut out = vec![Snapshot {
        step: sim.step_count(),
        fields: sim.macroscopic(),
    }];
    for _ in 0..steps {
        sim.collide_stream()?;
        let s = sim.step_count();
        if (output_every > 0 && s.is_multiple_of(output_every)) || s == steps {
            out.push(Snapshot {
                step: s,
                fields: sim.macroscopic(),
            });
        }
    }
    Ok(out)
}
