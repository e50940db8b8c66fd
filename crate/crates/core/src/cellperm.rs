//! Permeability of a periodic unit cell holding a centered disk.
//!
//! For each axis `k` the stationary cell problem `∇p_k − Δv_k = e_k` with
//! no-slip on the disk is solved by driving the lattice solver (`varpi = 1`)
//! with a small uniform body force until it is steady. The permeability
//! tensor is the cell average `A_jk = ⟨(v_k)_j⟩`; the energy form
//! `∫ ∇v_j : ∇v_k` is assembled from the same fields as a cross-check.

use std::f64::consts::PI;

use crate::error::{domain, Error, Result};
use crate::lattice::{Boundaries, CellFlag, Execution, Simulation, SimulationConfig, Q};
use crate::regime::{permeability_from_cell, Permeability};

/// Relaxation time for which halfway bounce-back places a straight wall
/// exactly half a cell outside the fluid for BGK.
pub fn magic_tau() -> f64 {
    0.5 + (3.0f64 / 16.0).sqrt()
}

/// Largest lattice speed the cell solves may reach; keeps inertia negligible.
pub const MAX_CELL_SPEED: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub struct UnitCellSpec {
    /// Disk diameter as a fraction of the cell side, in `(0, 1)`.
    pub delta: f64,
    /// Lattice cells per cell side.
    pub resolution: usize,
    /// Lattice relaxation time.
    pub tau: f64,
    /// Steady when `max |Δu| / max |u|` over one step drops below this.
    pub tolerance: f64,
    pub max_steps: u64,
    pub check_every: u64,
    /// Largest accepted relative gap between the mean and energy forms.
    pub weak_form_tolerance: f64,
}

impl UnitCellSpec {
    pub fn new(delta: f64, resolution: usize) -> Result<Self> {
        let spec = Self {
            delta,
            resolution,
            tau: magic_tau(),
            tolerance: 1e-9,
            max_steps: 2_000_000,
            check_every: 200,
            weak_form_tolerance: 0.01,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return domain(format!(
                "obstacle diameter must lie in (0, 1), got {}; without an obstacle the \
                 cell problem has no steady state and a full obstacle leaves no fluid",
                self.delta
            ));
        }
        if self.resolution < 4 {
            return domain(format!("resolution {} is below 4 cells", self.resolution));
        }
        if !(self.tau > 0.5) {
            return domain(format!("relaxation time must exceed 0.5, got {}", self.tau));
        }
        if !(self.tolerance > 0.0) || !(self.weak_form_tolerance > 0.0) {
            return domain("tolerances must be positive");
        }
        Ok(())
    }

    /// Lattice viscosity `(tau - 1/2) / 3`.
    pub fn nu(&self) -> f64 {
        (self.tau - 0.5) / 3.0
    }

    /// Body force in lattice units. Sized so that an unobstructed channel of
    /// the same width would peak at `1e-4`.
    pub fn lattice_force(&self) -> f64 {
        let n = self.resolution as f64;
        8e-4 * self.nu() / (n * n)
    }

    /// Disk of diameter `delta` centered in the cell; a lattice cell is solid
    /// when its center lies inside.
    pub fn flags(&self) -> Result<Vec<CellFlag>> {
        let n = self.resolution;
        let r2 = (0.5 * self.delta).powi(2);
        let mut flags = Vec::with_capacity(n * n);
        for j in 0..n {
            for i in 0..n {
                let x = (i as f64 + 0.5) / n as f64 - 0.5;
                let y = (j as f64 + 0.5) / n as f64 - 0.5;
                flags.push(if x * x + y * y <= r2 {
                    CellFlag::Solid
                } else {
                    CellFlag::Fluid
                });
            }
        }
        if !flags.contains(&CellFlag::Solid) {
            return Err(Error::Geometry(format!(
                "obstacle of diameter {} is not resolved by {n} cells",
                self.delta
            )));
        }
        Ok(flags)
    }
}

/// Steady solution of one cell problem, in unit-cell variables.
#[derive(Debug, Clone)]
pub struct CellSolution {
    pub axis: usize,
    pub resolution: usize,
    pub flags: Vec<CellFlag>,
    /// `v_k` per lattice cell, zero in the obstacle.
    pub velocity: Vec<[f64; 2]>,
    /// `p_k` per lattice cell with zero fluid mean.
    pub pressure: Vec<f64>,
    pub steps: u64,
    pub residual: f64,
    pub history: Vec<f64>,
    /// Peak lattice speed reached during the solve.
    pub max_lattice_speed: f64,
    /// Largest central-difference divergence over cells with fluid neighbours.
    pub divergence: f64,
}

/// Solves the cell problem driven along `axis` (0 for x, 1 for y).
pub fn solve_unit_cell(spec: &UnitCellSpec, axis: usize) -> Result<CellSolution> {
    solve_unit_cell_with(spec, axis, Execution::from_env())
}

pub fn solve_unit_cell_with(
    spec: &UnitCellSpec,
    axis: usize,
    exec: Execution,
) -> Result<CellSolution> {
    spec.validate()?;
    if axis > 1 {
        return domain(format!("axis must be 0 or 1, got {axis}"));
    }
    let n = spec.resolution;
    let flags = spec.flags()?;
    let g = spec.lattice_force();
    let mut force = [0.0; 2];
    force[axis] = g;
    let config = SimulationConfig::new(n, n, spec.tau)
        .with_boundaries(Boundaries::PERIODIC)
        .with_flags(flags.clone())
        .with_force(force);
    let mut sim = Simulation::new(&config)?.with_execution(exec);
    let (steps, residual, history) = drive_to_steady(&mut sim, spec)?;
    let fields = sim.macroscopic();
    let max_lattice_speed = fields
        .u
        .iter()
        .map(|u| u[0].hypot(u[1]))
        .fold(0.0, f64::max);
    if max_lattice_speed > MAX_CELL_SPEED {
        return domain(format!(
            "cell solve reached lattice speed {max_lattice_speed:.3e} > {MAX_CELL_SPEED}"
        ));
    }
    // v = alpha u_lb with alpha = nu h^2 / g, h = 1/n
    let h = 1.0 / n as f64;
    let alpha = spec.nu() * h * h / g;
    let velocity: Vec<[f64; 2]> = fields
        .u
        .iter()
        .map(|u| [alpha * u[0], alpha * u[1]])
        .collect();
    let fluid: Vec<usize> = (0..n * n)
        .filter(|&c| flags[c] == CellFlag::Fluid)
        .collect();
    let p_mean = fluid.iter().map(|&c| fields.p[c]).sum::<f64>() / fluid.len() as f64;
    let pressure = (0..n * n)
        .map(|c| {
            if flags[c] == CellFlag::Fluid {
                (fields.p[c] - p_mean) * h / g
            } else {
                0.0
            }
        })
        .collect();
    let divergence = max_divergence(n, &flags, &velocity);
    Ok(CellSolution {
        axis,
        resolution: n,
        flags,
        velocity,
        pressure,
        steps,
        residual,
        history,
        max_lattice_speed,
        divergence,
    })
}

/// Relative one-step velocity change `max |Δu| / max |u|`.
fn relative_change(sim: &mut Simulation) -> Result<f64> {
    let before = sim.macroscopic().u;
    sim.collide_stream()?;
    let after = sim.macroscopic().u;
    let mut change: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for (p, q) in before.iter().zip(&after) {
        change = change.max((p[0] - q[0]).abs()).max((p[1] - q[1]).abs());
        scale = scale.max(q[0].abs()).max(q[1].abs());
    }
    Ok(if scale > 0.0 {
        change / scale
    } else {
        f64::INFINITY
    })
}

/// Time-steps the cell to steady state.
///
/// The forced Stokes flow approaches its steady state through a few slowly
/// decaying modes. The population changes `d0, d1, d2` over three successive
/// windows are fitted by the recurrence `d2 = a d1 + b d0`; when the fit is
/// tight and stable, the geometric tail it implies is added to the
/// populations, which removes most of the slow modes in one go. Convergence
/// is still judged on the plain one-step change.
fn drive_to_steady(sim: &mut Simulation, spec: &UnitCellSpec) -> Result<(u64, f64, Vec<f64>)> {
    let window = spec.check_every.max(2);
    let mut history = Vec::new();
    let mut prev = flatten(sim.populations());
    let mut deltas: Vec<Vec<f64>> = Vec::new();
    loop {
        sim.advance(window - 1)?;
        let residual = relative_change(sim)?;
        history.push(residual);
        let steps = sim.step_count();
        if residual < spec.tolerance {
            return Ok((steps, residual, history));
        }
        if steps >= spec.max_steps {
            return Err(Error::NotConverged {
                steps,
                residual,
                history,
            });
        }
        let current = flatten(sim.populations());
        deltas.push(current.iter().zip(&prev).map(|(a, b)| a - b).collect());
        if deltas.len() > 3 {
            deltas.remove(0);
        }
        prev = current;
        if deltas.len() == 3 {
            if let Some(tail) = geometric_tail(&deltas[0], &deltas[1], &deltas[2]) {
                let next: Vec<f64> = prev.iter().zip(&tail).map(|(f, t)| f + t).collect();
                sim.set_populations(
                    next.chunks_exact(Q)
                        .map(|c| c.try_into().unwrap())
                        .collect(),
                )?;
                prev = next;
                deltas.clear();
            }
        }
    }
}

fn flatten(f: &[[f64; Q]]) -> Vec<f64> {
    f.iter().flatten().copied().collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Sum of all future window changes if `d_{m+1} = a d_m + b d_{m-1}` keeps
/// holding, or `None` when the fit is loose or not contracting.
fn geometric_tail(d0: &[f64], d1: &[f64], d2: &[f64]) -> Option<Vec<f64>> {
    const FIT: f64 = 1e-2;
    let (s11, s10, s00) = (dot(d1, d1), dot(d1, d0), dot(d0, d0));
    let (r1, r0) = (dot(d1, d2), dot(d0, d2));
    let det = s11 * s00 - s10 * s10;
    let (a, b) = if det > 1e-12 * s11 * s00 {
        ((r1 * s00 - r0 * s10) / det, (s11 * r0 - s10 * r1) / det)
    } else {
        (r1 / s11, 0.0)
    };
    let misfit: f64 = d2
        .iter()
        .zip(d1.iter().zip(d0))
        .map(|(z, (y, x))| (z - a * y - b * x).powi(2))
        .sum();
    if !(misfit < FIT * FIT * dot(d2, d2)) {
        return None;
    }
    // both roots of z^2 - a z - b inside (-1, 1)
    let disc = a * a + 4.0 * b;
    let contracting = if disc >= 0.0 {
        let r = 0.5 * (a.abs() + disc.sqrt());
        r < 0.999
    } else {
        (-b).sqrt() < 0.999
    };
    if !contracting {
        return None;
    }
    let denom = 1.0 - a - b;
    Some(
        d2.iter()
            .zip(d1)
            .map(|(z, y)| ((a + b) * z + b * y) / denom)
            .collect(),
    )
}

fn max_divergence(n: usize, flags: &[CellFlag], v: &[[f64; 2]]) -> f64 {
    let idx = |i: usize, j: usize| (j % n) * n + (i % n);
    let mut worst: f64 = 0.0;
    for j in 0..n {
        for i in 0..n {
            let nb = [
                idx(i + 1, j),
                idx(i + n - 1, j),
                idx(i, j + 1),
                idx(i, j + n - 1),
            ];
            if flags[idx(i, j)] == CellFlag::Solid
                || nb.iter().any(|&c| flags[c] == CellFlag::Solid)
            {
                continue;
            }
            let div = 0.5 * n as f64 * ((v[nb[0]][0] - v[nb[1]][0]) + (v[nb[2]][1] - v[nb[3]][1]));
            worst = worst.max(div.abs());
        }
    }
    worst
}

/// Cell average `⟨(v_k)_j⟩` over the unit cell (obstacle counts as zero).
pub fn mean_velocity_form(solutions: &[CellSolution; 2]) -> [[f64; 2]; 2] {
    let mut a = [[0.0; 2]; 2];
    for (k, s) in solutions.iter().enumerate() {
        let cells = s.velocity.len() as f64;
        for j in 0..2 {
            a[j][k] = s.velocity.iter().map(|v| v[j]).sum::<f64>() / cells;
        }
    }
    a
}

/// `∫ ∇v_j : ∇v_k` from face differences. A face between two fluid cells
/// contributes `Δv_j · Δv_k`; a face between a fluid cell and the obstacle
/// sees the wall half a cell away and contributes `2 v_j · v_k`.
pub fn gradient_form(solutions: &[CellSolution; 2]) -> [[f64; 2]; 2] {
    let n = solutions[0].resolution;
    let flags = &solutions[0].flags;
    let mut a = [[0.0; 2]; 2];
    for j in 0..n {
        for i in 0..n {
            let c = j * n + i;
            for nb in [j * n + (i + 1) % n, ((j + 1) % n) * n + i] {
                let (fc, fn_) = (flags[c] == CellFlag::Fluid, flags[nb] == CellFlag::Fluid);
                let (weight, d): (f64, [[f64; 2]; 2]) = match (fc, fn_) {
                    (true, true) => (
                        1.0,
                        std::array::from_fn(|k| {
                            let v = &solutions[k].velocity;
                            [v[c][0] - v[nb][0], v[c][1] - v[nb][1]]
                        }),
                    ),
                    (true, false) => (2.0, std::array::from_fn(|k| solutions[k].velocity[c])),
                    (false, true) => (2.0, std::array::from_fn(|k| solutions[k].velocity[nb])),
                    (false, false) => continue,
                };
                for r in 0..2 {
                    for s in 0..2 {
                        a[r][s] += weight * (d[r][0] * d[s][0] + d[r][1] * d[s][1]);
                    }
                }
            }
        }
    }
    a
}

#[derive(Debug, Clone)]
pub struct PermeabilityResult {
    /// Mean-velocity form, the reported tensor.
    pub a: [[f64; 2]; 2],
    /// Energy form, the cross-check.
    pub a_gradient: [[f64; 2]; 2],
    pub solutions: [CellSolution; 2],
}

impl PermeabilityResult {
    /// Largest entry-wise gap between the two forms relative to the largest
    /// diagonal entry.
    pub fn weak_form_gap(&self) -> f64 {
        let scale = self.a[0][0].abs().max(self.a[1][1].abs());
        let mut gap: f64 = 0.0;
        for j in 0..2 {
            for k in 0..2 {
                gap = gap.max((self.a[j][k] - self.a_gradient[j][k]).abs());
            }
        }
        gap / scale
    }

    /// `‖A − Aᵀ‖∞ / ‖A‖∞`.
    pub fn asymmetry(&self) -> f64 {
        let a = &self.a;
        let norm = (a[0][0].abs() + a[0][1].abs()).max(a[1][0].abs() + a[1][1].abs());
        2.0 * (a[0][1] - a[1][0]).abs() / norm
    }

    /// Eigenvalues of the symmetric part, ascending.
    pub fn eigenvalues(&self) -> [f64; 2] {
        symmetric_eigenvalues(&self.a)
    }

    /// Scalar permeability `K = sigma^2 A` under isotropy.
    pub fn permeability(&self, sigma: f64) -> Result<Permeability> {
        permeability_from_cell(sigma, isotropic_value(self)?)
    }
}

fn symmetric_eigenvalues(a: &[[f64; 2]; 2]) -> [f64; 2] {
    let off = 0.5 * (a[0][1] + a[1][0]);
    let mean = 0.5 * (a[0][0] + a[1][1]);
    let half_diff = 0.5 * (a[0][0] - a[1][1]);
    let r = half_diff.hypot(off);
    [mean - r, mean + r]
}

/// Solves both axes and assembles `A`. Fails with a discretization error
/// when the mean and energy forms differ by more than
/// `spec.weak_form_tolerance`.
pub fn permeability_tensor(spec: &UnitCellSpec) -> Result<PermeabilityResult> {
    let exec = Execution::from_env();
    let (s0, s1) = if exec.is_serial() {
        (
            solve_unit_cell_with(spec, 0, exec.clone()),
            solve_unit_cell_with(spec, 1, exec),
        )
    } else {
        rayon::join(
            || solve_unit_cell_with(spec, 0, exec.clone()),
            || solve_unit_cell_with(spec, 1, exec.clone()),
        )
    };
    let solutions = [s0?, s1?];
    let result = PermeabilityResult {
        a: mean_velocity_form(&solutions),
        a_gradient: gradient_form(&solutions),
        solutions,
    };
    let gap = result.weak_form_gap();
    if gap > spec.weak_form_tolerance {
        return Err(Error::Discretization(format!(
            "mean and energy forms of A differ by {:.3}% at resolution {} (limit {:.3}%)",
            100.0 * gap,
            spec.resolution,
            100.0 * spec.weak_form_tolerance
        )));
    }
    Ok(result)
}

/// Drag matrix of the two-dimensional exterior local problem, `4π I`.
pub fn local_model_matrix_2d() -> [[f64; 2]; 2] {
    [[4.0 * PI, 0.0], [0.0, 4.0 * PI]]
}

/// [`local_model_matrix_2d`] behind a dimension check.
pub fn local_model_matrix(d: usize) -> Result<[[f64; 2]; 2]> {
    if d != 2 {
        return Err(Error::Unsupported(format!(
            "local model matrix is available for d = 2 only, got d = {d}"
        )));
    }
    Ok(local_model_matrix_2d())
}

/// Maximum relative eigenvalue spread accepted as isotropic.
pub const ISOTROPY_TOLERANCE: f64 = 0.05;

fn isotropic_value(result: &PermeabilityResult) -> Result<f64> {
    let [lo, hi] = result.eigenvalues();
    if !(lo > 0.0) {
        return domain(format!(
            "permeability tensor is not positive definite (eigenvalues {lo}, {hi})"
        ));
    }
    if (hi - lo) / hi > ISOTROPY_TOLERANCE {
        return domain(format!(
            "permeability tensor is anisotropic: eigenvalues {lo} and {hi} differ by more than {}%",
            100.0 * ISOTROPY_TOLERANCE
        ));
    }
    Ok(0.5 * (lo + hi))
}

/// Damping coefficient `nu / (sigma^2 A)` of the homogenized momentum
/// equation. `sigma = ∞` gives 0.
pub fn brinkman_damping_from_cell(result: &PermeabilityResult, sigma: f64, nu: f64) -> Result<f64> {
    let a = isotropic_value(result)?;
    brinkman_damping(a, sigma, nu)
}

/// [`brinkman_damping_from_cell`] for a known scalar `A`.
pub fn brinkman_damping(a: f64, sigma: f64, nu: f64) -> Result<f64> {
    if !(nu > 0.0) {
        return domain(format!("viscosity must be positive, got {nu}"));
    }
    Ok(nu * permeability_from_cell(sigma, a)?.inverse())
}
