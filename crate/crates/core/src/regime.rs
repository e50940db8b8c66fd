//! Geometric scaling of a periodic obstacle matrix.
//!
//! A domain is tiled by cubic cells of side `epsilon`, each holding one
//! centered spherical obstacle of diameter `a_eps`. How fast `a_eps` shrinks
//! relative to `epsilon` decides which homogenized equation governs the
//! limit: Navier–Stokes, Brinkman, or one of two Darcy laws. This module
//! computes the size ratio `sigma_eps`, the critical obstacle size, the
//! porosity, the regime label, and the kinetic porosity-control parameter
//! that feeds the lattice solver.

use std::f64::consts::PI;
use std::fmt;

use crate::error::{domain, Error, Result};

/// How the obstacle diameter depends on the cell size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ObstacleLaw {
    /// A fixed diameter, independent of `epsilon`.
    Explicit(f64),
    /// `a_eps = prefactor * epsilon^exponent`.
    PowerLaw { prefactor: f64, exponent: u32 },
}

/// Cell size, dimension and obstacle law of a periodic porous matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PorousScaling {
    d: usize,
    epsilon: f64,
    law: ObstacleLaw,
}

impl PorousScaling {
    /// Validates `d ∈ {2, 3}`, `epsilon > 0` and `0 < a_eps <= epsilon`.
    ///
    /// Touching obstacles (`a_eps == epsilon`) are admitted: they are the
    /// closest packing of the cubic arrangement and carry the minimal porosity.
    pub fn new(d: usize, epsilon: f64, law: ObstacleLaw) -> Result<Self> {
        if d != 2 && d != 3 {
            return Err(Error::Unsupported(format!(
                "dimension {d}; only d = 2 and d = 3 are modelled"
            )));
        }
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return domain(format!("cell size must be positive, got {epsilon}"));
        }
        if let ObstacleLaw::PowerLaw {
            prefactor,
            exponent,
        } = law
        {
            if !(prefactor > 0.0 && prefactor.is_finite()) {
                return domain(format!(
                    "power-law prefactor must be positive, got {prefactor}"
                ));
            }
            if exponent == 0 {
                return domain("power-law exponent must be at least 1");
            }
        }
        let scaling = Self { d, epsilon, law };
        let a = scaling.obstacle_size();
        if !(a > 0.0) {
            return domain(format!("obstacle size must be positive, got {a}"));
        }
        // Allow a few ulps so that C = 1, n = 1 is not rejected by rounding.
        if a > epsilon * (1.0 + 4.0 * f64::EPSILON) {
            return domain(format!(
                "obstacle diameter {a} exceeds the cell size {epsilon}"
            ));
        }
        Ok(scaling)
    }

    /// Power-law shorthand, `a_eps = prefactor * epsilon^exponent`.
    pub fn power_law(d: usize, epsilon: f64, prefactor: f64, exponent: u32) -> Result<Self> {
        Self::new(
            d,
            epsilon,
            ObstacleLaw::PowerLaw {
                prefactor,
                exponent,
            },
        )
    }

    pub fn explicit(d: usize, epsilon: f64, a_eps: f64) -> Result<Self> {
        Self::new(d, epsilon, ObstacleLaw::Explicit(a_eps))
    }

    pub fn dimension(&self) -> usize {
        self.d
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn law(&self) -> ObstacleLaw {
        self.law
    }

    /// Obstacle diameter `a_eps`.
    pub fn obstacle_size(&self) -> f64 {
        match self.law {
            ObstacleLaw::Explicit(a) => a,
            ObstacleLaw::PowerLaw {
                prefactor,
                exponent,
            } => prefactor * self.epsilon.powi(exponent as i32),
        }
    }
}

/// Ratio of cell period to obstacle size whose `epsilon -> 0` limit selects
/// the homogenization regime.
///
/// `(eps^d / a^(d-2))^(1/2)` for `d = 3`, `eps * |ln(a / eps)|^(1/2)` for `d = 2`.
pub fn sigma_ratio(scaling: &PorousScaling) -> Result<f64> {
    let eps = scaling.epsilon;
    let a = scaling.obstacle_size();
    if !(a > 0.0) || a > eps * (1.0 + 4.0 * f64::EPSILON) {
        return domain(format!(
            "need 0 < a_eps <= eps, got a_eps = {a}, eps = {eps}"
        ));
    }
    let d = scaling.d as i32;
    Ok(if d == 2 {
        eps * (a / eps).ln().abs().sqrt()
    } else {
        // eps^(d/2) * a^(-(d-2)/2), kept in this form to avoid overflow of
        // eps^d / a^(d-2) for tiny obstacles.
        eps.powf(0.5 * d as f64) * a.powf(-0.5 * (d - 2) as f64)
    })
}

/// Obstacle diameter at which `sigma_eps` stays bounded away from 0 and ∞.
///
/// `c0 * eps^(d/(d-2))` for `d = 3`, `exp(-c0 / eps^2)` for `d = 2`.
pub fn critical_obstacle_size(d: usize, epsilon: f64, c0: f64) -> Result<f64> {
    if !(c0 > 0.0 && c0.is_finite()) {
        return domain(format!(
            "critical-size prefactor must be positive, got {c0}"
        ));
    }
    if !(epsilon > 0.0) {
        return domain(format!("cell size must be positive, got {epsilon}"));
    }
    match d {
        2 => Ok((-c0 / (epsilon * epsilon)).exp()),
        3 => Ok(c0 * epsilon.powf(d as f64 / (d as f64 - 2.0))),
        _ => Err(Error::Unsupported(format!("dimension {d}"))),
    }
}

/// The limit of `sigma_eps` reached at the critical size: `c0^((2-d)/2)`
/// for `d = 3` and `c0^(1/2)` for `d = 2`.
pub fn critical_sigma_limit(d: usize, c0: f64) -> Result<f64> {
    if !(c0 > 0.0) {
        return domain(format!(
            "critical-size prefactor must be positive, got {c0}"
        ));
    }
    match d {
        2 => Ok(c0.sqrt()),
        3 => Ok(c0.powf((2.0 - d as f64) / 2.0)),
        _ => Err(Error::Unsupported(format!("dimension {d}"))),
    }
}

/// Value of `lim sigma_eps` as `epsilon -> 0`, kept exact rather than
/// encoded in floating-point infinities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SigmaLimit {
    Zero,
    Finite(f64),
    Infinite,
}

impl fmt::Display for SigmaLimit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SigmaLimit::Zero => write!(f, "0"),
            SigmaLimit::Finite(s) => write!(f, "{s}"),
            SigmaLimit::Infinite => write!(f, "inf"),
        }
    }
}

/// Homogenization regime of the nonstationary problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    /// Obstacles too small: Navier–Stokes.
    NavierStokes,
    /// Critical obstacles: Brinkman law.
    Brinkman,
    /// Obstacles between critical and cell size: time-dependent Darcy law.
    DarcyTimeDependent,
    /// Obstacles of cell size: Darcy law with memory.
    DarcyMemory,
}

impl Regime {
    pub fn label(&self) -> &'static str {
        match self {
            Regime::NavierStokes => "NSE(i)",
            Regime::Brinkman => "Brinkman(ii)",
            Regime::DarcyTimeDependent => "Darcy_t(iii)",
            Regime::DarcyMemory => "Darcy_mem(iv)",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeReport {
    pub case: Regime,
    pub sigma_limit: SigmaLimit,
    pub porosity_limit: f64,
}

/// Classifies a three-dimensional power-law obstacle matrix.
///
/// Only the law `(prefactor, exponent)` matters; the cell size stored in
/// `scaling` is ignored.
pub fn classify_regime(scaling: &PorousScaling) -> Result<RegimeReport> {
    let ObstacleLaw::PowerLaw {
        prefactor: c,
        exponent: n,
    } = scaling.law
    else {
        return Err(Error::Unsupported(
            "regime classification needs a power-law obstacle size a_eps = C eps^n".into(),
        ));
    };
    if scaling.d != 3 {
        return Err(Error::Unsupported(format!(
            "regime classification is implemented for d = 3 only, got d = {}",
            scaling.d
        )));
    }
    let report = match n {
        4 => RegimeReport {
            case: Regime::NavierStokes,
            sigma_limit: SigmaLimit::Infinite,
            porosity_limit: 1.0,
        },
        3 => RegimeReport {
            case: Regime::Brinkman,
            sigma_limit: SigmaLimit::Finite(c.powf(-0.5)),
            porosity_limit: 1.0,
        },
        2 => RegimeReport {
            case: Regime::DarcyTimeDependent,
            sigma_limit: SigmaLimit::Zero,
            porosity_limit: 1.0,
        },
        1 => {
            if c > 1.0 {
                return domain(format!(
                    "a_eps = {c} eps is larger than the cell for every eps"
                ));
            }
            RegimeReport {
                case: Regime::DarcyMemory,
                sigma_limit: SigmaLimit::Zero,
                porosity_limit: 1.0 - c * PI / 6.0,
            }
        }
        _ => {
            return Err(Error::Unsupported(format!(
                "power-law exponent {n}; only n = 1, 2, 3, 4 are classified"
            )))
        }
    };
    Ok(report)
}

/// Estimates `lim sigma_eps` numerically from a least-squares fit of
/// `ln sigma` against `ln eps` over the supplied (decreasing) cell sizes.
///
/// A slope below `-tol` means divergence, above `tol` means decay to zero,
/// and anything in between is reported as the value at the smallest `eps`.
pub fn probe_sigma_limit(
    d: usize,
    prefactor: f64,
    exponent: u32,
    eps_values: &[f64],
    tol: f64,
) -> Result<SigmaLimit> {
    if eps_values.len() < 2 {
        return domain("need at least two cell sizes to probe a limit");
    }
    let mut xs = Vec::with_capacity(eps_values.len());
    let mut ys = Vec::with_capacity(eps_values.len());
    for &eps in eps_values {
        let s = PorousScaling::power_law(d, eps, prefactor, exponent)?;
        xs.push(eps.ln());
        ys.push(sigma_ratio(&s)?.ln());
    }
    let slope = least_squares_slope(&xs, &ys);
    let last = eps_values.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(if slope < -tol {
        SigmaLimit::Infinite
    } else if slope > tol {
        SigmaLimit::Zero
    } else {
        let s = PorousScaling::power_law(d, last, prefactor, exponent)?;
        SigmaLimit::Finite(sigma_ratio(&s)?)
    })
}

pub(crate) fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Void fraction of a cubic cell holding a centered sphere of diameter
/// `a_eps`: `1 - pi a^3 / (6 eps^3)`.
pub fn porosity(scaling: &PorousScaling) -> Result<f64> {
    if scaling.d != 3 {
        return Err(Error::Unsupported(format!(
            "porosity is defined for spherical obstacles in d = 3, got d = {}",
            scaling.d
        )));
    }
    let ratio = scaling.obstacle_size() / scaling.epsilon;
    let phi = 1.0 - PI * ratio.powi(3) / 6.0;
    if !(phi > 0.0 && phi <= 1.0) {
        return domain(format!("porosity {phi} outside (0, 1]"));
    }
    Ok(phi)
}

/// One line of the `sigma_eps(eps)` table.
#[derive(Debug, Clone, PartialEq)]
pub struct RegimeRow {
    pub epsilon: f64,
    pub a_eps: f64,
    pub sigma: f64,
    pub porosity: f64,
    pub case: Regime,
}

/// Tabulates `a_eps`, `sigma_eps` and porosity of a `d = 3` power law over
/// the given cell sizes, labelled with the limiting regime.
pub fn regime_table(prefactor: f64, exponent: u32, eps_values: &[f64]) -> Result<Vec<RegimeRow>> {
    eps_values
        .iter()
        .map(|&eps| {
            let s = PorousScaling::power_law(3, eps, prefactor, exponent)?;
            Ok(RegimeRow {
                epsilon: eps,
                a_eps: s.obstacle_size(),
                sigma: sigma_ratio(&s)?,
                porosity: porosity(&s)?,
                case: classify_regime(&s)?.case,
            })
        })
        .collect()
}

/// Scalar permeability; `Infinite` switches the porous drag off.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Permeability {
    Finite(f64),
    Infinite,
}

impl Permeability {
    pub fn finite(k: f64) -> Result<Self> {
        if k.is_infinite() && k > 0.0 {
            return Ok(Permeability::Infinite);
        }
        if !(k > 0.0) {
            return Err(Error::PorosityControl {
                varpi: f64::NAN,
                reason: format!("permeability must be positive, got {k}"),
            });
        }
        Ok(Permeability::Finite(k))
    }

    /// `1/K`, zero for infinite permeability.
    pub fn inverse(&self) -> f64 {
        match *self {
            Permeability::Finite(k) => 1.0 / k,
            Permeability::Infinite => 0.0,
        }
    }

    pub fn value(&self) -> f64 {
        match *self {
            Permeability::Finite(k) => k,
            Permeability::Infinite => f64::INFINITY,
        }
    }
}

impl fmt::Display for Permeability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Permeability::Finite(k) => write!(f, "{k:.16e}"),
            Permeability::Infinite => write!(f, "inf"),
        }
    }
}

/// Scalar permeability from the size ratio and the cell-problem eigenvalue,
/// `K = sigma^2 A`, so that the drag `nu/K` equals `nu / (sigma^2 A)`.
pub fn permeability_from_cell(sigma: f64, a: f64) -> Result<Permeability> {
    if sigma.is_infinite() {
        return Ok(Permeability::Infinite);
    }
    Permeability::finite(sigma * sigma * a)
}

/// Porosity control `1 - nu tau / K`.
pub fn porosity_control(nu: f64, tau: f64, k: Permeability) -> Result<f64> {
    if !(nu > 0.0 && tau > 0.0) {
        return domain(format!(
            "viscosity and relaxation time must be positive, got nu = {nu}, tau = {tau}"
        ));
    }
    check_varpi(1.0 - nu * tau * k.inverse())
}

/// Porosity control under the diffusive assignment `tau = 3 nu eps^2`:
/// `1 - 3 nu^2 eps^2 / K`.
pub fn porosity_control_diffusive(nu: f64, eps_param: f64, k: Permeability) -> Result<f64> {
    if !(nu > 0.0 && eps_param > 0.0) {
        return domain(format!(
            "viscosity and scaling parameter must be positive, got nu = {nu}, eps = {eps_param}"
        ));
    }
    check_varpi(1.0 - 3.0 * nu * nu * eps_param * eps_param * k.inverse())
}

fn check_varpi(varpi: f64) -> Result<f64> {
    if varpi < 0.0 {
        return Err(Error::PorosityControl {
            varpi,
            reason: "nu tau / K exceeds 1; the drag overdamps the relaxation".into(),
        });
    }
    if !(varpi <= 1.0) {
        return Err(Error::PorosityControl {
            varpi,
            reason: "values above 1 are not physical".into(),
        });
    }
    Ok(varpi)
}

/// Parameters of the diffusively scaled kinetic model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KineticScaling {
    pub nu: f64,
    pub eps_param: f64,
    pub permeability: Permeability,
    pub tau: f64,
    pub varpi: f64,
}

impl KineticScaling {
    /// Relaxation time `3 nu eps^2` and the matching porosity control.
    pub fn diffusive(nu: f64, eps_param: f64, permeability: Permeability) -> Result<Self> {
        let varpi = porosity_control_diffusive(nu, eps_param, permeability)?;
        Ok(Self {
            nu,
            eps_param,
            permeability,
            tau: 3.0 * nu * eps_param * eps_param,
            varpi,
        })
    }

    /// Momentum sink coefficient `(1 - varpi) / tau`, equal to `nu / K`.
    pub fn damping_rate(&self) -> f64 {
        (1.0 - self.varpi) / self.tau
    }
}

/// Knudsen, Mach and Reynolds numbers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Nondimensional {
    pub knudsen: f64,
    pub mach: f64,
    pub reynolds: f64,
}

/// `Kn = l_f / L`, `Ma = U / c_s`, `Re = U L / nu`.
pub fn nondimensional_numbers(
    mean_free_path: f64,
    sound_speed: f64,
    velocity: f64,
    length: f64,
    nu: f64,
) -> Result<Nondimensional> {
    for (name, v) in [
        ("mean free path", mean_free_path),
        ("sound speed", sound_speed),
        ("velocity", velocity),
        ("length", length),
        ("viscosity", nu),
    ] {
        if !(v > 0.0) {
            return domain(format!("{name} must be positive, got {v}"));
        }
    }
    Ok(Nondimensional {
        knudsen: mean_free_path / length,
        mach: velocity / sound_speed,
        reynolds: velocity * length / nu,
    })
}

/// Mean absolute thermal speed `sqrt(8 R theta / pi)` of an ideal gas whose
/// isothermal sound speed is `c_s = sqrt(3 R theta)`.
pub fn mean_thermal_speed(sound_speed: f64) -> f64 {
    sound_speed * (8.0 / (3.0 * PI)).sqrt()
}

/// Hard-sphere kinematic viscosity `pi c_mean l_f / 8`.
pub fn kinetic_viscosity(mean_thermal_speed: f64, mean_free_path: f64) -> f64 {
    PI * mean_thermal_speed * mean_free_path / 8.0
}

/// Mean free path and mean thermal speed after substituting `c_s <- 1/eps`;
/// their ratio is the relaxation time `3 nu eps^2`.
pub fn diffusive_gas_scales(nu: f64, eps_param: f64) -> (f64, f64) {
    let c_mean = (8.0 / (3.0 * PI)).sqrt() / eps_param;
    let l_f = (24.0 / PI).sqrt() * nu * eps_param;
    (l_f, c_mean)
}
