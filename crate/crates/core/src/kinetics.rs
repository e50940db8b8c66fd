//! Closed-form algebra of the porosity-controlled Maxwellian.
//!
//! The homogenized equilibrium is a Gaussian in velocity space with mean
//! `varpi u` and variance `1/(3 eps^2)` per axis:
//!
//! ```text
//! M(v) = n eps^d / (2π/3)^{d/2} · exp(-(3/2) eps^2 |v - varpi u|^2)
//! ```
//!
//! All velocity moments used by the Chapman–Enskog expansion are therefore
//! Isserlis (Wick) sums, and every function here returns them exactly. With
//! `c = v - u` the peculiar velocity and `c_w = v - varpi u` the velocity
//! relative to the equilibrium mean, `c = c_w + (varpi - 1) u`.

use std::f64::consts::PI;

use crate::error::{domain, Error, Result};
use crate::regime::Permeability;

/// Dense tensor of rank `rank` over `d` dimensions, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    d: usize,
    rank: usize,
    data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(d: usize, rank: usize) -> Self {
        Self {
            d,
            rank,
            data: vec![0.0; d.pow(rank as u32)],
        }
    }

    /// Fills every entry from its index tuple.
    pub fn from_fn(d: usize, rank: usize, f: impl Fn(&[usize]) -> f64) -> Self {
        let mut t = Self::zeros(d, rank);
        for flat in 0..t.data.len() {
            t.data[flat] = f(&t.unflatten(flat));
        }
        t
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    fn flat(&self, idx: &[usize]) -> usize {
        assert_eq!(idx.len(), self.rank, "tensor index has wrong rank");
        idx.iter().fold(0, |acc, &i| {
            assert!(i < self.d, "tensor index {i} out of range");
            acc * self.d + i
        })
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[self.flat(idx)]
    }

    pub fn set(&mut self, idx: &[usize], value: f64) {
        let k = self.flat(idx);
        self.data[k] = value;
    }

    /// All index tuples in storage order.
    pub fn indices(&self) -> Vec<Vec<usize>> {
        (0..self.data.len())
            .map(|flat| self.unflatten(flat))
            .collect()
    }

    fn unflatten(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.rank];
        for slot in idx.iter_mut().rev() {
            *slot = flat % self.d;
            flat /= self.d;
        }
        idx
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn max_abs_diff(&self, other: &Tensor) -> f64 {
        assert_eq!((self.d, self.rank), (other.d, other.rank));
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    fn axpy(&mut self, alpha: f64, x: &Tensor) {
        for (a, b) in self.data.iter_mut().zip(&x.data) {
            *a += alpha * b;
        }
    }
}

fn kd(i: usize, j: usize) -> f64 {
    if i == j {
        1.0
    } else {
        0.0
    }
}

/// Parameters of the homogenized Maxwellian.
#[derive(Debug, Clone, PartialEq)]
pub struct HomogenizedMaxwellian {
    n: f64,
    u: Vec<f64>,
    varpi: f64,
    eps: f64,
    m: f64,
}

impl HomogenizedMaxwellian {
    /// Particle density `n`, flow velocity `u` (its length sets `d`), porosity
    /// control `varpi` and scaling parameter `eps`; particle mass 1.
    pub fn new(n: f64, u: &[f64], varpi: f64, eps: f64) -> Result<Self> {
        if !(n > 0.0 && n.is_finite()) {
            return domain(format!("particle density must be positive, got {n}"));
        }
        if u.is_empty() || u.len() > 3 {
            return Err(Error::Unsupported(format!(
                "dimension {}; expected 1, 2 or 3",
                u.len()
            )));
        }
        if u.iter().any(|x| !x.is_finite()) {
            return domain("velocity must be finite");
        }
        if !(0.0..=1.0).contains(&varpi) {
            return Err(Error::PorosityControl {
                varpi,
                reason: "the porosity control must lie in [0, 1]".into(),
            });
        }
        if !(eps > 0.0 && eps.is_finite()) {
            return domain(format!("scaling parameter must be positive, got {eps}"));
        }
        Ok(Self {
            n,
            u: u.to_vec(),
            varpi,
            eps,
            m: 1.0,
        })
    }

    pub fn with_mass(mut self, m: f64) -> Result<Self> {
        if !(m > 0.0 && m.is_finite()) {
            return domain(format!("particle mass must be positive, got {m}"));
        }
        self.m = m;
        Ok(self)
    }

    pub fn dimension(&self) -> usize {
        self.u.len()
    }

    pub fn n(&self) -> f64 {
        self.n
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }

    pub fn varpi(&self) -> f64 {
        self.varpi
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn mass(&self) -> f64 {
        self.m
    }

    /// Mass density `m n`.
    pub fn rho(&self) -> f64 {
        self.m * self.n
    }

    /// Per-axis velocity variance `1/(3 eps^2)`.
    pub fn variance(&self) -> f64 {
        1.0 / (3.0 * self.eps * self.eps)
    }

    /// Mean of the distribution, `varpi u`.
    pub fn mean_velocity(&self) -> Vec<f64> {
        self.u.iter().map(|x| self.varpi * x).collect()
    }

    /// `(varpi - 1) u`, the mean of `c = v - u`.
    fn drift(&self) -> Vec<f64> {
        self.u.iter().map(|x| (self.varpi - 1.0) * x).collect()
    }
}

/// Value of the homogenized Maxwellian at velocity `v`.
pub fn maxwellian_eval(m: &HomogenizedMaxwellian, v: &[f64]) -> f64 {
    let d = m.dimension();
    assert_eq!(v.len(), d, "velocity has wrong dimension");
    let e2 = m.eps * m.eps;
    let r2: f64 = v
        .iter()
        .zip(&m.u)
        .map(|(vi, ui)| (vi - m.varpi * ui).powi(2))
        .sum();
    m.n * m.eps.powi(d as i32) / (2.0 * PI / 3.0).powf(0.5 * d as f64) * (-1.5 * e2 * r2).exp()
}

/// Zeroth, first and pressure moments of the equilibrium.
#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumMoments {
    pub rho: f64,
    /// `varpi u`.
    pub u_eq: Vec<f64>,
    /// Ideal-gas pressure `rho / (3 eps^2)`.
    pub p: f64,
}

pub fn equilibrium_moments(m: &HomogenizedMaxwellian) -> EquilibriumMoments {
    EquilibriumMoments {
        rho: m.rho(),
        u_eq: m.mean_velocity(),
        p: m.rho() * m.variance(),
    }
}

/// `m ∫ c_i c_j M dv = rho [δ_ij / (3 eps^2) + (1 - varpi)^2 u_i u_j]`.
pub fn central_moment2(m: &HomogenizedMaxwellian) -> Tensor {
    let (rho, s2, b) = (m.rho(), m.variance(), m.drift());
    Tensor::from_fn(m.dimension(), 2, |ix| {
        let (i, j) = (ix[0], ix[1]);
        rho * (s2 * kd(i, j) + b[i] * b[j])
    })
}

/// `m ∫ c_i c_j c_k M dv` with `b = (varpi - 1) u`:
/// `rho [(δ_ij b_k + δ_ik b_j + δ_jk b_i) / (3 eps^2) + b_i b_j b_k]`.
pub fn central_moment3(m: &HomogenizedMaxwellian) -> Tensor {
    let (rho, s2, b) = (m.rho(), m.variance(), m.drift());
    Tensor::from_fn(m.dimension(), 3, |ix| {
        let (i, j, k) = (ix[0], ix[1], ix[2]);
        rho * (s2 * (kd(i, j) * b[k] + kd(i, k) * b[j] + kd(j, k) * b[i]) + b[i] * b[j] * b[k])
    })
}

/// `m ∫ c_i c_j c_w,k M dv = rho (δ_ik b_j + δ_jk b_i) / (3 eps^2)`.
pub fn moment_ccw(m: &HomogenizedMaxwellian) -> Tensor {
    let (rho, s2, b) = (m.rho(), m.variance(), m.drift());
    Tensor::from_fn(m.dimension(), 3, |ix| {
        let (i, j, k) = (ix[0], ix[1], ix[2]);
        rho * s2 * (kd(i, k) * b[j] + kd(j, k) * b[i])
    })
}

/// `m ∫ c_i c_j c_w,k v_l M dv`:
///
/// ```text
/// rho/(9 eps^4) (δ_ij δ_kl + δ_ik δ_jl + δ_il δ_jk)
///   + rho/(3 eps^2) [(varpi-1)^2 u_i u_j δ_kl
///                    + (varpi-1) varpi (u_j u_l δ_ik + u_i u_l δ_jk)]
/// ```
pub fn mixed_moment_ccwv(m: &HomogenizedMaxwellian) -> Tensor {
    let (rho, s2, b) = (m.rho(), m.variance(), m.drift());
    let w = m.mean_velocity();
    Tensor::from_fn(m.dimension(), 4, |ix| {
        let (i, j, k, l) = (ix[0], ix[1], ix[2], ix[3]);
        let iso = kd(i, j) * kd(k, l) + kd(i, k) * kd(j, l) + kd(i, l) * kd(j, k);
        let drift = b[i] * b[j] * kd(k, l) + b[j] * w[l] * kd(i, k) + b[i] * w[l] * kd(j, k);
        rho * (s2 * s2 * iso + s2 * drift)
    })
}

/// Local field derivatives entering the first-order expansion.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldGradients {
    /// `grad_u[i][j] = ∂_i u_j`.
    pub grad_u: Tensor,
    pub dt_u: Vec<f64>,
    pub grad_rho: Vec<f64>,
    /// Body force per unit mass.
    pub force: Vec<f64>,
}

impl FieldGradients {
    pub fn zero(d: usize) -> Self {
        Self {
            grad_u: Tensor::zeros(d, 2),
            dt_u: vec![0.0; d],
            grad_rho: vec![0.0; d],
            force: vec![0.0; d],
        }
    }

    pub fn dimension(&self) -> usize {
        self.dt_u.len()
    }

    pub fn divergence(&self) -> f64 {
        (0..self.dimension())
            .map(|i| self.grad_u.get(&[i, i]))
            .sum()
    }

    fn check(&self, d: usize) -> Result<()> {
        let g = &self.grad_u;
        if g.dim() != d
            || g.rank() != 2
            || self.dt_u.len() != d
            || self.grad_rho.len() != d
            || self.force.len() != d
        {
            return domain(format!("field gradients do not match dimension {d}"));
        }
        Ok(())
    }
}

/// First-order population `M [1 - 3 eps^2 nu (-a + b + c + d - e)]` with
///
/// * `a = ∇·u`
/// * `b = c·∇rho / rho`
/// * `c = 3 eps^2 varpi c_w·∂_t u`
/// * `d = 3 eps^2 varpi c_w,k v_l ∂_l u_k`
/// * `e = 3 eps^2 c_w·F / m`
///
/// The bracket is `D ln M / Dt` after eliminating `∂_t rho` by continuity;
/// the force enters with a minus sign because `∇_v M = -3 eps^2 c_w M`.
pub fn chapman_enskog_population(
    m: &HomogenizedMaxwellian,
    grads: &FieldGradients,
    nu: f64,
    v: &[f64],
) -> Result<f64> {
    let d = m.dimension();
    grads.check(d)?;
    if v.len() != d {
        return domain("velocity has wrong dimension");
    }
    let e2 = m.eps * m.eps;
    let rho = m.rho();
    let c: Vec<f64> = (0..d).map(|i| v[i] - m.u[i]).collect();
    let cw: Vec<f64> = (0..d).map(|i| v[i] - m.varpi * m.u[i]).collect();
    let a = grads.divergence();
    let b: f64 = (0..d).map(|i| c[i] * grads.grad_rho[i]).sum::<f64>() / rho;
    let cf = 3.0 * e2 * m.varpi * (0..d).map(|i| cw[i] * grads.dt_u[i]).sum::<f64>();
    let mut df = 0.0;
    for (k, cwk) in cw.iter().enumerate().take(d) {
        for (l, vl) in v.iter().enumerate().take(d) {
            df += cwk * vl * grads.grad_u.get(&[l, k]);
        }
    }
    df *= 3.0 * e2 * m.varpi;
    let ef = 3.0 * e2 * (0..d).map(|i| cw[i] * grads.force[i]).sum::<f64>() / m.m;
    Ok(maxwellian_eval(m, v) * (1.0 - 3.0 * e2 * nu * (-a + b + cf + df - ef)))
}

/// Closed-form zeroth moment of [`chapman_enskog_population`]:
/// `n [1 + 3 eps^2 nu ((1 - varpi) ∇·u - (varpi - 1) u·∇rho / rho)]`.
pub fn chapman_enskog_density(
    m: &HomogenizedMaxwellian,
    grads: &FieldGradients,
    nu: f64,
) -> Result<f64> {
    let d = m.dimension();
    grads.check(d)?;
    let e2 = m.eps * m.eps;
    let a = grads.divergence();
    let u_grad_rho: f64 = (0..d).map(|i| m.u[i] * grads.grad_rho[i]).sum::<f64>() / m.rho();
    Ok(m.n * (1.0 + 3.0 * e2 * nu * ((1.0 - m.varpi) * a - (m.varpi - 1.0) * u_grad_rho)))
}

/// Order in `eps` of the remainder between [`chapman_enskog_stress`] and the
/// Newtonian stress when `1 - varpi = O(eps^2)`.
pub const STRESS_REMAINDER_ORDER: u32 = 2;

/// Second central moment `m ∫ c_i c_j f dv` of the first-order population,
/// assembled from the exact Gaussian moments, together with the remainder
/// order [`STRESS_REMAINDER_ORDER`].
///
/// For `varpi = 1` the result is exactly `p δ_ij - nu rho (∂_i u_j + ∂_j u_i)`.
pub fn chapman_enskog_stress(
    rho: f64,
    u: &[f64],
    grads: &FieldGradients,
    nu: f64,
    eps: f64,
    varpi: f64,
) -> Result<(Tensor, u32)> {
    let m = HomogenizedMaxwellian::new(rho, u, varpi, eps)?;
    let d = m.dimension();
    grads.check(d)?;
    let e2 = eps * eps;
    let c2 = central_moment2(&m);
    let c3 = central_moment3(&m);
    let m3 = moment_ccw(&m);
    let c4 = mixed_moment_ccwv(&m);
    let a = grads.divergence();

    // moment of the bracket (-a + b + c + d - e) weighted by c_i c_j
    let mut bracket = Tensor::zeros(d, 2);
    bracket.axpy(-a, &c2);
    for i in 0..d {
        for j in 0..d {
            let mut s = 0.0;
            for k in 0..d {
                s += c3.get(&[i, j, k]) * grads.grad_rho[k] / rho;
                s += 3.0 * e2 * varpi * m3.get(&[i, j, k]) * grads.dt_u[k];
                s -= 3.0 * e2 * m3.get(&[i, j, k]) * grads.force[k] / m.mass();
                for l in 0..d {
                    s += 3.0 * e2 * varpi * c4.get(&[i, j, k, l]) * grads.grad_u.get(&[l, k]);
                }
            }
            bracket.set(&[i, j], bracket.get(&[i, j]) + s);
        }
    }
    let mut p = c2;
    p.axpy(-3.0 * e2 * nu, &bracket);
    Ok((p, STRESS_REMAINDER_ORDER))
}

/// `p δ_ij - nu rho (∂_i u_j + ∂_j u_i)` with `p = rho / (3 eps^2)`.
pub fn newtonian_stress(rho: f64, grads: &FieldGradients, nu: f64, eps: f64) -> Tensor {
    let p = rho / (3.0 * eps * eps);
    let g = &grads.grad_u;
    Tensor::from_fn(g.dim(), 2, |ix| {
        let (i, j) = (ix[0], ix[1]);
        p * kd(i, j) - nu * rho * (g.get(&[i, j]) + g.get(&[j, i]))
    })
}

/// Momentum sink of the homogenized collision, `-nu rho u / K`.
pub fn momentum_balance_rhs(rho: f64, u: &[f64], nu: f64, k: Permeability) -> Vec<f64> {
    let inv = k.inverse();
    u.iter().map(|x| -nu * inv * rho * x).collect()
}

/// The same sink written through the collision, `-(1 - varpi) rho u / tau`.
pub fn collision_momentum_sink(rho: f64, u: &[f64], tau: f64, varpi: f64) -> Vec<f64> {
    u.iter().map(|x| -(1.0 - varpi) * rho * x / tau).collect()
}
