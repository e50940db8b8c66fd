//! Quadrature oracles for moments of the homogenized Maxwellian.

use hlbm::kinetics::{maxwellian_eval, HomogenizedMaxwellian, Tensor};
use rand::Rng;

use super::quadrature::GaussHermite;

pub type Factor = fn(&HomogenizedMaxwellian, &[f64], usize) -> f64;

pub fn c(m: &HomogenizedMaxwellian, v: &[f64], i: usize) -> f64 {
    v[i] - m.u()[i]
}

pub fn cw(m: &HomogenizedMaxwellian, v: &[f64], i: usize) -> f64 {
    v[i] - m.varpi() * m.u()[i]
}

pub fn vel(_: &HomogenizedMaxwellian, v: &[f64], i: usize) -> f64 {
    v[i]
}

/// `m ∫ Π_a factor_a(v)[i_a] · weight(v) dv` for every index tuple, by
/// Gauss–Hermite quadrature with `nodes` points per axis.
pub fn quad_tensor(
    m: &HomogenizedMaxwellian,
    nodes: usize,
    factors: &[Factor],
    weight: impl Fn(&[f64]) -> f64,
) -> Tensor {
    let d = m.dimension();
    let rank = factors.len();
    let template = Tensor::zeros(d, rank);
    let indices = template.indices();
    let mut acc = vec![0.0; indices.len()];
    let gh = GaussHermite::new(nodes);
    let s = m.variance().sqrt();
    gh.for_each_node(&m.mean_velocity(), s, |v, w| {
        let base = w * weight(v);
        for (slot, idx) in acc.iter_mut().zip(&indices) {
            let mut term = base;
            for (f, &i) in factors.iter().zip(idx) {
                term *= f(m, v, i);
            }
            *slot += term;
        }
    });
    let mut t = Tensor::zeros(d, rank);
    for (idx, value) in indices.iter().zip(acc) {
        t.set(idx, m.mass() * value);
    }
    t
}

pub fn quad_maxwellian(m: &HomogenizedMaxwellian, nodes: usize, factors: &[Factor]) -> Tensor {
    quad_tensor(m, nodes, factors, |v| maxwellian_eval(m, v))
}

pub fn random_maxwellian(r: &mut impl Rng, d: usize) -> HomogenizedMaxwellian {
    let u: Vec<f64> = (0..d).map(|_| r.gen_range(-1.0..1.0)).collect();
    HomogenizedMaxwellian::new(
        r.gen_range(0.5..2.0),
        &u,
        r.gen_range(0.5..=1.0),
        r.gen_range(0.5..2.0),
    )
    .unwrap()
}

pub fn tensor_close(a: &Tensor, b: &Tensor, tol: f64) -> bool {
    a.max_abs_diff(b) <= tol * b.max_abs().max(1.0)
}
