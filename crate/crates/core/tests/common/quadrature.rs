//! Velocity-space quadrature used as an oracle for the closed-form moments.
//!
//! Tensor-product Gauss–Hermite rules, with nodes from Newton iteration on
//! the orthonormal Hermite recurrence, and a plain trapezoid rule on a
//! truncated box for an independent second opinion.

use std::f64::consts::PI;

#[derive(Debug, Clone)]
pub struct GaussHermite {
    /// Nodes for the weight `exp(-x^2)`.
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussHermite {
    pub fn new(n: usize) -> Self {
        assert!(n >= 2);
        let mut x = vec![0.0; n];
        let mut w = vec![0.0; n];
        let nf = n as f64;
        let pim4 = PI.powf(-0.25);
        let mut z: f64 = 0.0;
        for i in 0..n.div_ceil(2) {
            z = match i {
                0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
                1 => z - 1.14 * nf.powf(0.426) / z,
                2 => 1.86 * z - 0.86 * x[0],
                3 => 1.91 * z - 0.91 * x[1],
                _ => 2.0 * z - x[i - 2],
            };
            let mut pp = 0.0;
            for _ in 0..100 {
                let mut p1 = pim4;
                let mut p2 = 0.0;
                for j in 1..=n {
                    let p3 = p2;
                    p2 = p1;
                    let jf = j as f64;
                    p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
                }
                pp = (2.0 * nf).sqrt() * p2;
                let step = p1 / pp;
                z -= step;
                if step.abs() <= 1e-15 * z.abs().max(1.0) {
                    break;
                }
            }
            x[i] = z;
            x[n - 1 - i] = -z;
            w[i] = 2.0 / (pp * pp);
            w[n - 1 - i] = w[i];
        }
        Self {
            nodes: x,
            weights: w,
        }
    }

    /// Calls `f(v, weight)` for every node of the `d`-dimensional product rule
    /// adapted to a distribution centred at `center` with per-axis spread
    /// `s`, so that `Σ weight · h(v) ≈ ∫ h(v) dv` for integrands `h` that are a
    /// Gaussian of that shape times a polynomial.
    pub fn for_each_node(&self, center: &[f64], s: f64, mut f: impl FnMut(&[f64], f64)) {
        let d = center.len();
        let n = self.nodes.len();
        let scale = std::f64::consts::SQRT_2 * s;
        let adapted: Vec<f64> = self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * (x * x).exp() * scale)
            .collect();
        let mut idx = vec![0usize; d];
        let mut v = vec![0.0; d];
        loop {
            let mut weight = 1.0;
            for a in 0..d {
                v[a] = center[a] + scale * self.nodes[idx[a]];
                weight *= adapted[idx[a]];
            }
            f(&v, weight);
            let mut a = 0;
            loop {
                if a == d {
                    return;
                }
                idx[a] += 1;
                if idx[a] < n {
                    break;
                }
                idx[a] = 0;
                a += 1;
            }
        }
    }
}

/// Trapezoid rule over the box `center ± half_width` with `points` samples
/// per axis; calls `f(v, weight)` like [`GaussHermite::for_each_node`].
pub fn trapezoid_box(
    center: &[f64],
    half_width: f64,
    points: usize,
    mut f: impl FnMut(&[f64], f64),
) {
    let d = center.len();
    let h = 2.0 * half_width / (points - 1) as f64;
    let mut idx = vec![0usize; d];
    let mut v = vec![0.0; d];
    loop {
        let mut weight = 1.0;
        for a in 0..d {
            v[a] = center[a] - half_width + h * idx[a] as f64;
            let end = idx[a] == 0 || idx[a] == points - 1;
            weight *= if end { 0.5 * h } else { h };
        }
        f(&v, weight);
        let mut a = 0;
        loop {
            if a == d {
                return;
            }
            idx[a] += 1;
            if idx[a] < points {
                break;
            }
            idx[a] = 0;
            a += 1;
        }
    }
}
