//! D2Q9 velocity set.

use crate::error::{domain, Error, Result};

pub const Q: usize = 9;

/// Discrete velocities, rest population first, then axis links, then diagonals.
pub const VELOCITIES: [[i32; 2]; Q] = [
    [0, 0],
    [1, 0],
    [0, 1],
    [-1, 0],
    [0, -1],
    [1, 1],
    [-1, 1],
    [-1, -1],
    [1, -1],
];

pub(crate) const CX: [f64; Q] = [0.0, 1.0, 0.0, -1.0, 0.0, 1.0, -1.0, -1.0, 1.0];
pub(crate) const CY: [f64; Q] = [0.0, 0.0, 1.0, 0.0, -1.0, 1.0, 1.0, -1.0, -1.0];

/// Weights as numerators over a common denominator of 36.
const WEIGHT_NUMERATORS: [i64; Q] = [16, 4, 4, 4, 4, 1, 1, 1, 1];
const WEIGHT_DENOMINATOR: i64 = 36;

pub const WEIGHTS: [f64; Q] = [
    4.0 / 9.0,
    1.0 / 9.0,
    1.0 / 9.0,
    1.0 / 9.0,
    1.0 / 9.0,
    1.0 / 36.0,
    1.0 / 36.0,
    1.0 / 36.0,
    1.0 / 36.0,
];

pub const OPPOSITE: [usize; Q] = [0, 3, 4, 1, 2, 7, 8, 5, 6];

/// Lattice speed of sound squared.
pub const CS2: f64 = 1.0 / 3.0;

/// Verifies the weight moments up to fourth order in exact integer arithmetic:
/// `Σw = 1`, `Σw c = 0`, `Σw c c = I/3`, `Σw c c c = 0` and
/// `Σw cα cβ cγ cδ = (δαβ δγδ + δαγ δβδ + δαδ δβγ)/9`.
pub fn check_isotropy() -> Result<()> {
    let den = WEIGHT_DENOMINATOR;
    let delta = |a: usize, b: usize| i64::from(a == b);
    let moment = |idx: &[usize]| -> i64 {
        (0..Q)
            .map(|q| {
                idx.iter().fold(WEIGHT_NUMERATORS[q], |acc, &a| {
                    acc * VELOCITIES[q][a] as i64
                })
            })
            .sum()
    };
    let fail =
        |what: String| -> Result<()> { Err(Error::Domain(format!("D2Q9 isotropy: {what}"))) };

    if moment(&[]) != den {
        return fail("weights do not sum to one".into());
    }
    for a in 0..2 {
        if moment(&[a]) != 0 {
            return fail(format!("first moment along axis {a}"));
        }
        for b in 0..2 {
            // 1/3 = 12/36
            if moment(&[a, b]) != 12 * delta(a, b) {
                return fail(format!("second moment ({a},{b})"));
            }
            for c in 0..2 {
                if moment(&[a, b, c]) != 0 {
                    return fail(format!("third moment ({a},{b},{c})"));
                }
                for d in 0..2 {
                    // 1/9 = 4/36
                    let expected = 4
                        * (delta(a, b) * delta(c, d)
                            + delta(a, c) * delta(b, d)
                            + delta(a, d) * delta(b, c));
                    if moment(&[a, b, c, d]) != expected {
                        return fail(format!("fourth moment ({a},{b},{c},{d})"));
                    }
                }
            }
        }
    }
    for q in 0..Q {
        let o = OPPOSITE[q];
        if VELOCITIES[o][0] != -VELOCITIES[q][0] || VELOCITIES[o][1] != -VELOCITIES[q][1] {
            return fail(format!("opposite of direction {q}"));
        }
        if (WEIGHTS[q] - WEIGHT_NUMERATORS[q] as f64 / den as f64).abs() > 0.0 {
            return fail(format!("floating weight {q}"));
        }
    }
    Ok(())
}

/// Second-order Hermite equilibrium evaluated at the shifted velocity
/// `varpi * u`.
///
/// Its zeroth, first and second moments are `rho`, `rho varpi u` and
/// `rho/3 I + rho varpi^2 u⊗u`.
pub fn equilibrium(rho: f64, u: [f64; 2], varpi: f64) -> Result<[f64; Q]> {
    if !(rho > 0.0) {
        return domain(format!("density must be positive, got {rho}"));
    }
    Ok(equilibrium_at(rho, [varpi * u[0], varpi * u[1]]))
}

#[inline(always)]
pub(crate) fn equilibrium_at(rho: f64, v: [f64; 2]) -> [f64; Q] {
    let v2 = 1.5 * (v[0] * v[0] + v[1] * v[1]);
    let mut feq = [0.0; Q];
    let mut moving = 0.0;
    for q in 1..Q {
        let cv = CX[q] * v[0] + CY[q] * v[1];
        feq[q] = WEIGHTS[q] * rho * (1.0 + 3.0 * cv + 4.5 * cv * cv - v2);
        moving += feq[q];
    }
    // rest population closes the mass balance so rounding cannot bias it
    feq[0] = rho - moving;
    feq
}

/// Density and raw first moment `Σ c f` of one cell.
#[inline(always)]
pub fn moments(f: &[f64; Q]) -> (f64, [f64; 2]) {
    let rho = f.iter().sum::<f64>();
    let mx = f[1] - f[3] + f[5] - f[6] - f[7] + f[8];
    let my = f[2] - f[4] + f[5] + f[6] - f[7] - f[8];
    (rho, [mx, my])
}
