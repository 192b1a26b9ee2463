//! Low-discrepancy point sets and equal-area maps onto spheres.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const PRIMES: [u64; 8] = [2, 3, 5, 7, 11, 13, 17, 19];

/// Radical inverse of `index` in `base`.
pub fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut out = 0.0;
    while index > 0 {
        out += f * (index % base) as f64;
        index /= base;
        f *= inv;
    }
    out
}

/// Halton sequence with a Cranley-Patterson rotation drawn from `seed`.
/// Seed 0 gives the unshifted sequence.
#[derive(Debug, Clone)]
pub struct Halton {
    dim: usize,
    shift: Vec<f64>,
}

impl Halton {
    pub fn new(dim: usize, seed: u64) -> Self {
        assert!(dim <= PRIMES.len(), "Halton dimension {dim} not supported");
        let shift = if seed == 0 {
            vec![0.0; dim]
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..dim).map(|_| rng.random::<f64>()).collect()
        };
        Self { dim, shift }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Point `i` of the sequence; index 0 is skipped.
    pub fn point(&self, i: u64) -> Vec<f64> {
        (0..self.dim)
            .map(|d| {
                let u = radical_inverse(i + 1, PRIMES[d]) + self.shift[d];
                u - u.floor()
            })
            .collect()
    }
}

/// Map `dim - 1` unit-cube parameters to a point on the unit sphere `S^{dim-1}`.
/// Supported for `dim` 2 and 3.
pub fn sphere_point(dim: usize, u: &[f64]) -> Option<Vec<f64>> {
    use std::f64::consts::TAU;
    match dim {
        2 => {
            let a = TAU * u[0];
            Some(vec![a.cos(), a.sin()])
        }
        3 => {
            let z = 1.0 - 2.0 * u[0];
            let r = (1.0 - z * z).max(0.0).sqrt();
            let a = TAU * u[1];
            Some(vec![r * a.cos(), r * a.sin(), z])
        }
        _ => None,
    }
}

/// Map parameters to a unit vector in the hemisphere around the first axis,
/// distributed by the projected-area (cosine) measure.
/// Returns components `(cos, tangential...)`.
pub fn hemisphere_point(dim: usize, u: &[f64]) -> Option<Vec<f64>> {
    use std::f64::consts::TAU;
    match dim {
        2 => {
            let s = 2.0 * u[0] - 1.0;
            Some(vec![(1.0 - s * s).max(0.0).sqrt(), s])
        }
        3 => {
            let s = u[0].sqrt();
            let a = TAU * u[1];
            Some(vec![(1.0 - s * s).max(0.0).sqrt(), s * a.cos(), s * a.sin()])
        }
        _ => None,
    }
}

/// Deterministic quasi-uniform unit vectors in `R^dim` (`dim` 2 or 3).
pub fn sphere_points(dim: usize, n: usize) -> Option<Vec<Vec<f64>>> {
    match dim {
        2 => Some((0..n).map(|i| sphere_point(2, &[(i as f64 + 0.5) / n as f64]).unwrap()).collect()),
        3 => {
            let golden = 0.5 * (5f64.sqrt() - 1.0);
            Some(
                (0..n)
                    .map(|i| {
                        let u0 = (i as f64 + 0.5) / n as f64;
                        let u1 = (i as f64 * golden).fract();
                        sphere_point(3, &[u0, u1]).unwrap()
                    })
                    .collect(),
            )
        }
        _ => None,
    }
}
