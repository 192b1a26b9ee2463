use std::any::Any;
use std::fmt::Debug;

use crate::manifold::{Matrix, Vector};

/// A smooth convex function on `R^m` whose sublevel set `{f < 0}` is an obstacle.
pub trait LevelSet: Send + Sync + Debug {
    fn dim(&self) -> usize;
    fn value(&self, x: &Vector) -> f64;
    fn gradient(&self, x: &Vector) -> Vector;
    fn hessian(&self, x: &Vector) -> Matrix;
    /// A point with `f < 0`.
    fn interior_point(&self) -> Vector;
    /// Radius around `interior_point` that contains the obstacle.
    fn bounding_radius(&self) -> f64;
    fn as_any(&self) -> &dyn Any;

    /// Boundary point on the ray from the interior point in direction `dir`.
    fn radial_boundary_point(&self, dir: &Vector) -> Vector {
        let c = self.interior_point();
        let u = dir / dir.norm();
        let (mut lo, mut hi) = (0.0, 2.0 * self.bounding_radius());
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.value(&(&c + &u * mid)) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-15 * (1.0 + hi) {
                break;
            }
        }
        c + u * (0.5 * (lo + hi))
    }

    /// Nearest boundary point to `p`, from the Lagrange conditions
    /// `x - p + lambda grad f(x) = 0`, `f(x) = 0`, solved by damped Newton.
    fn project(&self, p: &Vector) -> Vector {
        let m = self.dim();
        let mut x = self.radial_boundary_point(&(p - self.interior_point()));
        let g = self.gradient(&x);
        let mut lam = (p - &x).dot(&g) / g.norm_squared();
        let residual = |x: &Vector, lam: f64| -> (Vector, f64) {
            let g = self.gradient(x);
            let r1 = x - p + &g * lam;
            let r2 = self.value(x);
            let n = (r1.norm_squared() + r2 * r2).sqrt();
            let mut r = Vector::zeros(m + 1);
            r.rows_mut(0, m).copy_from(&r1);
            r[m] = r2;
            (r, n)
        };
        let (mut r, mut rn) = residual(&x, lam);
        for _ in 0..100 {
            if rn < 1e-14 {
                break;
            }
            let g = self.gradient(&x);
            let h = self.hessian(&x);
            let mut j = Matrix::zeros(m + 1, m + 1);
            j.view_mut((0, 0), (m, m)).copy_from(&(Matrix::identity(m, m) + h * lam));
            j.view_mut((0, m), (m, 1)).copy_from(&g);
            j.view_mut((m, 0), (1, m)).copy_from(&g.transpose());
            let Some(step) = j.lu().solve(&(-&r)) else { break };
            let mut alpha = 1.0;
            let mut accepted = false;
            for _ in 0..40 {
                let xn = &x + step.rows(0, m) * alpha;
                let ln = lam + step[m] * alpha;
                let (rr, nn) = residual(&xn, ln);
                if nn < rn {
                    x = xn;
                    lam = ln;
                    r = rr;
                    rn = nn;
                    accepted = true;
                    break;
                }
                alpha *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        x
    }
}

/// Axis-aligned ellipsoid `sum ((x_i - c_i)/a_i)^2 - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ellipsoid {
    pub center: Vec<f64>,
    pub semi_axes: Vec<f64>,
}

impl Ellipsoid {
    pub fn new(center: Vec<f64>, semi_axes: Vec<f64>) -> Self {
        assert_eq!(center.len(), semi_axes.len());
        Self { center, semi_axes }
    }
}

impl LevelSet for Ellipsoid {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn value(&self, x: &Vector) -> f64 {
        self.center.iter().zip(&self.semi_axes).enumerate().map(|(i, (c, a))| ((x[i] - c) / a).powi(2)).sum::<f64>() - 1.0
    }

    fn gradient(&self, x: &Vector) -> Vector {
        Vector::from_iterator(
            self.dim(),
            self.center.iter().zip(&self.semi_axes).enumerate().map(|(i, (c, a))| 2.0 * (x[i] - c) / (a * a)),
        )
    }

    fn hessian(&self, _x: &Vector) -> Matrix {
        Matrix::from_diagonal(&Vector::from_iterator(self.dim(), self.semi_axes.iter().map(|a| 2.0 / (a * a))))
    }

    fn interior_point(&self) -> Vector {
        Vector::from_row_slice(&self.center)
    }

    fn bounding_radius(&self) -> f64 {
        self.semi_axes.iter().cloned().fold(0.0, f64::max)
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
}
