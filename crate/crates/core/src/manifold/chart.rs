//! Single-chart Riemannian metrics integrated numerically.
//!
//! Geodesics, parallel transport and the Riccati equation for shape operators
//! are advanced together by an embedded Dormand-Prince 5(4) pair.

use std::fmt::Debug;
use std::sync::Arc;

use super::{GeometryError, Matrix, PointTangent, Vector};

/// A metric tensor field on an open subset of `R^m`.
pub trait ChartMetric: Send + Sync + Debug {
    fn dim(&self) -> usize;
    fn metric(&self, x: &Vector) -> Matrix;
    /// `out[k][(i, j)] = d g_ij / d x^k`.
    fn metric_derivatives(&self, x: &Vector) -> Vec<Matrix>;
    fn in_domain(&self, _x: &Vector) -> bool {
        true
    }
}

/// Conformally flat metric `g = lambda(x)^2 * I` given through `ln lambda` and its gradient.
trait Conformal {
    fn dim(&self) -> usize;
    fn log_factor(&self, x: &Vector) -> (f64, Vector);
}

fn conformal_metric<C: Conformal>(c: &C, x: &Vector) -> Matrix {
    let (phi, _) = c.log_factor(x);
    Matrix::identity(c.dim(), c.dim()) * (2.0 * phi).exp()
}

fn conformal_derivatives<C: Conformal>(c: &C, x: &Vector) -> Vec<Matrix> {
    let (phi, grad) = c.log_factor(x);
    let e2 = (2.0 * phi).exp();
    (0..c.dim()).map(|k| Matrix::identity(c.dim(), c.dim()) * (2.0 * e2 * grad[k])).collect()
}

/// Stereographic chart of the round sphere of radius `radius`, projected from `(-R, 0, .., 0)`.
#[derive(Debug, Clone, Copy)]
pub struct StereographicSphere {
    pub radius: f64,
    pub dim: usize,
}

impl StereographicSphere {
    pub fn new(radius: f64, dim: usize) -> Self {
        Self { radius, dim }
    }

    /// Chart coordinates to embedded coordinates on the sphere in `R^{m+1}`.
    pub fn to_embedded(&self, x: &Vector) -> Vector {
        let r2 = self.radius * self.radius;
        let q = x.norm_squared();
        let mut out = Vector::zeros(self.dim + 1);
        out[0] = self.radius * (r2 - q) / (r2 + q);
        for i in 0..self.dim {
            out[i + 1] = 2.0 * r2 * x[i] / (r2 + q);
        }
        out
    }

    pub fn from_embedded(&self, p: &Vector) -> Vector {
        let denom = self.radius + p[0];
        Vector::from_iterator(self.dim, (0..self.dim).map(|i| self.radius * p[i + 1] / denom))
    }

    /// Push a chart tangent vector at `x` forward to embedded coordinates.
    pub fn push_forward(&self, x: &Vector, w: &Vector) -> Vector {
        let h = 1e-6;
        (self.to_embedded(&(x + w * h)) - self.to_embedded(&(x - w * h))) / (2.0 * h)
    }
}

impl Conformal for StereographicSphere {
    fn dim(&self) -> usize {
        self.dim
    }
    fn log_factor(&self, x: &Vector) -> (f64, Vector) {
        let r2 = self.radius * self.radius;
        let q = x.norm_squared();
        let phi = (2.0 * r2 / (r2 + q)).ln();
        (phi, x * (-2.0 / (r2 + q)))
    }
}

impl ChartMetric for StereographicSphere {
    fn dim(&self) -> usize {
        self.dim
    }
    fn metric(&self, x: &Vector) -> Matrix {
        conformal_metric(self, x)
    }
    fn metric_derivatives(&self, x: &Vector) -> Vec<Matrix> {
        conformal_derivatives(self, x)
    }
    fn in_domain(&self, x: &Vector) -> bool {
        x.norm() < 1e4 * self.radius
    }
}

/// Poincare ball chart of hyperbolic space with curvature `-1/radius^2`.
#[derive(Debug, Clone, Copy)]
pub struct PoincareBall {
    pub radius: f64,
    pub dim: usize,
}

impl PoincareBall {
    pub fn new(radius: f64, dim: usize) -> Self {
        Self { radius, dim }
    }

    /// Chart coordinates to the hyperboloid in Minkowski space.
    pub fn to_embedded(&self, x: &Vector) -> Vector {
        let r2 = self.radius * self.radius;
        let q = x.norm_squared();
        let mut out = Vector::zeros(self.dim + 1);
        out[0] = self.radius * (r2 + q) / (r2 - q);
        for i in 0..self.dim {
            out[i + 1] = 2.0 * r2 * x[i] / (r2 - q);
        }
        out
    }

    pub fn from_embedded(&self, p: &Vector) -> Vector {
        let denom = self.radius + p[0];
        Vector::from_iterator(self.dim, (0..self.dim).map(|i| self.radius * p[i + 1] / denom))
    }

    pub fn push_forward(&self, x: &Vector, w: &Vector) -> Vector {
        let h = 1e-7;
        (self.to_embedded(&(x + w * h)) - self.to_embedded(&(x - w * h))) / (2.0 * h)
    }
}

impl Conformal for PoincareBall {
    fn dim(&self) -> usize {
        self.dim
    }
    fn log_factor(&self, x: &Vector) -> (f64, Vector) {
        let r2 = self.radius * self.radius;
        let q = x.norm_squared();
        let phi = (2.0 * r2 / (r2 - q)).ln();
        (phi, x * (2.0 / (r2 - q)))
    }
}

impl ChartMetric for PoincareBall {
    fn dim(&self) -> usize {
        self.dim
    }
    fn metric(&self, x: &Vector) -> Matrix {
        conformal_metric(self, x)
    }
    fn metric_derivatives(&self, x: &Vector) -> Vec<Matrix> {
        conformal_derivatives(self, x)
    }
    fn in_domain(&self, x: &Vector) -> bool {
        x.norm() < self.radius * (1.0 - 1e-9)
    }
}

/// A chart metric together with integrator settings.
#[derive(Debug, Clone)]
pub struct ChartModel {
    metric: Arc<dyn ChartMetric>,
    /// Local error tolerance per unit of integrated length.
    pub tol: f64,
}

impl ChartModel {
    pub fn new(metric: Arc<dyn ChartMetric>) -> Self {
        Self { metric, tol: 1e-10 }
    }

    pub fn metric(&self) -> &dyn ChartMetric {
        self.metric.as_ref()
    }

    pub fn dim(&self) -> usize {
        self.metric.dim()
    }

    pub fn inner(&self, x: &Vector, a: &Vector, b: &Vector) -> f64 {
        (a.transpose() * self.metric.metric(x) * b)[(0, 0)]
    }

    /// `out[k][(i, j)] = Gamma^k_ij`.
    pub fn christoffel(&self, x: &Vector) -> Vec<Matrix> {
        let m = self.dim();
        let g = self.metric.metric(x);
        let ginv = g.try_inverse().unwrap_or_else(|| Matrix::identity(m, m));
        let dg = self.metric.metric_derivatives(x);
        // lowered[l][(i,j)] = 1/2 (d_i g_jl + d_j g_il - d_l g_ij)
        let lowered: Vec<Matrix> =
            (0..m).map(|l| Matrix::from_fn(m, m, |i, j| 0.5 * (dg[i][(j, l)] + dg[j][(i, l)] - dg[l][(i, j)]))).collect();
        (0..m)
            .map(|k| {
                let mut gk = Matrix::zeros(m, m);
                for (l, low) in lowered.iter().enumerate() {
                    gk += low * ginv[(k, l)];
                }
                gk
            })
            .collect()
    }

    /// `R^l_{ijk}` with `R(d_i, d_j) d_k = R^l_{ijk} d_l`, indexed `[l][i][j][k]` flattened.
    /// Christoffel derivatives are taken by central differences.
    pub fn riemann(&self, x: &Vector) -> Vec<f64> {
        let m = self.dim();
        let h = 1e-5 * (1.0 + x.norm());
        let gam = self.christoffel(x);
        let dgam: Vec<Vec<Matrix>> = (0..m)
            .map(|a| {
                let mut e = Vector::zeros(m);
                e[a] = h;
                let p = self.christoffel(&(x + &e));
                let q = self.christoffel(&(x - &e));
                p.iter().zip(q.iter()).map(|(p, q)| (p - q) / (2.0 * h)).collect()
            })
            .collect();
        let idx = |l: usize, i: usize, j: usize, k: usize| ((l * m + i) * m + j) * m + k;
        let mut r = vec![0.0; m * m * m * m];
        for l in 0..m {
            for i in 0..m {
                for j in 0..m {
                    for k in 0..m {
                        let mut val = dgam[i][l][(j, k)] - dgam[j][l][(i, k)];
                        for p in 0..m {
                            val += gam[l][(i, p)] * gam[p][(j, k)] - gam[l][(j, p)] * gam[p][(i, k)];
                        }
                        r[idx(l, i, j, k)] = val;
                    }
                }
            }
        }
        r
    }

    /// `R(a, b) c` for coordinate vectors.
    pub fn curvature_apply(&self, riem: &[f64], a: &Vector, b: &Vector, c: &Vector) -> Vector {
        let m = self.dim();
        let mut out = Vector::zeros(m);
        for l in 0..m {
            let mut s = 0.0;
            for i in 0..m {
                for j in 0..m {
                    for k in 0..m {
                        s += riem[((l * m + i) * m + j) * m + k] * a[i] * b[j] * c[k];
                    }
                }
            }
            out[l] = s;
        }
        out
    }

    pub fn sectional_curvature(&self, x: &Vector, a: &Vector, b: &Vector) -> f64 {
        let riem = self.riemann(x);
        let rab = self.curvature_apply(&riem, a, b, b);
        let num = self.inner(x, &rab, a);
        let den = self.inner(x, a, a) * self.inner(x, b, b) - self.inner(x, a, b).powi(2);
        num / den
    }

    /// Matrix of `Y -> R(Y, v) v` in the frame `frame` (assumed orthonormal).
    pub fn curvature_operator(&self, x: &Vector, v: &Vector, frame: &[Vector]) -> Matrix {
        let riem = self.riemann(x);
        let n = frame.len();
        let images: Vec<Vector> = frame.iter().map(|e| self.curvature_apply(&riem, e, v, v)).collect();
        let k = Matrix::from_fn(n, n, |a, b| self.inner(x, &images[a], &frame[b]));
        (&k + k.transpose()) * 0.5
    }

    pub fn normalize(&self, state: PointTangent) -> PointTangent {
        let n = self.inner(&state.x, &state.v, &state.v).sqrt();
        PointTangent { v: &state.v / n, x: state.x }
    }

    /// Integrate the geodesic from `state` for time `t`, transporting `frame`
    /// and, when `shape` is given, advancing `dS/dt = -S^2 - K(t)` in that frame.
    pub fn flow(
        &self,
        state: &PointTangent,
        t: f64,
        frame: &[Vector],
        shape: Option<&Matrix>,
    ) -> Result<ChartFlow, GeometryError> {
        let m = self.dim();
        let nf = frame.len();
        let ns = shape.map(|s| s.nrows()).unwrap_or(0);
        let pack = |st: &PointTangent, fr: &[Vector], sh: Option<&Matrix>| {
            let mut y = Vec::with_capacity(2 * m + nf * m + ns * ns);
            y.extend(st.x.iter());
            y.extend(st.v.iter());
            for f in fr {
                y.extend(f.iter());
            }
            if let Some(s) = sh {
                y.extend(s.iter());
            }
            y
        };
        let unpack = |y: &[f64]| -> ChartFlow {
            let x = Vector::from_column_slice(&y[0..m]);
            let v = Vector::from_column_slice(&y[m..2 * m]);
            let frame = (0..nf).map(|i| Vector::from_column_slice(&y[2 * m + i * m..2 * m + (i + 1) * m])).collect();
            let shape = (ns > 0).then(|| {
                let off = 2 * m + nf * m;
                Matrix::from_column_slice(ns, ns, &y[off..off + ns * ns])
            });
            ChartFlow { state: PointTangent { x, v }, frame, shape }
        };
        if t == 0.0 {
            return Ok(ChartFlow { state: state.clone(), frame: frame.to_vec(), shape: shape.cloned() });
        }
        let rhs = |y: &[f64]| -> Result<Vec<f64>, GeometryError> {
            let cur = unpack(y);
            let x = &cur.state.x;
            if !self.metric.in_domain(x) {
                return Err(GeometryError::ChartDomainExceeded);
            }
            let v = &cur.state.v;
            let gam = self.christoffel(x);
            let accel =
                |w: &Vector| -> Vector { Vector::from_iterator(m, (0..m).map(|k| -(v.transpose() * &gam[k] * w)[(0, 0)])) };
            let mut dy = Vec::with_capacity(y.len());
            dy.extend(v.iter());
            dy.extend(accel(v).iter());
            for f in &cur.frame {
                dy.extend(accel(f).iter());
            }
            if let Some(s) = &cur.shape {
                let k = self.curvature_operator(x, v, &cur.frame);
                let ds = -(s * s) - k;
                dy.extend(ds.iter());
            }
            Ok(dy)
        };
        let y0 = pack(state, frame, shape);
        let y = dormand_prince(rhs, y0, t, self.tol, |y| {
            // renormalise the velocity after each accepted step
            let x = Vector::from_column_slice(&y[0..m]);
            let v = Vector::from_column_slice(&y[m..2 * m]);
            let n = self.inner(&x, &v, &v).sqrt();
            for i in 0..m {
                y[m + i] /= n;
            }
        })?;
        let mut out = unpack(&y);
        if let Some(s) = out.shape.as_mut() {
            *s = (&*s + s.transpose()) * 0.5;
        }
        if !self.metric.in_domain(&out.state.x) {
            return Err(GeometryError::ChartDomainExceeded);
        }
        Ok(out)
    }
}

#[derive(Debug, Clone)]
pub struct ChartFlow {
    pub state: PointTangent,
    pub frame: Vec<Vector>,
    pub shape: Option<Matrix>,
}

// Dormand-Prince 5(4) tableau; the system is autonomous so the nodes are not needed.
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [5179.0 / 57600.0, 0.0, 7571.0 / 16695.0, 393.0 / 640.0, -92097.0 / 339200.0, 187.0 / 2100.0, 1.0 / 40.0];

/// Adaptive integration of `y' = f(y)` over signed time `t`.
///
/// A step of length `h` is accepted when the scaled local error is below `tol * |h|`.
fn dormand_prince<F, P>(f: F, mut y: Vec<f64>, t: f64, tol: f64, mut post: P) -> Result<Vec<f64>, GeometryError>
where
    F: Fn(&[f64]) -> Result<Vec<f64>, GeometryError>,
    P: FnMut(&mut [f64]),
{
    let n = y.len();
    let dir = t.signum();
    let total = t.abs();
    let mut done = 0.0;
    let mut h = total.min(0.01);
    let mut k: Vec<Vec<f64>> = vec![vec![0.0; n]; 7];
    let mut steps = 0usize;
    while done < total {
        steps += 1;
        if steps > 5_000_000 {
            return Err(GeometryError::NonFiniteState);
        }
        if h < 1e-14 * total.max(1.0) {
            return Err(GeometryError::NonFiniteState);
        }
        let last = done + h >= total;
        let hs = if last { total - done } else { h };
        let hd = hs * dir;
        k[0] = f(&y)?;
        let mut tmp = vec![0.0; n];
        for s in 1..7 {
            for i in 0..n {
                let mut acc = y[i];
                for (j, kj) in k.iter().enumerate().take(s) {
                    acc += hd * A[s][j] * kj[i];
                }
                tmp[i] = acc;
            }
            k[s] = f(&tmp)?;
        }
        let mut err: f64 = 0.0;
        let mut ynew = vec![0.0; n];
        for i in 0..n {
            let mut y5 = y[i];
            let mut y4 = y[i];
            for s in 0..7 {
                y5 += hd * B5[s] * k[s][i];
                y4 += hd * B4[s] * k[s][i];
            }
            if !y5.is_finite() {
                return Err(GeometryError::NonFiniteState);
            }
            ynew[i] = y5;
            err = err.max((y5 - y4).abs() / (1.0 + y[i].abs()));
        }
        let allowed = tol * hs;
        if err <= allowed {
            y = ynew;
            post(&mut y);
            done += hs;
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * (allowed / err).powf(0.2)).clamp(0.2, 5.0) };
        if !last || err > allowed {
            h = hs * factor;
        }
    }
    Ok(y)
}
