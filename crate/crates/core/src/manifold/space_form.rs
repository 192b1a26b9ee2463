//! Constant-curvature space forms in embedded coordinates.
//!
//! * `kappa == 0`: Euclidean space, points in `R^m` with the dot product.
//! * `kappa > 0`: the sphere `{x in R^{m+1} : <x,x> = 1/kappa}` with the dot product.
//! * `kappa < 0`: the upper sheet of the hyperboloid `{<x,x>_L = 1/kappa, x_0 > 0}`
//!   in Minkowski space `R^{1,m}` with `<a,b>_L = -a_0 b_0 + sum a_i b_i`.
//!
//! The same closed forms cover all three cases through the generalised
//! trigonometric pair `cs`/`sn` (cos/sin, 1/t, cosh/sinh).

use super::{GeometryError, PointTangent, Vector};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpaceForm {
    kappa: f64,
    dim: usize,
}

impl SpaceForm {
    pub fn new(kappa: f64, dim: usize) -> Result<Self, GeometryError> {
        if dim < 2 {
            return Err(GeometryError::InvalidModel(format!("dimension {dim} < 2")));
        }
        if !kappa.is_finite() {
            return Err(GeometryError::InvalidModel("non-finite curvature".into()));
        }
        Ok(Self { kappa, dim })
    }

    pub fn euclidean(dim: usize) -> Self {
        Self { kappa: 0.0, dim: dim.max(2) }
    }

    /// Round sphere of radius `radius` (curvature `1/radius^2`).
    pub fn sphere(radius: f64, dim: usize) -> Self {
        Self { kappa: 1.0 / (radius * radius), dim: dim.max(2) }
    }

    /// Hyperbolic space with curvature `-1/radius^2`.
    pub fn hyperbolic(radius: f64, dim: usize) -> Self {
        Self { kappa: -1.0 / (radius * radius), dim: dim.max(2) }
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_flat(&self) -> bool {
        self.kappa == 0.0
    }

    pub fn ambient_dim(&self) -> usize {
        if self.is_flat() {
            self.dim
        } else {
            self.dim + 1
        }
    }

    /// Curvature radius `1/sqrt|kappa|`; infinite for the flat model.
    pub fn radius(&self) -> f64 {
        if self.is_flat() {
            f64::INFINITY
        } else {
            1.0 / self.kappa.abs().sqrt()
        }
    }

    /// `cos(sqrt(k) t)`, `1`, or `cosh(sqrt(-k) t)`.
    pub fn cs(&self, t: f64) -> f64 {
        let k = self.kappa;
        if k > 0.0 {
            (k.sqrt() * t).cos()
        } else if k < 0.0 {
            ((-k).sqrt() * t).cosh()
        } else {
            1.0
        }
    }

    /// `sin(sqrt(k) t)/sqrt(k)`, `t`, or `sinh(sqrt(-k) t)/sqrt(-k)`.
    pub fn sn(&self, t: f64) -> f64 {
        let k = self.kappa;
        if k > 0.0 {
            let q = k.sqrt();
            (q * t).sin() / q
        } else if k < 0.0 {
            let q = (-k).sqrt();
            (q * t).sinh() / q
        } else {
            t
        }
    }

    /// `cs/sn`: principal curvature of a geodesic sphere of radius `r`.
    pub fn ct(&self, r: f64) -> f64 {
        self.cs(r) / self.sn(r)
    }

    pub fn inner(&self, a: &Vector, b: &Vector) -> f64 {
        if self.kappa < 0.0 {
            let mut s = -a[0] * b[0];
            for i in 1..a.len() {
                s += a[i] * b[i];
            }
            s
        } else {
            a.dot(b)
        }
    }

    /// Norm of a tangent vector (tangent vectors are spacelike on the hyperboloid).
    pub fn norm(&self, a: &Vector) -> f64 {
        self.inner(a, a).max(0.0).sqrt()
    }

    /// Base point of normal coordinates: the origin, or `(1/sqrt|k|, 0, ..., 0)`.
    pub fn origin(&self) -> Vector {
        let mut o = Vector::zeros(self.ambient_dim());
        if !self.is_flat() {
            o[0] = self.radius();
        }
        o
    }

    /// Lift a coordinate vector of `R^m` to the tangent space at the origin.
    pub fn origin_tangent(&self, w: &[f64]) -> Vector {
        let mut v = Vector::zeros(self.ambient_dim());
        let off = if self.is_flat() { 0 } else { 1 };
        for (i, wi) in w.iter().enumerate().take(self.dim) {
            v[i + off] = *wi;
        }
        v
    }

    /// Point with geodesic normal coordinates `p` about the origin.
    pub fn from_normal_coords(&self, p: &[f64]) -> Vector {
        let w = self.origin_tangent(p);
        self.exp(&self.origin(), &w)
    }

    pub fn to_normal_coords(&self, x: &Vector) -> Vec<f64> {
        let l = self.log(&self.origin(), x);
        let off = if self.is_flat() { 0 } else { 1 };
        (0..self.dim).map(|i| l[i + off]).collect()
    }

    /// Orthogonal projection of an ambient vector onto `T_x M`.
    pub fn project_tangent(&self, x: &Vector, w: &Vector) -> Vector {
        if self.is_flat() {
            w.clone()
        } else {
            w - x * (self.kappa * self.inner_exact(w, x))
        }
    }

    /// Re-impose `<x,x> = 1/kappa`.
    pub fn project_point(&self, x: &Vector) -> Vector {
        if self.is_flat() {
            return x.clone();
        }
        let q = self.inner_exact(x, x) * self.kappa;
        if q > 0.0 {
            x / q.sqrt()
        } else {
            x.clone()
        }
    }

    /// `<a, b>` with error-free products and sums (Ogita-Rump-Oishi `Dot2`).
    fn inner_exact(&self, a: &Vector, b: &Vector) -> f64 {
        let (mut s, mut e) = (0.0f64, 0.0f64);
        for i in 0..a.len() {
            let (ai, bi) = if i == 0 && self.kappa < 0.0 { (-a[i], b[i]) } else { (a[i], b[i]) };
            let p = ai * bi;
            let pe = ai.mul_add(bi, -p);
            let t = s + p;
            let z = t - s;
            e += (s - (t - z)) + (p - z) + pe;
            s = t;
        }
        s + e
    }

    /// Coefficients `(a, b)` with `a x + b v` equal to the unit-speed geodesic of
    /// the projection of `state` onto the unit tangent bundle, at time `t`, and
    /// the same for its velocity. Folding the projection into the coefficients
    /// keeps rounding in the stored state from being amplified by `sn(t)^2`.
    fn flow_coefficients(&self, state: &PointTangent, t: f64) -> ((f64, f64), (f64, f64)) {
        let k = self.kappa;
        let (c, s) = (self.cs(t), self.sn(t));
        let w = self.inner_exact(&state.v, &state.v);
        if self.is_flat() {
            let nv = w.sqrt();
            return ((1.0, s / nv), (0.0, 1.0 / nv));
        }
        let q = k * self.inner_exact(&state.x, &state.x);
        let xv = self.inner_exact(&state.x, &state.v);
        let sq = q.sqrt();
        let nu = (w - k * xv * xv / q).sqrt();
        let lean = k * xv / (q * nu);
        ((c / sq - s * lean, s / nu), (-k * s / sq - c * lean, c / nu))
    }

    pub fn geodesic(&self, state: &PointTangent, t: f64) -> PointTangent {
        if t == 0.0 {
            return state.clone();
        }
        if self.kappa < 0.0 {
            // Past the point nearest the origin, split there: one long step from a far
            // start cancels terms of size e^{|t|} e^{r} and loses that much accuracy.
            let r = self.radius();
            let tau = r * (-state.v[0] * r / state.x[0]).clamp(-1.0, 1.0).atanh();
            if tau.is_finite() && tau * t > 0.0 && tau.abs() < t.abs() && tau.abs() > 0.5 * r {
                return self.flow(&self.flow(state, tau), t - tau);
            }
        }
        self.flow(state, t)
    }

    fn flow(&self, state: &PointTangent, t: f64) -> PointTangent {
        let ((ax, bx), (av, bv)) = self.flow_coefficients(state, t);
        let x = &state.x * ax + &state.v * bx;
        let v = &state.x * av + &state.v * bv;
        self.renormalize(PointTangent { x, v })
    }

    /// Project a state back onto the unit tangent bundle.
    pub fn renormalize(&self, state: PointTangent) -> PointTangent {
        let x = self.project_point(&state.x);
        let v = self.project_tangent(&x, &state.v);
        let n = self.norm(&v);
        let v = if n > 0.0 { v / n } else { v };
        PointTangent { x, v }
    }

    pub fn exp(&self, x: &Vector, w: &Vector) -> Vector {
        let n = self.norm(w);
        if n == 0.0 {
            return x.clone();
        }
        let st = PointTangent { x: x.clone(), v: w / n };
        self.geodesic(&st, n).x
    }

    /// Inverse of `exp` at `x`; `y` must not be conjugate (antipodal) to `x`.
    pub fn log(&self, x: &Vector, y: &Vector) -> Vector {
        let w = if self.is_flat() { y - x } else { self.project_tangent(x, y) };
        let n = self.norm(&w);
        if n == 0.0 {
            return Vector::zeros(x.len());
        }
        w * (self.dist(x, y) / n)
    }

    /// Geodesic distance, evaluated through the chord to stay accurate for close points.
    pub fn dist(&self, x: &Vector, y: &Vector) -> f64 {
        let d = x - y;
        if self.kappa > 0.0 {
            let r = self.radius();
            let chord = d.norm();
            2.0 * r * (chord / (2.0 * r)).min(1.0).asin()
        } else if self.kappa < 0.0 {
            let r = self.radius();
            let chord = self.inner(&d, &d).max(0.0).sqrt();
            2.0 * r * (chord / (2.0 * r)).asinh()
        } else {
            d.norm()
        }
    }

    /// Parallel transport of `w` along the geodesic from `state` for time `t`.
    ///
    /// The component orthogonal to the geodesic plane is constant in embedded
    /// coordinates; the component along the velocity follows the velocity.
    pub fn transport(&self, state: &PointTangent, t: f64, w: &Vector) -> Vector {
        if t == 0.0 || self.is_flat() {
            return w.clone();
        }
        let along = self.inner(w, &state.v);
        w + (self.geodesic(state, t).v - &state.v) * along
    }

    /// Orthonormal basis of `T_x M`, obtained by Gram-Schmidt from the ambient axes.
    pub fn tangent_basis(&self, x: &Vector) -> Vec<Vector> {
        let n = self.ambient_dim();
        let mut basis: Vec<Vector> = Vec::with_capacity(self.dim);
        // Prefer the spatial axes first so that the basis at the origin is the identity.
        let order: Vec<usize> = if self.is_flat() { (0..n).collect() } else { (1..n).chain(std::iter::once(0)).collect() };
        for i in order {
            if basis.len() == self.dim {
                break;
            }
            let mut e = Vector::zeros(n);
            e[i] = 1.0;
            let mut w = self.project_tangent(x, &e);
            for b in &basis {
                w -= b * self.inner(&w, b);
            }
            let nw = self.norm(&w);
            if nw > 1e-8 {
                basis.push(w / nw);
            }
        }
        basis
    }

    /// Orthonormal basis of the orthogonal complement of the unit tangent `v` in `T_x M`.
    pub fn complement_basis(&self, x: &Vector, v: &Vector) -> Vec<Vector> {
        let mut out: Vec<Vector> = Vec::with_capacity(self.dim - 1);
        for e in self.tangent_basis(x) {
            if out.len() == self.dim - 1 {
                break;
            }
            let mut w = &e - v * self.inner(&e, v);
            for b in &out {
                w -= b * self.inner(&w, b);
            }
            let nw = self.norm(&w);
            if nw > 1e-6 {
                out.push(w / nw);
            }
        }
        out
    }

    /// Reflect `w` in the hyperplane orthogonal to the unit vector `n`.
    pub fn mirror(&self, w: &Vector, n: &Vector) -> Vector {
        w - n * (2.0 * self.inner(w, n))
    }

    /// Ambient coordinates of a tangent vector at `x` expressed in the frame `frame`.
    pub fn components(&self, w: &Vector, frame: &[Vector]) -> Vector {
        Vector::from_iterator(frame.len(), frame.iter().map(|e| self.inner(w, e)))
    }
}
