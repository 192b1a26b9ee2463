//! Convex wavefront germs: shape-operator transport along geodesics, the
//! reflection law at obstacles, fronts built from boundary tangencies.

use nalgebra::SymmetricEigen;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::billiard::{next_event_from, Event, Limits, TraceError};
use crate::manifold::{GeometryError, Matrix, MetricModel, PointTangent, SpaceForm, Vector};
use crate::scene::{Obstacle, SceneError, ValidScene, BOUNDARY_TOL};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FrontError {
    #[error("FocalPointCrossed at t = {0}")]
    FocalPointCrossed(f64),
    #[error("TangentialReflection")]
    TangentialReflection,
    #[error("incoming direction points out of the obstacle")]
    NotIncoming,
    #[error("PatchLeftDomain")]
    PatchLeftDomain,
    #[error("PatchHitsObstacle")]
    PatchHitsObstacle,
    #[error("invalid germ: {0}")]
    InvalidGerm(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error(transparent)]
    Trace(#[from] TraceError),
}

/// Front germ at `base.x` moving in direction `base.v`; `s_op` is the shape
/// operator with respect to `base.v` in the orthonormal `frame` of `base.v`-perp.
/// Diverging fronts have positive principal curvatures.
#[derive(Debug, Clone, PartialEq)]
pub struct FrontGerm {
    pub base: PointTangent,
    pub frame: Vec<Vector>,
    pub s_op: Matrix,
}

impl FrontGerm {
    pub fn new(base: PointTangent, frame: Vec<Vector>, s_op: Matrix) -> Self {
        Self { base, frame, s_op }
    }

    /// Germ with frame `model.complement_basis` and the given shape operator.
    pub fn with_default_frame(model: &SpaceForm, base: PointTangent, s_op: Matrix) -> Self {
        let frame = model.complement_basis(&base.x, &base.v);
        Self { base, frame, s_op }
    }

    pub fn validate(&self, model: &MetricModel) -> Result<(), FrontError> {
        let n = self.frame.len();
        if n + 1 != model.dim() || self.s_op.nrows() != n || self.s_op.ncols() != n {
            return Err(FrontError::InvalidGerm("dimension mismatch".into()));
        }
        if (&self.s_op - self.s_op.transpose()).amax() > 1e-10 {
            return Err(FrontError::InvalidGerm("shape operator not symmetric".into()));
        }
        let x = &self.base.x;
        if (model.inner(x, &self.base.v, &self.base.v) - 1.0).abs() > 1e-10 {
            return Err(FrontError::InvalidGerm("normal not unit".into()));
        }
        for (i, a) in self.frame.iter().enumerate() {
            if model.inner(x, a, &self.base.v).abs() > 1e-10 {
                return Err(FrontError::InvalidGerm("frame not orthogonal to normal".into()));
            }
            for (j, b) in self.frame.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                if (model.inner(x, a, b) - want).abs() > 1e-10 {
                    return Err(FrontError::InvalidGerm("frame not orthonormal".into()));
                }
            }
        }
        Ok(())
    }

    pub fn principal_curvatures(&self) -> Vec<f64> {
        let mut e: Vec<f64> = SymmetricEigen::new(self.s_op.clone()).eigenvalues.iter().cloned().collect();
        e.sort_by(|a, b| a.partial_cmp(b).unwrap());
        e
    }
}

pub fn min_principal_curvature(germ: &FrontGerm) -> f64 {
    germ.principal_curvatures().first().copied().unwrap_or(f64::INFINITY)
}

fn symmetrize(m: &Matrix) -> Matrix {
    (m + m.transpose()) * 0.5
}

/// First positive time at which `c(t) + s(t) lambda` vanishes.
fn focal_time(model: &SpaceForm, lambda: f64) -> f64 {
    let k = model.kappa();
    if k == 0.0 {
        if lambda < 0.0 {
            -1.0 / lambda
        } else {
            f64::INFINITY
        }
    } else if k > 0.0 {
        let r = k.sqrt();
        r.atan2(-lambda) / r
    } else {
        let r = (-k).sqrt();
        if lambda < -r {
            (-r / lambda).atanh() / r
        } else {
            f64::INFINITY
        }
    }
}

/// Advance the germ for time `t` along its normal geodesic.
pub fn propagate_front(model: &MetricModel, germ: &FrontGerm, t: f64) -> Result<FrontGerm, FrontError> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(FrontError::InvalidGerm(format!("propagation time {t}")));
    }
    match model {
        MetricModel::SpaceForm(sf) => {
            let eig = SymmetricEigen::new(symmetrize(&germ.s_op));
            let (c, s, k) = (sf.cs(t), sf.sn(t), sf.kappa());
            let mut evolved = Vec::with_capacity(eig.eigenvalues.len());
            for &l in eig.eigenvalues.iter() {
                let denom = c + s * l;
                if focal_time(sf, l) <= t || denom.abs() < 1e-10 {
                    return Err(FrontError::FocalPointCrossed(focal_time(sf, l).min(t)));
                }
                evolved.push((l * c - k * s) / denom);
            }
            let q = &eig.eigenvectors;
            let s_op = symmetrize(&(q * Matrix::from_diagonal(&Vector::from_vec(evolved)) * q.transpose()));
            let base = sf.geodesic(&germ.base, t);
            let frame = germ.frame.iter().map(|w| sf.transport(&germ.base, t, w)).collect();
            Ok(FrontGerm { base, frame, s_op })
        }
        MetricModel::Chart(cm) => {
            let flow = cm.flow(&germ.base, t, &germ.frame, Some(&germ.s_op)).map_err(|_| FrontError::FocalPointCrossed(t))?;
            let s_op = flow.shape.expect("shape requested");
            if !s_op.iter().all(|v| v.is_finite()) || s_op.amax() > 1e10 {
                return Err(FrontError::FocalPointCrossed(t));
            }
            Ok(FrontGerm { base: flow.state, frame: flow.frame, s_op: symmetrize(&s_op) })
        }
    }
}

/// Shape operator after reflection at an obstacle with outward normal `n_k` and
/// shape operator `s_k` (in the boundary frame `k_frame`). The germ must sit on
/// the boundary with an incoming direction. The second fundamental forms obey
/// `<s+ Y+, Y+> = <s- Y-, Y-> - 2 <N-, N_K> <s_K Y, Y>` for `Y` tangent to the boundary.
pub fn reflect_front(
    model: &SpaceForm,
    germ_in: &FrontGerm,
    n_k: &Vector,
    s_k: &Matrix,
    k_frame: &[Vector],
    tangency_eps: f64,
) -> Result<FrontGerm, FrontError> {
    let n_minus = &germ_in.base.v;
    let cos = model.inner(n_minus, n_k);
    if cos.abs() < tangency_eps {
        return Err(FrontError::TangentialReflection);
    }
    if cos > 0.0 {
        return Err(FrontError::NotIncoming);
    }
    let n = germ_in.frame.len();
    let n_plus = model.mirror(n_minus, n_k);
    let frame_plus: Vec<Vector> = germ_in.frame.iter().map(|e| model.mirror(e, n_k)).collect();
    let proj = |frame: &[Vector]| Matrix::from_fn(n, n, |i, a| model.inner(&k_frame[a], &frame[i]));
    let p_minus = proj(&germ_in.frame);
    let p_plus = proj(&frame_plus);
    let rhs = p_minus.transpose() * &germ_in.s_op * &p_minus + s_k * (-2.0 * cos);
    let inv = p_plus.try_inverse().ok_or(FrontError::TangentialReflection)?;
    let s_op = symmetrize(&(inv.transpose() * rhs * &inv));
    let base = model.renormalize(PointTangent::new(germ_in.base.x.clone(), n_plus));
    Ok(FrontGerm { base, frame: frame_plus, s_op })
}

/// One line of a front evolution log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontLogRecord {
    pub t: f64,
    pub x: Vec<f64>,
    pub eigenvalues: Vec<f64>,
    /// Obstacle reflected from at this record, if any.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub reflection: Option<usize>,
}

impl FrontLogRecord {
    fn of(t: f64, germ: &FrontGerm, reflection: Option<usize>) -> Self {
        Self { t, x: germ.base.x.as_slice().to_vec(), eigenvalues: germ.principal_curvatures(), reflection }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FrontEnd {
    Exited,
    ReflectionLimit,
    TimeLimit,
}

#[derive(Debug, Clone)]
pub struct FrontHistory {
    pub records: Vec<FrontLogRecord>,
    pub last: FrontGerm,
    pub end: FrontEnd,
}

impl FrontHistory {
    /// Smallest principal curvature over all records.
    pub fn min_curvature(&self) -> f64 {
        self.records.iter().flat_map(|r| r.eigenvalues.first().copied()).fold(f64::INFINITY, f64::min)
    }
}

/// Carry a germ along its billiard ray through the scene, reflecting at each
/// obstacle, until it leaves the domain or a limit is reached. `steps` extra
/// records are logged evenly on each free segment.
pub fn follow_front(scene: &ValidScene, germ: &FrontGerm, limits: &Limits, steps: usize) -> Result<FrontHistory, FrontError> {
    let sf = *scene.model();
    let model = MetricModel::SpaceForm(sf);
    let mut g = germ.clone();
    let mut now = 0.0;
    let mut records = vec![FrontLogRecord::of(0.0, &g, None)];
    let mut skip = scene.obstacles().iter().position(|o| o.level(&sf, &g.base.x).abs() <= BOUNDARY_TOL);
    let mut reflections = 0;
    loop {
        let remaining = limits.t_max - now;
        if remaining <= 0.0 {
            return Ok(FrontHistory { records, last: g, end: FrontEnd::TimeLimit });
        }
        let event = next_event_from(scene, &g.base, skip, remaining)?;
        let (dt, hit) = match &event {
            Event::Hit { obstacle, t, .. } => (*t, Some(*obstacle)),
            Event::ExitDomain { t, .. } => (*t, None),
            Event::NoEventWithin { horizon } => (*horizon, None),
        };
        for k in 1..=steps {
            let tk = dt * k as f64 / (steps + 1) as f64;
            let gk = propagate_front(&model, &g, tk)?;
            records.push(FrontLogRecord::of(now + tk, &gk, None));
        }
        g = propagate_front(&model, &g, dt)?;
        now += dt;
        match (event, hit) {
            (Event::Hit { state, .. }, Some(i)) => {
                if reflections >= limits.n_max {
                    records.push(FrontLogRecord::of(now, &g, None));
                    return Ok(FrontHistory { records, last: g, end: FrontEnd::ReflectionLimit });
                }
                g.base = state;
                records.push(FrontLogRecord::of(now, &g, None));
                let geo = scene.geometry(i, &g.base.x)?;
                g = reflect_front(&sf, &g, &geo.normal, &geo.shape, &geo.frame, limits.tangency_eps)?;
                records.push(FrontLogRecord::of(now, &g, Some(i)));
                reflections += 1;
                skip = Some(i);
            }
            (Event::ExitDomain { .. }, _) => {
                records.push(FrontLogRecord::of(now, &g, None));
                return Ok(FrontHistory { records, last: g, end: FrontEnd::Exited });
            }
            _ => {
                records.push(FrontLogRecord::of(now, &g, None));
                return Ok(FrontHistory { records, last: g, end: FrontEnd::TimeLimit });
            }
        }
    }
}

/// Front produced by [`front_from_tangency`].
#[derive(Debug, Clone)]
pub struct TangencyFront {
    pub obstacle: usize,
    pub germ: FrontGerm,
    /// Sampled front points; the first one is the base point.
    pub patch: Vec<Vector>,
    pub min_curvature: f64,
}

/// Number of boundary samples used to fit the front germ.
pub const TANGENCY_SAMPLES: usize = 33;

/// Build the convex front whose rays graze the obstacle boundary near `x0`.
///
/// Boundary points `u` near `x0` carry the unit tangent `T(u)` of the boundary
/// geodesic towards `p`, the point at boundary distance `2 eps` from `x0` along `v`.
/// Each `u` is moved backward along `-T(u)` for time `eps + s(u)`, where
/// `s(u) = 2 eps - d(u, p)`. The end points form a front orthogonal to the rays;
/// its germ at `x0` is returned with normal pointing away from the boundary, so
/// that its principal curvatures are positive (`1/eps` for a flat disk).
pub fn front_from_tangency(
    scene: &ValidScene,
    x0: &Vector,
    v: &Vector,
    eps: f64,
    patch_radius: f64,
) -> Result<TangencyFront, FrontError> {
    let sf = *scene.model();
    let m = sf.dim();
    if !(eps > 0.0 && patch_radius > 0.0) {
        return Err(FrontError::InvalidGerm("eps and patch radius must be positive".into()));
    }
    let obstacle =
        scene.obstacles().iter().position(|o| o.level(&sf, x0).abs() <= BOUNDARY_TOL).ok_or(SceneError::NotOnBoundary)?;
    let Obstacle::Ball { center, radius } = &scene.obstacles()[obstacle] else {
        return Err(SceneError::UnsupportedObstacle("front_from_tangency needs a ball obstacle".into()).into());
    };
    let geo = scene.geometry(obstacle, x0)?;
    if (sf.inner(v, v) - 1.0).abs() > 1e-9 || sf.inner(v, &geo.normal).abs() > 1e-9 {
        return Err(FrontError::InvalidGerm("V must be a unit tangent to the boundary".into()));
    }
    // Boundary points are `cs(r) c + sn(r) n` for unit `n` tangent at the centre.
    let (cr, sr) = (sf.cs(*radius), sf.sn(*radius));
    let n0 = (x0 - center * cr) / sr;
    let sphere_point = |n: &Vector| center * cr + n * sr;
    // Tangent directions at the centre spanning the boundary: v and its complement.
    let mut dirs = vec![v.clone()];
    for w in sf.tangent_basis(center) {
        if dirs.len() == m - 1 {
            break;
        }
        let mut w = &w - &n0 * sf.inner(&w, &n0);
        for d in &dirs {
            w -= d * sf.inner(&w, d);
        }
        let nw = sf.norm(&w);
        if nw > 1e-6 {
            dirs.push(w / nw);
        }
    }
    let rho = 2.0 * eps;
    let alpha_p = rho / sr;
    let n_p = &n0 * alpha_p.cos() + v * alpha_p.sin();

    let samples: Vec<Vector> = tangency_offsets(m, patch_radius)
        .iter()
        .map(|off| {
            let len: f64 = off.iter().map(|c| c * c).sum::<f64>().sqrt();
            if len == 0.0 {
                return n0.clone();
            }
            let dir = off.iter().zip(&dirs).fold(Vector::zeros(n0.len()), |acc, (c, d)| acc + d * (*c / len));
            let a = len / sr;
            &n0 * a.cos() + dir * a.sin()
        })
        .collect();

    let mut patch = Vec::with_capacity(samples.len());
    let mut normals = Vec::with_capacity(samples.len());
    for n_u in &samples {
        let u = sphere_point(n_u);
        let cb = sf.inner(n_u, &n_p).clamp(-1.0, 1.0);
        let beta = cb.acos();
        if beta < 1e-12 {
            return Err(FrontError::InvalidGerm("patch reaches the convergence point".into()));
        }
        let t_u = (&n_p - n_u * cb) / beta.sin();
        let tau = eps + rho - sr * beta;
        if tau <= 0.0 {
            return Err(FrontError::InvalidGerm("patch radius too large for eps".into()));
        }
        let start = sf.renormalize(PointTangent::new(u, -t_u));
        match next_event_from(scene, &start, Some(obstacle), tau)? {
            Event::Hit { .. } => return Err(FrontError::PatchHitsObstacle),
            Event::ExitDomain { .. } => return Err(FrontError::PatchLeftDomain),
            Event::NoEventWithin { .. } => {}
        }
        let end = sf.geodesic(&start, tau);
        if scene.domain().level(&sf, &end.x) >= 0.0 {
            return Err(FrontError::PatchLeftDomain);
        }
        patch.push(end.x);
        normals.push(end.v);
    }

    let base = PointTangent::new(patch[0].clone(), normals[0].clone());
    let frame = sf.complement_basis(&base.x, &base.v);
    let samples: Vec<PointTangent> =
        patch.iter().zip(&normals).skip(1).map(|(x, v)| PointTangent::new(x.clone(), v.clone())).collect();
    let s_op = fit_shape_operator(&sf, &base, &frame, &samples);
    let germ = FrontGerm { base, frame, s_op };
    let min_curvature = min_principal_curvature(&germ);
    Ok(TangencyFront { obstacle, germ, patch, min_curvature })
}

/// Ratio between successive sample radii.
const RING_RATIO: f64 = 0.5;

/// Boundary offsets (intrinsic, in the `v`-first tangent frame at `x0`) of the
/// sample points: the centre followed by geodesic-polar rings whose radii shrink
/// geometrically from `radius`.
fn tangency_offsets(m: usize, radius: f64) -> Vec<Vec<f64>> {
    let n = TANGENCY_SAMPLES;
    let mut out = vec![vec![0.0; m - 1]];
    if m == 2 {
        for k in 0..(n - 1) / 2 {
            let s = radius * RING_RATIO.powi(k as i32);
            out.push(vec![s]);
            out.push(vec![-s]);
        }
    } else {
        // Further dimensions keep the rings in the first two.
        let rings = 8;
        let per = (n - 1) / rings;
        for ring in 0..rings {
            let r = radius * RING_RATIO.powi(ring as i32);
            for j in 0..per {
                let a = std::f64::consts::TAU * (j as f64 + 0.5 * (ring % 2) as f64) / per as f64;
                let mut o = vec![0.0; m - 1];
                o[0] = r * a.cos();
                o[1] = r * a.sin();
                out.push(o);
            }
        }
    }
    out
}

/// Monomial exponents in `n` variables with total degree `1..=max_degree`.
fn monomials(n: usize, max_degree: usize) -> Vec<Vec<usize>> {
    fn rec(n: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == n {
            if left == 0 {
                out.push(cur.clone());
            }
            return;
        }
        for e in (0..=left).rev() {
            cur.push(e);
            rec(n, left - e, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    for d in 1..=max_degree {
        rec(n, d, &mut Vec::new(), &mut out);
    }
    out
}

/// Shape operator at `base` from sampled front points and their normals:
/// normal differences (transported to `base`) are fitted against tangential
/// offsets in normal coordinates by a polynomial whose linear part is `S`.
/// Rows are weighted by the inverse squared offset, which favours the inner rings.
fn fit_shape_operator(model: &SpaceForm, base: &PointTangent, frame: &[Vector], points: &[PointTangent]) -> Matrix {
    let n = frame.len();
    let degree = (1..=6).rev().find(|&d| 3 * monomials(n, d).len() <= 2 * points.len() / n.max(1)).unwrap_or(1);
    let monos = monomials(n, degree);
    let rows: Vec<(Vec<f64>, Vec<f64>, f64)> = points
        .iter()
        .map(|p| {
            let w = model.log(&base.x, &p.x);
            let a: Vec<f64> = frame.iter().map(|e| model.inner(&w, e)).collect();
            // Parallel transport of the sample normal back to the base point.
            let back = model.log(&p.x, &base.x);
            let d = model.norm(&back);
            let moved = model.transport(&PointTangent::new(p.x.clone(), &back / d), d, &p.v);
            let dn: Vec<f64> = frame.iter().map(|e| model.inner(&(&moved - &base.v), e)).collect();
            let r = a.iter().map(|c| c * c).sum::<f64>().sqrt();
            (a, dn, r)
        })
        .collect();
    let scale = rows.iter().map(|r| r.2).fold(0.0, f64::max).max(1e-300);
    let design = Matrix::from_fn(rows.len(), monos.len(), |r, c| {
        let (a, _, rr) = &rows[r];
        let v: f64 = monos[c].iter().enumerate().map(|(i, &e)| (a[i] / scale).powi(e as i32)).product();
        v * scale / (rr * rr / scale)
    });
    let svd = design.svd(true, true);
    let mut s = Matrix::zeros(n, n);
    for j in 0..n {
        let rhs = Vector::from_iterator(rows.len(), rows.iter().map(|(_, dn, rr)| dn[j] / (rr * rr / scale)));
        let coef = svd.solve(&rhs, 1e-14).expect("svd solve");
        for (k, e) in monos.iter().enumerate() {
            if let Some(i) = (e.iter().sum::<usize>() == 1).then(|| e.iter().position(|&x| x == 1).unwrap()) {
                s[(j, i)] = coef[k];
            }
        }
    }
    symmetrize(&s)
}

/// Closest approach parameter of the geodesic from `state` to the point `p`, in `[0, t_max]`.
fn closest_approach(model: &SpaceForm, state: &PointTangent, p: &Vector, t_max: f64) -> f64 {
    let k = model.kappa();
    let a = model.inner(&state.x, p);
    let b = model.inner(&state.v, p);
    let t = if k == 0.0 {
        b - model.inner(&state.x, &state.v)
    } else if k > 0.0 {
        let r = k.sqrt();
        (b / r).atan2(a) / r
    } else {
        let r = (-k).sqrt();
        let q = -b / (r * a);
        if q.abs() < 1.0 {
            q.atanh() / r
        } else {
            0.0
        }
    };
    t.clamp(0.0, t_max)
}

/// Diagnostic for collisions along normals: the number of rays of `sigma` that reach a
/// sample point of `pi` within `tol`, arriving parallel to its normal within `tol`.
pub fn normal_collision_count(model: &SpaceForm, sigma: &[PointTangent], pi: &[PointTangent], t_max: f64, tol: f64) -> usize {
    sigma
        .iter()
        .filter(|s| {
            pi.iter().any(|p| {
                let t = closest_approach(model, s, &p.x, t_max);
                let g = model.geodesic(s, t);
                model.dist(&g.x, &p.x) < tol && model.inner(&g.v, &p.v).abs() > 1.0 - tol
            })
        })
        .count()
}
