//! Domains, strictly convex obstacles, derived constants and curvature conditions.

mod level_set;
mod track;

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::manifold::{Matrix, SpaceForm, Vector};
use crate::qmc;

pub use level_set::{Ellipsoid, LevelSet};
pub use track::LevelTrack;

/// Tolerance for accepting a point as lying on an obstacle boundary.
pub const BOUNDARY_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SceneError {
    #[error("ObstaclesOverlap({0},{1})")]
    ObstaclesOverlap(usize, usize),
    #[error("ObstacleNotConvex({0}, {1:?})")]
    ObstacleNotConvex(usize, Vec<f64>),
    #[error("ObstacleOutsideDomain({0})")]
    ObstacleOutsideDomain(usize),
    #[error("DomainTooLarge")]
    DomainTooLarge,
    #[error("NotOnBoundary")]
    NotOnBoundary,
    #[error("UnsupportedObstacle({0})")]
    UnsupportedObstacle(String),
    #[error("InvalidScene({0})")]
    InvalidScene(String),
}

#[derive(Clone)]
pub enum Obstacle {
    /// Geodesic ball; `center` in embedded coordinates.
    Ball { center: Vector, radius: f64 },
    /// Sublevel set `{f < 0}` of a smooth function (Euclidean model only).
    LevelSet(Arc<dyn LevelSet>),
}

impl fmt::Debug for Obstacle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Ball { center, radius } => {
                write!(f, "Ball {{ center: {:?}, radius: {radius} }}", center.as_slice())
            }
            Self::LevelSet(l) => write!(f, "LevelSet({l:?})"),
        }
    }
}

impl Obstacle {
    pub fn ball(center: Vector, radius: f64) -> Self {
        Self::Ball { center, radius }
    }

    /// Positive outside, negative inside; comparable to a distance near the boundary.
    pub fn level(&self, model: &SpaceForm, x: &Vector) -> f64 {
        match self {
            Self::Ball { center, radius } => ball_level(model, center, *radius, x),
            Self::LevelSet(l) => l.value(x),
        }
    }

    /// Level function along the geodesic from `(x, v)`, prepared for repeated evaluation.
    pub fn track(&self, model: &SpaceForm, x: &Vector, v: &Vector) -> LevelTrack {
        match self {
            Self::Ball { center, radius } => LevelTrack::ball(model, center, *radius, x, v),
            Self::LevelSet(l) => LevelTrack::level_set(l.clone(), x, v),
        }
    }

    /// Distance-like boundary residual used for the on-boundary check.
    fn boundary_residual(&self, model: &SpaceForm, x: &Vector) -> f64 {
        match self {
            Self::Ball { center, radius } => (model.dist(x, center) - radius).abs(),
            Self::LevelSet(l) => l.value(x).abs(),
        }
    }
}

/// Signed level of a geodesic ball, normalised so that it behaves like `d - r` near the sphere.
pub(crate) fn ball_level(model: &SpaceForm, center: &Vector, radius: f64, x: &Vector) -> f64 {
    if model.is_flat() {
        ((x - center).norm_squared() - radius * radius) / (2.0 * radius)
    } else {
        let k = model.kappa();
        (model.inner(x, center) - model.cs(radius) / k) / (-model.sn(radius))
    }
}

/// The ambient domain: a closed geodesic ball.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    pub center: Vector,
    pub radius: f64,
}

impl Domain {
    pub fn level(&self, model: &SpaceForm, x: &Vector) -> f64 {
        ball_level(model, &self.center, self.radius, x)
    }

    pub fn track(&self, model: &SpaceForm, x: &Vector, v: &Vector) -> LevelTrack {
        LevelTrack::ball(model, &self.center, self.radius, x, v)
    }

    /// Inward unit normal at a boundary point.
    pub fn inward_normal(&self, model: &SpaceForm, x: &Vector) -> Vector {
        let w = model.log(x, &self.center);
        let n = model.norm(&w);
        w / n
    }

    pub fn diameter(&self) -> f64 {
        2.0 * self.radius
    }
}

/// Constants that only exist as existence statements; supplied by the user.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeclaredConstants {
    pub xi: u32,
    pub phi0: f64,
    pub theta0: f64,
}

impl Default for DeclaredConstants {
    fn default() -> Self {
        Self { xi: 3, phi0: std::f64::consts::FRAC_PI_3, theta0: 0.5 }
    }
}

#[derive(Debug, Clone)]
pub struct Scene {
    pub model: SpaceForm,
    pub domain: Domain,
    pub obstacles: Vec<Obstacle>,
    pub declared: DeclaredConstants,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Condition {
    A,
    B,
    Neither,
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::A => "A",
            Self::B => "B",
            Self::Neither => "Neither",
        };
        f.write_str(s)
    }
}

/// Verdict of the curvature conditions together with the evaluated quantities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionCheck {
    pub condition: Condition,
    /// `D * xi * sqrt(sec_max)`, compared against `pi/2`.
    pub diameter_bound: f64,
    /// `tan(sec_max * D * xi) * sqrt(sec_max)`, compared against `theta`.
    pub curvature_bound: f64,
    pub theta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneReport {
    /// Minimum distance between distinct obstacles; `None` with fewer than two.
    pub d_min: Option<f64>,
    pub diameter: f64,
    pub kappa_min: f64,
    /// False when `kappa_min` comes from boundary sampling.
    pub kappa_min_certified: bool,
    pub sec_max: f64,
    pub theta: f64,
    pub condition: Condition,
    pub check: ConditionCheck,
}

/// Evaluate conditions (A)/(B) exactly as stated, with `theta = min(2 kappa_min cos phi0, theta0)`.
pub fn check_conditions(report: &SceneReport, xi: u32, phi0: f64, theta0: f64) -> ConditionCheck {
    let theta = (2.0 * report.kappa_min * phi0.cos()).min(theta0);
    let sec = report.sec_max;
    let d = report.diameter;
    let xi = xi as f64;
    let root = sec.max(0.0).sqrt();
    let diameter_bound = d * xi * root;
    let curvature_bound = (sec * d * xi).tan() * root;
    let condition = if sec <= 0.0 {
        Condition::A
    } else if diameter_bound < FRAC_PI_2 && curvature_bound < theta {
        Condition::B
    } else {
        Condition::Neither
    };
    ConditionCheck { condition, diameter_bound, curvature_bound, theta }
}

/// Outward normal, tangent frame and shape operator of an obstacle boundary at a point.
#[derive(Debug, Clone)]
pub struct BoundaryGeometry {
    pub normal: Vector,
    pub frame: Vec<Vector>,
    pub shape: Matrix,
}

impl BoundaryGeometry {
    pub fn min_curvature(&self) -> f64 {
        nalgebra::SymmetricEigen::new(self.shape.clone()).eigenvalues.min()
    }
}

/// Normal and shape operator (w.r.t. the outward normal) of `obstacle` at `x`.
/// With `frame = None` a frame of the tangent space of the boundary is built.
pub fn obstacle_geometry(
    model: &SpaceForm,
    obstacle: &Obstacle,
    x: &Vector,
    frame: Option<&[Vector]>,
) -> Result<BoundaryGeometry, SceneError> {
    if obstacle.boundary_residual(model, x) > BOUNDARY_TOL {
        return Err(SceneError::NotOnBoundary);
    }
    let normal = match obstacle {
        Obstacle::Ball { center, .. } => {
            let w = model.log(x, center);
            -&w / model.norm(&w)
        }
        Obstacle::LevelSet(l) => {
            let g = l.gradient(x);
            &g / g.norm()
        }
    };
    let frame: Vec<Vector> = match frame {
        Some(f) => f.to_vec(),
        None => model.complement_basis(x, &normal),
    };
    let n = frame.len();
    let shape = match obstacle {
        Obstacle::Ball { radius, .. } => Matrix::identity(n, n) * model.ct(*radius),
        Obstacle::LevelSet(l) => {
            let g = l.gradient(x).norm();
            let h = l.hessian(x);
            let s = Matrix::from_fn(n, n, |a, b| (frame[a].transpose() * &h * &frame[b])[(0, 0)] / g);
            (&s + s.transpose()) * 0.5
        }
    };
    Ok(BoundaryGeometry { normal, frame, shape })
}

/// Number of boundary samples used to bound principal curvatures of level-set obstacles.
pub const CURVATURE_SAMPLES: usize = 4096;
/// Relative safety margin subtracted from sampled curvature minima.
pub const CURVATURE_MARGIN: f64 = 0.01;

impl Scene {
    pub fn new(model: SpaceForm, domain: Domain, obstacles: Vec<Obstacle>) -> Self {
        Self { model, domain, obstacles, declared: DeclaredConstants::default() }
    }

    /// Scene given in normal coordinates about the model origin.
    pub fn with_balls(model: SpaceForm, domain_center: &[f64], domain_radius: f64, balls: &[(Vec<f64>, f64)]) -> Self {
        let domain = Domain { center: model.from_normal_coords(domain_center), radius: domain_radius };
        let obstacles = balls.iter().map(|(c, r)| Obstacle::ball(model.from_normal_coords(c), *r)).collect();
        Self::new(model, domain, obstacles)
    }

    pub fn validate(self) -> Result<ValidScene, SceneError> {
        let report = validate_scene(&self)?;
        Ok(ValidScene { scene: self, report })
    }

    /// Boundary sample points of an obstacle, roughly `n` of them (dimensions 2 and 3).
    pub fn boundary_samples(&self, obstacle: usize, n: usize) -> Result<Vec<Vector>, SceneError> {
        let model = &self.model;
        let dirs = qmc::sphere_points(model.dim(), n)
            .ok_or_else(|| SceneError::InvalidScene(format!("dimension {} not supported for sampling", model.dim())))?;
        match &self.obstacles[obstacle] {
            Obstacle::Ball { center, radius } => {
                let basis = model.tangent_basis(center);
                Ok(dirs
                    .iter()
                    .map(|u| {
                        let w = basis.iter().zip(u).fold(Vector::zeros(center.len()), |acc, (b, c)| acc + b * *c);
                        model.exp(center, &(w * *radius))
                    })
                    .collect())
            }
            Obstacle::LevelSet(l) => Ok(dirs.iter().map(|u| l.radial_boundary_point(&Vector::from_row_slice(u))).collect()),
        }
    }
}

/// A scene whose invariants have been checked, with its derived constants.
#[derive(Debug, Clone)]
pub struct ValidScene {
    pub scene: Scene,
    pub report: SceneReport,
}

impl ValidScene {
    pub fn model(&self) -> &SpaceForm {
        &self.scene.model
    }

    pub fn domain(&self) -> &Domain {
        &self.scene.domain
    }

    pub fn obstacles(&self) -> &[Obstacle] {
        &self.scene.obstacles
    }

    /// Step used to bracket boundary crossings along a geodesic.
    pub fn bracket_step(&self) -> f64 {
        let r = self.scene.domain.radius / 64.0;
        match self.report.d_min {
            Some(d) => (d / 4.0).min(r),
            None => r,
        }
    }

    pub fn geometry(&self, obstacle: usize, x: &Vector) -> Result<BoundaryGeometry, SceneError> {
        obstacle_geometry(&self.scene.model, &self.scene.obstacles[obstacle], x, None)
    }
}

/// Check the scene invariants and compute `d_min`, `D`, `kappa_min`, `sec_max`
/// and the curvature-condition verdict for the declared constants.
pub fn validate_scene(scene: &Scene) -> Result<SceneReport, SceneError> {
    let model = &scene.model;
    let domain = &scene.domain;
    let amb = model.ambient_dim();
    if domain.center.len() != amb || !domain.radius.is_finite() || domain.radius <= 0.0 {
        return Err(SceneError::InvalidScene("malformed domain".into()));
    }
    if model.kappa() > 0.0 && domain.radius >= FRAC_PI_2 * model.radius() {
        return Err(SceneError::DomainTooLarge);
    }
    for (i, ob) in scene.obstacles.iter().enumerate() {
        match ob {
            Obstacle::Ball { center, radius } => {
                if center.len() != amb || !radius.is_finite() || *radius <= 0.0 {
                    return Err(SceneError::InvalidScene(format!("malformed obstacle {i}")));
                }
            }
            Obstacle::LevelSet(l) => {
                if !model.is_flat() {
                    return Err(SceneError::UnsupportedObstacle(format!("level-set obstacle {i} requires the Euclidean model")));
                }
                if l.dim() != amb {
                    return Err(SceneError::InvalidScene(format!("obstacle {i} has wrong dimension")));
                }
            }
        }
    }

    // Curvature lower bounds and containment.
    let mut kappa_min = f64::INFINITY;
    let mut certified = true;
    for (i, ob) in scene.obstacles.iter().enumerate() {
        match ob {
            Obstacle::Ball { center, radius } => {
                let k = model.ct(*radius);
                if !(k > 0.0) {
                    let p = model.exp(center, &(model.tangent_basis(center)[0].clone() * *radius));
                    return Err(SceneError::ObstacleNotConvex(i, p.as_slice().to_vec()));
                }
                kappa_min = kappa_min.min(k);
                if model.dist(&domain.center, center) + radius >= domain.radius {
                    return Err(SceneError::ObstacleOutsideDomain(i));
                }
            }
            Obstacle::LevelSet(_) => {
                certified = false;
                let pts = scene.boundary_samples(i, CURVATURE_SAMPLES)?;
                let mut kmin = f64::INFINITY;
                for p in &pts {
                    if model.dist(&domain.center, p) >= domain.radius {
                        return Err(SceneError::ObstacleOutsideDomain(i));
                    }
                    let g = obstacle_geometry(model, ob, p, None)?;
                    let k = g.min_curvature();
                    if !(k > 0.0) {
                        return Err(SceneError::ObstacleNotConvex(i, p.as_slice().to_vec()));
                    }
                    kmin = kmin.min(k);
                }
                kappa_min = kappa_min.min(kmin * (1.0 - CURVATURE_MARGIN));
            }
        }
    }
    if scene.obstacles.is_empty() {
        // No obstacle boundary: the bound is vacuous; report the domain's own curvature.
        kappa_min = model.ct(domain.radius);
    }

    let mut d_min: Option<f64> = None;
    for i in 0..scene.obstacles.len() {
        for j in i + 1..scene.obstacles.len() {
            let d = obstacle_distance(model, &scene.obstacles[i], &scene.obstacles[j]);
            if !(d > 1e-12) {
                return Err(SceneError::ObstaclesOverlap(i, j));
            }
            d_min = Some(d_min.map_or(d, |m: f64| m.min(d)));
        }
    }

    let sec_max = model.kappa();
    let mut report = SceneReport {
        d_min,
        diameter: domain.diameter(),
        kappa_min,
        kappa_min_certified: certified,
        sec_max,
        theta: 0.0,
        condition: Condition::Neither,
        check: ConditionCheck { condition: Condition::Neither, diameter_bound: 0.0, curvature_bound: 0.0, theta: 0.0 },
    };
    let dc = scene.declared;
    let check = check_conditions(&report, dc.xi, dc.phi0, dc.theta0);
    report.theta = check.theta;
    report.condition = check.condition;
    report.check = check;
    Ok(report)
}

/// Distance between two disjoint obstacles; non-positive when they intersect.
pub fn obstacle_distance(model: &SpaceForm, a: &Obstacle, b: &Obstacle) -> f64 {
    match (a, b) {
        (Obstacle::Ball { center: c1, radius: r1 }, Obstacle::Ball { center: c2, radius: r2 }) => model.dist(c1, c2) - r1 - r2,
        _ => alternating_projection_distance(a, b),
    }
}

/// Euclidean projection onto a convex obstacle body (identity inside).
fn project_body(ob: &Obstacle, p: &Vector) -> Vector {
    match ob {
        Obstacle::Ball { center, radius } => {
            let w = p - center;
            let n = w.norm();
            if n <= *radius {
                p.clone()
            } else {
                center + w * (radius / n)
            }
        }
        Obstacle::LevelSet(l) => {
            if l.value(p) <= 0.0 {
                p.clone()
            } else {
                l.project(p)
            }
        }
    }
}

fn start_point(ob: &Obstacle, dir: &Vector) -> Vector {
    match ob {
        Obstacle::Ball { center, radius } => center + dir * *radius,
        Obstacle::LevelSet(l) => l.radial_boundary_point(dir),
    }
}

/// Number of start pairs for the alternating-projection distance.
const PROJECTION_STARTS: usize = 64;

fn alternating_projection_distance(a: &Obstacle, b: &Obstacle) -> f64 {
    let dim = match (a, b) {
        (Obstacle::LevelSet(l), _) | (_, Obstacle::LevelSet(l)) => l.dim(),
        (Obstacle::Ball { center, .. }, _) => center.len(),
    };
    let dirs = qmc::sphere_points(dim, PROJECTION_STARTS).unwrap_or_else(|| {
        (0..PROJECTION_STARTS)
            .map(|i| {
                let mut e = vec![0.0; dim];
                e[i % dim] = if (i / dim) % 2 == 0 { 1.0 } else { -1.0 };
                e
            })
            .collect()
    });
    let mut best = f64::INFINITY;
    for u in dirs {
        let mut p = start_point(a, &Vector::from_row_slice(&u));
        let mut q = project_body(b, &p);
        for _ in 0..100_000 {
            let p_new = project_body(a, &q);
            let q_new = project_body(b, &p_new);
            let step = (&p_new - &p).norm().max((&q_new - &q).norm());
            p = p_new;
            q = q_new;
            if step < 1e-12 {
                break;
            }
        }
        let d = (&p - &q).norm();
        if d < 1e-12 {
            return 0.0;
        }
        best = best.min(d);
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_disks(x: f64) -> Scene {
        Scene::with_balls(SpaceForm::euclidean(2), &[0.0, 0.0], 5.0, &[(vec![-x, 0.0], 1.0), (vec![x, 0.0], 1.0)])
    }

    #[test]
    fn euclidean_two_disk_report() {
        let r = validate_scene(&two_disks(2.0)).unwrap();
        assert!((r.d_min.unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(r.diameter, 10.0);
        assert_eq!(r.kappa_min, 1.0);
        assert!(r.kappa_min_certified);
        assert_eq!(r.condition, Condition::A);
    }

    #[test]
    fn overlapping_disks_rejected() {
        assert_eq!(validate_scene(&two_disks(0.9)).unwrap_err(), SceneError::ObstaclesOverlap(0, 1));
    }

    #[test]
    fn sphere_balls_use_geodesic_sphere_curvature() {
        let model = SpaceForm::sphere(1.0, 2);
        let s = Scene::with_balls(model, &[0.0, 0.0], 1.2, &[(vec![-0.4, 0.0], 0.2), (vec![0.4, 0.0], 0.2)]);
        let r = validate_scene(&s).unwrap();
        assert!((r.d_min.unwrap() - 0.4).abs() < 1e-12);
        // Oracle: principal curvature of a geodesic circle of radius r on the unit sphere is cot r.
        assert!((r.kappa_min - 1.0 / 0.2f64.tan()).abs() < 1e-12);
    }

    #[test]
    fn sphere_domain_too_large() {
        let model = SpaceForm::sphere(1.0, 2);
        let s = Scene::with_balls(model, &[0.0, 0.0], 1.6, &[]);
        assert_eq!(validate_scene(&s).unwrap_err(), SceneError::DomainTooLarge);
    }

    #[test]
    fn obstacle_outside_domain() {
        let s = Scene::with_balls(SpaceForm::euclidean(2), &[0.0, 0.0], 5.0, &[(vec![4.5, 0.0], 1.0)]);
        assert_eq!(validate_scene(&s).unwrap_err(), SceneError::ObstacleOutsideDomain(0));
    }

    #[test]
    fn conditions_follow_printed_inequalities() {
        let mut r = validate_scene(&two_disks(2.0)).unwrap();
        assert_eq!(check_conditions(&r, 3, 1.0, 0.5).condition, Condition::A);
        r.sec_max = 0.01;
        let c = check_conditions(&r, 3, 1.0, 0.5);
        assert!((c.diameter_bound - 3.0).abs() < 1e-12);
        assert_eq!(c.condition, Condition::Neither);
        r.sec_max = 1e-4;
        let c = check_conditions(&r, 3, std::f64::consts::FRAC_PI_3, 0.5);
        assert!((c.diameter_bound - 0.3).abs() < 1e-12);
        assert!((c.curvature_bound - 0.003f64.tan() * 0.01).abs() < 1e-15);
        assert!((c.theta - 0.5).abs() < 1e-12);
        assert_eq!(c.condition, Condition::B);
    }

    #[test]
    fn ball_geometry_closed_forms() {
        let e2 = SpaceForm::euclidean(2);
        let disk = Obstacle::ball(Vector::from_row_slice(&[0.0, 0.0]), 1.0);
        let g = obstacle_geometry(&e2, &disk, &Vector::from_row_slice(&[0.6, 0.8]), None).unwrap();
        assert!((g.shape[(0, 0)] - 1.0).abs() < 1e-15);
        assert!((g.normal - Vector::from_row_slice(&[0.6, 0.8])).norm() < 1e-15);

        let e3 = SpaceForm::euclidean(3);
        let ball = Obstacle::ball(Vector::zeros(3), 2.0);
        let g = obstacle_geometry(&e3, &ball, &Vector::from_row_slice(&[0.0, 0.0, 2.0]), None).unwrap();
        assert!((g.shape.clone() - Matrix::identity(2, 2) * 0.5).norm() < 1e-15);

        let s2 = SpaceForm::sphere(1.0, 2);
        let c = s2.origin();
        let ball = Obstacle::ball(c.clone(), 0.2);
        let x = s2.exp(&c, &s2.origin_tangent(&[0.0, 0.2]));
        let g = obstacle_geometry(&s2, &ball, &x, None).unwrap();
        assert!((g.shape[(0, 0)] - 4.933154875586894).abs() < 1e-9);
        assert!((s2.inner(&g.normal, &x)).abs() < 1e-12);
    }

    #[test]
    fn off_boundary_point_rejected() {
        let e2 = SpaceForm::euclidean(2);
        let disk = Obstacle::ball(Vector::zeros(2), 1.0);
        let err = obstacle_geometry(&e2, &disk, &Vector::from_row_slice(&[1.1, 0.0]), None).unwrap_err();
        assert_eq!(err, SceneError::NotOnBoundary);
    }

    #[test]
    fn level_set_obstacles_need_flat_model() {
        let model = SpaceForm::sphere(1.0, 2);
        let domain = Domain { center: model.origin(), radius: 1.0 };
        let e = Ellipsoid::new(vec![0.0, 0.0], vec![0.2, 0.1]);
        let s = Scene::new(model, domain, vec![Obstacle::LevelSet(Arc::new(e))]);
        assert!(matches!(validate_scene(&s), Err(SceneError::UnsupportedObstacle(_))));
    }

    #[test]
    fn ellipse_sampled_curvature_and_distance() {
        // Ellipse with semi-axes a=2, b=1: minimum curvature b/a^2 = 0.25 at the ends of the minor axis.
        let model = SpaceForm::euclidean(2);
        let domain = Domain { center: Vector::zeros(2), radius: 8.0 };
        let e = Ellipsoid::new(vec![-2.5, 0.0], vec![2.0, 1.0]);
        let disk = Obstacle::ball(Vector::from_row_slice(&[3.0, 0.0]), 1.0);
        let s = Scene::new(model, domain, vec![Obstacle::LevelSet(Arc::new(e)), disk]);
        let r = validate_scene(&s).unwrap();
        assert!(!r.kappa_min_certified);
        assert!(r.kappa_min <= 0.25 && r.kappa_min > 0.25 * 0.98, "{}", r.kappa_min);
        // Gap along the axis: ellipse ends at x=-0.5, disk starts at x=2.
        assert!((r.d_min.unwrap() - 2.5).abs() < 1e-8, "{:?}", r.d_min);
    }

    #[test]
    fn shrinking_never_creates_overlap() {
        for r in [1.0, 0.9, 0.5, 0.1] {
            let s =
                Scene::with_balls(SpaceForm::euclidean(2), &[0.0, 0.0], 5.0, &[(vec![-1.05, 0.0], r), (vec![1.05, 0.0], 1.0)]);
            assert!(validate_scene(&s).is_ok());
        }
    }
}
