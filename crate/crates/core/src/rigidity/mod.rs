//! Travelling-time sets: sampling, set comparison, time-reversal checks,
//! irregular-set probing, reflection-constant estimates and reconstruction.

pub mod compare;
mod reconstruct;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::billiard::{boundary_launch, trace_ray, Cutoff, Limits, Terminal, TraceError};
use crate::io::{scene_hash, ModelSpec, TTSET_FORMAT};
use crate::manifold::{PointTangent, SpaceForm, Vector};
use crate::qmc::{self, Halton};
use crate::scene::{obstacle_geometry, Obstacle, ValidScene};

pub use compare::{compare_tt_sets, matched_residuals, DiscrepancyReport};
pub use reconstruct::{reconstruct_obstacles, DiskFamily, ReconOptions, Reconstruction};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RigidityError {
    #[error("IncomparableSpecs: {0}")]
    IncomparableSpecs(String),
    #[error("InsufficientData")]
    InsufficientData,
    #[error("DidNotConverge after {evals} evaluations (best objective {objective})")]
    DidNotConverge { best: Vec<f64>, objective: f64, evals: usize },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Trace(#[from] TraceError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Scheme {
    /// Regular foot-point grid times a regular direction grid.
    Grid,
    /// Shifted Halton points over foot point and direction jointly.
    QuasiRandom { seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingSpec {
    pub n_points: usize,
    pub n_dirs: usize,
    pub scheme: Scheme,
    pub limits: Limits,
}

impl SamplingSpec {
    pub fn total(&self) -> usize {
        self.n_points * self.n_dirs
    }
}

/// Launch parameters: unit foot direction from the domain centre (in the
/// centre's tangent basis) and direction components `(normal, tangential...)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Launch {
    pub foot: Vec<f64>,
    pub dir: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum Outcome {
    Sample {
        x: Vec<f64>,
        y: Vec<f64>,
        t: f64,
        /// Exit velocity, kept for the time-reversal check.
        v_exit: Vec<f64>,
        reflections: usize,
        /// The ray touched an obstacle tangentially.
        #[serde(default, skip_serializing_if = "std::ops::Not::not")]
        grazing: bool,
    },
    Trapped {
        cutoff: Cutoff,
    },
    Failed {
        error: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TTSample {
    pub launch: Launch,
    #[serde(flatten)]
    pub outcome: Outcome,
}

impl TTSample {
    pub fn is_sample(&self) -> bool {
        matches!(self.outcome, Outcome::Sample { .. })
    }
}

/// Model and domain a set was sampled in; needed to measure distances on the boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetGeometry {
    pub model: ModelSpec,
    /// Embedded coordinates.
    pub domain_center: Vec<f64>,
    pub domain_radius: f64,
}

impl SetGeometry {
    pub fn of(scene: &ValidScene) -> Self {
        Self {
            model: ModelSpec::of(scene.model()),
            domain_center: scene.domain().center.as_slice().to_vec(),
            domain_radius: scene.domain().radius,
        }
    }

    pub fn space_form(&self) -> SpaceForm {
        self.model.build().expect("recorded model is valid")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TTSetHeader {
    pub format: String,
    pub scene_hash: String,
    pub spec: SamplingSpec,
    pub geometry: SetGeometry,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TTSet {
    pub header: TTSetHeader,
    pub samples: Vec<TTSample>,
}

impl TTSet {
    pub fn trapped_fraction(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        self.samples.iter().filter(|s| matches!(s.outcome, Outcome::Trapped { .. })).count() as f64 / self.samples.len() as f64
    }

    pub fn n_samples(&self) -> usize {
        self.samples.iter().filter(|s| s.is_sample()).count()
    }
}

/// Launch parameters of a sampling spec, in sweep order.
pub fn launches(dim: usize, spec: &SamplingSpec) -> Result<Vec<Launch>, RigidityError> {
    if !(dim == 2 || dim == 3) {
        return Err(RigidityError::Unsupported(format!("sampling in dimension {dim}")));
    }
    let k = dim - 1;
    let mk = |u_foot: &[f64], u_dir: &[f64]| Launch {
        foot: qmc::sphere_point(dim, u_foot).expect("dim checked"),
        dir: qmc::hemisphere_point(dim, u_dir).expect("dim checked"),
    };
    Ok(match spec.scheme {
        Scheme::Grid => {
            let feet = qmc::sphere_points(dim, spec.n_points).expect("dim checked");
            let golden = 0.5 * (5f64.sqrt() - 1.0);
            let mut out = Vec::with_capacity(spec.total());
            for foot in feet {
                for j in 0..spec.n_dirs {
                    let u0 = (j as f64 + 0.5) / spec.n_dirs as f64;
                    let u = if k == 1 { vec![u0] } else { vec![u0, (j as f64 * golden).fract()] };
                    out.push(Launch { foot: foot.clone(), dir: qmc::hemisphere_point(dim, &u).expect("dim checked") });
                }
            }
            out
        }
        Scheme::QuasiRandom { seed } => {
            let h = Halton::new(2 * k, seed);
            (0..spec.total() as u64)
                .map(|i| {
                    let u = h.point(i);
                    mk(&u[..k], &u[k..])
                })
                .collect()
        }
    })
}

pub fn launch_state(scene: &ValidScene, launch: &Launch) -> PointTangent {
    boundary_launch(scene, &launch.foot, &launch.dir)
}

fn run_launch(scene: &ValidScene, launch: Launch, limits: &Limits) -> TTSample {
    let sigma = launch_state(scene, &launch);
    let outcome = match trace_ray(scene, &sigma, limits) {
        Ok(tr) => {
            let grazing = tr.n_tangential() > 0;
            let reflections = tr.n_reflections();
            match tr.terminal {
                Terminal::Exited { x, v, t } => Outcome::Sample {
                    x: sigma.x.as_slice().to_vec(),
                    y: x.as_slice().to_vec(),
                    t,
                    v_exit: v.as_slice().to_vec(),
                    reflections,
                    grazing,
                },
                Terminal::TrappedCutoff(cutoff) => Outcome::Trapped { cutoff },
            }
        }
        Err(e) => Outcome::Failed { error: e.to_string() },
    };
    TTSample { launch, outcome }
}

/// Sweep the launch set of `spec`; deterministic and data-parallel. Per-ray
/// failures are recorded in the samples.
pub fn sample_tt_set(scene: &ValidScene, spec: &SamplingSpec) -> Result<TTSet, RigidityError> {
    if spec.n_points == 0 || spec.n_dirs == 0 {
        return Err(RigidityError::InsufficientData);
    }
    let ls = launches(scene.model().dim(), spec)?;
    let samples: Vec<TTSample> = ls.into_par_iter().map(|l| run_launch(scene, l, &spec.limits)).collect();
    Ok(TTSet {
        header: TTSetHeader {
            format: TTSET_FORMAT.into(),
            scene_hash: scene_hash(&scene.scene),
            spec: *spec,
            geometry: SetGeometry::of(scene),
            count: samples.len(),
        },
        samples,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReversalReport {
    pub checked: usize,
    pub max_error: f64,
    /// Samples whose reversed launch disagrees by more than the tolerance.
    pub failures: Vec<usize>,
    /// Reflection counts of the failures, same order.
    pub failure_reflections: Vec<usize>,
}

/// Relaunch every sample from its exit point with reversed exit velocity and
/// compare with `(y, x, t)`. The error is `d(x, x') + |t - t'|`.
pub fn time_reversal_check(scene: &ValidScene, set: &TTSet, tol: f64) -> ReversalReport {
    let model = *scene.model();
    let limits = set.header.spec.limits;
    let results: Vec<Option<(f64, usize)>> = set
        .samples
        .par_iter()
        .map(|s| {
            let Outcome::Sample { x, y, t, v_exit, reflections, .. } = &s.outcome else { return None };
            let sigma = model.renormalize(PointTangent::new(Vector::from_row_slice(y), -Vector::from_row_slice(v_exit)));
            let err = match trace_ray(scene, &sigma, &limits) {
                Ok(tr) => match tr.terminal {
                    Terminal::Exited { x: x2, t: t2, .. } => model.dist(&x2, &Vector::from_row_slice(x)) + (t2 - t).abs(),
                    Terminal::TrappedCutoff(_) => f64::INFINITY,
                },
                Err(_) => f64::INFINITY,
            };
            Some((err, *reflections))
        })
        .collect();
    let mut rep = ReversalReport { checked: 0, max_error: 0.0, failures: vec![], failure_reflections: vec![] };
    for (i, r) in results.into_iter().enumerate() {
        let Some((err, refl)) = r else { continue };
        rep.checked += 1;
        rep.max_error = rep.max_error.max(err);
        if !(err <= tol) {
            rep.failures.push(i);
            rep.failure_reflections.push(refl);
        }
    }
    rep
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IrregularPatch {
    /// Obstacle index in the probed scene.
    pub obstacle: usize,
    pub points: Vec<Vec<f64>>,
}

/// Distance from `x` to the boundary of `ob` and the nearest boundary point.
fn boundary_distance(model: &SpaceForm, ob: &Obstacle, x: &Vector) -> (f64, Vector) {
    match ob {
        Obstacle::Ball { center, radius } => {
            let d = model.dist(x, center);
            let w = model.log(center, x);
            let nw = model.norm(&w);
            let p = if nw > 0.0 { model.exp(center, &(w * (*radius / nw))) } else { x.clone() };
            ((d - radius).abs(), p)
        }
        Obstacle::LevelSet(l) => {
            let p = l.project(x);
            ((x - &p).norm(), p)
        }
    }
}

const PROBE_TOL: f64 = 1e-6;

/// Points of `k`'s obstacle boundaries, sampled at spacing `resolution`, that
/// have no neighbourhood of that radius on which the boundary of `l` agrees
/// (positions and normals within `1e-6`). Grouped by obstacle.
pub fn probe_irregular_set(k: &ValidScene, l: &ValidScene, resolution: f64) -> Result<Vec<IrregularPatch>, RigidityError> {
    let model = *k.model();
    let m = model.dim();
    if !(m == 2 || m == 3) {
        return Err(RigidityError::Unsupported(format!("probing in dimension {m}")));
    }
    let agrees = |x: &Vector| -> bool {
        let Ok(gk) = k.obstacles().iter().find_map(|o| obstacle_geometry(&model, o, x, None).ok()).ok_or(()) else {
            return false;
        };
        l.obstacles().iter().any(|o| {
            let (d, p) = boundary_distance(&model, o, x);
            if d > PROBE_TOL {
                return false;
            }
            let Ok(gl) = obstacle_geometry(&model, o, &p, None) else { return false };
            // Compare normals at the common point; transport is negligible at this distance.
            (gk.normal.clone() - gl.normal).norm() <= PROBE_TOL
        })
    };
    let mut out = Vec::new();
    for (i, ob) in k.obstacles().iter().enumerate() {
        let size = match ob {
            Obstacle::Ball { radius, .. } => model.sn(*radius),
            Obstacle::LevelSet(ls) => ls.bounding_radius(),
        };
        let n = if m == 2 {
            (std::f64::consts::TAU * size / resolution).ceil() as usize
        } else {
            (4.0 * std::f64::consts::PI * size * size / (resolution * resolution)).ceil() as usize
        }
        .max(8);
        let pts = k.scene.boundary_samples(i, n).map_err(|e| RigidityError::Unsupported(e.to_string()))?;
        let flagged: Vec<Vec<f64>> = pts
            .par_iter()
            .filter(|x| {
                let Ok(geo) = obstacle_geometry(&model, ob, x, None) else { return true };
                // The point and a ring at the probe radius around it.
                let mut probe = vec![(*x).clone()];
                for e in &geo.frame {
                    for s in [-1.0, 1.0] {
                        let q = model.exp(x, &(e * (s * resolution)));
                        probe.push(boundary_distance(&model, ob, &q).1);
                    }
                }
                !probe.iter().all(|q| agrees(q))
            })
            .map(|x| x.as_slice().to_vec())
            .collect();
        if !flagged.is_empty() {
            out.push(IrregularPatch { obstacle: i, points: flagged });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReflectionLevel {
    pub k: usize,
    /// Max over rays with at least `k` reflections of the smallest incidence
    /// angle among their first `k` reflections.
    pub m_k: f64,
    pub rays: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReflectionConstants {
    pub xi_hat: usize,
    pub phi0_hat: f64,
    pub curve: Vec<ReflectionLevel>,
}

pub const DEFAULT_ANGLE_MARGIN: f64 = 1e-3;

/// Empirical `xi` and `phi0` from `n_rays` quasi-random launches (seed `seed`).
pub fn estimate_reflection_constants(
    scene: &ValidScene,
    n_rays: usize,
    limits: &Limits,
    margin: f64,
    seed: u64,
) -> Result<ReflectionConstants, RigidityError> {
    if n_rays == 0 {
        return Err(RigidityError::InsufficientData);
    }
    let spec = SamplingSpec { n_points: n_rays, n_dirs: 1, scheme: Scheme::QuasiRandom { seed }, limits: *limits };
    let ls = launches(scene.model().dim(), &spec)?;
    let angles: Vec<Vec<f64>> = ls
        .into_par_iter()
        .filter_map(|l| {
            let sigma = launch_state(scene, &l);
            let tr = trace_ray(scene, &sigma, limits).ok()?;
            Some(tr.reflections().map(|e| e.cos_incidence.clamp(-1.0, 1.0).acos()).collect())
        })
        .collect();
    reflection_curve(&angles, margin)
}

/// `m(k)` from per-ray incidence angles, and the first `k` with `m(k) < pi/2 - margin`.
pub fn reflection_curve(angles: &[Vec<f64>], margin: f64) -> Result<ReflectionConstants, RigidityError> {
    let kmax = angles.iter().map(|a| a.len()).max().unwrap_or(0);
    let mut curve = Vec::new();
    for k in 1..=kmax {
        let mut m_k = f64::NEG_INFINITY;
        let mut rays = 0;
        for a in angles.iter().filter(|a| a.len() >= k) {
            rays += 1;
            m_k = m_k.max(a[..k].iter().cloned().fold(f64::INFINITY, f64::min));
        }
        curve.push(ReflectionLevel { k, m_k, rays });
    }
    let hit = curve.iter().find(|l| l.m_k < std::f64::consts::FRAC_PI_2 - margin).ok_or(RigidityError::InsufficientData)?;
    Ok(ReflectionConstants { xi_hat: hit.k, phi0_hat: hit.m_k, curve })
}
