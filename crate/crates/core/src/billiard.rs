//! Billiard flow among the obstacles: event detection, elastic reflection,
//! tangency classification and travelling times.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::manifold::{GeometryError, PointTangent, SpaceForm, Vector};
use crate::scene::{LevelTrack, SceneError, ValidScene, BOUNDARY_TOL};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TraceError {
    #[error("NotIncoming")]
    NotIncoming,
    #[error("DegenerateLaunch")]
    DegenerateLaunch,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Scene(#[from] SceneError),
}

/// Mirror `v_in` in the tangent hyperplane of the boundary with outward normal `normal`.
pub fn reflect_direction(model: &SpaceForm, v_in: &Vector, normal: &Vector) -> Result<Vector, TraceError> {
    if !(model.inner(v_in, normal) < 0.0) {
        return Err(TraceError::NotIncoming);
    }
    Ok(model.mirror(v_in, normal))
}

#[derive(Debug, Clone, PartialEq)]
pub enum Event {
    /// First contact with obstacle `obstacle`; `state` is the incoming state at the contact point.
    Hit {
        obstacle: usize,
        t: f64,
        state: PointTangent,
    },
    ExitDomain {
        t: f64,
        state: PointTangent,
    },
    NoEventWithin {
        horizon: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Limits {
    pub t_max: f64,
    pub n_max: usize,
    pub tangency_eps: f64,
}

impl Limits {
    pub const DEFAULT_TANGENCY_EPS: f64 = 1e-7;

    /// `t_max = 50 D` and `n_max = 10 xi` for the scene's declared `xi`.
    pub fn for_scene(scene: &ValidScene) -> Self {
        Self {
            t_max: 50.0 * scene.report.diameter,
            n_max: 10 * scene.scene.declared.xi.max(1) as usize,
            tangency_eps: Self::DEFAULT_TANGENCY_EPS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReflectionEvent {
    pub t: f64,
    pub x: Vec<f64>,
    pub obstacle_id: usize,
    pub cos_incidence: f64,
    /// Grazing contact: the ray passes without reflecting.
    pub tangential: bool,
    /// Direction after the event.
    pub v: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Cutoff {
    TMax,
    NMax,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Terminal {
    Exited { x: Vector, v: Vector, t: f64 },
    TrappedCutoff(Cutoff),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RayTrace {
    pub sigma0: PointTangent,
    pub events: Vec<ReflectionEvent>,
    pub terminal: Terminal,
    /// Set when two consecutive events are closer in time than `d_min`.
    pub short_flight: bool,
}

impl RayTrace {
    pub fn reflections(&self) -> impl Iterator<Item = &ReflectionEvent> {
        self.events.iter().filter(|e| !e.tangential)
    }

    pub fn n_reflections(&self) -> usize {
        self.reflections().count()
    }

    pub fn n_tangential(&self) -> usize {
        self.events.iter().filter(|e| e.tangential).count()
    }

    pub fn is_trapped(&self) -> bool {
        matches!(self.terminal, Terminal::TrappedCutoff(_))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TravelOutcome {
    Sample {
        x: Vector,
        y: Vector,
        t: f64,
        exit_v: Vector,
        /// The ray touched an obstacle tangentially on the way.
        grazing: bool,
    },
    Trapped(Cutoff),
}

fn bisect_derivative(track: &LevelTrack, mut a: f64, mut b: f64) -> f64 {
    // f' is increasing on [a, b] with f'(a) < 0 < f'(b).
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if track.eval(mid).1 < 0.0 {
            a = mid;
        } else {
            b = mid;
        }
        if b - a <= 1e-15 * (1.0 + b.abs()) {
            break;
        }
    }
    0.5 * (a + b)
}

/// Root of `f` in `[a, b]` with a sign change, by safeguarded Newton.
fn refine_root(track: &LevelTrack, mut a: f64, mut b: f64, increasing: bool) -> f64 {
    let below = |f: f64| if increasing { f < 0.0 } else { f > 0.0 };
    let mut t = 0.5 * (a + b);
    for _ in 0..200 {
        let (f, df) = track.eval(t);
        if f == 0.0 {
            return t;
        }
        if below(f) {
            a = t;
        } else {
            b = t;
        }
        let newton = t - f / df;
        let next = if df != 0.0 && newton > a && newton < b { newton } else { 0.5 * (a + b) };
        let step = (next - t).abs();
        t = next;
        if step <= 1e-15 * (1.0 + t.abs()) || b - a <= 1e-15 * (1.0 + b.abs()) {
            break;
        }
    }
    t
}

/// First time in `(0, horizon]` at which the convex level `track` drops to zero;
/// `None` if it stays positive.
fn first_entry(track: &LevelTrack, step: f64, horizon: f64) -> Option<f64> {
    let (mut fa, mut da) = track.eval(0.0);
    let mut a = 0.0;
    while a < horizon {
        if fa > 0.0 && da >= 0.0 {
            // Past closest approach while outside: the level only grows from here.
            return None;
        }
        let b = (a + step).min(horizon);
        let (fb, db) = track.eval(b);
        if fa > 0.0 && fb <= 0.0 {
            return Some(refine_root(track, a, b, false));
        }
        if fa > 0.0 && fb > 0.0 && da < 0.0 && db > 0.0 {
            let tm = bisect_derivative(track, a, b);
            if track.eval(tm).0 <= 0.0 {
                return Some(refine_root(track, a, tm, false));
            }
            return None;
        }
        a = b;
        fa = fb;
        da = db;
    }
    None
}

/// First time in `[0, horizon]` at which the domain level becomes non-negative.
fn first_exit(track: &LevelTrack, step: f64, horizon: f64, on_boundary_tol: f64) -> Option<f64> {
    let (f0, d0) = track.eval(0.0);
    if f0 > -on_boundary_tol && d0 >= 0.0 {
        return Some(0.0);
    }
    let (mut a, mut fa) = (0.0, f0);
    while a < horizon {
        let b = (a + step).min(horizon);
        let (fb, _) = track.eval(b);
        if fb >= 0.0 {
            if fa < 0.0 {
                return Some(refine_root(track, a, b, true));
            }
            // Launched from the boundary with a chord shorter than one step.
            let tm = bisect_derivative(track, a, b);
            if track.eval(tm).0 < 0.0 {
                return Some(refine_root(track, tm, b, true));
            }
            return Some(0.0);
        }
        a = b;
        fa = fb;
    }
    None
}

/// Earliest boundary crossing along the geodesic from `state`.
/// An obstacle the state currently lies on is ignored.
pub fn next_event(scene: &ValidScene, state: &PointTangent) -> Result<Event, TraceError> {
    let model = scene.model();
    let skip = scene.obstacles().iter().position(|o| o.level(model, &state.x).abs() <= BOUNDARY_TOL);
    next_event_from(scene, state, skip, 2.0 * scene.report.diameter)
}

/// As [`next_event`], skipping obstacle `skip` and searching up to `horizon`.
pub fn next_event_from(scene: &ValidScene, state: &PointTangent, skip: Option<usize>, horizon: f64) -> Result<Event, TraceError> {
    if !state.is_finite() {
        return Err(GeometryError::NonFiniteState.into());
    }
    let model = scene.model();
    let step = scene.bracket_step();
    let d = scene.report.diameter;
    let domain_track = scene.domain().track(model, &state.x, &state.v);
    let exit = first_exit(&domain_track, step, horizon, 1e-12 * d);
    let search_to = exit.map_or(horizon, |t| (t + 1e-12 * d).min(horizon));
    let mut best: Option<(usize, f64)> = None;
    for (i, ob) in scene.obstacles().iter().enumerate() {
        if Some(i) == skip {
            continue;
        }
        let track = ob.track(model, &state.x, &state.v);
        if let Some(t) = first_entry(&track, step, search_to) {
            if best.is_none_or(|(_, tb)| t < tb) {
                best = Some((i, t));
            }
        }
    }
    let at = |t: f64| -> Result<PointTangent, TraceError> {
        let s = model.geodesic(state, t);
        if s.is_finite() {
            Ok(s)
        } else {
            Err(GeometryError::NonFiniteState.into())
        }
    };
    Ok(match (best, exit) {
        (Some((obstacle, t)), _) => Event::Hit { obstacle, t, state: at(t)? },
        (None, Some(t)) => Event::ExitDomain { t, state: at(t)? },
        (None, None) => Event::NoEventWithin { horizon },
    })
}

/// Check that `sigma` is a unit inward vector based on the domain boundary.
pub fn check_launch(scene: &ValidScene, sigma: &PointTangent) -> Result<(), TraceError> {
    let model = scene.model();
    let domain = scene.domain();
    if !sigma.is_finite() {
        return Err(TraceError::DegenerateLaunch);
    }
    if domain.level(model, &sigma.x).abs() > 1e-8 {
        return Err(TraceError::DegenerateLaunch);
    }
    if (model.inner(&sigma.v, &sigma.v) - 1.0).abs() > 1e-9 {
        return Err(TraceError::DegenerateLaunch);
    }
    let n = domain.inward_normal(model, &sigma.x);
    if !(model.inner(&sigma.v, &n) > 0.0) {
        return Err(TraceError::DegenerateLaunch);
    }
    Ok(())
}

/// Follow the billiard ray launched from `sigma` until it leaves the domain
/// or a cutoff is reached. Tangential contacts are recorded and passed through.
pub fn trace_ray(scene: &ValidScene, sigma: &PointTangent, limits: &Limits) -> Result<RayTrace, TraceError> {
    check_launch(scene, sigma)?;
    trace_from(scene, sigma, None, limits)
}

/// Follow the billiard ray through an arbitrary unit state in the domain, for
/// instance a periodic orbit that no boundary launch reaches. A state on an
/// obstacle boundary must point out of that obstacle.
pub fn trace_from_state(scene: &ValidScene, state: &PointTangent, limits: &Limits) -> Result<RayTrace, TraceError> {
    let model = scene.model();
    if !state.is_finite() || (model.inner(&state.v, &state.v) - 1.0).abs() > 1e-9 {
        return Err(TraceError::DegenerateLaunch);
    }
    if scene.domain().level(model, &state.x) > 1e-8 {
        return Err(TraceError::DegenerateLaunch);
    }
    let mut skip = None;
    for (i, ob) in scene.obstacles().iter().enumerate() {
        let level = ob.level(model, &state.x);
        if level < -BOUNDARY_TOL {
            return Err(TraceError::DegenerateLaunch);
        }
        if level <= BOUNDARY_TOL {
            let n = scene.geometry(i, &state.x)?.normal;
            if model.inner(&state.v, &n) < 0.0 {
                return Err(TraceError::NotIncoming);
            }
            skip = Some(i);
        }
    }
    trace_from(scene, state, skip, limits)
}

fn trace_from(scene: &ValidScene, sigma: &PointTangent, skip: Option<usize>, limits: &Limits) -> Result<RayTrace, TraceError> {
    let model = scene.model();
    let d_min = scene.report.d_min;
    let mut state = sigma.clone();
    let mut skip = skip;
    let mut now = 0.0;
    let mut events: Vec<ReflectionEvent> = Vec::new();
    let mut short_flight = false;
    let terminal = loop {
        let remaining = limits.t_max - now;
        if remaining <= 0.0 {
            break Terminal::TrappedCutoff(Cutoff::TMax);
        }
        match next_event_from(scene, &state, skip, remaining)? {
            Event::Hit { obstacle, t, state: hit } => {
                if events.len() >= limits.n_max {
                    break Terminal::TrappedCutoff(Cutoff::NMax);
                }
                let geo = scene.geometry(obstacle, &hit.x)?;
                let cos = (-model.inner(&hit.v, &geo.normal)).max(0.0);
                let tangential = cos < limits.tangency_eps;
                if let (Some(last), Some(dm)) = (events.last(), d_min) {
                    if now + t - last.t < dm - 1e-9 {
                        short_flight = true;
                    }
                }
                now += t;
                let v = if tangential { hit.v.clone() } else { reflect_direction(model, &hit.v, &geo.normal)? };
                state = model.renormalize(PointTangent::new(hit.x, v));
                events.push(ReflectionEvent {
                    t: now,
                    x: state.x.as_slice().to_vec(),
                    obstacle_id: obstacle,
                    cos_incidence: cos,
                    tangential,
                    v: state.v.as_slice().to_vec(),
                });
                skip = Some(obstacle);
            }
            Event::ExitDomain { t, state: out } => {
                break Terminal::Exited { x: out.x, v: out.v, t: now + t };
            }
            Event::NoEventWithin { .. } => break Terminal::TrappedCutoff(Cutoff::TMax),
        }
    };
    Ok(RayTrace { sigma0: sigma.clone(), events, terminal, short_flight })
}

pub fn travelling_time(scene: &ValidScene, sigma: &PointTangent, limits: &Limits) -> Result<TravelOutcome, TraceError> {
    let trace = trace_ray(scene, sigma, limits)?;
    let grazing = trace.n_tangential() > 0;
    Ok(match trace.terminal {
        Terminal::Exited { x, v, t } => TravelOutcome::Sample { x: sigma.x.clone(), y: x, t, exit_v: v, grazing },
        Terminal::TrappedCutoff(c) => TravelOutcome::Trapped(c),
    })
}

/// Unit inward launch from the boundary foot point in unit direction `foot`
/// (coordinates of the domain-centre tangent basis), with direction components
/// `dir = (along inward normal, along the remaining basis)`.
pub fn boundary_launch(scene: &ValidScene, foot: &[f64], dir: &[f64]) -> PointTangent {
    let model = scene.model();
    let domain = scene.domain();
    let basis = model.tangent_basis(&domain.center);
    let m = model.dim();
    let nf: f64 = foot.iter().map(|c| c * c).sum::<f64>().sqrt();
    let u: Vec<f64> = foot.iter().map(|c| c / nf).collect();
    let radial = basis.iter().zip(&u).fold(Vector::zeros(domain.center.len()), |acc, (b, c)| acc + b * *c);
    let out = model.geodesic(&PointTangent::new(domain.center.clone(), radial.clone()), domain.radius);
    let inward = -&out.v;
    // Tangent directions at the foot: an orthonormal basis of u-perp, transported radially
    // (constant in embedded coordinates).
    let perp = orthonormal_complement(&u);
    let mut v = inward * dir[0];
    for (k, p) in perp.iter().enumerate().take(m - 1) {
        let w = basis.iter().zip(p).fold(Vector::zeros(domain.center.len()), |acc, (b, c)| acc + b * *c);
        v += w * dir[k + 1];
    }
    model.renormalize(PointTangent::new(out.x, v))
}

/// Orthonormal basis of the complement of the unit vector `u` in `R^m`,
/// oriented continuously in `u` away from a measure-zero set.
pub(crate) fn orthonormal_complement(u: &[f64]) -> Vec<Vec<f64>> {
    let m = u.len();
    if m == 2 {
        return vec![vec![-u[1], u[0]]];
    }
    let mut out: Vec<Vec<f64>> = Vec::new();
    // Seed with the axis least aligned with u.
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| u[a].abs().partial_cmp(&u[b].abs()).unwrap());
    for &i in &order {
        if out.len() == m - 1 {
            break;
        }
        let mut w = vec![0.0; m];
        w[i] = 1.0;
        let d: f64 = w.iter().zip(u).map(|(a, b)| a * b).sum();
        for k in 0..m {
            w[k] -= d * u[k];
        }
        for o in &out {
            let d: f64 = w.iter().zip(o).map(|(a, b)| a * b).sum();
            for k in 0..m {
                w[k] -= d * o[k];
            }
        }
        let n: f64 = w.iter().map(|c| c * c).sum::<f64>().sqrt();
        if n > 1e-8 {
            out.push(w.iter().map(|c| c / n).collect());
        }
    }
    out
}
