use serde::{Deserialize, Serialize};

use super::compare::{matched_residuals, Residual};
use super::{sample_tt_set, Outcome, RigidityError, TTSet};
use crate::manifold::{SpaceForm, Vector};
use crate::scene::{DeclaredConstants, Scene, ValidScene};

/// Scenes with `n_disks` geodesic balls in a fixed domain. Parameters are
/// `(center..., radius)` per disk, centres in normal coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct DiskFamily {
    pub model: SpaceForm,
    pub domain_center: Vec<f64>,
    pub domain_radius: f64,
    pub n_disks: usize,
    pub declared: DeclaredConstants,
}

impl DiskFamily {
    pub fn new(model: SpaceForm, domain_center: Vec<f64>, domain_radius: f64, n_disks: usize) -> Self {
        Self { model, domain_center, domain_radius, n_disks, declared: DeclaredConstants::default() }
    }

    pub fn n_params(&self) -> usize {
        self.n_disks * (self.model.dim() + 1)
    }

    pub fn balls(&self, p: &[f64]) -> Vec<(Vec<f64>, f64)> {
        let m = self.model.dim();
        p.chunks(m + 1).map(|c| (c[..m].to_vec(), c[m])).collect()
    }

    /// The scene for `p`, or `None` if it violates a scene invariant.
    pub fn scene(&self, p: &[f64]) -> Option<ValidScene> {
        if p.len() != self.n_params() || p.iter().any(|v| !v.is_finite()) {
            return None;
        }
        let mut s = Scene::with_balls(self.model, &self.domain_center, self.domain_radius, &self.balls(p));
        s.declared = self.declared;
        s.validate().ok()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReconOptions {
    pub match_radius: f64,
    pub restarts: usize,
    pub initial_step: f64,
    pub min_step: f64,
    pub max_evals: usize,
}

impl Default for ReconOptions {
    fn default() -> Self {
        Self { match_radius: 1.0, restarts: 12, initial_step: 0.25, min_step: 1e-6, max_evals: 20_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reconstruction {
    pub params: Vec<f64>,
    pub objective: f64,
    /// Best objective after each improvement; non-increasing.
    pub history: Vec<f64>,
    pub evals: usize,
}

/// Residual of each target sample against the simulated sample from the same
/// launch: `d(y, y') + |t - t'|`, or `None` when exactly one of the pair is a
/// sample. `None` overall when the launches of the two sets differ.
fn paired_residuals(model: &SpaceForm, target: &TTSet, sim: &TTSet) -> Option<Vec<Option<f64>>> {
    if target.samples.len() != sim.samples.len() {
        return None;
    }
    target
        .samples
        .iter()
        .zip(&sim.samples)
        .map(|(a, b)| {
            if a.launch != b.launch {
                return None;
            }
            Some(match (&a.outcome, &b.outcome) {
                (Outcome::Sample { y, t, .. }, Outcome::Sample { y: y2, t: t2, .. }) => {
                    Some(model.dist(&Vector::from_row_slice(y), &Vector::from_row_slice(y2)) + (t - t2).abs())
                }
                (Outcome::Sample { .. }, _) | (_, Outcome::Sample { .. }) => None,
                _ => Some(0.0),
            })
        })
        .collect()
}

/// Sum of squared residuals capped at the match radius. Samples are paired by
/// launch when the simulated set repeats the target's launches, and otherwise
/// matched by nearest neighbour in both directions, with non-samples taking no part.
pub fn objective(target: &TTSet, family: &DiskFamily, p: &[f64], match_radius: f64) -> f64 {
    let Some(scene) = family.scene(p) else { return f64::INFINITY };
    let Ok(sim) = sample_tt_set(&scene, &target.header.spec) else { return f64::INFINITY };
    let cap = match_radius * match_radius;
    if let Some(pairs) = paired_residuals(&family.model, target, &sim) {
        return pairs.iter().map(|r| r.map_or(cap, |v| (v * v).min(cap))).sum();
    }
    let term = |r: &Residual| match r {
        Residual::Matched(v) => (v * v).min(cap),
        Residual::Unmatched => cap,
        Residual::NotSample => 0.0,
    };
    match (matched_residuals(target, &sim, match_radius), matched_residuals(&sim, target, match_radius)) {
        (Ok(a), Ok(b)) => a.iter().chain(&b).map(term).sum(),
        _ => f64::INFINITY,
    }
}

/// Fit disk parameters to a target set by compass search with shrinking steps,
/// restarted from the incumbent until a restart brings no improvement.
pub fn reconstruct_obstacles(
    target: &TTSet,
    family: &DiskFamily,
    init: &[f64],
    opts: &ReconOptions,
) -> Result<Reconstruction, RigidityError> {
    let n = family.n_params();
    if init.len() != n {
        return Err(RigidityError::Unsupported(format!("expected {n} parameters, got {}", init.len())));
    }
    let evals = std::cell::Cell::new(0usize);
    let eval = |p: &[f64]| {
        evals.set(evals.get() + 1);
        objective(target, family, p, opts.match_radius)
    };
    let mut best = init.to_vec();
    let mut fbest = eval(&best);
    let mut history = vec![fbest];
    for restart in 0..=opts.restarts {
        let before = fbest;
        let mut step = opts.initial_step;
        while step >= opts.min_step && fbest > 0.0 {
            let mut improved = false;
            for i in 0..n {
                for s in [1.0, -1.0] {
                    let mut q = best.clone();
                    q[i] += s * step;
                    let fq = eval(&q);
                    if fq < fbest {
                        best = q;
                        fbest = fq;
                        history.push(fbest);
                        improved = true;
                        break;
                    }
                }
            }
            if !improved {
                step *= 0.5;
            }
            if evals.get() >= opts.max_evals {
                return Err(RigidityError::DidNotConverge { best, objective: fbest, evals: evals.get() });
            }
        }
        if fbest == 0.0 || (restart > 0 && fbest >= before) {
            break;
        }
    }
    Ok(Reconstruction { params: best, objective: fbest, history, evals: evals.get() })
}
