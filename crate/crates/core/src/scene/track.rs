use std::sync::Arc;

use super::LevelSet;
use crate::manifold::{SpaceForm, Vector};

/// An obstacle or domain level function restricted to one geodesic,
/// `t -> (f(gamma(t)), d/dt f(gamma(t)))`.
#[derive(Debug, Clone)]
pub enum LevelTrack {
    FlatBall { q: f64, b: f64, vv: f64, radius: f64 },
    CurvedBall { model: SpaceForm, a: f64, b: f64, offset: f64, scale: f64 },
    LevelSet { f: Arc<dyn LevelSet>, x: Vector, v: Vector },
}

impl LevelTrack {
    pub fn ball(model: &SpaceForm, center: &Vector, radius: f64, x: &Vector, v: &Vector) -> Self {
        if model.is_flat() {
            let w = x - center;
            Self::FlatBall { q: w.norm_squared(), b: w.dot(v), vv: v.norm_squared(), radius }
        } else {
            Self::CurvedBall {
                model: *model,
                a: model.inner(x, center),
                b: model.inner(v, center),
                offset: model.cs(radius) / model.kappa(),
                scale: -model.sn(radius),
            }
        }
    }

    pub fn level_set(f: Arc<dyn LevelSet>, x: &Vector, v: &Vector) -> Self {
        Self::LevelSet { f, x: x.clone(), v: v.clone() }
    }

    pub fn eval(&self, t: f64) -> (f64, f64) {
        match self {
            Self::FlatBall { q, b, vv, radius } => {
                let f = (q + 2.0 * b * t + vv * t * t - radius * radius) / (2.0 * radius);
                (f, (b + vv * t) / radius)
            }
            Self::CurvedBall { model, a, b, offset, scale } => {
                let (c, s) = (model.cs(t), model.sn(t));
                let f = (c * a + s * b - offset) / scale;
                let df = (-model.kappa() * s * a + c * b) / scale;
                (f, df)
            }
            Self::LevelSet { f, x, v } => {
                let p = x + v * t;
                (f.value(&p), f.gradient(&p).dot(v))
            }
        }
    }
}
