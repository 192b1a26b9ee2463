//! Ambient Riemannian geometry.
//!
//! Space forms use closed forms in embedded coordinates; a chart metric is
//! integrated numerically. Every operation is a pure function of its inputs.

pub mod chart;
mod space_form;

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

pub use chart::{ChartFlow, ChartMetric, ChartModel, PoincareBall, StereographicSphere};
pub use space_form::SpaceForm;

pub type Vector = DVector<f64>;
pub type Matrix = DMatrix<f64>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("NonFiniteState")]
    NonFiniteState,
    #[error("ChartDomainExceeded")]
    ChartDomainExceeded,
    #[error("DegeneratePlane")]
    DegeneratePlane,
    #[error("invalid model: {0}")]
    InvalidModel(String),
}

/// A point together with a tangent vector at it.
#[derive(Debug, Clone, PartialEq)]
pub struct PointTangent {
    pub x: Vector,
    pub v: Vector,
}

impl PointTangent {
    pub fn new(x: Vector, v: Vector) -> Self {
        Self { x, v }
    }

    pub fn reversed(&self) -> Self {
        Self { x: self.x.clone(), v: -&self.v }
    }

    pub fn is_finite(&self) -> bool {
        self.x.iter().chain(self.v.iter()).all(|c| c.is_finite())
    }
}

#[derive(Debug, Clone)]
pub enum MetricModel {
    SpaceForm(SpaceForm),
    Chart(ChartModel),
}

impl MetricModel {
    pub fn euclidean(dim: usize) -> Self {
        Self::SpaceForm(SpaceForm::euclidean(dim))
    }

    pub fn sphere(radius: f64, dim: usize) -> Self {
        Self::SpaceForm(SpaceForm::sphere(radius, dim))
    }

    pub fn hyperbolic(radius: f64, dim: usize) -> Self {
        Self::SpaceForm(SpaceForm::hyperbolic(radius, dim))
    }

    pub fn chart(metric: Arc<dyn ChartMetric>) -> Self {
        Self::Chart(ChartModel::new(metric))
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::SpaceForm(s) => s.dim(),
            Self::Chart(c) => c.dim(),
        }
    }

    pub fn space_form(&self) -> Option<&SpaceForm> {
        match self {
            Self::SpaceForm(s) => Some(s),
            Self::Chart(_) => None,
        }
    }

    pub fn inner(&self, x: &Vector, a: &Vector, b: &Vector) -> f64 {
        match self {
            Self::SpaceForm(s) => s.inner(a, b),
            Self::Chart(c) => c.inner(x, a, b),
        }
    }

    /// Constant sectional curvature for space forms, `None` for charts.
    pub fn kappa(&self) -> Option<f64> {
        self.space_form().map(|s| s.kappa())
    }
}

fn check_finite(state: PointTangent) -> Result<PointTangent, GeometryError> {
    if state.is_finite() {
        Ok(state)
    } else {
        Err(GeometryError::NonFiniteState)
    }
}

/// Flow `state` along its geodesic for (signed) time `t`.
pub fn geodesic_evolve(model: &MetricModel, state: &PointTangent, t: f64) -> Result<PointTangent, GeometryError> {
    if !t.is_finite() || !state.is_finite() {
        return Err(GeometryError::NonFiniteState);
    }
    if t == 0.0 {
        return Ok(state.clone());
    }
    match model {
        MetricModel::SpaceForm(s) => check_finite(s.geodesic(state, t)),
        MetricModel::Chart(c) => check_finite(c.flow(state, t, &[], None)?.state),
    }
}

/// Parallel-transport `frame` along the geodesic from `state` for time `t`.
/// Returns the end state and the transported frame.
pub fn parallel_transport(
    model: &MetricModel,
    state: &PointTangent,
    t: f64,
    frame: &[Vector],
) -> Result<(PointTangent, Vec<Vector>), GeometryError> {
    if !t.is_finite() || !state.is_finite() {
        return Err(GeometryError::NonFiniteState);
    }
    if t == 0.0 {
        return Ok((state.clone(), frame.to_vec()));
    }
    match model {
        MetricModel::SpaceForm(s) => {
            let end = check_finite(s.geodesic(state, t))?;
            let out: Vec<Vector> = frame.iter().map(|w| s.transport(state, t, w)).collect();
            if out.iter().any(|w| w.iter().any(|c| !c.is_finite())) {
                return Err(GeometryError::NonFiniteState);
            }
            Ok((end, out))
        }
        MetricModel::Chart(c) => {
            let flow = c.flow(state, t, frame, None)?;
            Ok((check_finite(flow.state)?, flow.frame))
        }
    }
}

/// Sectional curvature of the plane spanned by `a` and `b` at `x`.
pub fn sectional_curvature(model: &MetricModel, x: &Vector, a: &Vector, b: &Vector) -> Result<f64, GeometryError> {
    let aa = model.inner(x, a, a);
    let bb = model.inner(x, b, b);
    let ab = model.inner(x, a, b);
    let wedge = (aa * bb - ab * ab).max(0.0).sqrt();
    if wedge < 1e-12 {
        return Err(GeometryError::DegeneratePlane);
    }
    match model {
        MetricModel::SpaceForm(s) => Ok(s.kappa()),
        MetricModel::Chart(c) => Ok(c.sectional_curvature(x, a, b)),
    }
}
