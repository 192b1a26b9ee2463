pub mod billiard;
pub mod fronts;
pub mod io;
pub mod manifold;
pub mod qmc;
pub mod rigidity;
pub mod scene;

pub use manifold::{Matrix, MetricModel, PointTangent, SpaceForm, Vector};
pub use scene::{Obstacle, Scene, SceneReport, ValidScene};
