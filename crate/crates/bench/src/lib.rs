//! Fixtures shared by the benchmarks.

use ttlab_core::billiard::Limits;
use ttlab_core::rigidity::{SamplingSpec, Scheme};
use ttlab_core::{Scene, SpaceForm, ValidScene};

/// Unit disks at `(+-2, 0)` in a radius-5 domain of the given model.
pub fn two_disk(model: SpaceForm) -> ValidScene {
    Scene::with_balls(model, &[0.0, 0.0], 5.0, &[(vec![-2.0, 0.0], 1.0), (vec![2.0, 0.0], 1.0)])
        .validate()
        .expect("fixture scene is valid")
}

pub fn spec(scene: &ValidScene, n_points: usize, n_dirs: usize) -> SamplingSpec {
    SamplingSpec { n_points, n_dirs, scheme: Scheme::QuasiRandom { seed: 1 }, limits: Limits::for_scene(scene) }
}
