//! Property tests over random states, scenes and launches.

mod common;

use std::sync::Arc;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ttlab_core::billiard::{reflect_direction, trace_ray, travelling_time, Limits, Terminal, TravelOutcome};
use ttlab_core::fronts::{propagate_front, reflect_front, FrontGerm};
use ttlab_core::manifold::{geodesic_evolve, ChartModel, PoincareBall, StereographicSphere};
use ttlab_core::rigidity::{compare_tt_sets, launch_state, launches, sample_tt_set, SamplingSpec, Scheme};
use ttlab_core::scene::{obstacle_geometry, SceneError};
use ttlab_core::{Matrix, MetricModel, Obstacle, PointTangent, Scene, SpaceForm, ValidScene, Vector};

use common::*;

fn space_form(i: usize, dim: usize) -> SpaceForm {
    let kappa = [0.0, 1.0, -1.0, 0.25, -0.25][i % 5];
    SpaceForm::new(kappa, dim).unwrap()
}

fn dist_state(sf: &SpaceForm, a: &PointTangent, b: &PointTangent) -> (f64, f64) {
    (sf.dist(&a.x, &b.x), (&a.v - &b.v).norm())
}

/// Start of a path of length `len` centred near the origin; far out on the
/// hyperboloid embedded coordinates lose accuracy like `e^{2r}`.
fn centred_start<R: Rng>(sf: &SpaceForm, len: f64, rng: &mut R) -> PointTangent {
    let mid = random_state(sf, 0.5, rng);
    sf.geodesic(&mid, -0.5 * len)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn flow_property_and_unit_speed(seed in any::<u64>(), model in 0usize..5, dim in 2usize..4, t1 in 0.0f64..5.0, t2 in 0.0f64..5.0) {
        let sf = space_form(model, dim);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = MetricModel::SpaceForm(sf);
        let s = centred_start(&sf, t1 + t2, &mut rng);
        let direct = geodesic_evolve(&m, &s, t1 + t2).unwrap();
        let split = geodesic_evolve(&m, &geodesic_evolve(&m, &s, t1).unwrap(), t2).unwrap();
        let (dx, dv) = dist_state(&sf, &direct, &split);
        prop_assert!(dx < 1e-8 && dv < 1e-8 * (1.0 + direct.v.norm()), "dx {dx:e} dv {dv:e}");
        prop_assert!((sf.norm(&direct.v) - 1.0).abs() < 1e-9);
        if !sf.is_flat() {
            prop_assert!((sf.inner(&direct.x, &direct.v)).abs() < 1e-9 * (1.0 + direct.x.norm() * direct.v.norm()));
        }
    }

    #[test]
    fn reversibility(seed in any::<u64>(), model in 0usize..5, dim in 2usize..4, t in 0.0f64..10.0) {
        let sf = space_form(model, dim);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = MetricModel::SpaceForm(sf);
        let s = centred_start(&sf, t, &mut rng);
        let there = geodesic_evolve(&m, &s, t).unwrap();
        let back = geodesic_evolve(&m, &there.reversed(), t).unwrap();
        let (dx, dv) = dist_state(&sf, &back, &s.reversed());
        prop_assert!(dx < 1e-8 && dv < 1e-8 * (1.0 + s.v.norm()), "dx {dx:e} dv {dv:e}");
    }

    #[test]
    fn reflection_preserves_speed_and_angle(seed in any::<u64>(), model in 0usize..5, dim in 2usize..4) {
        let sf = space_form(model, dim);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = random_point(&sf, 1.0, &mut rng);
        let n = random_unit(&sf, &x, &mut rng);
        let mut v = random_unit(&sf, &x, &mut rng);
        if sf.inner(&v, &n) > 0.0 {
            v = -v;
        }
        prop_assume!(sf.inner(&v, &n) < -1e-6);
        let w = reflect_direction(&sf, &v, &n).unwrap();
        prop_assert!((sf.norm(&w) - 1.0).abs() < 1e-12);
        prop_assert!((sf.inner(&w, &n) + sf.inner(&v, &n)).abs() < 1e-12);
        let tangential = |u: &Vector| u - &n * sf.inner(u, &n);
        prop_assert!((tangential(&w) - tangential(&v)).norm() < 1e-12 * (1.0 + v.norm()));
    }

    #[test]
    fn shrinking_obstacles_never_overlap(seed in any::<u64>(), model in 0usize..3, factor in 0.1f64..1.0) {
        let sf = space_form(model, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let balls: Vec<(Vec<f64>, f64)> = (0..3)
            .map(|_| (vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)], rng.random_range(0.1..0.6)))
            .collect();
        let before = Scene::with_balls(sf, &[0.0, 0.0], 1.5, &balls).validate();
        let shrunk: Vec<(Vec<f64>, f64)> = balls.iter().map(|(c, r)| (c.clone(), r * factor)).collect();
        let after = Scene::with_balls(sf, &[0.0, 0.0], 1.5, &shrunk).validate();
        if before.is_ok() {
            prop_assert!(!matches!(after, Err(SceneError::ObstaclesOverlap(..))), "{:?}", after.err());
        }
    }

    #[test]
    fn two_ball_separation_is_center_distance_minus_radii(seed in any::<u64>(), model in 0usize..5, dim in 2usize..4) {
        let sf = space_form(model, dim);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c1: Vec<f64> = (0..dim).map(|_| rng.random_range(-0.5..-0.3)).collect();
        let c2: Vec<f64> = (0..dim).map(|_| rng.random_range(0.3..0.5)).collect();
        let (r1, r2) = (rng.random_range(0.05..0.2), rng.random_range(0.05..0.2));
        let scene = Scene::with_balls(sf, &vec![0.0; dim], 1.4, &[(c1.clone(), r1), (c2.clone(), r2)]).validate().unwrap();
        let d = sf.dist(&sf.from_normal_coords(&c1), &sf.from_normal_coords(&c2));
        let d_min = scene.report.d_min.unwrap();
        prop_assert!((d_min - (d - r1 - r2)).abs() < 1e-8, "{d_min} vs {}", d - r1 - r2);
    }

    #[test]
    fn ball_shape_operator_matches_normal_field_derivative(seed in any::<u64>(), model in 0usize..5, dim in 2usize..4) {
        let sf = space_form(model, dim);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = random_point(&sf, 0.5, &mut rng);
        let r = rng.random_range(0.2..0.8);
        let ob = Obstacle::ball(c.clone(), r);
        let u = random_unit(&sf, &c, &mut rng);
        let x = sf.geodesic(&PointTangent::new(c.clone(), u), r).x;
        let g = obstacle_geometry(&sf, &ob, &x, None).unwrap();
        let h = 1e-4;
        let normal_at = |y: &Vector| {
            let w = sf.log(y, &c);
            -&w / sf.norm(&w)
        };
        for (a, e) in g.frame.iter().enumerate() {
            // Boundary points on either side along a boundary curve through x, normals carried back to x.
            let carried = |s: f64| {
                let start = PointTangent::new(c.clone(), sf.log(&c, &sf.exp(&x, &(e * s))));
                let y = sf.geodesic(&PointTangent::new(c.clone(), &start.v / sf.norm(&start.v)), r).x;
                let dir = sf.log(&y, &x);
                let len = sf.norm(&dir);
                sf.transport(&PointTangent::new(y.clone(), &dir / len), len, &normal_at(&y))
            };
            let dn = (carried(h) - carried(-h)) / (2.0 * h);
            for (b, f) in g.frame.iter().enumerate() {
                let fd = sf.inner(&dn, f);
                prop_assert!((fd - g.shape[(a, b)]).abs() < 1e-5 * (1.0 + g.shape[(a, b)].abs()), "{fd} vs {}", g.shape[(a, b)]);
            }
        }
    }

    #[test]
    fn shape_operators_stay_symmetric(seed in any::<u64>(), model in 0usize..5, dim in 2usize..4, t in 0.0f64..1.5) {
        let sf = space_form(model, dim);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = MetricModel::SpaceForm(sf);
        let base = random_state(&sf, 0.5, &mut rng);
        let germ = FrontGerm::with_default_frame(&sf, base, random_symmetric(dim - 1, 0.1, 2.0, &mut rng));
        let out = propagate_front(&m, &germ, t).unwrap();
        prop_assert!((&out.s_op - out.s_op.transpose()).amax() < 1e-10);
        let n_k = random_unit(&sf, &out.base.x, &mut rng);
        let n_k = if sf.inner(&n_k, &out.base.v) > 0.0 { -n_k } else { n_k };
        prop_assume!(sf.inner(&n_k, &out.base.v) < -0.05);
        let k_frame = sf.complement_basis(&out.base.x, &n_k);
        let s_k = random_symmetric(dim - 1, 0.1, 2.0, &mut rng);
        let refl = reflect_front(&sf, &out, &n_k, &s_k, &k_frame, 1e-7).unwrap();
        prop_assert!((&refl.s_op - refl.s_op.transpose()).amax() < 1e-10);
    }

    /// `S(t)` from the Jacobi fields `J = cs J0 + sn J0'`, `J0' = S0 J0`:
    /// `S(t) = (cs' + sn' S0)(cs + sn S0)^-1`.
    #[test]
    fn propagation_matches_jacobi_fields(seed in any::<u64>(), model in 0usize..5, dim in 2usize..4, t in 0.0f64..1.5) {
        let sf = space_form(model, dim);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let base = random_state(&sf, 0.5, &mut rng);
        let s0 = random_symmetric(dim - 1, 0.05, 3.0, &mut rng);
        let germ = FrontGerm::with_default_frame(&sf, base, s0.clone());
        let out = propagate_front(&MetricModel::SpaceForm(sf), &germ, t).unwrap();
        let n = dim - 1;
        let (cs, sn, k) = (sf.cs(t), sf.sn(t), sf.kappa());
        let id = Matrix::identity(n, n);
        let jac = &id * cs + &s0 * sn;
        let want = (&id * (-k * sn) + &s0 * cs) * jac.try_inverse().unwrap();
        prop_assert!((&out.s_op - &want).amax() < 1e-10 * (1.0 + want.amax()), "{} vs {}", out.s_op, want);
    }

    #[test]
    fn propagation_matches_ray_fan(seed in any::<u64>(), model in 0usize..5, dim in 2usize..4, t in 0.1f64..1.5) {
        let sf = space_form(model, dim);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let base = random_state(&sf, 0.5, &mut rng);
        let germ = FrontGerm::with_default_frame(&sf, base.clone(), random_symmetric(dim - 1, 0.2, 2.0, &mut rng));
        let out = propagate_front(&MetricModel::SpaceForm(sf), &germ, t).unwrap();
        let n = dim - 1;
        let h = 1e-4;
        // Neighbouring normal geodesics: start at exp(h e_i) with normal v + h S e_i moved there.
        let ray = |i: usize, s: f64| {
            let e = &germ.frame[i];
            let along = PointTangent::new(base.x.clone(), e.clone());
            let y = sf.geodesic(&along, s).x;
            let tilt = germ.frame.iter().enumerate().fold(base.v.clone(), |acc, (j, f)| acc + f * (s * germ.s_op[(j, i)]));
            let w = sf.transport(&along, s, &tilt);
            let w = sf.project_tangent(&y, &w);
            let end = sf.geodesic(&PointTangent::new(y, &w / sf.norm(&w)), t);
            let back = sf.log(&out.base.x, &end.x);
            let len = sf.norm(&back);
            let v_home = if len > 0.0 {
                let u = sf.log(&end.x, &out.base.x) / len;
                sf.transport(&PointTangent::new(end.x.clone(), u), len, &end.v)
            } else {
                end.v.clone()
            };
            (back, v_home)
        };
        let mut jm = Matrix::zeros(n, n);
        let mut dm = Matrix::zeros(n, n);
        for i in 0..n {
            let (p, vp) = ray(i, h);
            let (q, vq) = ray(i, -h);
            let j = (p - q) / (2.0 * h);
            let dj = (vp - vq) / (2.0 * h);
            for a in 0..n {
                jm[(a, i)] = sf.inner(&j, &out.frame[a]);
                dm[(a, i)] = sf.inner(&dj, &out.frame[a]);
            }
        }
        let fan = dm * jm.try_inverse().unwrap();
        let rel = (&fan - &out.s_op).amax() / out.s_op.amax().max(1e-3);
        prop_assert!(rel < 1e-4, "rel {rel:e}\n{fan}\n{}", out.s_op);
    }
}

fn disk_scene(model: usize) -> ValidScene {
    let sf = space_form(model, 2);
    let r = if sf.kappa() > 0.0 { 0.25 } else { 0.4 };
    Scene::with_balls(sf, &[0.0, 0.0], 1.5, &[(vec![-0.7, 0.0], r), (vec![0.7, 0.0], r), (vec![0.0, 0.8], 0.3)])
        .validate()
        .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn traced_rays_keep_unit_speed_and_free_flight(seed in any::<u64>(), model in 0usize..5) {
        let scene = disk_scene(model);
        let sf = *scene.model();
        let limits = Limits::for_scene(&scene);
        let d_min = scene.report.d_min.unwrap();
        let spec = SamplingSpec { n_points: 64, n_dirs: 1, scheme: Scheme::QuasiRandom { seed }, limits };
        for launch in launches(2, &spec).unwrap() {
            let tr = trace_ray(&scene, &launch_state(&scene, &launch), &limits).unwrap();
            for e in &tr.events {
                prop_assert!((sf.norm(&Vector::from_row_slice(&e.v)) - 1.0).abs() < 1e-9);
            }
            let hits: Vec<_> = tr.reflections().collect();
            for w in hits.windows(2) {
                if w[0].obstacle_id != w[1].obstacle_id {
                    prop_assert!(w[1].t - w[0].t >= d_min - 1e-9, "{} < {d_min}", w[1].t - w[0].t);
                }
            }
        }
    }

    #[test]
    fn raising_cutoffs_keeps_exits(seed in any::<u64>(), model in 0usize..5, more_t in 1.0f64..4.0, more_n in 1usize..20) {
        let scene = disk_scene(model);
        let limits = Limits { t_max: 10.0, n_max: 4, tangency_eps: Limits::DEFAULT_TANGENCY_EPS };
        let bigger = Limits { t_max: limits.t_max * more_t, n_max: limits.n_max + more_n, ..limits };
        let spec = SamplingSpec { n_points: 64, n_dirs: 1, scheme: Scheme::QuasiRandom { seed }, limits };
        for launch in launches(2, &spec).unwrap() {
            let sigma = launch_state(&scene, &launch);
            let a = trace_ray(&scene, &sigma, &limits).unwrap();
            if matches!(a.terminal, Terminal::Exited { .. }) {
                prop_assert_eq!(a, trace_ray(&scene, &sigma, &bigger).unwrap());
            }
        }
    }

    #[test]
    fn reversed_exit_retraces_the_ray(seed in any::<u64>(), model in 0usize..5) {
        let scene = disk_scene(model);
        let sf = *scene.model();
        let limits = Limits::for_scene(&scene);
        let spec = SamplingSpec { n_points: 32, n_dirs: 1, scheme: Scheme::QuasiRandom { seed }, limits };
        for launch in launches(2, &spec).unwrap() {
            let sigma = launch_state(&scene, &launch);
            if let TravelOutcome::Sample { x, y, t, exit_v, grazing: false } = travelling_time(&scene, &sigma, &limits).unwrap() {
                let back = travelling_time(&scene, &PointTangent::new(y.clone(), -exit_v), &limits).unwrap();
                let TravelOutcome::Sample { x: x2, y: y2, t: t2, .. } = back else {
                    return Err(TestCaseError::fail("reversed ray trapped"));
                };
                prop_assert!(sf.dist(&x2, &y) < 1e-7 && sf.dist(&y2, &x) < 1e-7 && (t - t2).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn sampling_is_deterministic_and_self_comparison_is_zero(seed in any::<u64>(), model in 0usize..5) {
        let scene = disk_scene(model);
        let spec = SamplingSpec { n_points: 200, n_dirs: 1, scheme: Scheme::QuasiRandom { seed }, limits: Limits::for_scene(&scene) };
        let a = sample_tt_set(&scene, &spec).unwrap();
        let b = sample_tt_set(&scene, &spec).unwrap();
        prop_assert_eq!(&a, &b);
        let r = compare_tt_sets(&a, &a, 0.3).unwrap();
        prop_assert_eq!(r.sup_matched_residual, 0.0);
        prop_assert_eq!(r.mean_matched_residual, 0.0);
        prop_assert_eq!(r.quantile_residual, 0.0);
        prop_assert_eq!(r.unmatched_fraction, 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn chart_flow_property(seed in any::<u64>(), sphere in any::<bool>(), dim in 2usize..4, t1 in 0.0f64..2.0, t2 in 0.0f64..2.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let chart = if sphere {
            MetricModel::Chart(ChartModel::new(Arc::new(StereographicSphere::new(1.0, dim))))
        } else {
            MetricModel::Chart(ChartModel::new(Arc::new(PoincareBall::new(1.0, dim))))
        };
        let x = Vector::from_iterator(dim, (0..dim).map(|_| rng.random_range(-0.2..0.2)));
        let w = Vector::from_iterator(dim, (0..dim).map(|_| gaussian(&mut rng)));
        let speed = chart.inner(&x, &w, &w).sqrt();
        let s = PointTangent::new(x, w / speed);
        let direct = geodesic_evolve(&chart, &s, t1 + t2).unwrap();
        let split = geodesic_evolve(&chart, &geodesic_evolve(&chart, &s, t1).unwrap(), t2).unwrap();
        prop_assert!((&direct.x - &split.x).norm() < 1e-6);
        prop_assert!((chart.inner(&direct.x, &direct.v, &direct.v) - 1.0).abs() < 1e-9);
    }
}
