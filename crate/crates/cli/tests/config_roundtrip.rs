use std::path::PathBuf;

use proptest::prelude::*;
use ttlab_cli::config::*;

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![-1e6..1e6f64, Just(0.0), Just(1e-300), Just(-0.1), Just(f64::MAX), Just(f64::MIN_POSITIVE)]
}

fn path() -> impl Strategy<Value = PathBuf> {
    "[a-z0-9_./-]{1,20}".prop_map(PathBuf::from)
}

fn limits() -> impl Strategy<Value = LimitOverrides> {
    (proptest::option::of(finite()), proptest::option::of(0usize..1000), proptest::option::of(finite()))
        .prop_map(|(t_max, n_max, tangency_eps)| LimitOverrides { t_max, n_max, tangency_eps })
}

fn spec() -> impl Strategy<Value = SpecConfig> {
    (1usize..10_000, 1usize..100, prop_oneof![Just(SchemeKind::Grid), Just(SchemeKind::QuasiRandom)])
        .prop_map(|(n_points, n_dirs, scheme)| SpecConfig { n_points, n_dirs, scheme })
}

fn vecf() -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(finite(), 0..7)
}

fn germ() -> impl Strategy<Value = GermConfig> {
    prop_oneof![
        (vecf(), vecf(), finite()).prop_map(|(foot, dir, curvature)| GermConfig::Launch { foot, dir, curvature }),
        (0usize..5, vecf(), finite()).prop_map(|(obstacle, at, eps)| GermConfig::Tangency { obstacle, at, eps }),
    ]
}

fn command() -> impl Strategy<Value = CommandConfig> {
    prop_oneof![
        path().prop_map(|scene| CommandConfig::Validate { scene }),
        (path(), proptest::option::of((vecf(), vecf())), proptest::option::of(spec()), limits()).prop_map(
            |(scene, l, spec, limits)| CommandConfig::Trace {
                scene,
                launch: l.map(|(foot, dir)| LaunchConfig { foot, dir }),
                spec,
                limits
            }
        ),
        (path(), spec(), limits()).prop_map(|(scene, spec, limits)| CommandConfig::Sweep { scene, spec, limits }),
        (path(), path(), proptest::option::of(finite())).prop_map(|(a, b, match_radius)| CommandConfig::Compare {
            a,
            b,
            match_radius
        }),
        (path(), germ(), 0usize..50, limits()).prop_map(|(scene, germ, steps, limits)| CommandConfig::Front {
            scene,
            germ,
            steps,
            limits
        }),
        (path(), 0usize..10_000, finite(), limits()).prop_map(|(scene, n_rays, margin, limits)| CommandConfig::Estimate {
            scene,
            n_rays,
            margin,
            limits
        }),
        (path(), vecf(), proptest::option::of(finite()), 0usize..20, 0usize..100_000).prop_map(
            |(tt, init, match_radius, restarts, max_evals)| CommandConfig::Reconstruct {
                tt,
                init,
                match_radius,
                restarts,
                max_evals
            }
        ),
    ]
}

fn run_config() -> impl Strategy<Value = RunConfig> {
    (path(), any::<u64>(), 0usize..64, 0u8..4, command()).prop_map(|(out, seed, threads, verbosity, command)| RunConfig {
        global: GlobalConfig { out, seed, threads, verbosity },
        command,
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn parse_inverts_emit(cfg in run_config()) {
        let text = cfg.to_json();
        let back = RunConfig::parse(&text).unwrap();
        prop_assert_eq!(&back, &cfg);
        prop_assert_eq!(back.to_json(), text);
    }
}

#[test]
fn unknown_fields_are_rejected_with_a_position() {
    let text =
        r#"{"global":{"out":"o","seed":1,"threads":0,"verbosity":0},"command":{"name":"validate","scene":"s.json","extra":1}}"#;
    let err = RunConfig::parse(text).unwrap_err().to_string();
    assert!(err.contains("extra") && err.contains("line 1"), "{err}");
}
