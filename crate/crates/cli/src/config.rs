//! Run configuration: everything a command needs, resolved from flags, files
//! and environment, and written next to its outputs so a run can be repeated.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GlobalConfig {
    pub out: PathBuf,
    pub seed: u64,
    /// Worker threads; 0 uses one per core.
    pub threads: usize,
    pub verbosity: u8,
}

/// Overrides of the scene's default cutoffs.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LimitOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_max: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tangency_eps: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeKind {
    Grid,
    QuasiRandom,
}

/// Sampling of boundary launches; the quasi-random seed is the global seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecConfig {
    pub n_points: usize,
    #[serde(default = "one")]
    pub n_dirs: usize,
    #[serde(default = "quasi_random")]
    pub scheme: SchemeKind,
}

fn one() -> usize {
    1
}

fn quasi_random() -> SchemeKind {
    SchemeKind::QuasiRandom
}

/// A boundary launch: foot direction from the domain centre and direction
/// components `(inward normal, tangential...)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LaunchConfig {
    pub foot: Vec<f64>,
    pub dir: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GermConfig {
    /// Umbilic germ with curvature `curvature` on a boundary launch.
    Launch { foot: Vec<f64>, dir: Vec<f64>, curvature: f64 },
    /// Front grazing obstacle `obstacle` at the boundary point in direction `at`
    /// from its centre.
    Tangency { obstacle: usize, at: Vec<f64>, eps: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum CommandConfig {
    Validate {
        scene: PathBuf,
    },
    Trace {
        scene: PathBuf,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        launch: Option<LaunchConfig>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        spec: Option<SpecConfig>,
        #[serde(default)]
        limits: LimitOverrides,
    },
    Sweep {
        scene: PathBuf,
        spec: SpecConfig,
        #[serde(default)]
        limits: LimitOverrides,
    },
    Compare {
        a: PathBuf,
        b: PathBuf,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        match_radius: Option<f64>,
    },
    Front {
        scene: PathBuf,
        germ: GermConfig,
        steps: usize,
        #[serde(default)]
        limits: LimitOverrides,
    },
    Estimate {
        scene: PathBuf,
        n_rays: usize,
        margin: f64,
        #[serde(default)]
        limits: LimitOverrides,
    },
    Reconstruct {
        tt: PathBuf,
        init: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        match_radius: Option<f64>,
        restarts: usize,
        max_evals: usize,
    },
}

impl CommandConfig {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Validate { .. } => "validate",
            Self::Trace { .. } => "trace",
            Self::Sweep { .. } => "sweep",
            Self::Compare { .. } => "compare",
            Self::Front { .. } => "front",
            Self::Estimate { .. } => "estimate",
            Self::Reconstruct { .. } => "reconstruct",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub global: GlobalConfig,
    pub command: CommandConfig,
}

impl RunConfig {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    pub fn parse(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}
