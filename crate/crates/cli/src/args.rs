//! Command-line flags and their resolution into a [`RunConfig`].

use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::{CommandConfig, GermConfig, GlobalConfig, LaunchConfig, LimitOverrides, RunConfig, SchemeKind, SpecConfig};
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "ttlab", version, about = "Travelling-time experiments for billiards in space forms")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Output directory for artifacts and the manifest [default: ttlab-out].
    #[arg(long, global = true, env = "TTLAB_OUT")]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, env = "TTLAB_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Worker threads (0: one per core).
    #[arg(long, global = true, env = "TTLAB_THREADS", default_value_t = 0)]
    pub threads: usize,
    /// More log output; repeat for more.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Debug, Args)]
pub struct SceneArg {
    /// Scene file (JSON).
    #[arg(long, env = "TTLAB_SCENE")]
    pub scene: PathBuf,
}

#[derive(Debug, Args)]
pub struct LimitArgs {
    #[arg(long, env = "TTLAB_T_MAX")]
    pub t_max: Option<f64>,
    #[arg(long, env = "TTLAB_N_MAX")]
    pub n_max: Option<usize>,
    #[arg(long, env = "TTLAB_TANGENCY_EPS")]
    pub tangency_eps: Option<f64>,
}

impl LimitArgs {
    fn resolve(&self) -> LimitOverrides {
        LimitOverrides { t_max: self.t_max, n_max: self.n_max, tangency_eps: self.tangency_eps }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SchemeArg {
    Grid,
    QuasiRandom,
}

#[derive(Debug, Args)]
pub struct SpecArgs {
    /// Sampling spec file (JSON with n_points, n_dirs, scheme).
    #[arg(long, env = "TTLAB_SPEC")]
    pub spec: Option<PathBuf>,
    #[arg(long)]
    pub n_points: Option<usize>,
    #[arg(long)]
    pub n_dirs: Option<usize>,
    #[arg(long, value_enum)]
    pub scheme: Option<SchemeArg>,
}

impl SpecArgs {
    fn given(&self) -> bool {
        self.spec.is_some() || self.n_points.is_some() || self.n_dirs.is_some() || self.scheme.is_some()
    }

    /// The spec file, if any, with individual flags taking precedence.
    fn resolve(&self) -> Result<SpecConfig, CliError> {
        let mut spec = match &self.spec {
            Some(p) => {
                let text = fs::read_to_string(p).map_err(|e| CliError::runtime(p.display(), e))?;
                serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {e}", p.display())))?
            }
            None => SpecConfig {
                n_points: self.n_points.ok_or_else(|| CliError::Usage("--n-points or --spec is required".into()))?,
                n_dirs: 1,
                scheme: SchemeKind::QuasiRandom,
            },
        };
        if let Some(n) = self.n_points {
            spec.n_points = n;
        }
        if let Some(n) = self.n_dirs {
            spec.n_dirs = n;
        }
        if let Some(s) = self.scheme {
            spec.scheme = match s {
                SchemeArg::Grid => SchemeKind::Grid,
                SchemeArg::QuasiRandom => SchemeKind::QuasiRandom,
            };
        }
        Ok(spec)
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate a scene and report the curvature conditions.
    Validate(SceneArg),
    /// Trace one boundary launch, or every launch of a sampling spec.
    Trace {
        #[command(flatten)]
        scene: SceneArg,
        /// Foot direction from the domain centre, comma separated.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, requires = "dir")]
        foot: Option<Vec<f64>>,
        /// Launch direction: inward normal component first.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, requires = "foot")]
        dir: Option<Vec<f64>>,
        #[command(flatten)]
        spec: SpecArgs,
        #[command(flatten)]
        limits: LimitArgs,
    },
    /// Sample a travelling-time set.
    Sweep {
        #[command(flatten)]
        scene: SceneArg,
        #[command(flatten)]
        spec: SpecArgs,
        #[command(flatten)]
        limits: LimitArgs,
    },
    /// Compare two travelling-time sets.
    Compare {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, env = "TTLAB_MATCH_RADIUS")]
        match_radius: Option<f64>,
    },
    /// Follow a wave front along its billiard ray.
    Front {
        #[command(flatten)]
        scene: SceneArg,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        foot: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        dir: Option<Vec<f64>>,
        /// Curvature of the umbilic germ on the launch.
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        curvature: f64,
        /// Build the germ grazing this obstacle instead of using a launch.
        #[arg(long, conflicts_with_all = ["foot", "dir"], requires = "at")]
        tangency: Option<usize>,
        /// Direction from the obstacle centre to the grazing point.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        at: Option<Vec<f64>>,
        #[arg(long, default_value_t = 0.05)]
        eps: f64,
        /// Extra records per free segment.
        #[arg(long, default_value_t = 4)]
        steps: usize,
        #[command(flatten)]
        limits: LimitArgs,
    },
    /// Estimate the reflection constants xi and phi0.
    Estimate {
        #[command(flatten)]
        scene: SceneArg,
        #[arg(long, default_value_t = 2000)]
        n_rays: usize,
        #[arg(long, default_value_t = ttlab_core::rigidity::DEFAULT_ANGLE_MARGIN)]
        margin: f64,
        #[command(flatten)]
        limits: LimitArgs,
    },
    /// Fit disk obstacles to a travelling-time set.
    Reconstruct {
        /// Target travelling-time set.
        #[arg(long)]
        tt: PathBuf,
        /// Initial parameters: centre and radius per disk, comma separated.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        init: Vec<f64>,
        #[arg(long, env = "TTLAB_MATCH_RADIUS")]
        match_radius: Option<f64>,
        #[arg(long, default_value_t = 12)]
        restarts: usize,
        #[arg(long, default_value_t = 20_000)]
        max_evals: usize,
    },
    /// Rerun a saved config.json, optionally into a different --out.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
}

impl Cli {
    pub fn resolve(self) -> Result<RunConfig, CliError> {
        let out = self.global.out;
        let global = GlobalConfig {
            out: out.clone().unwrap_or_else(|| PathBuf::from("ttlab-out")),
            seed: self.global.seed,
            threads: self.global.threads,
            verbosity: self.global.verbose,
        };
        let command = match self.command {
            Command::Run { config } => {
                let text = fs::read_to_string(&config).map_err(|e| CliError::runtime(config.display(), e))?;
                let mut cfg = RunConfig::parse(&text).map_err(|e| CliError::Validation(format!("{}: {e}", config.display())))?;
                if let Some(out) = out {
                    cfg.global.out = out;
                }
                return Ok(cfg);
            }
            Command::Validate(s) => CommandConfig::Validate { scene: s.scene },
            Command::Trace { scene, foot, dir, spec, limits } => {
                let launch = foot.zip(dir).map(|(foot, dir)| LaunchConfig { foot, dir });
                if launch.is_some() == spec.given() {
                    return Err(CliError::Usage("trace takes either --foot/--dir or a sampling spec".into()));
                }
                let spec = if spec.given() { Some(spec.resolve()?) } else { None };
                CommandConfig::Trace { scene: scene.scene, launch, spec, limits: limits.resolve() }
            }
            Command::Sweep { scene, spec, limits } => {
                CommandConfig::Sweep { scene: scene.scene, spec: spec.resolve()?, limits: limits.resolve() }
            }
            Command::Compare { a, b, match_radius } => CommandConfig::Compare { a, b, match_radius },
            Command::Front { scene, foot, dir, curvature, tangency, at, eps, steps, limits } => {
                let germ = match (tangency, at) {
                    (Some(obstacle), Some(at)) => GermConfig::Tangency { obstacle, at, eps },
                    _ => match (foot, dir) {
                        (Some(foot), Some(dir)) => GermConfig::Launch { foot, dir, curvature },
                        _ => return Err(CliError::Usage("front needs --foot and --dir, or --tangency and --at".into())),
                    },
                };
                CommandConfig::Front { scene: scene.scene, germ, steps, limits: limits.resolve() }
            }
            Command::Estimate { scene, n_rays, margin, limits } => {
                CommandConfig::Estimate { scene: scene.scene, n_rays, margin, limits: limits.resolve() }
            }
            Command::Reconstruct { tt, init, match_radius, restarts, max_evals } => {
                CommandConfig::Reconstruct { tt, init, match_radius, restarts, max_evals }
            }
        };
        Ok(RunConfig { global, command })
    }
}
