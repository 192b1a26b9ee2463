use std::fmt::Write as _;
use std::fs;
use std::io::BufReader;
use std::path::Path;

use log::{info, warn};
use serde::Serialize;
use ttlab_core::billiard::{boundary_launch, trace_ray, Limits};
use ttlab_core::fronts::{follow_front, front_from_tangency, propagate_front, FrontGerm};
use ttlab_core::io::{read_ttset, write_front_csv, write_jsonl, write_ttset, SceneFile, TraceRecord};
use ttlab_core::rigidity::{
    compare_tt_sets, estimate_reflection_constants, launch_state, launches, reconstruct_obstacles, sample_tt_set, DiskFamily,
    Outcome, ReconOptions, RigidityError, SamplingSpec, Scheme, TTSet,
};
use ttlab_core::scene::Condition;
use ttlab_core::{Matrix, MetricModel, Obstacle, PointTangent, SceneReport, ValidScene, Vector};

use crate::config::{CommandConfig, GermConfig, LaunchConfig, LimitOverrides, RunConfig, SchemeKind, SpecConfig};
use crate::error::CliError;
use crate::manifest::{Manifest, OutputDir};

/// What a command produced: text for stdout and named artifacts.
#[derive(Debug, Default)]
pub struct Outputs {
    pub stdout: String,
    pub files: Vec<(String, Vec<u8>)>,
}

impl Outputs {
    fn file(&mut self, name: &str, bytes: Vec<u8>) {
        self.files.push((name.to_string(), bytes));
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) {
        let mut text = serde_json::to_string_pretty(value).expect("output serialises");
        text.push('\n');
        self.file(name, text.into_bytes());
    }
}

/// Run a configured command and write its artifacts, the config and the manifest
/// under the output directory. Nothing is written when the command fails.
pub fn execute(cfg: &RunConfig) -> Result<(Outputs, Manifest), CliError> {
    let outputs = run_command(cfg)?;
    let mut dir = OutputDir::create(&cfg.global.out)?;
    dir.write("config.json", (cfg.to_json() + "\n").as_bytes())?;
    for (name, bytes) in &outputs.files {
        dir.write(name, bytes)?;
    }
    let manifest = dir.finish(cfg.command.name(), cfg.global.seed)?;
    Ok((outputs, manifest))
}

pub fn run_command(cfg: &RunConfig) -> Result<Outputs, CliError> {
    let seed = cfg.global.seed;
    match &cfg.command {
        CommandConfig::Validate { scene } => validate(scene),
        CommandConfig::Trace { scene, launch, spec, limits } => trace(scene, launch.as_ref(), spec.as_ref(), limits, seed),
        CommandConfig::Sweep { scene, spec, limits } => sweep(scene, spec, limits, seed),
        CommandConfig::Compare { a, b, match_radius } => compare(a, b, *match_radius),
        CommandConfig::Front { scene, germ, steps, limits } => front(scene, germ, *steps, limits),
        CommandConfig::Estimate { scene, n_rays, margin, limits } => estimate(scene, *n_rays, *margin, limits, seed),
        CommandConfig::Reconstruct { tt, init, match_radius, restarts, max_evals } => {
            reconstruct(tt, init, *match_radius, *restarts, *max_evals)
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::runtime(path.display(), e))
}

pub fn load_scene(path: &Path) -> Result<ValidScene, CliError> {
    let file = SceneFile::parse(&read(path)?).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    Ok(file.to_scene().map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?.validate()?)
}

fn load_ttset(path: &Path) -> Result<TTSet, CliError> {
    let f = fs::File::open(path).map_err(|e| CliError::runtime(path.display(), e))?;
    read_ttset(BufReader::new(f)).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

pub fn resolve_limits(scene: &ValidScene, o: &LimitOverrides) -> Result<Limits, CliError> {
    let mut l = Limits::for_scene(scene);
    if let Some(t) = o.t_max {
        if !(t > 0.0 && t.is_finite()) {
            return Err(CliError::Usage(format!("--t-max must be positive, got {t}")));
        }
        l.t_max = t;
    }
    if let Some(n) = o.n_max {
        l.n_max = n;
    }
    if let Some(e) = o.tangency_eps {
        if !(0.0..1.0).contains(&e) {
            return Err(CliError::Usage(format!("--tangency-eps must lie in [0, 1), got {e}")));
        }
        l.tangency_eps = e;
    }
    Ok(l)
}

fn sampling(spec: &SpecConfig, seed: u64, limits: Limits) -> Result<SamplingSpec, CliError> {
    if spec.n_points == 0 || spec.n_dirs == 0 {
        return Err(CliError::Usage("sampling needs at least one point and one direction".into()));
    }
    let scheme = match spec.scheme {
        SchemeKind::Grid => Scheme::Grid,
        SchemeKind::QuasiRandom => Scheme::QuasiRandom { seed },
    };
    Ok(SamplingSpec { n_points: spec.n_points, n_dirs: spec.n_dirs, scheme, limits })
}

fn condition_line(report: &SceneReport) -> String {
    let c = &report.check;
    match report.condition {
        Condition::A => "condition: A (sec_max <= 0)".to_string(),
        Condition::B => format!(
            "condition: B (D xi sqrt(sec_max) = {:.6} < pi/2, tan(sec_max D xi) sqrt(sec_max) = {:.6} < theta = {:.6})",
            c.diameter_bound, c.curvature_bound, c.theta
        ),
        Condition::Neither => format!(
            "condition: neither (D xi sqrt(sec_max) = {:.6} vs pi/2, tan(sec_max D xi) sqrt(sec_max) = {:.6} vs theta = {:.6})",
            c.diameter_bound, c.curvature_bound, c.theta
        ),
    }
}

fn validate(path: &Path) -> Result<Outputs, CliError> {
    let scene = load_scene(path)?;
    let r = &scene.report;
    let mut out = Outputs::default();
    let d_min = r.d_min.map_or("none".to_string(), |d| format!("{d:.6}"));
    writeln!(
        out.stdout,
        "valid: {} obstacles, d_min = {d_min}, D = {:.6}, kappa_min = {:.6}{}, sec_max = {:.6}",
        scene.obstacles().len(),
        r.diameter,
        r.kappa_min,
        if r.kappa_min_certified { "" } else { " (sampled)" },
        r.sec_max
    )
    .unwrap();
    writeln!(out.stdout, "{}", condition_line(r)).unwrap();
    out.json("report.json", r);
    Ok(out)
}

fn launch_sigma(scene: &ValidScene, l: &LaunchConfig) -> Result<PointTangent, CliError> {
    let m = scene.model().dim();
    if l.foot.len() != m || l.dir.len() != m {
        return Err(CliError::Usage(format!("--foot and --dir need {m} components each")));
    }
    if l.foot.iter().all(|c| *c == 0.0) || l.foot.iter().chain(&l.dir).any(|c| !c.is_finite()) {
        return Err(CliError::Usage("--foot must be a non-zero finite vector".into()));
    }
    let n = l.dir.iter().map(|c| c * c).sum::<f64>().sqrt();
    if !(l.dir[0] > 0.0) {
        return Err(CliError::Usage("--dir must have a positive inward-normal component".into()));
    }
    let dir: Vec<f64> = l.dir.iter().map(|c| c / n).collect();
    Ok(boundary_launch(scene, &l.foot, &dir))
}

fn trace(
    path: &Path,
    launch: Option<&LaunchConfig>,
    spec: Option<&SpecConfig>,
    o: &LimitOverrides,
    seed: u64,
) -> Result<Outputs, CliError> {
    let scene = load_scene(path)?;
    let limits = resolve_limits(&scene, o)?;
    let mut out = Outputs::default();
    let mut records = Vec::new();
    match (launch, spec) {
        (Some(l), None) => {
            let sigma = launch_sigma(&scene, l)?;
            let tr = trace_ray(&scene, &sigma, &limits).map_err(|e| CliError::Validation(format!("launch: {e}")))?;
            let rec = TraceRecord::from(&tr);
            writeln!(out.stdout, "{}", serde_json::to_string(&rec).expect("record serialises")).unwrap();
            records.push(rec);
        }
        (None, Some(s)) => {
            let spec = sampling(s, seed, limits)?;
            let ls = launches(scene.model().dim(), &spec)?;
            let (mut exited, mut trapped, mut failed) = (0, 0, 0);
            for (i, l) in ls.iter().enumerate() {
                match trace_ray(&scene, &launch_state(&scene, l), &limits) {
                    Ok(tr) => {
                        if tr.is_trapped() {
                            trapped += 1;
                        } else {
                            exited += 1;
                        }
                        records.push(TraceRecord::from(&tr));
                    }
                    Err(e) => {
                        failed += 1;
                        warn!("ray {i}: {e}");
                    }
                }
            }
            writeln!(out.stdout, "{} rays: {exited} exited, {trapped} trapped, {failed} failed", ls.len()).unwrap();
        }
        _ => return Err(CliError::Usage("trace needs either --foot/--dir or a sampling spec".into())),
    }
    let mut buf = Vec::new();
    write_jsonl(&records, &mut buf)?;
    out.file("trace.jsonl", buf);
    Ok(out)
}

fn sweep(path: &Path, spec: &SpecConfig, o: &LimitOverrides, seed: u64) -> Result<Outputs, CliError> {
    let scene = load_scene(path)?;
    let limits = resolve_limits(&scene, o)?;
    let spec = sampling(spec, seed, limits)?;
    info!("sweeping {} launches", spec.total());
    let set = sample_tt_set(&scene, &spec)?;
    let (mut samples, mut trapped, mut failed) = (0, 0, 0);
    for (i, s) in set.samples.iter().enumerate() {
        match &s.outcome {
            Outcome::Sample { .. } => samples += 1,
            Outcome::Trapped { .. } => trapped += 1,
            Outcome::Failed { error } => {
                failed += 1;
                warn!("launch {i}: {error}");
            }
        }
    }
    let mut out = Outputs::default();
    writeln!(out.stdout, "{} launches: {samples} samples, {trapped} trapped, {failed} failed", set.samples.len()).unwrap();
    let mut buf = Vec::new();
    write_ttset(&set, &mut buf)?;
    out.file("ttset.jsonl", buf);
    Ok(out)
}

fn default_match_radius(set: &TTSet) -> f64 {
    0.1 * 2.0 * set.header.geometry.domain_radius
}

fn positive(name: &str, v: f64) -> Result<f64, CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::Usage(format!("{name} must be positive, got {v}")))
    }
}

fn compare(a: &Path, b: &Path, match_radius: Option<f64>) -> Result<Outputs, CliError> {
    let (sa, sb) = (load_ttset(a)?, load_ttset(b)?);
    let r = positive("--match-radius", match_radius.unwrap_or_else(|| default_match_radius(&sa)))?;
    let report = compare_tt_sets(&sa, &sb, r)?;
    let mut out = Outputs::default();
    out.stdout = serde_json::to_string_pretty(&report).expect("report serialises") + "\n";
    out.json("compare.json", &report);
    Ok(out)
}

fn unit_in_basis(basis: &[Vector], c: &[f64]) -> Option<Vector> {
    let w = basis.iter().zip(c).fold(Vector::zeros(basis[0].len()), |acc, (b, x)| acc + b * *x);
    let n = w.norm();
    (n > 0.0 && n.is_finite()).then(|| w / n)
}

fn front(path: &Path, germ: &GermConfig, steps: usize, o: &LimitOverrides) -> Result<Outputs, CliError> {
    let scene = load_scene(path)?;
    let limits = resolve_limits(&scene, o)?;
    let sf = *scene.model();
    let m = sf.dim();
    let start = match germ {
        GermConfig::Launch { foot, dir, curvature } => {
            let base = launch_sigma(&scene, &LaunchConfig { foot: foot.clone(), dir: dir.clone() })?;
            FrontGerm::with_default_frame(&sf, base, Matrix::identity(m - 1, m - 1) * *curvature)
        }
        GermConfig::Tangency { obstacle, at, eps } => {
            let Some(ob) = scene.obstacles().get(*obstacle) else {
                return Err(CliError::Usage(format!("no obstacle {obstacle}")));
            };
            let Obstacle::Ball { center, radius } = ob else {
                return Err(CliError::Usage("tangency fronts need a ball obstacle".into()));
            };
            if at.len() != m {
                return Err(CliError::Usage(format!("--at needs {m} components")));
            }
            let u =
                unit_in_basis(&sf.tangent_basis(center), at).ok_or_else(|| CliError::Usage("--at must be non-zero".into()))?;
            let x0 = sf.geodesic(&PointTangent::new(center.clone(), u), *radius).x;
            let geo = scene.geometry(*obstacle, &x0)?;
            let eps = positive("--eps", *eps)?;
            let tf = front_from_tangency(&scene, &x0, &geo.frame[0], eps, 0.5 * eps)?;
            info!("tangency front: min curvature {:.6}", tf.min_curvature);
            // Start just past the grazing contact.
            propagate_front(&MetricModel::SpaceForm(sf), &tf.germ, eps)?
        }
    };
    let hist = follow_front(&scene, &start, &limits, steps)?;
    let mut out = Outputs::default();
    writeln!(
        out.stdout,
        "{} records, end {:?}, min principal curvature {:.6}",
        hist.records.len(),
        hist.end,
        hist.min_curvature()
    )
    .unwrap();
    let mut csv = Vec::new();
    write_front_csv(&hist.records, &mut csv)?;
    out.file("front.csv", csv);
    let mut jl = Vec::new();
    write_jsonl(&hist.records, &mut jl)?;
    out.file("front.jsonl", jl);
    Ok(out)
}

fn estimate(path: &Path, n_rays: usize, margin: f64, o: &LimitOverrides, seed: u64) -> Result<Outputs, CliError> {
    let scene = load_scene(path)?;
    let limits = resolve_limits(&scene, o)?;
    let c = estimate_reflection_constants(&scene, n_rays, &limits, margin, seed)?;
    let mut out = Outputs::default();
    writeln!(out.stdout, "xi_hat = {}, phi0_hat = {:.6} rad", c.xi_hat, c.phi0_hat).unwrap();
    out.json("constants.json", &c);
    let mut csv = String::from("k,m_k,rays\n");
    for l in &c.curve {
        writeln!(csv, "{},{},{}", l.k, l.m_k, l.rays).unwrap();
    }
    out.file("reflection_curve.csv", csv.into_bytes());
    Ok(out)
}

#[derive(Serialize)]
struct Disk {
    center: Vec<f64>,
    radius: f64,
}

#[derive(Serialize)]
struct ReconReport {
    params: Vec<f64>,
    disks: Vec<Disk>,
    objective: f64,
    evals: usize,
    converged: bool,
}

fn reconstruct(
    path: &Path,
    init: &[f64],
    match_radius: Option<f64>,
    restarts: usize,
    max_evals: usize,
) -> Result<Outputs, CliError> {
    let target = load_ttset(path)?;
    let geo = &target.header.geometry;
    let model = geo.space_form();
    let m = model.dim();
    if init.is_empty() || init.len() % (m + 1) != 0 {
        return Err(CliError::Usage(format!("--init needs (center, radius) blocks of {} numbers", m + 1)));
    }
    let center = model.to_normal_coords(&Vector::from_row_slice(&geo.domain_center));
    let family = DiskFamily::new(model, center, geo.domain_radius, init.len() / (m + 1));
    let opts = ReconOptions {
        match_radius: positive("--match-radius", match_radius.unwrap_or_else(|| default_match_radius(&target)))?,
        restarts,
        max_evals,
        ..ReconOptions::default()
    };
    let (params, objective, evals, history, converged) = match reconstruct_obstacles(&target, &family, init, &opts) {
        Ok(r) => (r.params, r.objective, r.evals, r.history, true),
        Err(RigidityError::DidNotConverge { best, objective, evals }) => {
            warn!("no convergence after {evals} evaluations; reporting the best parameters");
            (best, objective, evals, Vec::new(), false)
        }
        Err(e) => return Err(e.into()),
    };
    let disks = family.balls(&params).into_iter().map(|(center, radius)| Disk { center, radius }).collect();
    let report = ReconReport { params, disks, objective, evals, converged };
    let mut out = Outputs::default();
    out.stdout = serde_json::to_string_pretty(&report).expect("report serialises") + "\n";
    out.json("reconstruction.json", &report);
    let mut csv = String::from("step,objective\n");
    for (i, f) in history.iter().enumerate() {
        writeln!(csv, "{i},{f}").unwrap();
    }
    out.file("history.csv", csv.into_bytes());
    if converged {
        Ok(out)
    } else {
        Err(CliError::Runtime(format!("DidNotConverge after {evals} evaluations (best objective {objective})")))
    }
}
