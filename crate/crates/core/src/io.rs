//! File formats: scene descriptions, travelling-time sets, trace dumps, front logs.

use std::io::{BufRead, Write};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::billiard::{RayTrace, ReflectionEvent, Terminal};
use crate::fronts::FrontLogRecord;
use crate::manifold::{GeometryError, SpaceForm};
use crate::rigidity::{TTSample, TTSet, TTSetHeader};
use crate::scene::{DeclaredConstants, Domain, Ellipsoid, Obstacle, Scene};

pub const SCENE_FORMAT: &str = "scene-v1";
pub const TTSET_FORMAT: &str = "ttset-v1";

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("{context}: {source}")]
    Json { context: String, source: serde_json::Error },
    #[error("{0}")]
    Schema(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

fn json_err(context: impl Into<String>) -> impl FnOnce(serde_json::Error) -> FormatError {
    let context = context.into();
    move |source| FormatError::Json { context, source }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Euclidean,
    Sphere,
    Hyperbolic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub dim: usize,
    /// Curvature radius; ignored for the Euclidean model.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
}

impl ModelSpec {
    pub fn build(&self) -> Result<SpaceForm, FormatError> {
        if self.dim < 2 {
            return Err(FormatError::Schema(format!("model.dim must be at least 2, got {}", self.dim)));
        }
        let radius = || {
            self.radius
                .filter(|r| *r > 0.0 && r.is_finite())
                .ok_or_else(|| FormatError::Schema("model.radius must be a positive number".into()))
        };
        Ok(match self.kind {
            ModelKind::Euclidean => SpaceForm::euclidean(self.dim),
            ModelKind::Sphere => SpaceForm::sphere(radius()?, self.dim),
            ModelKind::Hyperbolic => SpaceForm::hyperbolic(radius()?, self.dim),
        })
    }

    pub fn of(model: &SpaceForm) -> Self {
        let k = model.kappa();
        let kind = if k == 0.0 {
            ModelKind::Euclidean
        } else if k > 0.0 {
            ModelKind::Sphere
        } else {
            ModelKind::Hyperbolic
        };
        Self { kind, dim: model.dim(), radius: (k != 0.0).then(|| model.radius()) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub center: Vec<f64>,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum ObstacleSpec {
    Ball { center: Vec<f64>, radius: f64 },
    Ellipsoid { center: Vec<f64>, semi_axes: Vec<f64> },
}

/// Scene description. Centres are normal coordinates about the model origin
/// (plain coordinates in the Euclidean model).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneFile {
    pub format: String,
    pub model: ModelSpec,
    pub domain: DomainSpec,
    pub obstacles: Vec<ObstacleSpec>,
    #[serde(default)]
    pub declared: DeclaredConstants,
}

impl SceneFile {
    pub fn parse(text: &str) -> Result<Self, FormatError> {
        let f: Self = serde_json::from_str(text).map_err(json_err("scene"))?;
        if f.format != SCENE_FORMAT {
            return Err(FormatError::Schema(format!("format: expected \"{SCENE_FORMAT}\", found \"{}\"", f.format)));
        }
        Ok(f)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scene serialises")
    }

    pub fn to_scene(&self) -> Result<Scene, FormatError> {
        let model = self.model.build()?;
        let m = model.dim();
        let check_len = |what: &str, v: &[f64]| {
            if v.len() == m && v.iter().all(|c| c.is_finite()) {
                Ok(())
            } else {
                Err(FormatError::Schema(format!("{what}: expected {m} finite coordinates, found {}", v.len())))
            }
        };
        check_len("domain.center", &self.domain.center)?;
        let domain = Domain { center: model.from_normal_coords(&self.domain.center), radius: self.domain.radius };
        let mut obstacles = Vec::with_capacity(self.obstacles.len());
        for (i, o) in self.obstacles.iter().enumerate() {
            obstacles.push(match o {
                ObstacleSpec::Ball { center, radius } => {
                    check_len(&format!("obstacles[{i}].center"), center)?;
                    Obstacle::ball(model.from_normal_coords(center), *radius)
                }
                ObstacleSpec::Ellipsoid { center, semi_axes } => {
                    check_len(&format!("obstacles[{i}].center"), center)?;
                    check_len(&format!("obstacles[{i}].semi_axes"), semi_axes)?;
                    if semi_axes.iter().any(|a| *a <= 0.0) {
                        return Err(FormatError::Schema(format!("obstacles[{i}].semi_axes must be positive")));
                    }
                    Obstacle::LevelSet(Arc::new(Ellipsoid::new(center.clone(), semi_axes.clone())))
                }
            });
        }
        let mut scene = Scene::new(model, domain, obstacles);
        scene.declared = self.declared;
        Ok(scene)
    }

    pub fn from_scene(scene: &Scene) -> Result<Self, FormatError> {
        let model = &scene.model;
        let obstacles = scene
            .obstacles
            .iter()
            .enumerate()
            .map(|(i, o)| match o {
                Obstacle::Ball { center, radius } => {
                    Ok(ObstacleSpec::Ball { center: model.to_normal_coords(center), radius: *radius })
                }
                Obstacle::LevelSet(l) => match l.as_any().downcast_ref::<Ellipsoid>() {
                    Some(e) => Ok(ObstacleSpec::Ellipsoid { center: e.center.clone(), semi_axes: e.semi_axes.clone() }),
                    None => Err(FormatError::Schema(format!("obstacle {i} has no file representation"))),
                },
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            format: SCENE_FORMAT.into(),
            model: ModelSpec::of(model),
            domain: DomainSpec { center: model.to_normal_coords(&scene.domain.center), radius: scene.domain.radius },
            obstacles,
            declared: scene.declared,
        })
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Content hash of a scene: sha256 of its compact scene-v1 JSON.
pub fn scene_hash(scene: &Scene) -> String {
    match SceneFile::from_scene(scene) {
        Ok(f) => sha256_hex(serde_json::to_string(&f).expect("scene serialises").as_bytes()),
        Err(_) => sha256_hex(format!("{scene:?}").as_bytes()),
    }
}

/// Write a TTSet as one header line followed by one line per sample.
pub fn write_ttset<W: Write>(set: &TTSet, mut w: W) -> Result<(), FormatError> {
    serde_json::to_writer(&mut w, &set.header).map_err(json_err("ttset header"))?;
    writeln!(w)?;
    for s in &set.samples {
        serde_json::to_writer(&mut w, s).map_err(json_err("ttset sample"))?;
        writeln!(w)?;
    }
    Ok(())
}

pub fn read_ttset<R: BufRead>(r: R) -> Result<TTSet, FormatError> {
    let mut lines = r.lines();
    let first = lines.next().ok_or_else(|| FormatError::Schema("ttset: empty file".into()))??;
    let header: TTSetHeader = serde_json::from_str(&first).map_err(json_err("ttset line 1"))?;
    if header.format != TTSET_FORMAT {
        return Err(FormatError::Schema(format!("ttset line 1: expected format \"{TTSET_FORMAT}\"")));
    }
    let mut samples = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let s: TTSample = serde_json::from_str(&line).map_err(json_err(format!("ttset line {}", i + 2)))?;
        samples.push(s);
    }
    Ok(TTSet { header, samples })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaRecord {
    pub x: Vec<f64>,
    pub v: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TerminalRecord {
    Exited { x: Vec<f64>, v: Vec<f64>, t: f64 },
    Trapped { cutoff: crate::billiard::Cutoff },
}

/// One line of a trace dump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub sigma: SigmaRecord,
    pub events: Vec<ReflectionEvent>,
    pub terminal: TerminalRecord,
    pub short_flight: bool,
}

impl From<&RayTrace> for TraceRecord {
    fn from(t: &RayTrace) -> Self {
        let terminal = match &t.terminal {
            Terminal::Exited { x, v, t } => TerminalRecord::Exited { x: x.as_slice().to_vec(), v: v.as_slice().to_vec(), t: *t },
            Terminal::TrappedCutoff(c) => TerminalRecord::Trapped { cutoff: *c },
        };
        Self {
            sigma: SigmaRecord { x: t.sigma0.x.as_slice().to_vec(), v: t.sigma0.v.as_slice().to_vec() },
            events: t.events.clone(),
            terminal,
            short_flight: t.short_flight,
        }
    }
}

pub fn write_jsonl<W: Write, T: Serialize>(items: &[T], mut w: W) -> Result<(), FormatError> {
    for it in items {
        serde_json::to_writer(&mut w, it).map_err(json_err("record"))?;
        writeln!(w)?;
    }
    Ok(())
}

/// Front log as CSV: `t, x_0.., k_0.., reflection`.
pub fn write_front_csv<W: Write>(records: &[FrontLogRecord], mut w: W) -> Result<(), FormatError> {
    let Some(first) = records.first() else { return Ok(()) };
    let mut cols = vec!["t".to_string()];
    cols.extend((0..first.x.len()).map(|i| format!("x{i}")));
    cols.extend((0..first.eigenvalues.len()).map(|i| format!("k{i}")));
    cols.push("reflection".into());
    writeln!(w, "{}", cols.join(","))?;
    for r in records {
        let mut row = vec![r.t.to_string()];
        row.extend(r.x.iter().map(|v| v.to_string()));
        row.extend(r.eigenvalues.iter().map(|v| v.to_string()));
        row.push(r.reflection.map(|i| i.to_string()).unwrap_or_default());
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}
