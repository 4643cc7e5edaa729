//! Scenario and sweep configuration files.
//!
//! A file is TOML (JSON when the extension is `.json`). A top-level `preset`
//! key starts from a named preset; the remaining keys are merged over it,
//! tables recursively, everything else by replacement.

use std::path::{Path, PathBuf};

use orlicz_core::analysis::Slack;
use orlicz_core::function_spaces::MeshDescriptor;
use orlicz_core::minimizer::{ContinuationSchedule, SolverConfig};
use orlicz_core::phi::{Ball, PhiSpec, SpatialField};
use orlicz_core::Point;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::presets;
use crate::RunError;

// keys that select an enum variant; an override carrying one replaces the
// whole table instead of merging into the old variant's fields
const TAGS: [&str; 3] = ["variant", "rule", "kind"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub mesh: MeshDescriptor,
    pub phi: PhiSpec,
    /// Boundary datum `f`, evaluated at every vertex to give `f̃`.
    pub boundary: SpatialField,
    /// Known exact minimizer, for error reporting.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact: Option<SpatialField>,
    pub envelope: EnvelopeSpec,
    #[serde(default)]
    pub solver: SolverConfig,
    /// Present for runs through the λ-continuation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<ContinuationSchedule>,
    #[serde(default)]
    pub verify: VerifySpec,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
}

/// Declared growth exponents and where (A1) is checked.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvelopeSpec {
    pub p: f64,
    #[serde(with = "orlicz_core::serde_ext::ext_real")]
    pub q: f64,
    #[serde(default)]
    pub a1_balls: Vec<Ball>,
    #[serde(default = "one")]
    pub a1_k: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Shift {
    /// `u + r` on `B_r`.
    Radius,
    Zero,
    Value(f64),
}

impl Shift {
    pub fn at(self, r: f64) -> f64 {
        match self {
            Shift::Radius => r,
            Shift::Zero => 0.0,
            Shift::Value(v) => v,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaccioppoliSpec {
    pub sigma: f64,
    /// Nodes of the `ψ` grid.
    #[serde(default = "psi_nodes")]
    pub grid_nodes: usize,
}

/// Which estimates `verify` evaluates, on balls `B_r(center)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifySpec {
    pub center: Point,
    pub radii: Vec<f64>,
    pub shift: Shift,
    pub bloch_exponent: f64,
    /// Exponent of the oscillation estimate; the envelope's `p` when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oscillation_p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub caccioppoli: Option<CaccioppoliSpec>,
    pub residual_tests: usize,
    pub residual_seed: u64,
    /// Residuals down to `−tolerance · scale` pass.
    pub residual_tolerance: f64,
    pub monotonicity: bool,
    pub slack: Slack,
}

impl Default for VerifySpec {
    fn default() -> Self {
        VerifySpec {
            center: [0.0, 0.0],
            radii: vec![0.125],
            shift: Shift::Zero,
            bloch_exponent: 2.0,
            oscillation_p: None,
            caccioppoli: None,
            residual_tests: 100,
            residual_seed: 1,
            residual_tolerance: 1e-8,
            monotonicity: true,
            slack: Slack::default(),
        }
    }
}

/// A cross product of scenarios, mesh sizes, radii and largest λ.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub name: String,
    /// Preset names or scenario files, relative to the sweep file.
    pub scenarios: Vec<String>,
    /// Mesh sizes; the scenario's own when empty.
    #[serde(default)]
    pub h: Vec<f64>,
    /// Radii; the scenario's own when empty.
    #[serde(default)]
    pub r: Vec<f64>,
    /// Largest λ of the schedule; the full schedule when empty.
    #[serde(default)]
    pub lambda_max: Vec<f64>,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

fn one() -> f64 {
    1.0
}

fn psi_nodes() -> usize {
    512
}

/// Command-line overrides shared by all subcommands.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub h: Option<f64>,
    pub r: Option<Vec<f64>>,
    pub lambda_max: Option<f64>,
    pub out_dir: Option<PathBuf>,
}

impl ScenarioConfig {
    pub fn apply(&mut self, o: &Overrides) {
        if let Some(h) = o.h {
            self.mesh.h = h;
        }
        if let Some(r) = &o.r {
            self.verify.radii = r.clone();
        }
        if let (Some(l), Some(s)) = (o.lambda_max, self.schedule.as_mut()) {
            s.lambdas.retain(|x| *x <= l);
        }
        if let Some(d) = &o.out_dir {
            self.out_dir = d.clone();
        }
    }

    /// SHA-256 of the canonical JSON form, embedded in every output file.
    pub fn hash(&self) -> String {
        hash_json(self)
    }

    pub fn validate(&self) -> Result<(), RunError> {
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return Err(RunError::Config(format!("scenario name {:?} is not a file stem", self.name)));
        }
        if let Some(s) = &self.schedule {
            if s.lambdas.is_empty() {
                return Err(RunError::Config("the schedule has no λ left".into()));
            }
        }
        if self.verify.radii.iter().any(|r| !(*r > 0.0)) {
            return Err(RunError::Config("verification radii must be positive".into()));
        }
        Ok(())
    }
}

impl SweepConfig {
    pub fn hash(&self) -> String {
        hash_json(self)
    }
}

fn hash_json<T: Serialize>(v: &T) -> String {
    let bytes = serde_json::to_vec(v).expect("configs serialize");
    let digest = Sha256::digest(&bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn read_value(path: &Path) -> Result<Value, RunError> {
    let text = std::fs::read_to_string(path).map_err(|e| RunError::io(path, e))?;
    if path.extension().is_some_and(|e| e == "json") {
        serde_json::from_str(&text).map_err(|e| RunError::Config(format!("{}: {e}", path.display())))
    } else {
        let v: toml::Value = toml::from_str(&text).map_err(|e| RunError::Config(format!("{}: {e}", path.display())))?;
        serde_json::to_value(v).map_err(|e| RunError::Config(e.to_string()))
    }
}

fn merge(base: &mut Value, over: Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) if !is_tagged(&v) => merge(slot, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

fn is_tagged(v: &Value) -> bool {
    v.as_object().is_some_and(|o| TAGS.iter().any(|t| o.contains_key(*t)))
}

/// Loads a scenario from a file, or by preset name when no such file exists.
pub fn load_scenario(arg: &str) -> Result<ScenarioConfig, RunError> {
    let path = Path::new(arg);
    if !path.exists() {
        return presets::lookup(arg)
            .ok_or_else(|| RunError::Config(format!("{arg} is neither a file nor a preset ({})", presets::NAMES.join(", "))));
    }
    let mut value = read_value(path)?;
    if let Some(preset) = value.as_object_mut().and_then(|o| o.remove("preset")) {
        let name = preset
            .as_str()
            .ok_or_else(|| RunError::Config("preset must be a string".into()))?;
        let base = presets::lookup(name).ok_or_else(|| RunError::Config(format!("unknown preset {name}")))?;
        let mut merged = serde_json::to_value(base).expect("presets serialize");
        merge(&mut merged, value);
        value = merged;
    }
    serde_json::from_value(value).map_err(|e| RunError::Config(format!("{}: {e}", path.display())))
}

pub fn load_sweep(path: &Path) -> Result<SweepConfig, RunError> {
    let value = read_value(path)?;
    serde_json::from_value(value).map_err(|e| RunError::Config(format!("{}: {e}", path.display())))
}
