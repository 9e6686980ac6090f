//! Strict JSON configuration: circuit parameters plus optional sweep and
//! disorder sections. Unknown keys are an error; dotted-key overrides
//! must reference existing keys.

use serde::{Deserialize, Serialize};

use crate::circuit::{Bias, CircuitParams, Design};
use crate::disorder::Distribution;
use crate::error::{Result, TorqError};

/// Grid specification: either an explicit list or a uniform range.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridSpec {
    Range { start: f64, stop: f64, points: usize },
    List(Vec<f64>),
}

impl GridSpec {
    pub fn values(&self) -> Result<Vec<f64>> {
        let v = match self {
            GridSpec::List(v) => v.clone(),
            GridSpec::Range { start, stop, points } => {
                if *points < 1 {
                    return Err(TorqError::InvalidConfig("grid points must be >= 1".into()));
                }
                if *points == 1 {
                    vec![*start]
                } else {
                    (0..*points)
                        .map(|i| start + (stop - start) * i as f64 / (*points as f64 - 1.0))
                        .collect()
                }
            }
        };
        if v.is_empty() {
            return Err(TorqError::InvalidConfig("grid must be non-empty".into()));
        }
        if v.windows(2).any(|w| w[1] <= w[0]) {
            return Err(TorqError::InvalidConfig(
                "grid must be strictly ascending".into(),
            ));
        }
        Ok(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendChoice {
    Charge,
    Grid,
    Both,
}

impl Default for BackendChoice {
    fn default() -> Self {
        BackendChoice::Charge
    }
}

fn default_n_max() -> usize {
    10
}
fn default_grid_points() -> usize {
    201
}
fn default_half_width() -> f64 {
    // one unit cell of the node-phase lattice: wider windows admit
    // replica minima whose near-degenerate copies bury the physical
    // doublet
    std::f64::consts::PI
}
fn default_k() -> usize {
    2
}
fn default_outputs() -> Vec<String> {
    vec!["energies".into(), "currents".into()]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub grid: GridSpec,
    #[serde(default)]
    pub backend: BackendChoice,
    #[serde(default = "default_n_max")]
    pub n_max: usize,
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
    #[serde(default = "default_half_width")]
    pub half_width: f64,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_outputs")]
    pub outputs: Vec<String>,
}

fn default_n_realizations() -> u64 {
    1000
}
fn default_distribution() -> Distribution {
    Distribution::UniformPm
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisorderSection {
    pub fractional_spread: f64,
    #[serde(default = "default_n_realizations")]
    pub n_realizations: u64,
    #[serde(default = "default_distribution")]
    pub distribution: Distribution,
}

/// The full strict config document.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub c_a: f64,
    pub c_b: f64,
    pub c_f: f64,
    pub e_a: f64,
    pub e_b: f64,
    pub e_f: f64,
    pub design: Design,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub i_ext: Option<f64>,
    pub e_c_ref_over_e_j: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub disorder: Option<DisorderSection>,
}

impl ConfigFile {
    /// Validated circuit parameters from the circuit-model keys.
    pub fn circuit_params(&self) -> Result<CircuitParams> {
        let bias = match (self.f, self.i_ext) {
            (Some(f), None) => Bias::ReducedFlux(f),
            (None, Some(i)) => Bias::CurrentExt(i),
            (Some(_), Some(_)) => {
                return Err(TorqError::InvalidConfig(
                    "config sets both `f` and `i_ext`; exactly one is required".into(),
                ))
            }
            (None, None) => {
                return Err(TorqError::InvalidConfig(
                    "config must set exactly one of `f` or `i_ext`".into(),
                ))
            }
        };
        CircuitParams {
            c_a: self.c_a,
            c_b: self.c_b,
            c_f: self.c_f,
            e_a: self.e_a,
            e_b: self.e_b,
            e_f: self.e_f,
            design: self.design,
            bias,
            e_c_ref_over_e_j: self.e_c_ref_over_e_j,
        }
        .validated()
    }
}

/// Applies a `dotted.key=value` override to a JSON document. Intermediate
/// path segments must already exist; the leaf may name a defaulted field
/// that the file omits. Bogus leaf names are still rejected by the strict
/// deserializer afterwards.
fn apply_override(doc: &mut serde_json::Value, spec: &str) -> Result<()> {
    let (path, raw_value) = spec.split_once('=').ok_or_else(|| {
        TorqError::InvalidConfig(format!("override `{spec}` is not of the form key=value"))
    })?;
    let value: serde_json::Value = serde_json::from_str(raw_value)
        .unwrap_or_else(|_| serde_json::Value::String(raw_value.to_string()));
    let mut cursor = doc;
    let segments: Vec<&str> = path.split('.').collect();
    let (leaf, parents) = segments.split_last().expect("split produced a segment");
    for seg in parents {
        let obj = cursor.as_object_mut().ok_or_else(|| {
            TorqError::InvalidConfig(format!("override path `{path}` does not address an object"))
        })?;
        cursor = obj.get_mut(*seg).ok_or_else(|| {
            TorqError::InvalidConfig(format!(
                "override key `{seg}` not found in config (path `{path}`)"
            ))
        })?;
    }
    let obj = cursor.as_object_mut().ok_or_else(|| {
        TorqError::InvalidConfig(format!("override path `{path}` does not address an object"))
    })?;
    obj.insert((*leaf).to_string(), value);
    Ok(())
}

/// Loads a strict config from a JSON string, with overrides applied
/// before deserialization.
pub fn parse_config(text: &str, overrides: &[String]) -> Result<ConfigFile> {
    let mut doc: serde_json::Value = serde_json::from_str(text)
        .map_err(|e| TorqError::InvalidConfig(format!("malformed JSON: {e}")))?;
    for spec in overrides {
        apply_override(&mut doc, spec)?;
    }
    serde_json::from_value(doc).map_err(|e| TorqError::InvalidConfig(e.to_string()))
}

/// SHA-256 hex digest of the canonical (serde-serialized) config.
pub fn config_hash(cfg: &ConfigFile) -> String {
    use sha2::{Digest, Sha256};
    let canonical = serde_json::to_string(cfg).expect("config serializes");
    let mut h = Sha256::new();
    h.update(canonical.as_bytes());
    let digest = h.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}
