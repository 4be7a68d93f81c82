//! Run and convergence configurations: strict JSON, a published schema, and a content hash.

use crate::error::{Error, Result};
use crate::multipliers::MultiplierKind;
use crate::solver::{DataSpec, GridSpec, Model, Setup};
use schemars::JsonSchema;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const ARTIFACT_VERSION: &str = concat!("wkgs-", env!("CARGO_PKG_VERSION"));

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    Linear,
    Log,
}

/// Hyperboloids on which norms are recorded.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct SliceSpec {
    pub s_start: f64,
    pub s_end: f64,
    pub count: usize,
    #[serde(default = "default_spacing")]
    pub spacing: Spacing,
}

fn default_spacing() -> Spacing {
    Spacing::Log
}

impl SliceSpec {
    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.s_start];
        }
        let k = (self.count - 1) as f64;
        (0..self.count)
            .map(|i| {
                let x = i as f64 / k;
                match self.spacing {
                    Spacing::Linear => self.s_start + (self.s_end - self.s_start) * x,
                    Spacing::Log => (self.s_start.ln() + (self.s_end.ln() - self.s_start.ln()) * x).exp(),
                }
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum NormRequest {
    /// All energy columns of the CSV.
    Energies,
    Hardy,
    Sobolev,
    TauHalf,
    TauThreehalf,
    SATauHalf,
    /// `|phi|` at the center `r = 0`.
    Center,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    pub dir: String,
    #[serde(default = "default_energies")]
    pub energies: String,
    #[serde(default = "default_pointwise")]
    pub pointwise: String,
    #[serde(default = "default_diagnostics")]
    pub diagnostics: String,
    #[serde(default = "default_manifest")]
    pub manifest: String,
    /// Final band; not written when absent.
    #[serde(default)]
    pub snapshot: Option<String>,
}

fn default_energies() -> String {
    "energies.csv".into()
}
fn default_pointwise() -> String {
    "pointwise.csv".into()
}
fn default_diagnostics() -> String {
    "diagnostics.jsonl".into()
}
fn default_manifest() -> String {
    "run.json".into()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: Model,
    pub grid: GridSpec,
    pub data: DataSpec,
    pub slices: SliceSpec,
    #[serde(default = "default_a_list")]
    pub a_list: Vec<f64>,
    #[serde(default = "default_k_max")]
    pub k_max: usize,
    #[serde(default = "default_norms")]
    pub norms: Vec<NormRequest>,
    pub outputs: Outputs,
    #[serde(default)]
    pub seed: u64,
}

fn default_a_list() -> Vec<f64> {
    vec![0.0, 0.5]
}
fn default_k_max() -> usize {
    2
}
fn default_norms() -> Vec<NormRequest> {
    vec![NormRequest::Energies]
}

fn parse_strict<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        if path == "." {
            Error::Config(inner.to_string())
        } else {
            Error::Config(format!("at `{path}`: {inner}"))
        }
    })
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn check_name(what: &str, name: &str) -> Result<()> {
    if name.is_empty() || name.contains(['/', '\\']) || name == "." || name == ".." {
        return Err(Error::Config(format!("outputs.{what} must be a plain file name, got {name:?}")));
    }
    Ok(())
}

impl RunConfig {
    /// Parses and validates; errors name the offending key.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = parse_strict(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn setup(&self) -> Setup {
        Setup { model: self.model.clone(), grid: self.grid.clone(), data: self.data.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        let cfg = |m: String| Err(Error::Config(m));
        self.setup().validate().map_err(|e| Error::Config(e.to_string()))?;
        let sl = &self.slices;
        if sl.count == 0 || !(sl.s_start >= self.grid.t0) || !(sl.s_end >= sl.s_start) || !sl.s_end.is_finite() {
            return cfg(format!(
                "slices: need count >= 1 and t0 <= s_start <= s_end, got {} in [{}, {}] with t0 = {}",
                sl.count, sl.s_start, sl.s_end, self.grid.t0
            ));
        }
        if sl.count > 1 && sl.s_end == sl.s_start {
            return cfg("slices: several slices need s_end > s_start".into());
        }
        if let Some(t_end) = self.grid.t_end {
            if sl.s_end > t_end {
                return cfg(format!("slices.s_end = {} lies beyond grid.t_end = {t_end}", sl.s_end));
            }
        }
        if self.a_list.is_empty() || self.a_list.iter().any(|a| !(0.0..=1.0).contains(a)) {
            return cfg("a_list: need at least one exponent, each in [0, 1]".into());
        }
        if self.k_max > 2 {
            return cfg(format!("k_max = {} exceeds the supported order 2", self.k_max));
        }
        let o = &self.outputs;
        for (what, name) in [("energies", &o.energies), ("pointwise", &o.pointwise), ("diagnostics", &o.diagnostics), ("manifest", &o.manifest)] {
            check_name(what, name)?;
        }
        if let Some(s) = &o.snapshot {
            check_name("snapshot", s)?;
        }
        Ok(())
    }

    /// Canonical JSON of the resolved config, defaults filled in.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    pub fn sha256(&self) -> String {
        sha256_hex(self.canonical_json().as_bytes())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum ConvQuantity {
    /// Max nodal error against the manufactured solution on one hyperboloid.
    FieldError { s: f64 },
    /// Self-convergence of an energies column on one hyperboloid.
    Energy {
        s: f64,
        column: String,
        #[serde(default)]
        field: Option<String>,
        #[serde(default)]
        a: Option<f64>,
    },
    /// Balance residual of one multiplier identity.
    Balance {
        multiplier: MultiplierKind,
        a: f64,
        s0: f64,
        s1: f64,
        #[serde(default)]
        field: Option<String>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceConfig {
    pub run: RunConfig,
    /// Cell counts, coarse to fine.
    pub levels: Vec<usize>,
    pub quantity: ConvQuantity,
    #[serde(default = "default_table")]
    pub table: String,
}

fn default_table() -> String {
    "convergence.csv".into()
}

impl ConvergenceConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ConvergenceConfig = parse_strict(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.levels.len() < 2 || self.levels.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("levels: need at least two strictly increasing cell counts".into()));
        }
        if matches!(self.quantity, ConvQuantity::Energy { .. }) && self.levels.len() < 3 {
            return Err(Error::Config("levels: self-convergence of an energy needs three levels".into()));
        }
        check_name("table", &self.table)?;
        for &n in &self.levels {
            self.level(n).validate()?;
        }
        Ok(())
    }

    /// The run config at one refinement level.
    pub fn level(&self, n: usize) -> RunConfig {
        let mut r = self.run.clone();
        r.grid.n_cells = n;
        r
    }

    pub fn sha256(&self) -> String {
        sha256_hex(serde_json::to_string(self).expect("config serializes").as_bytes())
    }
}

/// JSON schemas of both config files, as published in the repository.
pub fn run_config_schema() -> String {
    serde_json::to_string_pretty(&schemars::schema_for!(RunConfig)).expect("schema serializes") + "\n"
}

pub fn convergence_config_schema() -> String {
    serde_json::to_string_pretty(&schemars::schema_for!(ConvergenceConfig)).expect("schema serializes") + "\n"
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) const SAMPLE: &str = r#"{
        "model": {"kind": "linear_wave", "source": "none"},
        "grid": {"mode": "radial", "extent": 40.0, "n_cells": 400, "cfl": 0.5, "t0": 2.0},
        "data": {"profile": "time_symmetric", "r_outer": 0.9, "amplitude": 1.0},
        "slices": {"s_start": 2.0, "s_end": 6.0, "count": 5},
        "outputs": {"dir": "out"}
    }"#;

    #[test]
    fn defaults_fill_in_and_hash_is_stable() {
        let c = RunConfig::from_json(SAMPLE).unwrap();
        assert_eq!(c.a_list, vec![0.0, 0.5]);
        assert_eq!(c.k_max, 2);
        assert_eq!(c.outputs.energies, "energies.csv");
        let again = RunConfig::from_json(&c.canonical_json()).unwrap();
        assert_eq!(again, c);
        assert_eq!(again.sha256(), c.sha256());
        assert_eq!(c.sha256().len(), 64);
    }

    #[test]
    fn unknown_keys_are_named() {
        let bad = SAMPLE.replace(r#""cfl": 0.5"#, r#""cfl": 0.5, "clf": 1"#);
        let msg = RunConfig::from_json(&bad).unwrap_err().to_string();
        assert!(msg.contains("clf") && msg.contains("grid"), "{msg}");
        let bad = SAMPLE.replace(r#""source": "none""#, r#""source": "none", "mass": 2"#);
        let msg = RunConfig::from_json(&bad).unwrap_err().to_string();
        assert!(msg.contains("mass"), "{msg}");
        let bad = SAMPLE.replace(r#""outputs": {"dir": "out"}"#, r#""outputs": {"dir": "out"}, "extra": 0"#);
        assert!(RunConfig::from_json(&bad).unwrap_err().to_string().contains("extra"));
    }

    #[test]
    fn semantic_checks_reject_bad_runs() {
        let bad = SAMPLE.replace(r#""cfl": 0.5"#, r#""cfl": 1.5"#);
        assert!(RunConfig::from_json(&bad).is_err());
        let bad = SAMPLE.replace(r#""s_start": 2.0"#, r#""s_start": 1.5"#);
        assert!(RunConfig::from_json(&bad).unwrap_err().to_string().contains("slices"));
        let bad = SAMPLE.replace(r#""dir": "out""#, r#""dir": "out", "energies": "../x.csv""#);
        assert!(RunConfig::from_json(&bad).is_err());
        assert!(RunConfig::from_json("{} // comment").is_err());
    }

    #[test]
    fn slice_values_hit_both_ends() {
        let s = SliceSpec { s_start: 2.0, s_end: 20.0, count: 10, spacing: Spacing::Log };
        let v = s.values();
        assert_eq!(v.len(), 10);
        assert!((v[0] - 2.0).abs() < 1e-14 && (v[9] - 20.0).abs() < 1e-13);
        assert!(((v[1] / v[0]) - (v[9] / v[8])).abs() < 1e-12);
    }

    #[test]
    fn published_schemas_are_current() {
        let root = concat!(env!("CARGO_MANIFEST_DIR"), "/../../schema/");
        let files = [("run_config.schema.json", run_config_schema()), ("convergence_config.schema.json", convergence_config_schema())];
        for (name, want) in files {
            let path = format!("{root}{name}");
            if std::env::var_os("WKGS_BLESS").is_some() {
                std::fs::write(&path, &want).unwrap();
            }
            let have = std::fs::read_to_string(&path).unwrap();
            assert_eq!(have, want, "{name} is stale; rerun with WKGS_BLESS=1");
        }
    }
}
