//! Campaign configuration, read from TOML.
//!
//! ```toml
//! schema_version = 1
//! name = "xor"
//! seed = 7
//!
//! [context]
//! kind = "function"
//! domain = "bit-pairs"
//! codomain = "ints:0:1"
//!
//! [[tuples]]
//! name = "candidate"
//! systems = ["xor"]
//!
//! [property]
//! kind = "matches"
//! reference = "xor"
//!
//! [generator]
//! strategy = "exhaustive"
//! ```
//!
//! The full schema is in `docs/FORMATS.md`.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use standin::generators::Strategy;
use standin::metrics::Requirement;

use crate::error::{CampaignError, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ContextKind {
    Function,
    Dialogue,
    Traffic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContextConfig {
    pub kind: ContextKind,
    /// Function contexts: `bit-pairs`, `bits:<k>`, `ints:<lo>:<hi>` or `syms:<a>,<b>,...`.
    #[serde(default)]
    pub domain: Option<String>,
    #[serde(default)]
    pub codomain: Option<String>,
    /// Dialogue contexts: question tokens and the length bound.
    #[serde(default)]
    pub alphabet: Option<Vec<String>>,
    #[serde(default)]
    pub max_length: Option<usize>,
    /// Traffic contexts: `builtin:<crossing|signal|straight>` or a network file.
    #[serde(default)]
    pub network: Option<String>,
    #[serde(default)]
    pub vehicles: Option<usize>,
    #[serde(default)]
    pub horizon: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TupleConfig {
    pub name: String,
    /// One system spec per embedded system; a single spec fills every slot.
    pub systems: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PropertyKind {
    OutputEqualsInput,
    Matches,
    Answered,
    Recorded,
    CollisionFree,
    NoCongestion,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PropertyConfig {
    pub kind: PropertyKind,
    /// `matches`: the reference system spec.
    #[serde(default)]
    pub reference: Option<String>,
    /// `recorded`: the verdict file.
    #[serde(default)]
    pub path: Option<String>,
    /// `no-congestion`: last tick by which every vehicle must arrive.
    #[serde(default)]
    pub deadline: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorConfig {
    pub strategy: Strategy,
    #[serde(default)]
    pub count: Option<usize>,
    #[serde(default)]
    pub max_length: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClassifierKind {
    Parity,
    ByValue,
    ByLength,
    ScenarioBands,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifierConfig {
    pub kind: ClassifierKind,
    /// `by-length`: longest sequence length.
    #[serde(default)]
    pub max_length: Option<usize>,
    #[serde(default)]
    pub weights: BTreeMap<String, f64>,
    /// `scenario-bands`: band cut points and labels.
    #[serde(default)]
    pub density_cuts: Option<Vec<f64>>,
    #[serde(default)]
    pub density_labels: Option<Vec<String>>,
    #[serde(default)]
    pub length_cuts: Option<Vec<f64>>,
    #[serde(default)]
    pub length_labels: Option<Vec<String>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplerKind {
    Uniform,
    Stratified,
    ClassAligned,
    Mirrored,
}

fn default_trials() -> usize {
    100
}

fn default_delta() -> f64 {
    0.1
}

fn default_confidence() -> f64 {
    0.95
}

fn default_sampler() -> SamplerKind {
    SamplerKind::Uniform
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditConfig {
    pub requirements: Vec<Requirement>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_sampler")]
    pub sampler: SamplerKind,
    #[serde(default)]
    pub per_class: Option<usize>,
    #[serde(default)]
    pub max_size: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Json,
    Csv,
    Plotdata,
}

impl Format {
    pub const ALL: [Format; 3] = [Format::Json, Format::Csv, Format::Plotdata];

    pub fn file_name(self) -> &'static str {
        match self {
            Format::Json => "report.json",
            Format::Csv => "cases.csv",
            Format::Plotdata => "plotdata.csv",
        }
    }
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            "plotdata" => Ok(Format::Plotdata),
            _ => Err(format!("unknown format `{s}` (json, csv, plotdata)")),
        }
    }
}

fn default_formats() -> Vec<Format> {
    Format::ALL.to_vec()
}

fn default_out() -> String {
    "out".into()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportConfig {
    #[serde(default = "default_out")]
    pub out: String,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
    #[serde(default = "default_confidence")]
    pub confidence: f64,
    /// Prefix sizes of the generated set used for plot data; by default
    /// powers of two up to the set size, then the set size itself.
    #[serde(default)]
    pub sweep: Option<Vec<usize>>,
}

impl Default for ReportConfig {
    fn default() -> Self {
        ReportConfig {
            out: default_out(),
            formats: default_formats(),
            confidence: default_confidence(),
            sweep: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignConfig {
    pub schema_version: u32,
    pub name: String,
    pub seed: u64,
    pub context: ContextConfig,
    #[serde(default)]
    pub tuples: Vec<TupleConfig>,
    pub property: PropertyConfig,
    pub generator: GeneratorConfig,
    #[serde(default)]
    pub classifier: Option<ClassifierConfig>,
    #[serde(default)]
    pub audit: Option<AuditConfig>,
    #[serde(default)]
    pub report: ReportConfig,
}

impl CampaignConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let config: CampaignConfig = toml::from_str(text).map_err(|e| CampaignError::config(e.to_string()))?;
        if config.schema_version != SCHEMA_VERSION {
            return Err(CampaignError::config(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                config.schema_version
            )));
        }
        let mut names: Vec<&str> = config.tuples.iter().map(|t| t.name.as_str()).collect();
        names.sort_unstable();
        if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
            return Err(CampaignError::config(format!("tuple name `{}` is used twice", w[0])));
        }
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CampaignError::config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
schema_version = 1
name = "t"
seed = 3
[context]
kind = "function"
domain = "bit-pairs"
codomain = "ints:0:1"
[[tuples]]
name = "a"
systems = ["xor"]
[property]
kind = "matches"
reference = "xor"
[generator]
strategy = "exhaustive"
"#;

    #[test]
    fn parses_with_defaults() {
        let c = CampaignConfig::parse(MINIMAL).unwrap();
        assert_eq!(c.report, ReportConfig::default());
        assert_eq!(c.generator.strategy, Strategy::Exhaustive);
        assert!(c.audit.is_none());
    }

    #[test]
    fn rejects_bad_configs() {
        let missing_seed = MINIMAL.replace("seed = 3\n", "");
        assert!(matches!(CampaignConfig::parse(&missing_seed), Err(CampaignError::Config(_))));
        let typo = MINIMAL.replace("codomain", "codomian");
        assert!(CampaignConfig::parse(&typo).is_err());
        let version = MINIMAL.replace("schema_version = 1", "schema_version = 9");
        assert!(CampaignConfig::parse(&version).is_err());
    }
}
