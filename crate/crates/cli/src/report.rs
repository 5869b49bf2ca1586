//! The campaign report and its file encodings.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use standin::metrics::{AuditReport, ScoreRecord};
use standin::partition::AnomalyReport;
use standin::replacement::{EquivalenceReport, ReplacementReport};
use standin::{Outcome, Value, Verdict};

use crate::config::{CampaignConfig, Format};
use crate::error::{CampaignError, Result};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Completed,
    Aborted,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestSetSummary {
    pub name: String,
    pub size: usize,
    /// Class sizes, when a classifier is configured.
    pub classes: Option<BTreeMap<String, usize>>,
    pub uncovered: Option<Vec<String>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaseResult {
    pub tuple: String,
    pub verdict: Verdict,
    pub ticks: u64,
    pub terminated: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaseRecord {
    pub id: String,
    pub payload: Value,
    pub class: Option<String>,
    /// One entry per tuple, in tuple order.
    pub results: Vec<CaseResult>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TupleReport {
    pub name: String,
    pub systems: Vec<String>,
    pub score: Option<ScoreRecord>,
    pub anomalies: Option<AnomalyReport>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyRecord {
    pub function: String,
    pub value: f64,
}

/// Score of a prefix of the generated set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlotRow {
    pub tuple: String,
    pub size: usize,
    pub eff: f64,
    pub score: Option<f64>,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
}

/// Work counts; wall-clock time is left out so reports stay reproducible.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Timing {
    pub experiments: usize,
    pub ticks: u64,
}

/// Optional sections are written as `null`, never left out.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CampaignReport {
    pub schema_version: u32,
    pub status: Status,
    pub error: Option<String>,
    pub config: CampaignConfig,
    pub test_set: Option<TestSetSummary>,
    /// Sorted by id.
    pub cases: Vec<CaseRecord>,
    pub tuples: Vec<TupleReport>,
    pub efficiency: Option<EfficiencyRecord>,
    /// First tuple as candidate, second as incumbent.
    pub replacement: Option<ReplacementReport>,
    pub reverse_replacement: Option<ReplacementReport>,
    pub equivalence: Option<EquivalenceReport>,
    pub audits: Option<Vec<AuditReport>>,
    pub plot: Vec<PlotRow>,
    pub timing: Timing,
}

impl CampaignReport {
    pub fn new(config: CampaignConfig) -> Self {
        CampaignReport {
            schema_version: REPORT_SCHEMA_VERSION,
            status: Status::Completed,
            error: None,
            config,
            test_set: None,
            cases: Vec::new(),
            tuples: Vec::new(),
            efficiency: None,
            replacement: None,
            reverse_replacement: None,
            equivalence: None,
            audits: None,
            plot: Vec::new(),
            timing: Timing::default(),
        }
    }

    pub fn any_failure(&self) -> bool {
        self.cases
            .iter()
            .flat_map(|c| &c.results)
            .any(|r| r.verdict.outcome == Outcome::Fail)
    }

    pub fn audits_failed(&self) -> bool {
        self.audits.iter().flatten().any(|a| !a.passed)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self).map_err(|e| CampaignError::Encode(e.to_string()))?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| CampaignError::Encode(e.to_string()))
    }

    /// Flat per-case table: id, class, then verdict and ticks per tuple.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["id".to_string(), "class".to_string()];
        for t in &self.tuples {
            header.push(format!("{}.verdict", t.name));
            header.push(format!("{}.ticks", t.name));
        }
        w.write_record(&header).map_err(encode)?;
        for case in &self.cases {
            let mut row = vec![case.id.clone(), case.class.clone().unwrap_or_default()];
            for t in &self.tuples {
                match case.results.iter().find(|r| r.tuple == t.name) {
                    Some(r) => {
                        row.push(r.verdict.outcome.to_string());
                        row.push(r.ticks.to_string());
                    }
                    None => row.extend([String::new(), String::new()]),
                }
            }
            w.write_record(&row).map_err(encode)?;
        }
        finish(w)
    }

    pub fn to_plotdata(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["tuple", "size", "eff", "score", "ci_low", "ci_high"])
            .map_err(encode)?;
        let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
        for r in &self.plot {
            w.write_record([
                r.tuple.clone(),
                r.size.to_string(),
                r.eff.to_string(),
                opt(r.score),
                opt(r.ci_low),
                opt(r.ci_high),
            ])
            .map_err(encode)?;
        }
        finish(w)
    }

    pub fn render(&self, format: Format) -> Result<String> {
        match format {
            Format::Json => self.to_json(),
            Format::Csv => self.to_csv(),
            Format::Plotdata => self.to_plotdata(),
        }
    }
}

fn encode(e: csv::Error) -> CampaignError {
    CampaignError::Encode(e.to_string())
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| CampaignError::Encode(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CampaignError::Encode(e.to_string()))
}

/// Writes each requested format into `dir`, creating it when missing.
pub fn emit_report(report: &CampaignReport, formats: &[Format], dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| CampaignError::io(dir, e))?;
    let mut formats = formats.to_vec();
    formats.sort();
    formats.dedup();
    let mut written = Vec::with_capacity(formats.len());
    for f in formats {
        let path = dir.join(f.file_name());
        std::fs::write(&path, report.render(f)?).map_err(|e| CampaignError::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}
