//! Efficiency and score functions, plus audits that check a pair of them
//! empirically against the framework requirements.

mod audit;
mod sampler;
mod score;

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::experiment::TestCase;
use crate::partition::EquivalenceClassifier;

pub use audit::{
    audit_accuracy_trend, audit_consistency, audit_monotonicity, audit_reproducibility,
    audit_union_compatibility, AuditReport, Requirement, SimilarityDegree,
};
pub use sampler::{PoolSampler, SamplerMode, TestSetSampler};
pub use score::{clopper_pearson, success_score, ScoreRecord};

/// Tolerance for comparing efficiency values.
pub const EFF_TOLERANCE: f64 = 1e-12;

type EvalFn = dyn Fn(&[TestCase]) -> Result<f64> + Send + Sync;

/// A map from test sets to `[0, 1]`.
#[derive(Clone)]
pub struct EfficiencyFunction {
    name: String,
    eval: Arc<EvalFn>,
    classifier: Option<EquivalenceClassifier>,
}

impl fmt::Debug for EfficiencyFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EfficiencyFunction")
            .field("name", &self.name)
            .field("classifier", &self.classifier.as_ref().map(|c| c.name()))
            .finish_non_exhaustive()
    }
}

impl EfficiencyFunction {
    pub fn new(
        name: impl Into<String>,
        eval: impl Fn(&[TestCase]) -> Result<f64> + Send + Sync + 'static,
    ) -> Self {
        EfficiencyFunction {
            name: name.into(),
            eval: Arc::new(eval),
            classifier: None,
        }
    }

    pub fn with_classifier(mut self, classifier: EquivalenceClassifier) -> Self {
        self.classifier = Some(classifier);
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn classifier(&self) -> Option<&EquivalenceClassifier> {
        self.classifier.as_ref()
    }

    pub fn eval(&self, cases: &[TestCase]) -> Result<f64> {
        let value = (self.eval)(cases)?;
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::EffOutOfRange {
                eff: self.name.clone(),
                value,
            });
        }
        Ok(value)
    }
}

/// Weighted fraction of universe classes that `T` touches.
pub fn class_coverage_eff(classifier: &EquivalenceClassifier) -> Result<EfficiencyFunction> {
    let universe = classifier
        .universe()
        .ok_or_else(|| Error::MissingUniverse(classifier.name().to_string()))?
        .clone();
    let total: f64 = universe.iter().map(|k| classifier.weight(k)).sum();
    let c = classifier.clone();
    let eff = EfficiencyFunction::new(format!("class-coverage({})", c.name()), move |cases| {
        let mut hit = std::collections::BTreeSet::new();
        for case in cases {
            hit.insert(c.classify(case)?);
        }
        if total == 0.0 {
            return Ok(0.0);
        }
        let covered: f64 = hit.iter().map(|k| c.weight(k)).sum();
        Ok((covered / total).clamp(0.0, 1.0))
    });
    Ok(eff.with_classifier(classifier.clone()))
}
