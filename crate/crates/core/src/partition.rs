//! Observational-equivalence classes of test cases.
//!
//! The true relation (cases `P` cannot tell apart) is unknowable for a black
//! box, so it is approximated by a user-supplied [`EquivalenceClassifier`].
//! The classifier doubles as a hypothesis: [`metamorphic_falsify`] looks
//! for classes whose members receive different verdicts.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiment::{evaluate, Context, Evaluation, Outcome, Property, SystemRef, TestCase, TestSet, Verdict};
use crate::metrics::EfficiencyFunction;
use crate::value::Value;

type ClassifyFn = dyn Fn(&Value) -> Option<String> + Send + Sync;

/// Maps test cases to class keys, with per-class significance weights.
#[derive(Clone)]
pub struct EquivalenceClassifier {
    name: String,
    classify: Arc<ClassifyFn>,
    weights: BTreeMap<String, f64>,
    universe: Option<BTreeSet<String>>,
}

impl fmt::Debug for EquivalenceClassifier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EquivalenceClassifier")
            .field("name", &self.name)
            .field("weights", &self.weights)
            .field("universe", &self.universe)
            .finish_non_exhaustive()
    }
}

impl EquivalenceClassifier {
    /// `classify` returns `None` for payloads outside its domain.
    pub fn new(
        name: impl Into<String>,
        classify: impl Fn(&Value) -> Option<String> + Send + Sync + 'static,
    ) -> Self {
        EquivalenceClassifier {
            name: name.into(),
            classify: Arc::new(classify),
            weights: BTreeMap::new(),
            universe: None,
        }
    }

    pub fn with_universe<I, S>(mut self, keys: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.universe = Some(keys.into_iter().map(Into::into).collect());
        self
    }

    pub fn with_weights<I, S>(mut self, weights: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, f64)>,
        S: Into<String>,
    {
        for (k, w) in weights {
            let key = k.into();
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::InvalidWeight { key, weight: w });
            }
            self.weights.insert(key, w);
        }
        Ok(self)
    }

    /// Parity of an integer payload: `even` / `odd`.
    pub fn parity() -> Self {
        EquivalenceClassifier::new("parity", |v| {
            v.as_int()
                .map(|i| if i % 2 == 0 { "even" } else { "odd" }.to_string())
        })
        .with_universe(["even", "odd"])
    }

    /// Every distinct payload is its own class.
    pub fn by_value<'a>(domain: impl IntoIterator<Item = &'a Value>) -> Self {
        let universe: Vec<String> = domain.into_iter().map(|v| v.to_string()).collect();
        EquivalenceClassifier::new("value", |v| Some(v.to_string())).with_universe(universe)
    }

    /// Input length as class key, for lengths `1..=max`.
    pub fn by_length(max: usize) -> Self {
        EquivalenceClassifier::new("length", move |v| {
            let n = v.symbol_count();
            (1..=max).contains(&n).then(|| format!("len{n}"))
        })
        .with_universe((1..=max).map(|n| format!("len{n}")))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn universe(&self) -> Option<&BTreeSet<String>> {
        self.universe.as_ref()
    }

    /// Significance weight of a class; 1.0 unless set.
    pub fn weight(&self, key: &str) -> f64 {
        self.weights.get(key).copied().unwrap_or(1.0)
    }

    pub fn weights(&self) -> &BTreeMap<String, f64> {
        &self.weights
    }

    /// Universe keys by descending weight, ties broken by key order.
    pub fn keys_by_weight(&self) -> Result<Vec<String>> {
        let universe = self
            .universe
            .as_ref()
            .ok_or_else(|| Error::MissingUniverse(self.name.clone()))?;
        let mut keys: Vec<String> = universe.iter().cloned().collect();
        keys.sort_by(|a, b| {
            self.weight(b)
                .partial_cmp(&self.weight(a))
                .unwrap_or(std::cmp::Ordering::Equal)
                .then_with(|| a.cmp(b))
        });
        Ok(keys)
    }

    pub fn key_of(&self, payload: &Value) -> Option<String> {
        let key = (self.classify)(payload)?;
        match &self.universe {
            Some(u) if !u.contains(&key) => None,
            _ => Some(key),
        }
    }

    pub fn classify(&self, case: &TestCase) -> Result<String> {
        self.key_of(&case.payload)
            .ok_or_else(|| Error::UnclassifiableCase {
                id: case.id.clone(),
                classifier: self.name.clone(),
            })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionReport {
    /// Class key → member ids, sorted.
    pub classes: BTreeMap<String, Vec<String>>,
    /// Universe classes without members.
    pub uncovered: Vec<String>,
}

impl PartitionReport {
    pub fn class_of(&self, id: &str) -> Option<&str> {
        self.classes
            .iter()
            .find(|(_, ids)| ids.binary_search_by(|x| x.as_str().cmp(id)).is_ok())
            .map(|(k, _)| k.as_str())
    }

    pub fn sizes(&self) -> BTreeMap<String, usize> {
        self.classes.iter().map(|(k, v)| (k.clone(), v.len())).collect()
    }
}

pub fn partition(set: &TestSet, classifier: &EquivalenceClassifier) -> Result<PartitionReport> {
    let mut classes: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for case in set.cases() {
        classes
            .entry(classifier.classify(case)?)
            .or_default()
            .push(case.id.clone());
    }
    for ids in classes.values_mut() {
        ids.sort();
    }
    let uncovered = classifier
        .universe()
        .map(|u| u.iter().filter(|k| !classes.contains_key(*k)).cloned().collect())
        .unwrap_or_default();
    Ok(PartitionReport { classes, uncovered })
}

/// A pair of same-class cases with different verdicts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Anomaly {
    pub class_key: String,
    pub first: TestCase,
    pub second: TestCase,
    pub first_verdict: Verdict,
    pub second_verdict: Verdict,
}

/// Every passing and failing member of a class with mixed verdicts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DivergentClass {
    pub class_key: String,
    pub passing: Vec<String>,
    pub failing: Vec<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AnomalyReport {
    pub anomalies: Vec<Anomaly>,
    pub divergent: Vec<DivergentClass>,
}

impl AnomalyReport {
    pub fn classes(&self) -> BTreeSet<&str> {
        self.anomalies.iter().map(|a| a.class_key.as_str()).collect()
    }
}

/// Scans evaluated cases for classes with both passing and failing members.
/// Per mixed class the reported pair is the smallest passing id with the
/// smallest failing id, ordered by id. Inconclusive verdicts are ignored.
pub fn falsify_from(evals: &[Evaluation], classifier: &EquivalenceClassifier) -> Result<AnomalyReport> {
    let mut by_class: BTreeMap<String, Vec<&Evaluation>> = BTreeMap::new();
    for ev in evals {
        by_class.entry(classifier.classify(&ev.case)?).or_default().push(ev);
    }
    let mut report = AnomalyReport::default();
    for (key, mut members) in by_class {
        members.sort_by(|a, b| a.case.id.cmp(&b.case.id));
        let passing: Vec<&Evaluation> = members
            .iter()
            .copied()
            .filter(|e| e.verdict.outcome == Outcome::Pass)
            .collect();
        let failing: Vec<&Evaluation> = members
            .iter()
            .copied()
            .filter(|e| e.verdict.outcome == Outcome::Fail)
            .collect();
        let (Some(p), Some(f)) = (passing.first(), failing.first()) else {
            continue;
        };
        let (a, b) = if p.case.id < f.case.id { (p, f) } else { (f, p) };
        report.anomalies.push(Anomaly {
            class_key: key.clone(),
            first: a.case.clone(),
            second: b.case.clone(),
            first_verdict: a.verdict.clone(),
            second_verdict: b.verdict.clone(),
        });
        report.divergent.push(DivergentClass {
            class_key: key,
            passing: passing.iter().map(|e| e.case.id.clone()).collect(),
            failing: failing.iter().map(|e| e.case.id.clone()).collect(),
        });
    }
    Ok(report)
}

pub fn metamorphic_falsify(
    context: &dyn Context,
    systems: &[SystemRef],
    property: &dyn Property,
    classifier: &EquivalenceClassifier,
    set: &TestSet,
    seed: u64,
) -> Result<AnomalyReport> {
    let evals = evaluate(context, systems, property, set.cases(), seed)?;
    falsify_from(&evals, classifier)
}

/// Certifies anomalies as adversarial examples: same-class pairs whose
/// singleton efficiencies are exactly equal yet whose verdicts differ. An
/// efficiency that separates a pair is reported as [`Error::InconsistentEff`].
pub fn detect_adversarial(anomalies: &AnomalyReport, eff: &EfficiencyFunction) -> Result<AnomalyReport> {
    let mut certified = Vec::with_capacity(anomalies.anomalies.len());
    for a in &anomalies.anomalies {
        let e1 = eff.eval(std::slice::from_ref(&a.first))?;
        let e2 = eff.eval(std::slice::from_ref(&a.second))?;
        #[allow(clippy::float_cmp)]
        if e1 != e2 {
            return Err(Error::InconsistentEff {
                eff: eff.name().to_string(),
                class_key: a.class_key.clone(),
                first: a.first.id.clone(),
                second: a.second.id.clone(),
                first_eff: e1,
                second_eff: e2,
            });
        }
        certified.push(a.clone());
    }
    Ok(AnomalyReport {
        anomalies: certified,
        divergent: anomalies.divergent.clone(),
    })
}
