use std::collections::BTreeSet;
use std::fmt;

use rand::seq::IndexedRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiment::{evaluate, Context, Property, SystemRef, TestCase};
use crate::metrics::{success_score, EfficiencyFunction, ScoreRecord, TestSetSampler, EFF_TOLERANCE};
use crate::partition::EquivalenceClassifier;
use crate::seed::{self, Rng};

const WIDTH_TOLERANCE: f64 = 1e-9;
const SCORE_LEVEL: f64 = 0.95;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Requirement {
    Monotonicity,
    Consistency,
    Reproducibility,
    UnionCompatibility,
    AccuracyTrend,
}

impl Requirement {
    pub const ALL: [Requirement; 5] = [
        Requirement::Monotonicity,
        Requirement::Consistency,
        Requirement::Reproducibility,
        Requirement::UnionCompatibility,
        Requirement::AccuracyTrend,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Requirement::Monotonicity => "monotonicity",
            Requirement::Consistency => "consistency",
            Requirement::Reproducibility => "reproducibility",
            Requirement::UnionCompatibility => "union-compatibility",
            Requirement::AccuracyTrend => "accuracy-trend",
        }
    }
}

impl fmt::Display for Requirement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for Requirement {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Requirement::ALL
            .into_iter()
            .find(|r| r.label() == s)
            .ok_or_else(|| Error::InvalidBound(format!("unknown requirement `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub requirement: Requirement,
    pub trials: usize,
    pub violations: Vec<String>,
    pub passed: bool,
}

impl AuditReport {
    fn new(requirement: Requirement, trials: usize, violations: Vec<String>) -> Self {
        AuditReport {
            requirement,
            trials,
            passed: violations.is_empty(),
            violations,
        }
    }
}

/// Two scores are similar when their point estimates differ by at most `delta`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimilarityDegree {
    pub delta: f64,
}

impl SimilarityDegree {
    pub fn new(delta: f64) -> Result<Self> {
        if !(delta.is_finite() && delta >= 0.0) {
            return Err(Error::InvalidBound(format!(
                "similarity degree must be non-negative, got {delta}"
            )));
        }
        Ok(SimilarityDegree { delta })
    }

    /// Degenerate records are only similar to each other.
    pub fn similar(&self, a: &ScoreRecord, b: &ScoreRecord) -> bool {
        match (a.point_estimate, b.point_estimate) {
            (Some(x), Some(y)) => (x - y).abs() <= self.delta,
            (None, None) => true,
            _ => false,
        }
    }
}

fn ids(cases: &[TestCase]) -> String {
    let v: Vec<&str> = cases.iter().map(|c| c.id.as_str()).collect();
    format!("{{{}}}", v.join(", "))
}

fn union(a: &[TestCase], b: &[TestCase]) -> Vec<TestCase> {
    let mut seen: BTreeSet<&str> = BTreeSet::new();
    a.iter()
        .chain(b)
        .filter(|c| seen.insert(c.id.as_str()))
        .cloned()
        .collect()
}

/// Runs `trial` for every index with its own derived generator and keeps
/// the witnesses in trial order.
fn run_trials(
    requirement: Requirement,
    trials: usize,
    seed: u64,
    trial: impl Fn(&mut Rng) -> Result<Option<String>> + Sync,
) -> Result<AuditReport> {
    if trials == 0 {
        return Err(Error::InvalidTrials);
    }
    let witnesses: Vec<Option<String>> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = seed::rng(seed::derive(seed, requirement.label(), i as u64));
            trial(&mut rng).map(|w| w.map(|w| format!("trial {i}: {w}")))
        })
        .collect::<Result<_>>()?;
    Ok(AuditReport::new(
        requirement,
        trials,
        witnesses.into_iter().flatten().collect(),
    ))
}

/// Adding cases must not lower efficiency.
pub fn audit_monotonicity(
    eff: &EfficiencyFunction,
    sampler: &dyn TestSetSampler,
    trials: usize,
    seed: u64,
) -> Result<AuditReport> {
    run_trials(Requirement::Monotonicity, trials, seed, |rng| {
        let t1 = sampler.draw(rng)?;
        let extra = sampler.draw(rng)?;
        let t2 = union(&t1, &extra);
        let (e1, e2) = (eff.eval(&t1)?, eff.eval(&t2)?);
        Ok((e1 > e2 + EFF_TOLERANCE).then(|| {
            format!("eff({}) = {e1} > eff({}) = {e2}", ids(&t1), ids(&t2))
        }))
    })
}

/// Cases in the same class must be equally efficient as singletons.
pub fn audit_consistency(
    eff: &EfficiencyFunction,
    classifier: &EquivalenceClassifier,
    sampler: &dyn TestSetSampler,
    trials: usize,
    seed: u64,
) -> Result<AuditReport> {
    let mut classes: std::collections::BTreeMap<String, Vec<&TestCase>> = Default::default();
    for case in sampler.pool() {
        classes.entry(classifier.classify(case)?).or_default().push(case);
    }
    let classes: Vec<(String, Vec<&TestCase>)> = classes.into_iter().collect();
    run_trials(Requirement::Consistency, trials, seed, |rng| {
        let Some((key, members)) = classes.choose(rng) else {
            return Ok(None);
        };
        let (t1, t2) = (
            (*members.choose(rng).unwrap()).clone(),
            (*members.choose(rng).unwrap()).clone(),
        );
        let e1 = eff.eval(std::slice::from_ref(&t1))?;
        let e2 = eff.eval(std::slice::from_ref(&t2))?;
        Ok(((e1 - e2).abs() > EFF_TOLERANCE).then(|| {
            format!("class {key}: eff({{{}}}) = {e1}, eff({{{}}}) = {e2}", t1.id, t2.id)
        }))
    })
}

/// Equally efficient test sets must give similar scores.
#[allow(clippy::too_many_arguments)]
pub fn audit_reproducibility(
    eff: &EfficiencyFunction,
    context: &dyn Context,
    systems: &[SystemRef],
    property: &dyn Property,
    sampler: &dyn TestSetSampler,
    similarity: SimilarityDegree,
    trials: usize,
    seed: u64,
) -> Result<AuditReport> {
    run_trials(Requirement::Reproducibility, trials, seed, |rng| {
        let (t1, t2) = sampler.draw_equal_pair(rng, eff)?;
        let run_seed = seed::derive(seed, "reproducibility-runs", 0);
        let s1 = success_score(
            evaluate(context, systems, property, &t1, run_seed)?.iter().map(|e| &e.verdict),
            SCORE_LEVEL,
        )?;
        let s2 = success_score(
            evaluate(context, systems, property, &t2, run_seed)?.iter().map(|e| &e.verdict),
            SCORE_LEVEL,
        )?;
        Ok((!similarity.similar(&s1, &s2)).then(|| {
            format!(
                "eff {} on both; scores {:?} ({} cases) vs {:?} ({} cases) differ by more than {}",
                eff.eval(&t1).unwrap_or(f64::NAN),
                s1.point_estimate,
                t1.len(),
                s2.point_estimate,
                t2.len(),
                similarity.delta
            )
        }))
    })
}

/// Unions of pairwise equally efficient sets must be equally efficient.
pub fn audit_union_compatibility(
    eff: &EfficiencyFunction,
    sampler: &dyn TestSetSampler,
    trials: usize,
    seed: u64,
) -> Result<AuditReport> {
    run_trials(Requirement::UnionCompatibility, trials, seed, |rng| {
        let (t1, t2) = sampler.draw_equal_pair(rng, eff)?;
        let (t3, t4) = sampler.draw_equal_pair(rng, eff)?;
        let (u1, u2) = (union(&t1, &t3), union(&t2, &t4));
        let (e1, e2) = (eff.eval(&u1)?, eff.eval(&u2)?);
        Ok(((e1 - e2).abs() > EFF_TOLERANCE).then(|| {
            format!(
                "eff(T1 ∪ T3) = {e1} but eff(T2 ∪ T4) = {e2} with T1={}, T2={}, T3={}, T4={}",
                ids(&t1),
                ids(&t2),
                ids(&t3),
                ids(&t4)
            )
        }))
    })
}

/// Scores of increasingly efficient sets must have non-increasing interval
/// width. A degenerate record counts as width 1.
pub fn audit_accuracy_trend(series: &[(f64, ScoreRecord)]) -> Result<AuditReport> {
    if let Some(i) = series.windows(2).position(|w| w[1].0 <= w[0].0) {
        return Err(Error::UnsortedSeries(i + 1));
    }
    let violations = series
        .windows(2)
        .filter_map(|w| {
            let (a, b) = (w[0].1.width(), w[1].1.width());
            (b > a + WIDTH_TOLERANCE).then(|| {
                format!(
                    "width rose from {a} at eff {} to {b} at eff {}",
                    w[0].0, w[1].0
                )
            })
        })
        .collect();
    Ok(AuditReport::new(Requirement::AccuracyTrend, series.len(), violations))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{class_coverage_eff, PoolSampler, SamplerMode};
    use crate::value::Value;

    fn pool(n: i64) -> Vec<TestCase> {
        (0..n)
            .map(|i| TestCase::new(format!("p{i:03}"), Value::Int(i)))
            .collect()
    }

    fn record(lo: f64, hi: f64) -> ScoreRecord {
        ScoreRecord {
            point_estimate: Some((lo + hi) / 2.0),
            ci_low: Some(lo),
            ci_high: Some(hi),
            confidence_level: 0.95,
            n_pass: 1,
            n_fail: 1,
            n_inconclusive: 0,
        }
    }

    #[test]
    fn shrinking_eff_is_not_monotone() {
        let bad = EfficiencyFunction::new("inverse size", |t| Ok(1.0 / (1.0 + t.len() as f64)));
        let s = PoolSampler::new(pool(20), SamplerMode::Uniform).unwrap();
        let rep = audit_monotonicity(&bad, &s, 10, 7).unwrap();
        assert!(!rep.passed);
        assert!(matches!(audit_monotonicity(&bad, &s, 0, 7), Err(Error::InvalidTrials)));
    }

    #[test]
    fn magnitude_eff_is_inconsistent_under_parity() {
        let parity = EquivalenceClassifier::parity();
        let eff = EfficiencyFunction::new("magnitude", |t| {
            Ok(t.iter().filter_map(|c| c.payload.as_int()).max().unwrap_or(0) as f64 / 100.0)
        });
        let s = PoolSampler::new(pool(20), SamplerMode::Uniform).unwrap();
        assert!(!audit_consistency(&eff, &parity, &s, 50, 1).unwrap().passed);
    }

    #[test]
    fn single_class_is_vacuously_consistent() {
        let one = EquivalenceClassifier::new("one", |_| Some("all".into())).with_universe(["all"]);
        let eff = class_coverage_eff(&one).unwrap();
        let s = PoolSampler::new(pool(5), SamplerMode::Uniform).unwrap();
        let rep = audit_consistency(&eff, &one, &s, 25, 0).unwrap();
        assert!(rep.passed);
        assert_eq!(rep.trials, 25);
    }

    #[test]
    fn mirrored_union_passes() {
        let parity = EquivalenceClassifier::parity();
        let eff = class_coverage_eff(&parity).unwrap();
        let s = PoolSampler::new(pool(10), SamplerMode::Mirrored).unwrap();
        assert!(audit_union_compatibility(&eff, &s, 50, 3).unwrap().passed);
    }

    #[test]
    fn accuracy_trend_cases() {
        let ok = [(0.1, record(0.0, 0.5)), (0.2, record(0.3, 0.6)), (0.3, record(0.4, 0.6))];
        assert!(audit_accuracy_trend(&ok).unwrap().passed);
        let bad = [(0.1, record(0.2, 0.5)), (0.2, record(0.0, 0.5))];
        assert!(!audit_accuracy_trend(&bad).unwrap().passed);
        assert!(audit_accuracy_trend(&ok[..1]).unwrap().passed);
        let unsorted = [(0.2, record(0.0, 0.5)), (0.1, record(0.0, 0.5))];
        assert!(matches!(audit_accuracy_trend(&unsorted), Err(Error::UnsortedSeries(1))));
    }

    #[test]
    fn similarity() {
        let d = SimilarityDegree::new(0.1).unwrap();
        assert!(d.similar(&record(0.0, 0.2), &record(0.1, 0.3)));
        assert!(!d.similar(&record(0.0, 0.2), &record(0.4, 0.6)));
        assert!(SimilarityDegree::new(-1.0).is_err());
    }
}
