//! The replacement preorder and the equivalence it induces, evaluated over
//! a test set.
//!
//! `S1` can replace `S2` for `P` when every test case that `S2` passes is
//! also passed by `S1`. Over a finite test set this is evidence only; a
//! report is marked conclusive when the set is the entire input domain of a
//! memoryless context and no verdict was left undecided.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::experiment::{evaluate, Context, Evaluation, Outcome, Property, SystemRef, TestCase, TestSet, Verdict};
use crate::value::{Value, DEFAULT_ENUMERATION_LIMIT};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub case: TestCase,
    pub candidate: Verdict,
    pub incumbent: Verdict,
}

/// A case on which at least one side was inconclusive.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Indeterminate {
    pub case: TestCase,
    pub candidate: Outcome,
    pub incumbent: Outcome,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplacementReport {
    pub holds: bool,
    pub violations: Vec<Violation>,
    pub indeterminate: Vec<Indeterminate>,
    pub conclusive: bool,
    pub cases_evaluated: usize,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Distinction {
    pub case: TestCase,
    pub first: Verdict,
    pub second: Verdict,
    /// Set when the difference is between a decided and an undecided verdict.
    pub involves_inconclusive: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub equivalent: bool,
    pub distinguishing_cases: Vec<Distinction>,
    pub conclusive: bool,
    pub cases_evaluated: usize,
}

/// Whether the test set's payloads are exactly the context's input domain.
pub fn covers_domain(context: &dyn Context, set: &TestSet) -> bool {
    match context.input_domain().enumerate(DEFAULT_ENUMERATION_LIMIT) {
        Ok(all) => {
            let all: BTreeSet<&Value> = all.iter().collect();
            all == set.payloads()
        }
        Err(_) => false,
    }
}

/// Full-domain coverage on a memoryless context.
pub fn exhaustive_on(context: &dyn Context, set: &TestSet) -> bool {
    context.memoryless() && covers_domain(context, set)
}

fn by_id(evals: &[Evaluation]) -> Vec<&Evaluation> {
    let mut v: Vec<&Evaluation> = evals.iter().collect();
    v.sort_by(|a, b| a.case.id.cmp(&b.case.id));
    v
}

/// Builds the report from two aligned evaluation lists (same cases, same
/// order). `exhaustive` states whether the cases span a memoryless domain.
pub fn replacement_from(
    candidate: &[Evaluation],
    incumbent: &[Evaluation],
    exhaustive: bool,
) -> ReplacementReport {
    assert_eq!(candidate.len(), incumbent.len(), "evaluations are not aligned");
    let mut violations = Vec::new();
    let mut indeterminate = Vec::new();
    for (c, i) in by_id(candidate).into_iter().zip(by_id(incumbent)) {
        debug_assert_eq!(c.case.id, i.case.id);
        match (c.verdict.outcome, i.verdict.outcome) {
            (Outcome::Inconclusive, _) | (_, Outcome::Inconclusive) => {
                indeterminate.push(Indeterminate {
                    case: c.case.clone(),
                    candidate: c.verdict.outcome,
                    incumbent: i.verdict.outcome,
                })
            }
            (Outcome::Fail, Outcome::Pass) => violations.push(Violation {
                case: c.case.clone(),
                candidate: c.verdict.clone(),
                incumbent: i.verdict.clone(),
            }),
            _ => {}
        }
    }
    let mut warnings = Vec::new();
    if candidate.is_empty() {
        warnings.push("empty test set: replacement holds vacuously".to_string());
    }
    if !indeterminate.is_empty() {
        warnings.push(format!(
            "{} case(s) had an inconclusive verdict and were left out of the comparison",
            indeterminate.len()
        ));
    }
    ReplacementReport {
        holds: violations.is_empty(),
        conclusive: exhaustive && !candidate.is_empty() && indeterminate.is_empty(),
        violations,
        indeterminate,
        cases_evaluated: candidate.len(),
        warnings,
    }
}

pub fn equivalence_from(first: &[Evaluation], second: &[Evaluation], exhaustive: bool) -> EquivalenceReport {
    assert_eq!(first.len(), second.len(), "evaluations are not aligned");
    let distinguishing_cases: Vec<Distinction> = by_id(first)
        .into_iter()
        .zip(by_id(second))
        .filter(|(a, b)| a.verdict.outcome != b.verdict.outcome)
        .map(|(a, b)| Distinction {
            case: a.case.clone(),
            first: a.verdict.clone(),
            second: b.verdict.clone(),
            involves_inconclusive: !(a.verdict.outcome.is_conclusive()
                && b.verdict.outcome.is_conclusive()),
        })
        .collect();
    EquivalenceReport {
        equivalent: distinguishing_cases.is_empty(),
        distinguishing_cases,
        conclusive: exhaustive && !first.is_empty(),
        cases_evaluated: first.len(),
    }
}

/// Decides whether `candidate` can replace `incumbent` on `set`. Both tuples
/// see the same per-case seeds.
pub fn can_replace(
    context: &dyn Context,
    candidate: &[SystemRef],
    incumbent: &[SystemRef],
    property: &dyn Property,
    set: &TestSet,
    seed: u64,
) -> Result<ReplacementReport> {
    let c = evaluate(context, candidate, property, set.cases(), seed)?;
    let i = evaluate(context, incumbent, property, set.cases(), seed)?;
    Ok(replacement_from(&c, &i, exhaustive_on(context, set)))
}

pub fn equivalent(
    context: &dyn Context,
    first: &[SystemRef],
    second: &[SystemRef],
    property: &dyn Property,
    set: &TestSet,
    seed: u64,
) -> Result<EquivalenceReport> {
    let a = evaluate(context, first, property, set.cases(), seed)?;
    let b = evaluate(context, second, property, set.cases(), seed)?;
    Ok(equivalence_from(&a, &b, exhaustive_on(context, set)))
}

/// The entire input domain as a test set, when it is finite. Whether reports
/// over it are conclusive still depends on the context being memoryless.
pub fn enumerate_domain(context: &dyn Context) -> Option<TestSet> {
    let values = context.input_domain().enumerate(DEFAULT_ENUMERATION_LIMIT).ok()?;
    Some(TestSet::from_payloads(
        format!("exhaustive({})", context.name()),
        "e",
        values,
    ))
}
