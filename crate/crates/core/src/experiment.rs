//! Test cases, runs, verdicts, systems, contexts and properties, and the
//! execution of a single experiment `y = C[S](x)`.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;
use crate::value::{DomainDescriptor, Value};

/// One input `t` applied to the system under test.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestCase {
    pub id: String,
    pub payload: Value,
    /// Number of input symbols; 1 for scalar payloads.
    pub length: usize,
}

impl TestCase {
    pub fn new(id: impl Into<String>, payload: Value) -> Self {
        let length = payload.symbol_count();
        TestCase {
            id: id.into(),
            payload,
            length,
        }
    }
}

/// A finite, duplicate-free collection of test cases.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestSet {
    pub name: String,
    cases: Vec<TestCase>,
}

impl TestSet {
    pub fn new(name: impl Into<String>, cases: Vec<TestCase>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for c in &cases {
            if !seen.insert(c.id.as_str()) {
                return Err(Error::DuplicateId(c.id.clone()));
            }
        }
        Ok(TestSet {
            name: name.into(),
            cases,
        })
    }

    pub fn empty(name: impl Into<String>) -> Self {
        TestSet {
            name: name.into(),
            cases: Vec::new(),
        }
    }

    /// Builds a set from payloads, numbering ids `<prefix>-0..` with a fixed
    /// width so lexicographic id order equals construction order.
    pub fn from_payloads(
        name: impl Into<String>,
        prefix: &str,
        payloads: impl IntoIterator<Item = Value>,
    ) -> Self {
        let payloads: Vec<Value> = payloads.into_iter().collect();
        let width = digits(payloads.len().saturating_sub(1));
        let cases = payloads
            .into_iter()
            .enumerate()
            .map(|(i, p)| TestCase::new(format!("{prefix}-{i:0width$}"), p))
            .collect();
        TestSet {
            name: name.into(),
            cases,
        }
    }

    pub fn cases(&self) -> &[TestCase] {
        &self.cases
    }

    pub fn into_cases(self) -> Vec<TestCase> {
        self.cases
    }

    pub fn len(&self) -> usize {
        self.cases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cases.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&TestCase> {
        self.cases.iter().find(|c| c.id == id)
    }

    /// Cases sorted by id.
    pub fn sorted(&self) -> Vec<&TestCase> {
        let mut v: Vec<&TestCase> = self.cases.iter().collect();
        v.sort_by(|a, b| a.id.cmp(&b.id));
        v
    }

    /// Keeps the cases for which `keep` returns true.
    pub fn filter(&self, name: impl Into<String>, keep: impl Fn(&TestCase) -> bool) -> TestSet {
        TestSet {
            name: name.into(),
            cases: self.cases.iter().filter(|c| keep(c)).cloned().collect(),
        }
    }

    pub fn payloads(&self) -> BTreeSet<&Value> {
        self.cases.iter().map(|c| &c.payload).collect()
    }
}

pub(crate) fn digits(mut n: usize) -> usize {
    let mut d = 1;
    while n >= 10 {
        n /= 10;
        d += 1;
    }
    d
}

/// One observation at a logical tick.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub tick: u64,
    pub observation: Value,
}

/// The observed behavior `r` of one experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Run {
    pub steps: Vec<Step>,
    pub terminated: bool,
    pub seed: u64,
}

impl Run {
    /// A run with one observation at tick 0.
    pub fn single(observation: Value, seed: u64) -> Self {
        Run {
            steps: vec![Step {
                tick: 0,
                observation,
            }],
            terminated: true,
            seed,
        }
    }

    pub fn last_observation(&self) -> Option<&Value> {
        self.steps.last().map(|s| &s.observation)
    }

    pub fn last_tick(&self) -> u64 {
        self.steps.last().map_or(0, |s| s.tick)
    }

    pub fn ticks_increasing(&self) -> bool {
        self.steps.windows(2).all(|w| w[0].tick < w[1].tick)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Outcome {
    Pass,
    Fail,
    Inconclusive,
}

impl Outcome {
    pub fn is_conclusive(self) -> bool {
        self != Outcome::Inconclusive
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::Pass => "pass",
            Outcome::Fail => "fail",
            Outcome::Inconclusive => "inconclusive",
        })
    }
}

/// The oracle's judgement `P(t, r)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub outcome: Outcome,
    pub evidence: Option<String>,
}

impl Verdict {
    pub fn pass() -> Self {
        Verdict {
            outcome: Outcome::Pass,
            evidence: None,
        }
    }

    pub fn fail(evidence: impl Into<String>) -> Self {
        Verdict {
            outcome: Outcome::Fail,
            evidence: Some(evidence.into()),
        }
    }

    pub fn inconclusive(evidence: impl Into<String>) -> Self {
        Verdict {
            outcome: Outcome::Inconclusive,
            evidence: Some(evidence.into()),
        }
    }

    pub fn from_bool(ok: bool, evidence: impl FnOnce() -> String) -> Self {
        if ok {
            Verdict::pass()
        } else {
            Verdict::fail(evidence())
        }
    }
}

/// Stimulus and response alphabets of a system, or those a context accepts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Signature {
    pub stimulus: DomainDescriptor,
    pub response: DomainDescriptor,
}

impl Signature {
    pub fn new(stimulus: DomainDescriptor, response: DomainDescriptor) -> Self {
        Signature { stimulus, response }
    }
}

/// A live interaction with a system after `reset`.
pub trait Session {
    fn react(&mut self, stimulus: &Value) -> Value;
}

/// A black-box system `S`.
///
/// Implementations must be deterministic: the same seed followed by the same
/// stimuli yields the same responses.
pub trait SystemUnderTest: Send + Sync {
    fn name(&self) -> &str;
    fn signature(&self) -> &Signature;
    fn reset(&self, seed: u64) -> Box<dyn Session + '_>;
}

pub type SystemRef = Arc<dyn SystemUnderTest>;

type ReactFn = dyn Fn(&Value) -> Value + Send + Sync;

/// A memoryless system defined by a function from stimulus to response.
#[derive(Clone)]
pub struct FnSystem {
    name: String,
    signature: Signature,
    f: Arc<ReactFn>,
}

impl FnSystem {
    pub fn new(
        name: impl Into<String>,
        signature: Signature,
        f: impl Fn(&Value) -> Value + Send + Sync + 'static,
    ) -> Self {
        FnSystem {
            name: name.into(),
            signature,
            f: Arc::new(f),
        }
    }

    pub fn into_ref(self) -> SystemRef {
        Arc::new(self)
    }
}

struct FnSession<'a>(&'a ReactFn);

impl Session for FnSession<'_> {
    fn react(&mut self, stimulus: &Value) -> Value {
        (self.0)(stimulus)
    }
}

impl SystemUnderTest for FnSystem {
    fn name(&self) -> &str {
        &self.name
    }

    fn signature(&self) -> &Signature {
        &self.signature
    }

    fn reset(&self, _seed: u64) -> Box<dyn Session + '_> {
        Box::new(FnSession(self.f.as_ref()))
    }
}

/// The embedding `C` that turns a test case into a run of its systems.
pub trait Context: Send + Sync {
    fn name(&self) -> &str;
    /// Number of embedded systems.
    fn arity(&self) -> usize;
    fn input_domain(&self) -> &DomainDescriptor;
    fn output_domain(&self) -> &DomainDescriptor;
    /// True only if a run depends on the current payload alone.
    fn memoryless(&self) -> bool;
    /// Alphabets every embedded system must declare.
    fn signature(&self) -> &Signature;
    /// Drives the systems through one test case. Callers go through
    /// [`run_experiment`], which checks arity, alphabets and domains first.
    fn apply(&self, systems: &[SystemRef], case: &TestCase, seed: u64) -> Result<Run>;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OracleKind {
    AutomatedMonitor,
    RecordedHumanVerdicts,
}

/// The success predicate `P` over (test case, run).
pub trait Property: Send + Sync {
    fn name(&self) -> &str;
    fn oracle_kind(&self) -> OracleKind {
        OracleKind::AutomatedMonitor
    }
    fn judge(&self, case: &TestCase, run: &Run) -> Result<Verdict>;
}

pub fn check_embedding(context: &dyn Context, systems: &[SystemRef]) -> Result<()> {
    if systems.len() != context.arity() {
        return Err(Error::ArityMismatch {
            context: context.name().to_string(),
            expected: context.arity(),
            got: systems.len(),
        });
    }
    for s in systems {
        if s.signature() != context.signature() {
            return Err(Error::AlphabetMismatch {
                system: s.name().to_string(),
                context: context.name().to_string(),
            });
        }
    }
    Ok(())
}

/// Runs one experiment: the systems embedded in `context`, driven by
/// `case` with randomness fixed by `seed`.
pub fn run_experiment(
    context: &dyn Context,
    systems: &[SystemRef],
    case: &TestCase,
    seed: u64,
) -> Result<Run> {
    check_embedding(context, systems)?;
    if !context.input_domain().contains(&case.payload) {
        return Err(Error::DomainViolation(format!(
            "payload {} of `{}` is outside the input domain of `{}`",
            case.payload,
            case.id,
            context.name()
        )));
    }
    let run = context.apply(systems, case, seed)?;
    debug_assert!(run.ticks_increasing(), "context produced non-increasing ticks");
    if let Some(step) = run
        .steps
        .iter()
        .find(|s| !context.output_domain().contains(&s.observation))
    {
        return Err(Error::DomainViolation(format!(
            "observation {} at tick {} is outside the output domain of `{}`",
            step.observation,
            step.tick,
            context.name()
        )));
    }
    Ok(run)
}

pub fn judge(property: &dyn Property, case: &TestCase, run: &Run) -> Result<Verdict> {
    property.judge(case, run)
}

/// The outcome of one test case within a batch.
#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub case: TestCase,
    pub run: Run,
    pub verdict: Verdict,
}

/// Runs and judges every case, in parallel, returning results in input
/// order. Each case gets the seed derived from `(seed, case.id)`, so the
/// result for a case does not depend on which other cases are in the batch.
pub fn evaluate(
    context: &dyn Context,
    systems: &[SystemRef],
    property: &dyn Property,
    cases: &[TestCase],
    seed: u64,
) -> Result<Vec<Evaluation>> {
    check_embedding(context, systems)?;
    cases
        .par_iter()
        .map(|case| {
            let run = run_experiment(context, systems, case, seed::for_case(seed, &case.id))?;
            let verdict = judge(property, case, &run)?;
            Ok(Evaluation {
                case: case.clone(),
                run,
                verdict,
            })
        })
        .collect()
}
