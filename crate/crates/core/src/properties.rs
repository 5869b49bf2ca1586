//! Generic success predicates.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::contexts::tables::{parse_field, FieldShape};
use crate::error::{Error, Result};
use crate::experiment::{OracleKind, Outcome, Property, Run, TestCase, Verdict};
use crate::value::{DomainDescriptor, Value};

fn final_observation<'a>(name: &str, run: &'a Run) -> Result<&'a Value> {
    run.last_observation()
        .ok_or_else(|| Error::DomainViolation(format!("property `{name}` needs a non-empty run")))
}

fn check_domain(name: &str, domain: Option<&DomainDescriptor>, case: &TestCase) -> Result<()> {
    match domain {
        Some(d) if !d.contains(&case.payload) => Err(Error::DomainViolation(format!(
            "property `{name}` is not defined on payload {}",
            case.payload
        ))),
        _ => Ok(()),
    }
}

/// Passes when the final observation equals the payload.
#[derive(Clone, Debug, Default)]
pub struct OutputEqualsInput {
    domain: Option<DomainDescriptor>,
}

impl OutputEqualsInput {
    pub fn on(domain: DomainDescriptor) -> Self {
        OutputEqualsInput {
            domain: Some(domain),
        }
    }
}

impl Property for OutputEqualsInput {
    fn name(&self) -> &str {
        "output equals input"
    }

    fn judge(&self, case: &TestCase, run: &Run) -> Result<Verdict> {
        check_domain(self.name(), self.domain.as_ref(), case)?;
        let out = final_observation(self.name(), run)?;
        Ok(Verdict::from_bool(out == &case.payload, || {
            format!("observed {out}, expected {}", case.payload)
        }))
    }
}

type ExpectFn = dyn Fn(&Value) -> Value + Send + Sync;

/// Passes when the final observation equals a reference function of the
/// payload ("output correct").
#[derive(Clone)]
pub struct OutputMatches {
    name: String,
    expected: Arc<ExpectFn>,
    domain: Option<DomainDescriptor>,
}

impl OutputMatches {
    pub fn new(
        name: impl Into<String>,
        expected: impl Fn(&Value) -> Value + Send + Sync + 'static,
    ) -> Self {
        OutputMatches {
            name: name.into(),
            expected: Arc::new(expected),
            domain: None,
        }
    }

    pub fn with_domain(mut self, domain: DomainDescriptor) -> Self {
        self.domain = Some(domain);
        self
    }
}

impl Property for OutputMatches {
    fn name(&self) -> &str {
        &self.name
    }

    fn judge(&self, case: &TestCase, run: &Run) -> Result<Verdict> {
        check_domain(&self.name, self.domain.as_ref(), case)?;
        let out = final_observation(&self.name, run)?;
        let want = (self.expected)(&case.payload);
        Ok(Verdict::from_bool(out == &want, || {
            format!("observed {out}, expected {want}")
        }))
    }
}

type JudgeFn = dyn Fn(&TestCase, &Run) -> Result<Verdict> + Send + Sync;

/// A property given directly as a closure.
#[derive(Clone)]
pub struct FnProperty {
    name: String,
    f: Arc<JudgeFn>,
}

impl FnProperty {
    pub fn new(
        name: impl Into<String>,
        f: impl Fn(&TestCase, &Run) -> Result<Verdict> + Send + Sync + 'static,
    ) -> Self {
        FnProperty {
            name: name.into(),
            f: Arc::new(f),
        }
    }

    /// Judges the final observation with a Boolean predicate.
    pub fn on_output(
        name: impl Into<String>,
        ok: impl Fn(&Value, &Value) -> bool + Send + Sync + 'static,
    ) -> Self {
        let name = name.into();
        let inner = name.clone();
        FnProperty::new(name, move |case, run| {
            let out = final_observation(&inner, run)?;
            Ok(Verdict::from_bool(ok(&case.payload, out), || {
                format!("{} rejected by `{inner}` on {}", out, case.payload)
            }))
        })
    }
}

impl Property for FnProperty {
    fn name(&self) -> &str {
        &self.name
    }

    fn judge(&self, case: &TestCase, run: &Run) -> Result<Verdict> {
        (self.f)(case, run)
    }
}

/// Verdicts recorded ahead of time, e.g. by human judges, keyed by
/// (payload, final observation). Unrecorded pairs are inconclusive.
#[derive(Clone, Debug, Default)]
pub struct RecordedVerdicts {
    name: String,
    records: BTreeMap<(Value, Value), Outcome>,
}

impl RecordedVerdicts {
    pub fn new(name: impl Into<String>) -> Self {
        RecordedVerdicts {
            name: name.into(),
            records: BTreeMap::new(),
        }
    }

    pub fn record(mut self, payload: Value, observation: Value, outcome: Outcome) -> Self {
        self.records.insert((payload, observation), outcome);
        self
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Parses `input<TAB>output<TAB>verdict` lines, where verdict is one of
    /// `pass`, `fail`, `inconclusive`. Fields follow the table grammar.
    pub fn parse(name: impl Into<String>, text: &str, shape: FieldShape) -> Result<Self> {
        let mut rec = RecordedVerdicts::new(name);
        for (n, raw) in text.lines().enumerate() {
            let line = n + 1;
            let body = raw.trim_end_matches('\r');
            if body.trim().is_empty() || body.trim_start().starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = body.split('\t').collect();
            if fields.len() != 3 {
                return Err(Error::MalformedTable {
                    line,
                    reason: format!("expected 3 tab-separated fields, found {}", fields.len()),
                });
            }
            let outcome = match fields[2].trim() {
                "pass" => Outcome::Pass,
                "fail" => Outcome::Fail,
                "inconclusive" => Outcome::Inconclusive,
                other => {
                    return Err(Error::MalformedTable {
                        line,
                        reason: format!("unknown verdict `{other}`"),
                    })
                }
            };
            let input = parse_field(fields[0], shape, line)?;
            let output = parse_field(fields[1], shape, line)?;
            rec.records.insert((input, output), outcome);
        }
        Ok(rec)
    }
}

impl Property for RecordedVerdicts {
    fn name(&self) -> &str {
        &self.name
    }

    fn oracle_kind(&self) -> OracleKind {
        OracleKind::RecordedHumanVerdicts
    }

    fn judge(&self, case: &TestCase, run: &Run) -> Result<Verdict> {
        let out = final_observation(&self.name, run)?;
        Ok(
            match self.records.get(&(case.payload.clone(), out.clone())) {
                Some(Outcome::Pass) => Verdict::pass(),
                Some(Outcome::Fail) => Verdict::fail(format!("recorded fail for {out}")),
                Some(Outcome::Inconclusive) => Verdict::inconclusive("recorded inconclusive"),
                None => Verdict::inconclusive(format!(
                    "no recorded verdict for ({}, {out})",
                    case.payload
                )),
            },
        )
    }
}
