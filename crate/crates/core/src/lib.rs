//! Black-box replacement testing.
//!
//! Systems are embedded in a [`Context`](experiment::Context), exercised by
//! test cases and judged by a [`Property`](experiment::Property). On top of
//! single runs sit replacement and equivalence checks, class-based
//! partitions of the test space, efficiency and score metrics with audits,
//! and test case generators.

pub mod contexts;
pub mod error;
pub mod experiment;
pub mod generators;
pub mod metrics;
pub mod partition;
pub mod properties;
pub mod replacement;
pub mod seed;
pub mod value;

pub use error::{Error, Result};
pub use experiment::{
    evaluate, judge, run_experiment, Context, Evaluation, FnSystem, OracleKind, Outcome, Property,
    Run, Session, Signature, Step, SystemRef, SystemUnderTest, TestCase, TestSet, Verdict,
};
pub use partition::EquivalenceClassifier;
pub use replacement::{can_replace, enumerate_domain, equivalent};
pub use value::{DomainDescriptor, Value, ValueSource};
