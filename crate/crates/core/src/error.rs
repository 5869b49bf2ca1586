use thiserror::Error;

/// Errors raised by experiments, generators, partitions and metrics.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("arity mismatch: context `{context}` embeds {expected} system(s), got {got}")]
    ArityMismatch {
        context: String,
        expected: usize,
        got: usize,
    },

    #[error("system `{system}` cannot be embedded in context `{context}`: alphabets differ")]
    AlphabetMismatch { system: String, context: String },

    #[error("domain violation: {0}")]
    DomainViolation(String),

    #[error("duplicate test case id `{0}`")]
    DuplicateId(String),

    #[error("domain is not finite-enumerable")]
    InfiniteDomain,

    #[error("enumeration of {size} cases exceeds the limit of {limit}")]
    ExplosionGuard { size: u128, limit: usize },

    #[error("domain cannot be sampled: {0}")]
    Unsampleable(String),

    #[error("count must be at least {min}, got {got}")]
    InvalidCount { min: usize, got: usize },

    #[error("no member of class `{0}` could be produced")]
    EmptyClass(String),

    #[error("test case `{id}` cannot be classified by `{classifier}`")]
    UnclassifiableCase { id: String, classifier: String },

    #[error("classifier `{0}` declares no universe")]
    MissingUniverse(String),

    #[error("class weight for `{key}` must be positive, got {weight}")]
    InvalidWeight { key: String, weight: f64 },

    #[error(
        "efficiency `{eff}` distinguishes `{first}` ({first_eff}) from `{second}` ({second_eff}) inside class `{class_key}`"
    )]
    InconsistentEff {
        eff: String,
        class_key: String,
        first: String,
        second: String,
        first_eff: f64,
        second_eff: f64,
    },

    #[error("efficiency `{eff}` returned {value}, outside [0, 1]")]
    EffOutOfRange { eff: String, value: f64 },

    #[error("confidence level must lie in (0, 1), got {0}")]
    InvalidConfidence(f64),

    #[error("audit needs at least one trial")]
    InvalidTrials,

    #[error("series is not sorted by strictly increasing efficiency at entry {0}")]
    UnsortedSeries(usize),

    #[error("sampler could not produce equally efficient test sets: {0}")]
    SamplerCannotEqualize(String),

    #[error("invalid bound: {0}")]
    InvalidBound(String),

    #[error("malformed table: line {line}: {reason}")]
    MalformedTable { line: usize, reason: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
