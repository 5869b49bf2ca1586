//! Payload and observation values, and the domains they are drawn from.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::Rng;

/// Largest enumeration produced without an explicit override.
pub const DEFAULT_ENUMERATION_LIMIT: usize = 1_000_000;

/// A dynamically typed value: test payloads, stimuli, responses and
/// observations are all values.
///
/// Serialized untagged, so `7`, `"a"`, `[0, 1]` and `{"k": 1}` are the JSON
/// forms of the four variants.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Int(i64),
    Sym(String),
    List(Vec<Value>),
    Record(BTreeMap<String, Value>),
}

impl Value {
    pub fn sym(s: impl Into<String>) -> Self {
        Value::Sym(s.into())
    }

    pub fn ints<I: IntoIterator<Item = i64>>(items: I) -> Self {
        Value::List(items.into_iter().map(Value::Int).collect())
    }

    pub fn syms<I, S>(items: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Value::List(items.into_iter().map(|s| Value::Sym(s.into())).collect())
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(i) => Some(*i),
            _ => None,
        }
    }

    pub fn as_sym(&self) -> Option<&str> {
        match self {
            Value::Sym(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_list(&self) -> Option<&[Value]> {
        match self {
            Value::List(items) => Some(items),
            _ => None,
        }
    }

    pub fn as_record(&self) -> Option<&BTreeMap<String, Value>> {
        match self {
            Value::Record(fields) => Some(fields),
            _ => None,
        }
    }

    pub fn field(&self, name: &str) -> Option<&Value> {
        self.as_record().and_then(|r| r.get(name))
    }

    /// Number of input symbols carried by this value: the element count of a
    /// list, 1 for anything else.
    pub fn symbol_count(&self) -> usize {
        match self {
            Value::List(items) => items.len(),
            _ => 1,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(i) => write!(f, "{i}"),
            Value::Sym(s) => write!(f, "{s}"),
            Value::List(items) => {
                f.write_str("(")?;
                for (i, v) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    write!(f, "{v}")?;
                }
                f.write_str(")")
            }
            Value::Record(fields) => {
                f.write_str("{")?;
                for (i, (k, v)) in fields.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    write!(f, "{k}={v}")?;
                }
                f.write_str("}")
            }
        }
    }
}

impl From<i64> for Value {
    fn from(i: i64) -> Self {
        Value::Int(i)
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::Sym(s.to_string())
    }
}

/// An ordered, duplicate-free value set with a lookup index.
#[derive(Clone, Debug)]
pub struct FiniteValues {
    ordered: Vec<Value>,
    index: BTreeSet<Value>,
}

impl FiniteValues {
    pub fn new(values: impl IntoIterator<Item = Value>) -> Self {
        let mut ordered = Vec::new();
        let mut index = BTreeSet::new();
        for v in values {
            if index.insert(v.clone()) {
                ordered.push(v);
            }
        }
        FiniteValues { ordered, index }
    }

    pub fn as_slice(&self) -> &[Value] {
        &self.ordered
    }

    pub fn contains(&self, v: &Value) -> bool {
        self.index.contains(v)
    }

    pub fn len(&self) -> usize {
        self.ordered.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ordered.is_empty()
    }
}

impl PartialEq for FiniteValues {
    fn eq(&self, other: &Self) -> bool {
        self.ordered == other.ordered
    }
}

impl From<Vec<Value>> for FiniteValues {
    fn from(v: Vec<Value>) -> Self {
        FiniteValues::new(v)
    }
}

impl From<FiniteValues> for Vec<Value> {
    fn from(v: FiniteValues) -> Self {
        v.ordered
    }
}

impl Serialize for FiniteValues {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.ordered.serialize(s)
    }
}

impl<'de> Deserialize<'de> for FiniteValues {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        Vec::<Value>::deserialize(d).map(FiniteValues::new)
    }
}

/// The declared input or output domain of a context.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DomainDescriptor {
    /// An explicit, totally enumerated value set.
    FiniteEnumerable { values: FiniteValues },
    /// Non-empty lists of alphabet symbols, optionally bounded in length.
    SequenceOverAlphabet {
        alphabet: FiniteValues,
        max_length: Option<usize>,
    },
    /// Records whose integer leaves, under the named fields, lie in the
    /// given inclusive ranges. Further structure is checked by the context.
    StructuredScenario {
        tag: String,
        ranges: BTreeMap<String, (i64, i64)>,
    },
}

impl DomainDescriptor {
    pub fn finite(values: impl IntoIterator<Item = Value>) -> Self {
        DomainDescriptor::FiniteEnumerable {
            values: FiniteValues::new(values),
        }
    }

    /// Integers `lo..=hi`.
    pub fn int_range(lo: i64, hi: i64) -> Self {
        Self::finite((lo..=hi).map(Value::Int))
    }

    /// All `width`-tuples over `{0, 1}` in lexicographic order.
    pub fn bit_tuples(width: u32) -> Self {
        Self::finite((0..(1i64 << width)).map(|n| {
            Value::ints((0..width).rev().map(move |bit| (n >> bit) & 1))
        }))
    }

    pub fn sequence(alphabet: Vec<Value>, max_length: Option<usize>) -> Result<Self> {
        if max_length == Some(0) {
            return Err(Error::InvalidBound("max_length must be at least 1".into()));
        }
        Ok(DomainDescriptor::SequenceOverAlphabet {
            alphabet: FiniteValues::new(alphabet),
            max_length,
        })
    }

    pub fn structured(tag: impl Into<String>) -> Self {
        DomainDescriptor::StructuredScenario {
            tag: tag.into(),
            ranges: BTreeMap::new(),
        }
    }

    pub fn with_range(mut self, field: impl Into<String>, lo: i64, hi: i64) -> Self {
        if let DomainDescriptor::StructuredScenario { ranges, .. } = &mut self {
            ranges.insert(field.into(), (lo, hi));
        }
        self
    }

    pub fn contains(&self, v: &Value) -> bool {
        match self {
            DomainDescriptor::FiniteEnumerable { values } => values.contains(v),
            DomainDescriptor::SequenceOverAlphabet {
                alphabet,
                max_length,
            } => match v {
                Value::List(items) => {
                    !items.is_empty()
                        && max_length.is_none_or(|m| items.len() <= m)
                        && items.iter().all(|s| alphabet.contains(s))
                }
                _ => false,
            },
            DomainDescriptor::StructuredScenario { ranges, .. } => {
                matches!(v, Value::Record(_)) && within_ranges(v, None, ranges)
            }
        }
    }

    /// Whether [`enumerate`](Self::enumerate) can succeed for some limit.
    pub fn is_enumerable(&self) -> bool {
        match self {
            DomainDescriptor::FiniteEnumerable { .. } => true,
            DomainDescriptor::SequenceOverAlphabet { max_length, .. } => max_length.is_some(),
            DomainDescriptor::StructuredScenario { .. } => false,
        }
    }

    /// Number of values in an enumerable domain, saturating at `u128::MAX`.
    pub fn size(&self) -> Option<u128> {
        match self {
            DomainDescriptor::FiniteEnumerable { values } => Some(values.len() as u128),
            DomainDescriptor::SequenceOverAlphabet {
                alphabet,
                max_length: Some(max),
            } => Some(sequence_space(alphabet.len(), *max)),
            _ => None,
        }
    }

    /// Every value of the domain, in its canonical order: declaration order
    /// for finite sets, length-lexicographic order for bounded sequences.
    pub fn enumerate(&self, limit: usize) -> Result<Vec<Value>> {
        match self {
            DomainDescriptor::FiniteEnumerable { values } => {
                if values.len() > limit {
                    return Err(Error::ExplosionGuard {
                        size: values.len() as u128,
                        limit,
                    });
                }
                Ok(values.as_slice().to_vec())
            }
            DomainDescriptor::SequenceOverAlphabet {
                alphabet,
                max_length: Some(max),
            } => {
                let size = sequence_space(alphabet.len(), *max);
                if size > limit as u128 {
                    return Err(Error::ExplosionGuard { size, limit });
                }
                Ok(enumerate_sequences(alphabet.as_slice(), *max))
            }
            _ => Err(Error::InfiniteDomain),
        }
    }
}

fn within_ranges(v: &Value, field: Option<&str>, ranges: &BTreeMap<String, (i64, i64)>) -> bool {
    match v {
        Value::Int(i) => field
            .and_then(|f| ranges.get(f))
            .is_none_or(|&(lo, hi)| (lo..=hi).contains(i)),
        Value::Sym(_) => true,
        Value::List(items) => items.iter().all(|x| within_ranges(x, field, ranges)),
        Value::Record(fields) => fields
            .iter()
            .all(|(k, x)| within_ranges(x, Some(k.as_str()), ranges)),
    }
}

/// `Σ_{ℓ=1}^{max} k^ℓ`, saturating.
pub fn sequence_space(k: usize, max: usize) -> u128 {
    let k = k as u128;
    let mut total: u128 = 0;
    let mut layer: u128 = 1;
    for _ in 0..max {
        layer = layer.saturating_mul(k);
        total = total.saturating_add(layer);
    }
    total
}

fn enumerate_sequences(alphabet: &[Value], max: usize) -> Vec<Value> {
    let mut out = Vec::new();
    if alphabet.is_empty() {
        return out;
    }
    for len in 1..=max {
        let mut digits = vec![0usize; len];
        'odometer: loop {
            out.push(Value::List(
                digits.iter().map(|&d| alphabet[d].clone()).collect(),
            ));
            // last position turns fastest
            for pos in (0..len).rev() {
                digits[pos] += 1;
                if digits[pos] < alphabet.len() {
                    continue 'odometer;
                }
                digits[pos] = 0;
            }
            break;
        }
    }
    out
}

/// Something test payloads can be drawn from.
pub trait ValueSource: Sync {
    fn draw(&self, rng: &mut Rng) -> Result<Value>;

    /// The full value set, when it is finite and within `limit`.
    fn enumerate(&self, _limit: usize) -> Result<Vec<Value>> {
        Err(Error::InfiniteDomain)
    }
}

impl ValueSource for DomainDescriptor {
    fn draw(&self, rng: &mut Rng) -> Result<Value> {
        match self {
            DomainDescriptor::FiniteEnumerable { values } => {
                if values.is_empty() {
                    return Err(Error::Unsampleable("empty value set".into()));
                }
                Ok(values.as_slice()[rng.random_range(0..values.len())].clone())
            }
            DomainDescriptor::SequenceOverAlphabet {
                alphabet,
                max_length: Some(max),
            } => {
                if alphabet.is_empty() {
                    return Err(Error::Unsampleable("empty alphabet".into()));
                }
                let k = alphabet.len();
                let len = draw_sequence_length(k, *max, rng);
                Ok(Value::List(
                    (0..len)
                        .map(|_| alphabet.as_slice()[rng.random_range(0..k)].clone())
                        .collect(),
                ))
            }
            DomainDescriptor::SequenceOverAlphabet {
                max_length: None, ..
            } => Err(Error::Unsampleable(
                "sequence domain without a length bound".into(),
            )),
            DomainDescriptor::StructuredScenario { tag, .. } => Err(Error::Unsampleable(format!(
                "structured domain `{tag}` needs a dedicated sampler"
            ))),
        }
    }

    fn enumerate(&self, limit: usize) -> Result<Vec<Value>> {
        DomainDescriptor::enumerate(self, limit)
    }
}

/// Draws a length so that every sequence of length `1..=max` is equally
/// likely overall.
fn draw_sequence_length(k: usize, max: usize, rng: &mut Rng) -> usize {
    let total = sequence_space(k, max);
    if total <= u64::MAX as u128 {
        let mut idx = rng.random_range(0..total as u64) as u128;
        let mut layer: u128 = 1;
        for len in 1..=max {
            layer *= k as u128;
            if idx < layer {
                return len;
            }
            idx -= layer;
        }
        max
    } else {
        // the space is astronomically large; weight layers in floating point
        let weights: Vec<f64> = (1..=max).map(|l| (k as f64).powi(l as i32)).collect();
        let sum: f64 = weights.iter().sum();
        let mut x = rng.random::<f64>() * sum;
        for (i, w) in weights.iter().enumerate() {
            if x < *w {
                return i + 1;
            }
            x -= w;
        }
        max
    }
}
