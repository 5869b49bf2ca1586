//! Plain-text lookup tables.
//!
//! One entry per line: `input<TAB>output`. Each field is a list of
//! space-separated tokens; a token that parses as a signed 64-bit integer is
//! an integer, anything else a symbol. Blank lines and lines starting with
//! `#` are skipped. In [`FieldShape::Auto`] a single token is a scalar and
//! several tokens a list; in [`FieldShape::Sequence`] every field is a list.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::value::{DomainDescriptor, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FieldShape {
    Auto,
    Sequence,
}

fn parse_token(tok: &str) -> Value {
    tok.parse::<i64>()
        .map(Value::Int)
        .unwrap_or_else(|_| Value::sym(tok))
}

pub fn parse_field(field: &str, shape: FieldShape, line: usize) -> Result<Value> {
    let tokens: Vec<Value> = field.split_whitespace().map(parse_token).collect();
    if tokens.is_empty() {
        return Err(Error::MalformedTable {
            line,
            reason: "empty field".into(),
        });
    }
    Ok(match shape {
        FieldShape::Auto if tokens.len() == 1 => tokens.into_iter().next().unwrap(),
        _ => Value::List(tokens),
    })
}

/// Renders a scalar or flat list back into the field grammar.
pub fn render_field(v: &Value) -> Option<String> {
    fn scalar(v: &Value) -> Option<String> {
        match v {
            Value::Int(i) => Some(i.to_string()),
            Value::Sym(s) if !s.is_empty() && !s.contains(char::is_whitespace) => Some(s.clone()),
            _ => None,
        }
    }
    match v {
        Value::List(items) if !items.is_empty() => {
            let parts: Option<Vec<String>> = items.iter().map(scalar).collect();
            parts.map(|p| p.join(" "))
        }
        other => scalar(other),
    }
}

fn parse_pairs(text: &str, shape: FieldShape) -> Result<Vec<(usize, Value, Value)>> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let body = raw.trim_end_matches('\r');
        if body.trim().is_empty() || body.trim_start().starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = body.split('\t').collect();
        if fields.len() != 2 {
            return Err(Error::MalformedTable {
                line,
                reason: format!("expected 2 tab-separated fields, found {}", fields.len()),
            });
        }
        out.push((
            line,
            parse_field(fields[0], shape, line)?,
            parse_field(fields[1], shape, line)?,
        ));
    }
    Ok(out)
}

fn insert_unique(
    map: &mut BTreeMap<Value, Value>,
    line: usize,
    input: Value,
    output: Value,
) -> Result<()> {
    match map.get(&input) {
        Some(prev) if prev != &output => Err(Error::MalformedTable {
            line,
            reason: format!("input {input} maps to both {prev} and {output}"),
        }),
        _ => {
            map.insert(input, output);
            Ok(())
        }
    }
}

fn render_rows(rows: &BTreeMap<Value, Value>) -> Option<String> {
    let mut s = String::new();
    for (k, v) in rows {
        let _ = writeln!(s, "{}\t{}", render_field(k)?, render_field(v)?);
    }
    Some(s)
}

/// A total function over a finite input domain, stored explicitly.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FunctionTable {
    entries: BTreeMap<Value, Value>,
}

impl FunctionTable {
    pub fn new(entries: BTreeMap<Value, Value>) -> Self {
        FunctionTable { entries }
    }

    pub fn from_fn<'a>(
        domain: impl IntoIterator<Item = &'a Value>,
        f: impl Fn(&Value) -> Value,
    ) -> Self {
        FunctionTable {
            entries: domain.into_iter().map(|x| (x.clone(), f(x))).collect(),
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (line, i, o) in parse_pairs(text, FieldShape::Auto)? {
            insert_unique(&mut entries, line, i, o)?;
        }
        Ok(FunctionTable { entries })
    }

    /// The table in the text grammar, or `None` if some value is nested.
    pub fn to_text(&self) -> Option<String> {
        render_rows(&self.entries)
    }

    pub fn get(&self, input: &Value) -> Option<&Value> {
        self.entries.get(input)
    }

    pub fn entries(&self) -> &BTreeMap<Value, Value> {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn inputs(&self) -> DomainDescriptor {
        DomainDescriptor::finite(self.entries.keys().cloned())
    }

    pub fn outputs(&self) -> DomainDescriptor {
        let mut vals: Vec<Value> = self.entries.values().cloned().collect();
        vals.sort();
        DomainDescriptor::finite(vals)
    }
}

/// A finite question → answer correspondence with a question length bound.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DialogueTable {
    pairs: BTreeMap<Value, Value>,
    max_length: usize,
}

impl DialogueTable {
    pub fn new(max_length: usize) -> Result<Self> {
        if max_length == 0 {
            return Err(Error::InvalidBound(
                "question length bound must be at least 1".into(),
            ));
        }
        Ok(DialogueTable {
            pairs: BTreeMap::new(),
            max_length,
        })
    }

    pub fn insert(&mut self, question: Vec<Value>, answer: Vec<Value>) -> Result<()> {
        if question.is_empty() || question.len() > self.max_length {
            return Err(Error::InvalidBound(format!(
                "question of length {} outside 1..={}",
                question.len(),
                self.max_length
            )));
        }
        if answer.is_empty() {
            return Err(Error::InvalidBound("answers must be non-empty".into()));
        }
        self.pairs.insert(Value::List(question), Value::List(answer));
        Ok(())
    }

    pub fn parse(text: &str, max_length: usize) -> Result<Self> {
        let mut table = DialogueTable::new(max_length)?;
        for (line, q, a) in parse_pairs(text, FieldShape::Sequence)? {
            if q.symbol_count() > max_length {
                return Err(Error::MalformedTable {
                    line,
                    reason: format!("question longer than {max_length} tokens"),
                });
            }
            insert_unique(&mut table.pairs, line, q, a)?;
        }
        Ok(table)
    }

    pub fn to_text(&self) -> Option<String> {
        render_rows(&self.pairs)
    }

    pub fn answer(&self, question: &Value) -> Option<&Value> {
        self.pairs.get(question)
    }

    pub fn max_length(&self) -> usize {
        self.max_length
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}
