use std::sync::Arc;

use crate::contexts::tables::DialogueTable;
use crate::error::{Error, Result};
use crate::experiment::{Context, Run, Session, Signature, SystemRef, SystemUnderTest, TestCase};
use crate::value::{DomainDescriptor, Value};

/// Reserved token answered to questions a table does not know.
pub const NO_ANSWER: &str = "<no-answer>";

/// Question/answer context: the test case is one question (a token
/// sequence of length at most `L`) and the run is one answer.
#[derive(Clone, Debug)]
pub struct DialogueContext {
    name: String,
    signature: Signature,
    max_length: usize,
}

impl DialogueContext {
    pub fn new(question_alphabet: Vec<Value>, max_length: usize) -> Result<Self> {
        if max_length == 0 {
            return Err(Error::InvalidBound(
                "question length bound must be at least 1".into(),
            ));
        }
        let mut answer_alphabet = question_alphabet.clone();
        answer_alphabet.push(Value::sym(NO_ANSWER));
        Ok(DialogueContext {
            name: format!("dialogue(L={max_length})"),
            signature: Signature::new(
                DomainDescriptor::sequence(question_alphabet, Some(max_length))?,
                DomainDescriptor::sequence(answer_alphabet, None)?,
            ),
            max_length,
        })
    }

    pub fn max_length(&self) -> usize {
        self.max_length
    }

    /// The observation produced for an unknown question.
    pub fn no_answer() -> Value {
        Value::syms([NO_ANSWER])
    }
}

pub fn make_dialogue_context(question_alphabet: Vec<Value>, max_length: usize) -> Result<DialogueContext> {
    DialogueContext::new(question_alphabet, max_length)
}

impl Context for DialogueContext {
    fn name(&self) -> &str {
        &self.name
    }

    fn arity(&self) -> usize {
        1
    }

    fn input_domain(&self) -> &DomainDescriptor {
        &self.signature.stimulus
    }

    fn output_domain(&self) -> &DomainDescriptor {
        &self.signature.response
    }

    fn memoryless(&self) -> bool {
        true
    }

    fn signature(&self) -> &Signature {
        &self.signature
    }

    fn apply(&self, systems: &[SystemRef], case: &TestCase, seed: u64) -> Result<Run> {
        let mut session = systems[0].reset(seed);
        Ok(Run::single(session.react(&case.payload), seed))
    }
}

/// A system answering from a stored [`DialogueTable`].
#[derive(Clone, Debug)]
pub struct DialogueSystem {
    name: String,
    signature: Signature,
    table: Arc<DialogueTable>,
}

impl DialogueSystem {
    pub fn new(name: impl Into<String>, table: DialogueTable, context: &DialogueContext) -> Result<Self> {
        let name = name.into();
        if table.max_length() > context.max_length() {
            return Err(Error::InvalidBound(format!(
                "table `{name}` allows questions up to {} tokens, context only {}",
                table.max_length(),
                context.max_length()
            )));
        }
        Ok(DialogueSystem {
            name,
            signature: context.signature().clone(),
            table: Arc::new(table),
        })
    }

    pub fn into_ref(self) -> SystemRef {
        Arc::new(self)
    }
}

struct DialogueSession<'a>(&'a DialogueTable);

impl Session for DialogueSession<'_> {
    fn react(&mut self, stimulus: &Value) -> Value {
        self.0
            .answer(stimulus)
            .cloned()
            .unwrap_or_else(DialogueContext::no_answer)
    }
}

impl SystemUnderTest for DialogueSystem {
    fn name(&self) -> &str {
        &self.name
    }

    fn signature(&self) -> &Signature {
        &self.signature
    }

    fn reset(&self, _seed: u64) -> Box<dyn Session + '_> {
        Box::new(DialogueSession(&self.table))
    }
}
