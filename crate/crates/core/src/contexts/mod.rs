//! Built-in single-system contexts: finite memoryless functions and finite
//! question/answer dialogues, plus exhaustive tabulation of a system.

mod dialogue;
mod function;
pub mod tables;

pub use dialogue::{make_dialogue_context, DialogueContext, DialogueSystem, NO_ANSWER};
pub use function::{make_function_context, tabulate_system, FunctionContext, TableSystem};
pub use tables::{DialogueTable, FieldShape, FunctionTable};
