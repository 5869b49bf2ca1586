use std::sync::Arc;

use crate::contexts::tables::FunctionTable;
use crate::error::{Error, Result};
use crate::experiment::{
    check_embedding, run_experiment, Context, Run, Session, Signature, SystemRef, SystemUnderTest,
    TestCase,
};
use crate::value::{DomainDescriptor, Value, DEFAULT_ENUMERATION_LIMIT};

/// A memoryless context over a finite input domain: the payload is fed as a
/// single stimulus and the response is observed at tick 0.
#[derive(Clone, Debug)]
pub struct FunctionContext {
    name: String,
    signature: Signature,
}

impl FunctionContext {
    pub fn new(
        name: impl Into<String>,
        domain: DomainDescriptor,
        codomain: DomainDescriptor,
    ) -> Result<Self> {
        if !domain.is_enumerable() {
            return Err(Error::InfiniteDomain);
        }
        Ok(FunctionContext {
            name: name.into(),
            signature: Signature::new(domain, codomain),
        })
    }
}

pub fn make_function_context(
    domain: DomainDescriptor,
    codomain: DomainDescriptor,
) -> Result<FunctionContext> {
    FunctionContext::new("function", domain, codomain)
}

impl Context for FunctionContext {
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

/// A pure lookup-table system.
#[derive(Clone, Debug)]
pub struct TableSystem {
    name: String,
    signature: Signature,
    table: Arc<FunctionTable>,
    missing: Value,
}

impl TableSystem {
    /// Wraps a table that must be total over an enumerable stimulus domain
    /// and map into the response domain.
    pub fn new(name: impl Into<String>, table: FunctionTable, signature: Signature) -> Result<Self> {
        let name = name.into();
        if signature.stimulus.is_enumerable() {
            for x in signature.stimulus.enumerate(DEFAULT_ENUMERATION_LIMIT)? {
                if table.get(&x).is_none() {
                    return Err(Error::DomainViolation(format!(
                        "table `{name}` has no entry for {x}"
                    )));
                }
            }
        }
        if let Some((k, v)) = table
            .entries()
            .iter()
            .find(|(_, v)| !signature.response.contains(v))
        {
            return Err(Error::DomainViolation(format!(
                "table `{name}` maps {k} to {v}, outside the response alphabet"
            )));
        }
        Ok(TableSystem {
            name,
            signature,
            table: Arc::new(table),
            missing: Value::sym(super::NO_ANSWER),
        })
    }

    /// Tabulates `f` over the stimulus domain.
    pub fn from_fn(
        name: impl Into<String>,
        signature: Signature,
        f: impl Fn(&Value) -> Value,
    ) -> Result<Self> {
        let inputs = signature.stimulus.enumerate(DEFAULT_ENUMERATION_LIMIT)?;
        let table = FunctionTable::from_fn(&inputs, f);
        TableSystem::new(name, table, signature)
    }

    pub fn table(&self) -> &FunctionTable {
        &self.table
    }

    pub fn into_ref(self) -> SystemRef {
        Arc::new(self)
    }
}

struct TableSession<'a> {
    system: &'a TableSystem,
}

impl Session for TableSession<'_> {
    fn react(&mut self, stimulus: &Value) -> Value {
        self.system
            .table
            .get(stimulus)
            .cloned()
            .unwrap_or_else(|| self.system.missing.clone())
    }
}

impl SystemUnderTest for TableSystem {
    fn name(&self) -> &str {
        &self.name
    }

    fn signature(&self) -> &Signature {
        &self.signature
    }

    fn reset(&self, _seed: u64) -> Box<dyn Session + '_> {
        Box::new(TableSession { system: self })
    }
}

/// Runs `reference` on every input of a finite memoryless context and
/// returns the resulting lookup table as a system of its own.
pub fn tabulate_system(context: &dyn Context, reference: &SystemRef) -> Result<TableSystem> {
    check_embedding(context, std::slice::from_ref(reference))?;
    if !context.memoryless() {
        return Err(Error::DomainViolation(format!(
            "context `{}` is not memoryless; its runs cannot be tabulated",
            context.name()
        )));
    }
    let inputs = context.input_domain().enumerate(DEFAULT_ENUMERATION_LIMIT)?;
    let mut table = std::collections::BTreeMap::new();
    for x in inputs {
        let case = TestCase::new("tabulate", x.clone());
        let run = run_experiment(context, std::slice::from_ref(reference), &case, 0)?;
        let out = run.last_observation().cloned().ok_or_else(|| {
            Error::DomainViolation(format!("empty run while tabulating at {x}"))
        })?;
        table.insert(x, out);
    }
    TableSystem::new(
        format!("tabulated({})", reference.name()),
        FunctionTable::new(table),
        reference.signature().clone(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::FnSystem;
    use crate::properties::OutputMatches;
    use crate::replacement::{enumerate_domain, equivalent};

    fn xor(v: &Value) -> Value {
        let l = v.as_list().unwrap();
        Value::Int(l[0].as_int().unwrap() ^ l[1].as_int().unwrap())
    }

    fn xor_context() -> FunctionContext {
        make_function_context(
            DomainDescriptor::bit_tuples(2),
            DomainDescriptor::int_range(0, 1),
        )
        .unwrap()
    }

    #[test]
    fn xor_table_observes_one_on_zero_one() {
        let ctx = xor_context();
        let sys = TableSystem::from_fn("xor", ctx.signature().clone(), xor)
            .unwrap()
            .into_ref();
        let run = run_experiment(&ctx, &[sys], &TestCase::new("t", Value::ints([0, 1])), 0).unwrap();
        assert_eq!(run.last_observation(), Some(&Value::Int(1)));
        assert!(ctx.memoryless());
        assert_eq!(ctx.arity(), 1);
    }

    #[test]
    fn distinct_correct_tables_are_conclusively_equivalent() {
        let ctx = xor_context();
        let a = TableSystem::from_fn("xor-a", ctx.signature().clone(), xor)
            .unwrap()
            .into_ref();
        // same function, built by a different route
        let b = FnSystem::new("xor-b", ctx.signature().clone(), |v| {
            let l = v.as_list().unwrap();
            Value::Int(i64::from(l[0] != l[1]))
        })
        .into_ref();
        let prop = OutputMatches::new("output = xor", xor);
        let set = enumerate_domain(&ctx).unwrap();
        let rep = equivalent(&ctx, &[a], &[b], &prop, &set, 3).unwrap();
        assert!(rep.equivalent);
        assert!(rep.conclusive);
    }

    #[test]
    fn infinite_domain_rejected() {
        let d = DomainDescriptor::sequence(vec![0.into()], None).unwrap();
        assert!(matches!(
            make_function_context(d, DomainDescriptor::int_range(0, 1)),
            Err(Error::InfiniteDomain)
        ));
    }

    #[test]
    fn partial_table_rejected() {
        let ctx = xor_context();
        let t = FunctionTable::parse("0 0\t0\n").unwrap();
        assert!(TableSystem::new("p", t, ctx.signature().clone()).is_err());
    }

    #[test]
    fn tabulating_xor_gives_four_entries_and_is_a_fixpoint() {
        let ctx = xor_context();
        let reference = FnSystem::new("xor", ctx.signature().clone(), xor).into_ref();
        let once = tabulate_system(&ctx, &reference).unwrap();
        assert_eq!(once.table().len(), 4);
        let again = tabulate_system(&ctx, &reference).unwrap();
        assert_eq!(once.table(), again.table());
        let twice = tabulate_system(&ctx, &once.clone().into_ref()).unwrap();
        assert_eq!(twice.table(), once.table());

        let prop = OutputMatches::new("output = xor", xor);
        let set = enumerate_domain(&ctx).unwrap();
        let rep = equivalent(&ctx, &[reference], &[once.into_ref()], &prop, &set, 0).unwrap();
        assert!(rep.equivalent && rep.conclusive);
        assert!(rep.distinguishing_cases.is_empty());
    }
}
