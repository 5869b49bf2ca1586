#![allow(dead_code)]

use proptest::prelude::*;
use standin::contexts::{make_function_context, FunctionContext, TableSystem};
use standin::properties::FnProperty;
use standin::{Context, SystemRef, Value};
use standin::value::DomainDescriptor;

/// Random finite functions `0..n → 0..m` plus a random success set over
/// input/output pairs.
#[derive(Clone, Debug)]
pub struct Instance {
    pub n: usize,
    pub m: usize,
    pub tables: Vec<Vec<i64>>,
    pub success: Vec<bool>,
}

impl Instance {
    pub fn context(&self) -> FunctionContext {
        make_function_context(
            DomainDescriptor::int_range(0, self.n as i64 - 1),
            DomainDescriptor::int_range(0, self.m as i64 - 1),
        )
        .unwrap()
    }

    pub fn system(&self, ctx: &FunctionContext, k: usize) -> SystemRef {
        let table = self.tables[k].clone();
        TableSystem::from_fn(format!("t{k}"), ctx.signature().clone(), move |x| {
            Value::Int(table[x.as_int().unwrap() as usize])
        })
        .unwrap()
        .into_ref()
    }

    pub fn property(&self) -> FnProperty {
        let success = self.success.clone();
        let m = self.m;
        FnProperty::on_output("in success set", move |x, y| {
            success[x.as_int().unwrap() as usize * m + y.as_int().unwrap() as usize]
        })
    }

    pub fn passes(&self, k: usize, x: usize) -> bool {
        self.success[x * self.m + self.tables[k][x] as usize]
    }

    /// Direct check that table `a` passes wherever table `b` does.
    pub fn brute_replaces(&self, a: usize, b: usize) -> bool {
        (0..self.n).all(|x| !self.passes(b, x) || self.passes(a, x))
    }

    pub fn brute_equivalent(&self, a: usize, b: usize) -> bool {
        (0..self.n).all(|x| self.passes(a, x) == self.passes(b, x))
    }
}

pub fn instances(tables: usize) -> impl Strategy<Value = Instance> {
    (1..=16usize, 1..=4usize).prop_flat_map(move |(n, m)| {
        (
            prop::collection::vec(prop::collection::vec(0..m as i64, n), tables),
            prop::collection::vec(any::<bool>(), n * m),
        )
            .prop_map(move |(tables, success)| Instance {
                n,
                m,
                tables,
                success,
            })
    })
}
