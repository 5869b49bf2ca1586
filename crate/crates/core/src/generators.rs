//! Test case generation strategies.
//!
//! Every generator is a pure function of its arguments and seed. Case ids
//! carry a strategy prefix (`e-`, `r-`, `s-`, `a-`, `q-`) and a zero-padded
//! index, so repeated payloads stay distinct cases.

use std::collections::BTreeMap;

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiment::{digits, evaluate, Context, Outcome, Property, SystemRef, TestCase, TestSet};
use crate::partition::EquivalenceClassifier;
use crate::seed::{self, Rng};
use crate::value::{DomainDescriptor, Value, ValueSource, DEFAULT_ENUMERATION_LIMIT};

const REJECTION_ATTEMPTS: usize = 100_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    Exhaustive,
    Random,
    Stratified,
    Adaptive,
    BoundedSequence,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub strategy: Strategy,
    #[serde(default)]
    pub count: Option<usize>,
    #[serde(default)]
    pub max_length: Option<usize>,
    #[serde(default)]
    pub classifier_ref: Option<String>,
    #[serde(default)]
    pub seed: u64,
}

impl GeneratorSpec {
    pub fn validate(&self) -> Result<()> {
        if self.count == Some(0) {
            return Err(Error::InvalidCount { min: 1, got: 0 });
        }
        match self.strategy {
            Strategy::Random | Strategy::Stratified | Strategy::Adaptive if self.count.is_none() => {
                Err(Error::InvalidBound(format!("{:?} generation needs a count", self.strategy)))
            }
            Strategy::Stratified | Strategy::Adaptive if self.classifier_ref.is_none() => Err(
                Error::InvalidBound(format!("{:?} generation needs a classifier", self.strategy)),
            ),
            Strategy::BoundedSequence if !self.max_length.is_some_and(|m| m >= 1) => Err(
                Error::InvalidBound("bounded sequence generation needs max_length ≥ 1".into()),
            ),
            _ => Ok(()),
        }
    }
}

fn numbered(prefix: &str, total: usize, i: usize, payload: Value) -> TestCase {
    let width = digits(total.saturating_sub(1));
    TestCase::new(format!("{prefix}-{i:0width$}"), payload)
}

/// Every value of a finite domain, in enumeration order.
pub fn generate_exhaustive(domain: &DomainDescriptor) -> Result<TestSet> {
    if !domain.is_enumerable() {
        return Err(Error::InfiniteDomain);
    }
    Ok(TestSet::from_payloads(
        "exhaustive",
        "e",
        domain.enumerate(DEFAULT_ENUMERATION_LIMIT)?,
    ))
}

/// `count` independent draws, duplicates kept as distinct cases.
pub fn generate_random(source: &dyn ValueSource, count: usize, seed: u64) -> Result<TestSet> {
    if count == 0 {
        return Err(Error::InvalidCount { min: 1, got: 0 });
    }
    let mut rng = seed::rng(seed::derive(seed, "random", 0));
    let payloads = (0..count)
        .map(|_| source.draw(&mut rng))
        .collect::<Result<Vec<_>>>()?;
    Ok(TestSet::from_payloads("random", "r", payloads))
}

/// Apportions `count` among classes proportionally to `weights` by largest
/// remainder. Remainder ties go to the larger weight, then the lower index.
pub fn largest_remainder_quotas(count: usize, weights: &[f64]) -> Vec<usize> {
    let total: f64 = weights.iter().sum();
    if weights.is_empty() || total <= 0.0 {
        return vec![0; weights.len()];
    }
    let exact: Vec<f64> = weights.iter().map(|w| count as f64 * w / total).collect();
    let mut quotas: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let assigned: usize = quotas.iter().sum();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let (ra, rb) = (exact[a] - exact[a].floor(), exact[b] - exact[b].floor());
        rb.total_cmp(&ra)
            .then(weights[b].total_cmp(&weights[a]))
            .then(a.cmp(&b))
    });
    for &i in order.iter().cycle().take(count.saturating_sub(assigned)) {
        quotas[i] += 1;
    }
    quotas
}

/// Quotas for `count` cases over the classifier universe, every class
/// getting at least one. Keys are in descending weight order.
pub fn stratified_quotas(classifier: &EquivalenceClassifier, count: usize) -> Result<Vec<(String, usize)>> {
    let keys = classifier.keys_by_weight()?;
    if count < keys.len() {
        return Err(Error::InvalidCount {
            min: keys.len(),
            got: count,
        });
    }
    let weights: Vec<f64> = keys.iter().map(|k| classifier.weight(k)).collect();
    let mut quotas = largest_remainder_quotas(count, &weights);
    let total: f64 = weights.iter().sum();
    while let Some(empty) = quotas.iter().position(|&q| q == 0) {
        // take from the class furthest above its exact share
        let donor = (0..quotas.len())
            .filter(|&i| quotas[i] >= 2)
            .max_by(|&a, &b| {
                let sa = quotas[a] as f64 - count as f64 * weights[a] / total;
                let sb = quotas[b] as f64 - count as f64 * weights[b] / total;
                sa.total_cmp(&sb).then(b.cmp(&a))
            })
            .expect("count ≥ number of classes leaves a donor");
        quotas[donor] -= 1;
        quotas[empty] += 1;
    }
    Ok(keys.into_iter().zip(quotas).collect())
}

/// Members of each class, either enumerated up front or found by rejection.
enum Buckets<'a> {
    Enumerated(BTreeMap<String, Vec<Value>>),
    Rejection {
        source: &'a dyn ValueSource,
        classifier: &'a EquivalenceClassifier,
    },
}

impl<'a> Buckets<'a> {
    fn new(source: &'a dyn ValueSource, classifier: &'a EquivalenceClassifier) -> Self {
        match source.enumerate(DEFAULT_ENUMERATION_LIMIT) {
            Ok(values) => {
                let mut map: BTreeMap<String, Vec<Value>> = BTreeMap::new();
                for v in values {
                    if let Some(k) = classifier.key_of(&v) {
                        map.entry(k).or_default().push(v);
                    }
                }
                Buckets::Enumerated(map)
            }
            Err(_) => Buckets::Rejection { source, classifier },
        }
    }

    /// Draws `quota` members per class. Enumerated classes are sampled
    /// without replacement until exhausted.
    fn take(&self, quotas: &[(String, usize)], rng: &mut Rng) -> Result<BTreeMap<String, Vec<Value>>> {
        let mut out: BTreeMap<String, Vec<Value>> = BTreeMap::new();
        match self {
            Buckets::Enumerated(map) => {
                for (key, q) in quotas {
                    if *q == 0 {
                        continue;
                    }
                    let members = map
                        .get(key)
                        .filter(|m| !m.is_empty())
                        .ok_or_else(|| Error::EmptyClass(key.clone()))?;
                    let mut got = Vec::with_capacity(*q);
                    let mut left = *q;
                    while left > 0 {
                        let k = left.min(members.len());
                        got.extend(index::sample(rng, members.len(), k).into_iter().map(|i| members[i].clone()));
                        left -= k;
                    }
                    out.insert(key.clone(), got);
                }
            }
            Buckets::Rejection { source, classifier } => {
                let mut need: BTreeMap<&str, usize> = quotas
                    .iter()
                    .filter(|(_, q)| *q > 0)
                    .map(|(k, q)| (k.as_str(), *q))
                    .collect();
                let budget = REJECTION_ATTEMPTS + 100 * need.values().sum::<usize>();
                let mut attempts = 0;
                while !need.is_empty() {
                    if attempts == budget {
                        let key = need.keys().next().unwrap();
                        return Err(Error::EmptyClass((*key).to_string()));
                    }
                    attempts += 1;
                    let v = source.draw(rng)?;
                    let Some(k) = classifier.key_of(&v) else { continue };
                    if let Some(n) = need.get_mut(k.as_str()) {
                        *n -= 1;
                        if *n == 0 {
                            need.remove(k.as_str());
                        }
                        out.entry(k).or_default().push(v);
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Representatives per class in proportion to class weight.
pub fn generate_stratified(
    source: &dyn ValueSource,
    classifier: &EquivalenceClassifier,
    count: usize,
    seed: u64,
) -> Result<TestSet> {
    let quotas = stratified_quotas(classifier, count)?;
    let mut rng = seed::rng(seed::derive(seed, "stratified", 0));
    let mut drawn = Buckets::new(source, classifier).take(&quotas, &mut rng)?;
    let payloads: Vec<Value> = quotas
        .iter()
        .flat_map(|(k, _)| drawn.remove(k).unwrap_or_default())
        .collect();
    Ok(TestSet::from_payloads("stratified", "s", payloads))
}

/// Adds this batch's proportional shares to the running credits and hands
/// out `batch` units one at a time to the largest credit, so rounding error
/// carries over between batches instead of accumulating.
fn apportion(credit: &mut [f64], basis: &[f64], weights: &[f64], batch: usize) -> Vec<usize> {
    let total: f64 = basis.iter().sum();
    for (c, b) in credit.iter_mut().zip(basis) {
        *c += batch as f64 * b / total;
    }
    let mut alloc = vec![0; credit.len()];
    for _ in 0..batch {
        let i = (0..credit.len())
            .max_by(|&a, &b| {
                credit[a]
                    .total_cmp(&credit[b])
                    .then(weights[a].total_cmp(&weights[b]))
                    .then(b.cmp(&a))
            })
            .expect("at least one class");
        credit[i] -= 1.0;
        alloc[i] += 1;
    }
    alloc
}

/// Oracle-guided generation. One case per class first (or per top class
/// when the budget is smaller), then batches of at most one case per class
/// allocated in proportion to `uncovered weight share + observed fail rate`,
/// falling back to plain weights when every score is zero.
#[allow(clippy::too_many_arguments)]
pub fn generate_adaptive(
    context: &dyn Context,
    systems: &[SystemRef],
    property: &dyn Property,
    classifier: &EquivalenceClassifier,
    source: &dyn ValueSource,
    budget: usize,
    seed: u64,
) -> Result<TestSet> {
    if budget == 0 {
        return Err(Error::InvalidCount { min: 1, got: 0 });
    }
    let keys = classifier.keys_by_weight()?;
    let weights: Vec<f64> = keys.iter().map(|k| classifier.weight(k)).collect();
    let total_weight: f64 = weights.iter().sum();
    let buckets = Buckets::new(source, classifier);
    let eval_seed = seed::derive(seed, "adaptive-eval", 0);

    let mut cases: Vec<TestCase> = Vec::with_capacity(budget);
    let mut seen = vec![0usize; keys.len()];
    let mut failed = vec![0usize; keys.len()];
    let mut credit = vec![0.0f64; keys.len()];
    let mut round = 0u64;
    let mut alloc: Vec<usize> = if budget < keys.len() {
        (0..keys.len()).map(|i| usize::from(i < budget)).collect()
    } else {
        vec![1; keys.len()]
    };

    loop {
        let quotas: Vec<(String, usize)> = keys.iter().cloned().zip(alloc.iter().copied()).collect();
        let mut rng = seed::rng(seed::derive(seed, "adaptive-batch", round));
        let mut drawn = buckets.take(&quotas, &mut rng)?;
        let start = cases.len();
        for (key, _) in &quotas {
            for v in drawn.remove(key).unwrap_or_default() {
                let i = cases.len();
                cases.push(numbered("a", budget, i, v));
            }
        }
        let remaining = budget - cases.len();
        if remaining == 0 {
            break;
        }
        for ev in evaluate(context, systems, property, &cases[start..], eval_seed)? {
            let k = classifier.classify(&ev.case)?;
            let i = keys.iter().position(|x| *x == k).expect("key from universe");
            seen[i] += 1;
            if ev.verdict.outcome == Outcome::Fail {
                failed[i] += 1;
            }
        }
        let scores: Vec<f64> = (0..keys.len())
            .map(|i| {
                let uncovered = if seen[i] == 0 { weights[i] / total_weight } else { 0.0 };
                let fail_rate = if seen[i] == 0 { 0.0 } else { failed[i] as f64 / seen[i] as f64 };
                uncovered + fail_rate
            })
            .collect();
        let basis = if scores.iter().all(|&s| s == 0.0) { &weights } else { &scores };
        alloc = apportion(&mut credit, basis, &weights, remaining.min(keys.len()));
        round += 1;
    }
    TestSet::new("adaptive", cases)
}

/// All sequences up to `max_length` in length-lexicographic order, or
/// `count` uniform draws from that space.
pub fn generate_bounded_sequences(
    alphabet: Vec<Value>,
    max_length: usize,
    count: Option<usize>,
    seed: u64,
) -> Result<TestSet> {
    if max_length == 0 {
        return Err(Error::InvalidBound("max_length must be at least 1".into()));
    }
    let domain = DomainDescriptor::sequence(alphabet, Some(max_length))?;
    let payloads = match count {
        None => domain.enumerate(DEFAULT_ENUMERATION_LIMIT)?,
        Some(0) => return Err(Error::InvalidCount { min: 1, got: 0 }),
        Some(n) => {
            let mut rng = seed::rng(seed::derive(seed, "sequences", 0));
            (0..n).map(|_| domain.draw(&mut rng)).collect::<Result<_>>()?
        }
    };
    Ok(TestSet::from_payloads("sequences", "q", payloads))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contexts::{make_function_context, TableSystem};
    use crate::partition::partition;
    use crate::properties::FnProperty;

    #[test]
    fn exhaustive_bit_pairs() {
        let d = DomainDescriptor::bit_tuples(2);
        let a = generate_exhaustive(&d).unwrap();
        assert_eq!(a.len(), 4);
        assert_eq!(a, generate_exhaustive(&d).unwrap());
        let ab = DomainDescriptor::finite([Value::sym("a"), Value::sym("b")]);
        assert_eq!(generate_exhaustive(&ab).unwrap().len(), 2);
        let inf = DomainDescriptor::sequence(vec![Value::sym("a")], None).unwrap();
        assert!(matches!(generate_exhaustive(&inf), Err(Error::InfiniteDomain)));
    }

    #[test]
    fn random_is_seeded() {
        let d = DomainDescriptor::int_range(0, 9);
        let a = generate_random(&d, 5, 11).unwrap();
        assert_eq!(a.len(), 5);
        assert_eq!(a, generate_random(&d, 5, 11).unwrap());
        assert!(generate_random(&d, 0, 11).is_err());
    }

    #[test]
    fn quotas() {
        assert_eq!(largest_remainder_quotas(8, &[3.0, 1.0]), [6, 2]);
        let q = largest_remainder_quotas(10, &[1.0, 1.0, 1.0]);
        assert_eq!(q.iter().sum::<usize>(), 10);
        assert_eq!(q.iter().max().unwrap() - q.iter().min().unwrap(), 1);
    }

    #[test]
    fn every_class_gets_one() {
        let c = EquivalenceClassifier::parity().with_weights([("even", 100.0)]).unwrap();
        let q = stratified_quotas(&c, 3).unwrap();
        assert_eq!(q, [("even".to_string(), 2), ("odd".to_string(), 1)]);
        assert!(matches!(stratified_quotas(&c, 1), Err(Error::InvalidCount { .. })));
    }

    #[test]
    fn stratified_recount() {
        let d = DomainDescriptor::int_range(0, 99);
        let c = EquivalenceClassifier::parity().with_weights([("even", 3.0)]).unwrap();
        let set = generate_stratified(&d, &c, 8, 5).unwrap();
        let sizes = partition(&set, &c).unwrap().sizes();
        assert_eq!((sizes["even"], sizes["odd"]), (6, 2));
        assert_eq!(set, generate_stratified(&d, &c, 8, 5).unwrap());
    }

    #[test]
    fn stratified_empty_class() {
        let d = DomainDescriptor::finite([Value::Int(0), Value::Int(2)]);
        assert!(matches!(
            generate_stratified(&d, &EquivalenceClassifier::parity(), 4, 0),
            Err(Error::EmptyClass(k)) if k == "odd"
        ));
    }

    #[test]
    fn adaptive_budget_and_focus() {
        let ctx = make_function_context(DomainDescriptor::int_range(0, 29), DomainDescriptor::int_range(0, 29))
            .unwrap();
        let sys = TableSystem::from_fn("id", ctx.signature().clone(), |v| v.clone())
            .unwrap()
            .into_ref();
        let thirds = EquivalenceClassifier::new("thirds", |v| v.as_int().map(|i| format!("c{}", i / 10)))
            .with_universe(["c0", "c1", "c2"]);
        let fails_in_c1 = FnProperty::on_output("not c1", |p, _| p.as_int().unwrap() / 10 != 1);
        let set = generate_adaptive(&ctx, &[sys.clone()], &fails_in_c1, &thirds, ctx.input_domain(), 20, 9)
            .unwrap();
        assert_eq!(set.len(), 20);
        let sizes = partition(&set, &thirds).unwrap().sizes();
        assert!(sizes["c1"] > sizes["c0"] && sizes["c1"] > sizes["c2"]);

        let tiny = generate_adaptive(
            &ctx,
            &[sys],
            &fails_in_c1,
            &thirds.clone().with_weights([("c2", 5.0), ("c1", 2.0)]).unwrap(),
            ctx.input_domain(),
            2,
            9,
        )
        .unwrap();
        let keys: Vec<String> = tiny.cases().iter().map(|c| thirds.classify(c).unwrap()).collect();
        assert_eq!(keys, ["c2", "c1"]);
    }

    #[test]
    fn bounded_sequences() {
        let ab = vec![Value::sym("a"), Value::sym("b")];
        let all = generate_bounded_sequences(ab.clone(), 2, None, 0).unwrap();
        let shown: Vec<String> = all.cases().iter().map(|c| c.payload.to_string()).collect();
        assert_eq!(shown, ["(a)", "(b)", "(a a)", "(a b)", "(b a)", "(b b)"]);
        assert!(matches!(
            generate_bounded_sequences(vec![0.into(), 1.into()], 20, None, 0),
            Err(Error::ExplosionGuard { size: 2_097_150, .. })
        ));
        let abc = vec![Value::sym("a"), Value::sym("b"), Value::sym("c")];
        let s = generate_bounded_sequences(abc.clone(), 3, Some(10), 4).unwrap();
        assert_eq!(s.len(), 10);
        assert!(s.cases().iter().all(|c| (1..=3).contains(&c.payload.symbol_count())));
        assert_eq!(s, generate_bounded_sequences(abc, 3, Some(10), 4).unwrap());
    }

    #[test]
    fn spec_validation() {
        let mut s = GeneratorSpec {
            strategy: Strategy::Stratified,
            count: Some(4),
            max_length: None,
            classifier_ref: None,
            seed: 0,
        };
        assert!(s.validate().is_err());
        s.classifier_ref = Some("parity".into());
        assert!(s.validate().is_ok());
        s.strategy = Strategy::BoundedSequence;
        assert!(s.validate().is_err());
    }
}
