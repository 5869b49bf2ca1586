//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any criterion fails.

use std::collections::BTreeSet;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::Rng as _;
use standin::contexts::{
    make_dialogue_context, make_function_context, tabulate_system, DialogueContext, DialogueSystem, DialogueTable,
    FunctionContext, FunctionTable, TableSystem,
};
use standin::experiment::{Context, Run};
use standin::metrics::{
    audit_monotonicity, audit_consistency, audit_reproducibility, class_coverage_eff, clopper_pearson,
    EfficiencyFunction, PoolSampler, SamplerMode, SimilarityDegree,
};
use standin::partition::{detect_adversarial, metamorphic_falsify};
use standin::properties::{FnProperty, OutputMatches};
use standin::seed::{self, Rng};
use standin::{
    can_replace, enumerate_domain, equivalent, evaluate, DomainDescriptor, EquivalenceClassifier, FnSystem,
    Outcome, Property, SystemRef, TestCase, TestSet, Value,
};
use standin_cli::{run_campaign, CampaignConfig, Mode};
use standin_traffic::fixtures;
use standin_traffic::{cautious, fleet, greedy, make_traffic_context, CollisionFree};

struct Check {
    ok: bool,
    detail: String,
}

fn verdict(ok: bool, detail: impl Into<String>) -> Check {
    Check {
        ok,
        detail: detail.into(),
    }
}

// ---------------------------------------------------------------- helpers

fn random_table(rng: &mut Rng, n: i64, k: i64) -> Vec<i64> {
    (0..n).map(|_| rng.random_range(0..k)).collect()
}

fn table_system(ctx: &FunctionContext, name: &str, outs: &[i64]) -> SystemRef {
    let entries = outs
        .iter()
        .enumerate()
        .map(|(x, &y)| (Value::Int(x as i64), Value::Int(y)))
        .collect();
    TableSystem::new(name, FunctionTable::new(entries), ctx.signature().clone())
        .unwrap()
        .into_ref()
}

/// Passes where `accept[x][y]` holds for output `y` on input `x`.
fn relation_property(accept: Vec<Vec<bool>>) -> FnProperty {
    FnProperty::on_output("accepted", move |x, y| {
        accept[x.as_int().unwrap() as usize][y.as_int().unwrap() as usize]
    })
}

// ---------------------------------------------------------------- 1

fn replacement_preorder() -> Check {
    let start = Instant::now();
    let mut rng = seed::rng(101);
    let triples = 250;
    let mut discrepancies = Vec::new();
    for t in 0..triples {
        let n = rng.random_range(1..=16i64);
        let k = rng.random_range(2..=3i64);
        let ctx = make_function_context(DomainDescriptor::int_range(0, n - 1), DomainDescriptor::int_range(0, k - 1))
            .unwrap();
        let tables: Vec<Vec<i64>> = (0..3).map(|_| random_table(&mut rng, n, k)).collect();
        let accept: Vec<Vec<bool>> = (0..n).map(|_| (0..k).map(|_| rng.random_bool(0.5)).collect()).collect();
        let systems: Vec<SystemRef> = tables
            .iter()
            .enumerate()
            .map(|(i, tab)| table_system(&ctx, &format!("s{i}"), tab))
            .collect();
        let property = relation_property(accept.clone());
        let set = enumerate_domain(&ctx).unwrap();

        // brute force over tables
        let pass = |s: usize, x: usize| accept[x][tables[s][x] as usize];
        let oracle_rep = |a: usize, b: usize| (0..n as usize).all(|x| !pass(b, x) || pass(a, x));
        let oracle_eq = |a: usize, b: usize| (0..n as usize).all(|x| pass(a, x) == pass(b, x));

        let mut rep = [[false; 3]; 3];
        for a in 0..3 {
            for b in 0..3 {
                let r = can_replace(&ctx, &systems[a..=a], &systems[b..=b], &property, &set, t).unwrap();
                rep[a][b] = r.holds;
                if r.holds != oracle_rep(a, b) || !r.conclusive {
                    discrepancies.push(format!("triple {t}: replace({a},{b}) = {} conclusive {}", r.holds, r.conclusive));
                }
                let e = equivalent(&ctx, &systems[a..=a], &systems[b..=b], &property, &set, t).unwrap();
                let mutual = rep[a][b] && can_replace(&ctx, &systems[b..=b], &systems[a..=a], &property, &set, t).unwrap().holds;
                if e.equivalent != oracle_eq(a, b) || e.equivalent != mutual {
                    discrepancies.push(format!("triple {t}: equivalent({a},{b}) = {}", e.equivalent));
                }
            }
        }
        for a in 0..3 {
            if !rep[a][a] {
                discrepancies.push(format!("triple {t}: not reflexive at {a}"));
            }
            for b in 0..3 {
                for c in 0..3 {
                    if rep[a][b] && rep[b][c] && !rep[a][c] {
                        discrepancies.push(format!("triple {t}: not transitive at {a},{b},{c}"));
                    }
                }
            }
        }
    }
    let elapsed = start.elapsed();
    verdict(
        discrepancies.is_empty() && elapsed < Duration::from_secs(10),
        format!(
            "{triples} triples, {} discrepancies, {:.2}s{}",
            discrepancies.len(),
            elapsed.as_secs_f64(),
            discrepancies.first().map(|d| format!(" (first: {d})")).unwrap_or_default()
        ),
    )
}

// ---------------------------------------------------------------- 2

fn write_table(dir: &Path, name: &str, outs: &[i64]) {
    let text: String = outs.iter().enumerate().map(|(x, y)| format!("{x}\t{y}\n")).collect();
    std::fs::write(dir.join(name), text).unwrap();
}

fn campaign_text(n: i64, k: i64, generator: &str) -> String {
    format!(
        r#"schema_version = 1
name = "pair"
seed = 3
[context]
kind = "function"
domain = "ints:0:{}"
codomain = "ints:0:{}"
[[tuples]]
name = "candidate"
systems = ["table:a.tsv"]
[[tuples]]
name = "incumbent"
systems = ["table:b.tsv"]
[property]
kind = "matches"
reference = "table:r.tsv"
[generator]
{generator}
"#,
        n - 1,
        k - 1
    )
}

/// A function context that declares itself stateful.
struct Stateful(FunctionContext);

impl Context for Stateful {
    fn name(&self) -> &str {
        "stateful"
    }
    fn arity(&self) -> usize {
        1
    }
    fn input_domain(&self) -> &DomainDescriptor {
        self.0.input_domain()
    }
    fn output_domain(&self) -> &DomainDescriptor {
        self.0.output_domain()
    }
    fn memoryless(&self) -> bool {
        false
    }
    fn signature(&self) -> &standin::Signature {
        self.0.signature()
    }
    fn apply(&self, systems: &[SystemRef], case: &TestCase, seed: u64) -> standin::Result<Run> {
        self.0.apply(systems, case, seed)
    }
}

fn conclusive_exhaustive() -> Check {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = seed::rng(202);
    let pairs = 200;
    let mut discrepancies = Vec::new();
    let (mut conclusive_seen, mut inconclusive_seen) = (0, 0);
    for p in 0..pairs {
        let n = rng.random_range(1..=16i64);
        let k = rng.random_range(2..=3i64);
        let [a, b, r] = [0, 1, 2].map(|_| random_table(&mut rng, n, k));
        write_table(dir.path(), "a.tsv", &a);
        write_table(dir.path(), "b.tsv", &b);
        write_table(dir.path(), "r.tsv", &r);
        let generator = if p % 2 == 0 {
            "strategy = \"exhaustive\"".to_string()
        } else {
            format!("strategy = \"random\"\ncount = {}", rng.random_range(1..=2 * n as usize))
        };
        let config = CampaignConfig::parse(&campaign_text(n, k, &generator)).unwrap();
        let report = run_campaign(&config, dir.path(), Mode::Replace).unwrap();
        let rep = report.replacement.as_ref().unwrap();

        // direct enumeration over the inputs the campaign exercised
        let inputs: BTreeSet<usize> = report.cases.iter().map(|c| c.payload.as_int().unwrap() as usize).collect();
        let holds = inputs.iter().all(|&x| b[x] != r[x] || a[x] == r[x]);
        let full = inputs.len() == n as usize;
        if rep.holds != holds || rep.conclusive != full {
            discrepancies.push(format!("pair {p}: holds {} vs {holds}, conclusive {} vs {full}", rep.holds, rep.conclusive));
        }
        if full {
            conclusive_seen += 1;
        } else {
            inconclusive_seen += 1;
        }

        // the same full-domain comparison on a context that is not memoryless
        let ctx = make_function_context(DomainDescriptor::int_range(0, n - 1), DomainDescriptor::int_range(0, k - 1))
            .unwrap();
        let reference = r.clone();
        let property = OutputMatches::new("reference", move |v| Value::Int(reference[v.as_int().unwrap() as usize]));
        let stateful = Stateful(ctx.clone());
        let (sa, sb) = (table_system(&ctx, "a", &a), table_system(&ctx, "b", &b));
        let set = enumerate_domain(&ctx).unwrap();
        let on_stateful = can_replace(&stateful, std::slice::from_ref(&sa), std::slice::from_ref(&sb), &property, &set, 0).unwrap();
        let on_memoryless = can_replace(&ctx, &[sa], &[sb], &property, &set, 0).unwrap();
        let full_holds = (0..n as usize).all(|x| b[x] != r[x] || a[x] == r[x]);
        if on_stateful.conclusive || !on_memoryless.conclusive || on_stateful.holds != full_holds || on_memoryless.holds != full_holds {
            discrepancies.push(format!("pair {p}: memorylessness not reflected in conclusiveness"));
        }
    }
    verdict(
        discrepancies.is_empty() && conclusive_seen > 0 && inconclusive_seen > 0,
        format!(
            "{pairs} pairs ({conclusive_seen} full-domain, {inconclusive_seen} partial), {} discrepancies{}",
            discrepancies.len(),
            discrepancies.first().map(|d| format!(" (first: {d})")).unwrap_or_default()
        ),
    )
}

// ---------------------------------------------------------------- 3

fn random_answer(rng: &mut Rng, alphabet: &[Value]) -> Value {
    let len = rng.random_range(1..=3);
    Value::List((0..len).map(|_| alphabet[rng.random_range(0..alphabet.len())].clone()).collect())
}

fn tabulation_equivalence() -> Check {
    let mut rng = seed::rng(303);
    let references = 60;
    let (mut distinguishing, mut not_conclusive, mut output_mismatches) = (0, 0, 0);
    for i in 0..references {
        let a = rng.random_range(1..=5usize);
        let l = rng.random_range(1..=3usize);
        let alphabet: Vec<Value> = (0..a).map(|j| Value::sym(format!("t{j}"))).collect();
        let ctx: DialogueContext = make_dialogue_context(alphabet.clone(), l).unwrap();
        let questions = ctx.input_domain().enumerate(usize::MAX).unwrap();
        let reference: SystemRef = if i % 2 == 0 {
            let mut table = DialogueTable::new(l).unwrap();
            for q in &questions {
                if rng.random_bool(0.6) {
                    let ans = random_answer(&mut rng, &alphabet);
                    table
                        .insert(q.as_list().unwrap().to_vec(), ans.as_list().unwrap().to_vec())
                        .unwrap();
                }
            }
            DialogueSystem::new(format!("table{i}"), table, &ctx).unwrap().into_ref()
        } else {
            let salt = rng.random::<u64>();
            let alpha = alphabet.clone();
            FnSystem::new(format!("fn{i}"), ctx.signature().clone(), move |q| {
                let h = seed::derive(salt, &q.to_string(), 0);
                if h.is_multiple_of(5) {
                    return DialogueContext::no_answer();
                }
                let len = 1 + (h >> 8) as usize % 3;
                Value::List((0..len).map(|j| alpha[(h >> (16 + 4 * j)) as usize % alpha.len()].clone()).collect())
            })
            .into_ref()
        };
        let tabulated = tabulate_system(&ctx, &reference).unwrap().into_ref();
        let set = enumerate_domain(&ctx).unwrap();
        let r = reference.clone();
        let matches = OutputMatches::new("reference answer", move |q| r.reset(0).react(q));
        let answered = FnProperty::on_output("answered", |_, out| out != &DialogueContext::no_answer());
        for property in [&matches as &dyn Property, &answered] {
            let e = equivalent(&ctx, std::slice::from_ref(&tabulated), std::slice::from_ref(&reference), property, &set, i).unwrap();
            distinguishing += e.distinguishing_cases.len();
            not_conclusive += usize::from(!e.conclusive);
        }
        output_mismatches += questions
            .iter()
            .filter(|q| tabulated.reset(0).react(q) != reference.reset(0).react(q))
            .count();
    }
    verdict(
        distinguishing == 0 && not_conclusive == 0 && output_mismatches == 0,
        format!(
            "{references} references, {distinguishing} distinguishing cases, {not_conclusive} inconclusive reports, {output_mismatches} differing answers"
        ),
    )
}

// ---------------------------------------------------------------- 4

fn binomial_tail_ge(x: u64, n: u64, p: f64) -> f64 {
    let mut coeff = 1.0f64;
    let mut total = 0.0;
    for k in 0..=n {
        if k > 0 {
            coeff = coeff * (n - k + 1) as f64 / k as f64;
        }
        if k >= x {
            total += coeff * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32);
        }
    }
    total
}

fn solve_increasing(f: impl Fn(f64) -> f64, target: f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Exact interval from binomial tail sums.
fn tail_interval(x: u64, n: u64, level: f64) -> (f64, f64) {
    let half = (1.0 - level) / 2.0;
    let lo = if x == 0 { 0.0 } else { solve_increasing(|p| binomial_tail_ge(x, n, p), half) };
    // P(X <= x) falls with p; P(X >= x + 1) = 1 - P(X <= x) rises
    let hi = if x == n { 1.0 } else { solve_increasing(|p| binomial_tail_ge(x + 1, n, p), 1.0 - half) };
    (lo, hi)
}

fn metrics_axioms() -> Check {
    let pool: Vec<TestCase> = (0..60).map(|i| TestCase::new(format!("c{i:02}"), Value::Int(i))).collect();
    let mod5 = EquivalenceClassifier::new("mod5", |v| v.as_int().map(|i| format!("r{}", i % 5)))
        .with_universe((0..5).map(|r| format!("r{r}")))
        .with_weights([("r0", 3.0), ("r3", 0.5)])
        .unwrap();
    let eff = class_coverage_eff(&mod5).unwrap();
    let sampler = PoolSampler::with_classifier(pool.clone(), &mod5, SamplerMode::Uniform).unwrap();
    let mono = audit_monotonicity(&eff, &sampler, 1000, 41).unwrap();
    let cons = audit_consistency(&eff, &mod5, &sampler, 1000, 42).unwrap();
    let pathological = EfficiencyFunction::new("1/(1+|T|)", |t| Ok(1.0 / (1.0 + t.len() as f64)));
    let planted = audit_monotonicity(&pathological, &sampler, 10, 43).unwrap();

    let mut worst = 0.0f64;
    for level in [0.9, 0.95, 0.99] {
        for n in 1..=30u64 {
            for x in 0..=n {
                let (lo, hi) = clopper_pearson(x, n, level).unwrap();
                let (olo, ohi) = tail_interval(x, n, level);
                worst = worst.max((lo - olo).abs()).max((hi - ohi).abs());
            }
        }
    }
    verdict(
        mono.violations.is_empty() && cons.violations.is_empty() && !planted.violations.is_empty() && worst <= 1e-9,
        format!(
            "monotonicity {} and consistency {} violations in 1000 trials; 1/(1+|T|) {} violations in 10; max CI error {worst:.2e}",
            mono.violations.len(),
            cons.violations.len(),
            planted.violations.len()
        ),
    )
}

// ---------------------------------------------------------------- 5

fn per_class_fixture(fails: impl Fn(i64) -> bool + Send + Sync + 'static) -> (FunctionContext, SystemRef, FnProperty, EquivalenceClassifier, Vec<TestCase>) {
    let ctx = make_function_context(DomainDescriptor::int_range(0, 2999), DomainDescriptor::int_range(0, 1)).unwrap();
    let sys = FnSystem::new("fixture", ctx.signature().clone(), move |v| {
        Value::Int(i64::from(!fails(v.as_int().unwrap())))
    })
    .into_ref();
    let property = FnProperty::on_output("flag set", |_, out| out == &Value::Int(1));
    let classes = EquivalenceClassifier::new("thousands", |v| v.as_int().map(|i| format!("c{}", i / 1000)))
        .with_universe(["c0", "c1", "c2"]);
    let pool = (0..3000).map(|i| TestCase::new(format!("x{i:04}"), Value::Int(i))).collect();
    (ctx, sys, property, classes, pool)
}

fn reproducibility() -> Check {
    let run = |fails: fn(i64) -> bool, delta: f64| {
        let (ctx, sys, property, classes, pool) = per_class_fixture(fails);
        let eff = class_coverage_eff(&classes).unwrap();
        let sampler = PoolSampler::with_classifier(pool, &classes, SamplerMode::Stratified { per_class: 200 }).unwrap();
        audit_reproducibility(&eff, &ctx, &[sys], &property, &sampler, SimilarityDegree::new(delta).unwrap(), 100, 55)
            .unwrap()
    };
    // the middle class fails as a whole, so every stratified set scores 400/600
    let uniform = run(|i| (1000..2000).contains(&i), 0.1);
    // a quarter of the middle class fails; sets of equal coverage differ in how many they catch
    let concentrated = run(|i| (1000..2000).contains(&i) && i % 4 == 0, 0.01);
    verdict(
        uniform.violations.is_empty() && !concentrated.violations.is_empty(),
        format!(
            "per-class fixture {} violations in 100 trials at delta 0.1; concentrated failures {} violations at delta 0.01",
            uniform.violations.len(),
            concentrated.violations.len()
        ),
    )
}

// ---------------------------------------------------------------- 6

fn traffic_safety() -> Check {
    let start = Instant::now();
    let (net, dynamics) = fixtures::crossing();
    let scenarios = fixtures::crossing_scenarios();
    let ctx = make_traffic_context(net, 3, dynamics).with_scenarios(&scenarios);
    let set = TestSet::from_payloads("crossing", "e", scenarios.iter().map(|s| s.to_value()));
    let (c, g) = (fleet(&cautious(), 3), fleet(&greedy(), 3));
    let cautious_evals = evaluate(&ctx, &c, &CollisionFree, set.cases(), 1).unwrap();
    let greedy_fail = evaluate(&ctx, &g, &CollisionFree, set.cases(), 1)
        .unwrap()
        .into_iter()
        .find(|e| e.verdict.outcome == Outcome::Fail);
    let cautious_fails = cautious_evals.iter().filter(|e| e.verdict.outcome != Outcome::Pass).count();
    let forward = can_replace(&ctx, &c, &g, &CollisionFree, &set, 1).unwrap();
    let backward = can_replace(&ctx, &g, &c, &CollisionFree, &set, 1).unwrap();
    let elapsed = start.elapsed();
    let witness = greedy_fail
        .as_ref()
        .and_then(|e| e.verdict.evidence.clone())
        .unwrap_or_default();
    verdict(
        dynamics.v_max == 2
            && scenarios.len() <= 10_000
            && cautious_fails == 0
            && !witness.is_empty()
            && forward.holds
            && !backward.holds
            && elapsed < Duration::from_secs(60),
        format!(
            "{} scenarios, cautious {cautious_fails} failures, greedy witness `{witness}`, cautious→greedy {}, greedy→cautious {} ({} violations), {:.1}s",
            scenarios.len(),
            forward.holds,
            backward.holds,
            backward.violations.len(),
            elapsed.as_secs_f64()
        ),
    )
}

// ---------------------------------------------------------------- 7

fn determinism() -> Check {
    let configs = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut mismatched = Vec::new();
    let mut runs = 0;
    for name in ["xor.toml", "crossing-sampled.toml", "crossing.toml"] {
        let outputs: Vec<Vec<u8>> = ["1", "8", "8"]
            .iter()
            .map(|jobs| {
                let dir = tempfile::tempdir().unwrap();
                Command::new(env!("CARGO_BIN_EXE_standin"))
                    .args(["run", "--format", "json", "--jobs", jobs, "--config"])
                    .arg(configs.join(name))
                    .arg("--out")
                    .arg(dir.path())
                    .output()
                    .unwrap();
                runs += 1;
                std::fs::read(dir.path().join("report.json")).unwrap_or_default()
            })
            .collect();
        if outputs[0].is_empty() || outputs.iter().any(|o| o != &outputs[0]) {
            mismatched.push(name);
        }
    }
    verdict(
        mismatched.is_empty(),
        format!("{runs} runs over 3 configs with --jobs 1 and 8, mismatched: {mismatched:?}"),
    )
}

// ---------------------------------------------------------------- 8

fn adversarial_detection() -> Check {
    let ctx = make_function_context(DomainDescriptor::int_range(0, 11), DomainDescriptor::int_range(0, 23)).unwrap();
    // doubles its input, except 6, which the classifier groups with 4, 5 and 7
    let sys = FnSystem::new("doubler", ctx.signature().clone(), |v| {
        let x = v.as_int().unwrap();
        Value::Int(if x == 6 { 13 } else { 2 * x })
    })
    .into_ref();
    let property = OutputMatches::new("doubled", |v| Value::Int(2 * v.as_int().unwrap()));
    let classes = EquivalenceClassifier::new("quads", |v| v.as_int().map(|i| format!("q{}", i / 4)))
        .with_universe(["q0", "q1", "q2"]);
    let set = enumerate_domain(&ctx).unwrap();
    let flagged = metamorphic_falsify(&ctx, &[sys], &property, &classes, &set, 0).unwrap();
    let eff = class_coverage_eff(&classes).unwrap();
    let certified = detect_adversarial(&flagged, &eff);
    let flagged_classes: Vec<&str> = flagged.classes().into_iter().collect();
    let certified_classes: Vec<String> = certified
        .as_ref()
        .map(|c| c.classes().into_iter().map(str::to_string).collect())
        .unwrap_or_default();
    let planted_pair = flagged
        .anomalies
        .first()
        .is_some_and(|a| a.first.payload == Value::Int(4) && a.second.payload == Value::Int(6));
    verdict(
        flagged_classes == ["q1"] && certified_classes == ["q1"] && planted_pair,
        format!("flagged {flagged_classes:?}, certified {certified_classes:?}"),
    )
}

type Criterion = (&'static str, fn() -> Check);

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("replacement preorder", replacement_preorder),
        ("conclusive exhaustive", conclusive_exhaustive),
        ("tabulation equivalence", tabulation_equivalence),
        ("metrics axioms", metrics_axioms),
        ("reproducibility audit", reproducibility),
        ("traffic exhaustive safety", traffic_safety),
        ("end-to-end determinism", determinism),
        ("adversarial detection", adversarial_detection),
    ];
    let mut all = true;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let r = check();
        all &= r.ok;
        println!("{} AC{} {name}: {}", if r.ok { "PASS" } else { "FAIL" }, i + 1, r.detail);
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
