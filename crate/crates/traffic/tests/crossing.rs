use std::collections::BTreeMap;

use standin::generators::generate_stratified;
use standin::replacement::can_replace;
use standin::partition::partition;
use standin::{evaluate, Outcome, TestSet};
use standin_traffic::fixtures::{crossing, crossing_bands, crossing_scenarios, crossing_space};
use standin_traffic::scenario::VehicleSpec;
use standin_traffic::{
    cautious, fleet, greedy, make_traffic_context, scenario_classifier, CollisionFree, DrivingScenario, NoCongestion,
};

fn cases() -> TestSet {
    TestSet::from_payloads("crossing", "x", crossing_scenarios().iter().map(|s| s.to_value()))
}

#[test]
fn scenario_family_size() {
    assert_eq!(crossing_scenarios().len(), 3438);
    assert_eq!(crossing_space().size(), 3438);
}

#[test]
fn cautious_is_safe_where_greedy_is_not() {
    let (net, dynamics) = crossing();
    let set = cases();
    let ctx = make_traffic_context(net, 3, dynamics).with_scenarios(&crossing_scenarios());
    let cautious3 = fleet(&cautious(), 3);
    let greedy3 = fleet(&greedy(), 3);
    let c = evaluate(&ctx, &cautious3, &CollisionFree, set.cases(), 1).unwrap();
    let unsafe_runs: Vec<_> = c.iter().filter(|e| e.verdict.outcome != Outcome::Pass).collect();
    assert!(unsafe_runs.is_empty(), "first: {:?}", unsafe_runs.first().map(|e| &e.verdict));
    let g = evaluate(&ctx, &greedy3, &CollisionFree, set.cases(), 1).unwrap();
    assert!(g.iter().any(|e| e.verdict.outcome == Outcome::Fail));

    let forward = can_replace(&ctx, &cautious3, &greedy3, &CollisionFree, &set, 1).unwrap();
    assert!(forward.holds);
    let backward = can_replace(&ctx, &greedy3, &cautious3, &CollisionFree, &set, 1).unwrap();
    assert!(!backward.holds);
    assert!(!backward.violations.is_empty());
}

#[test]
fn cautious_rarely_gridlocks() {
    let (net, dynamics) = crossing();
    let ctx = make_traffic_context(net, 3, dynamics);
    let set = cases();
    let late = evaluate(&ctx, &fleet(&cautious(), 3), &NoCongestion { deadline: 30 }, set.cases(), 1)
        .unwrap()
        .iter()
        .filter(|e| e.verdict.outcome == Outcome::Fail)
        .count();
    assert!(late * 100 < set.len(), "{late} of {} runs miss the deadline", set.len());
}

#[test]
fn classifier_bands() {
    let (net, _) = crossing();
    let c = scenario_classifier(net, crossing_bands());
    let one = DrivingScenario {
        horizon: 30,
        vehicles: vec![VehicleSpec {
            origin: (3, 0),
            speed: 0,
            destination: (0, 3),
        }],
    };
    assert_eq!(c.key_of(&one.to_value()).as_deref(), Some("low/short"));
    let p = partition(&cases(), &c).unwrap();
    assert_eq!(p.classes.len(), 6);
    assert!(p.uncovered.is_empty());
}

#[test]
fn stratified_draws_cover_every_band() {
    let (net, _) = crossing();
    let c = scenario_classifier(net, crossing_bands());
    let set = generate_stratified(&crossing_space(), &c, 60, 5).unwrap();
    let mut per: BTreeMap<String, usize> = BTreeMap::new();
    for case in set.cases() {
        *per.entry(c.classify(case).unwrap()).or_default() += 1;
    }
    assert_eq!(per.len(), 6);
    assert!(per.values().all(|&n| n == 10), "{per:?}");
    let again = generate_stratified(&crossing_space(), &c, 60, 5).unwrap();
    assert_eq!(set, again);
}
