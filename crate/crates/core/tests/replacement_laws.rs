mod common;

use common::{instances, Instance};
use proptest::prelude::*;
use standin::replacement::{can_replace, enumerate_domain, equivalent};
use standin::TestSet;

fn replaces(inst: &Instance, a: usize, b: usize, set: &TestSet, seed: u64) -> standin::replacement::ReplacementReport {
    let ctx = inst.context();
    can_replace(
        &ctx,
        &[inst.system(&ctx, a)],
        &[inst.system(&ctx, b)],
        &inst.property(),
        set,
        seed,
    )
    .unwrap()
}

proptest! {
    #[test]
    fn exhaustive_verdicts_match_brute_force(inst in instances(2), seed in any::<u64>()) {
        let ctx = inst.context();
        let set = enumerate_domain(&ctx).unwrap();
        let rep = replaces(&inst, 0, 1, &set, seed);
        prop_assert!(rep.conclusive);
        prop_assert_eq!(rep.holds, inst.brute_replaces(0, 1));
        let eq = equivalent(&ctx, &[inst.system(&ctx, 0)], &[inst.system(&ctx, 1)], &inst.property(), &set, seed)
            .unwrap();
        prop_assert!(eq.conclusive);
        prop_assert_eq!(eq.equivalent, inst.brute_equivalent(0, 1));
    }

    #[test]
    fn replacement_is_a_preorder(inst in instances(3)) {
        let set = enumerate_domain(&inst.context()).unwrap();
        prop_assert!(replaces(&inst, 0, 0, &set, 1).holds);
        let ab = replaces(&inst, 0, 1, &set, 1).holds;
        let bc = replaces(&inst, 1, 2, &set, 1).holds;
        if ab && bc {
            prop_assert!(replaces(&inst, 0, 2, &set, 1).holds);
        }
    }

    #[test]
    fn equivalence_is_mutual_replacement(inst in instances(2)) {
        let ctx = inst.context();
        let set = enumerate_domain(&ctx).unwrap();
        let eq = equivalent(&ctx, &[inst.system(&ctx, 0)], &[inst.system(&ctx, 1)], &inst.property(), &set, 5)
            .unwrap();
        let both = replaces(&inst, 0, 1, &set, 5).holds && replaces(&inst, 1, 0, &set, 5).holds;
        prop_assert_eq!(eq.equivalent, both);
    }

    #[test]
    fn shrinking_the_set_keeps_replacement(inst in instances(2), keep in prop::collection::vec(any::<bool>(), 16)) {
        let full = enumerate_domain(&inst.context()).unwrap();
        let sub = full.filter("sub", |c| keep[c.payload.as_int().unwrap() as usize]);
        let big = replaces(&inst, 0, 1, &full, 2);
        let small = replaces(&inst, 0, 1, &sub, 2);
        if big.holds {
            prop_assert!(small.holds);
        }
        prop_assert!(small.violations.len() <= big.violations.len());
        if sub.len() < full.len() {
            prop_assert!(!small.conclusive);
        }
    }
}
