use proptest::prelude::*;

use pcsm::brute::{brute_optimum, brute_pareto, DEFAULT_MAX_N};
use pcsm::rational::{int, ratio};
use pcsm::{Instance, Rational, SetFunction, Subset, SubmodularOracle};

const N: usize = 6;

fn weights() -> impl Strategy<Value = Vec<Rational>> {
    prop::collection::vec((0i128..20, 1i128..5), N).prop_map(|v| v.into_iter().map(|(a, b)| ratio(a, b)).collect())
}

fn oracle() -> impl Strategy<Value = SubmodularOracle> {
    prop_oneof![
        weights().prop_map(|w| SubmodularOracle::linear(w).unwrap()),
        (weights(), 0i128..60).prop_map(|(w, cap)| SubmodularOracle::concave_of_modular(w, int(cap)).unwrap()),
        (prop::collection::vec(prop::collection::vec(0usize..5, 0..4), N), prop::collection::vec(1i128..6, 5))
            .prop_map(|(sets, w)| SubmodularOracle::coverage(5, sets, w.into_iter().map(int).collect()).unwrap()),
    ]
}

fn rows(count: usize) -> impl Strategy<Value = Vec<Vec<Rational>>> {
    prop::collection::vec(prop::collection::vec((0i128..8).prop_map(int), N), count)
}

fn instance() -> impl Strategy<Value = Instance> {
    (oracle(), rows(2), rows(1), prop::collection::vec(1i128..20, 2), prop::collection::vec(1i128..20, 1)).prop_map(
        |(f, pack, cover, pb, cb)| {
            Instance::new(pack, cover, pb.into_iter().map(int).collect(), cb.into_iter().map(int).collect(), f).unwrap()
        },
    )
}

/// Weighted coverage recomputed from a fresh union.
fn union_value(universe: usize, sets: &[Vec<usize>], weights: &[Rational], set: &Subset) -> Rational {
    let mut hit = vec![false; universe];
    for l in set.iter() {
        for &u in &sets[l] {
            hit[u] = true;
        }
    }
    hit.iter().zip(weights).filter(|(h, _)| **h).map(|(_, w)| *w).sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn oracles_are_monotone_and_submodular(f in oracle(), a in 0u64..1 << N, b in 0u64..1 << N, x in 0..N) {
        let small = Subset::from_mask(a & b);
        let big = Subset::from_mask(b);
        prop_assert!(f.value(&small) <= f.value(&big));
        prop_assert_eq!(f.value(&Subset::empty()), int(0));
        if !big.contains(x) {
            prop_assert!(f.marginal(&small, x).unwrap() >= f.marginal(&big, x).unwrap());
        }
    }

    #[test]
    fn coverage_matches_union(sets in prop::collection::vec(prop::collection::vec(0usize..7, 0..5), N),
                              w in prop::collection::vec(1i128..9, 7), mask in 0u64..1 << N) {
        let w: Vec<Rational> = w.into_iter().map(int).collect();
        let f = SubmodularOracle::coverage(7, sets.clone(), w.clone()).unwrap();
        let s = Subset::from_mask(mask);
        prop_assert_eq!(f.value(&s), union_value(7, &sets, &w, &s));
    }

    #[test]
    fn feasibility_views_agree(inst in instance(), mask in 0u64..1 << N) {
        let s = Subset::from_mask(mask);
        let exact = inst.is_feasible(&s);
        let profile = inst.violation_profile(&s).unwrap();
        prop_assert_eq!(exact.feasible, profile.is_feasible());
        prop_assert_eq!(exact.feasible, inst.meets(&s, &int(0)));
        let (pack, cover) = inst.ratios_f64(&s);
        prop_assert_eq!(pack <= 1.0 && cover >= 1.0, exact.feasible);
    }

    #[test]
    fn brute_matches_double_enumeration(inst in instance()) {
        let mut best: Option<(Rational, Subset)> = None;
        for mask in 0u64..1 << N {
            let s = Subset::from_mask(mask);
            if !inst.is_feasible(&s).feasible {
                continue;
            }
            let v = inst.value(&s);
            if best.as_ref().map_or(true, |(bv, bs)| v > *bv || (v == *bv && s < *bs)) {
                best = Some((v, s));
            }
        }
        let got = brute_optimum(&inst, DEFAULT_MAX_N).unwrap();
        match best {
            None => prop_assert_eq!(got.feasible_count, 0),
            Some((v, s)) => {
                prop_assert_eq!(got.best_value, v);
                prop_assert_eq!(got.best_set, s);
            }
        }
        let pareto = brute_pareto(&inst).unwrap();
        for mask in 0u64..1 << N {
            let s = Subset::from_mask(mask);
            let (pack, cover) = (inst.pack_vector(&s), inst.cover_vector(&s));
            let e = pareto.iter().find(|e| e.pack == pack && e.cover == cover);
            prop_assert!(e.is_some_and(|e| e.best_value >= inst.value(&s)));
        }
    }
}
