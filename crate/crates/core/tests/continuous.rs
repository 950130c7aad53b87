use pcsm::brute::{brute_optimum, DEFAULT_MAX_N};
use pcsm::continuous::{
    continuous_greedy, enumerate_guesses, multilinear_estimate, round_and_filter, FractionalPoint, GreedyOptions,
    Guess, ResidualObjective, UnitForm,
};
use pcsm::gen::{generate_instance, Family, GenSpec};
use pcsm::rational::{int, to_f64};
use pcsm::{Instance, Params, SetFunction, Subset, SubmodularOracle};

fn family(i: u64) -> Family {
    [Family::Linear, Family::Coverage, Family::ConcaveOfModular][(i % 3) as usize]
}

/// Elements of `set` in greedy order, ties broken by the smaller index.
fn greedy_order(inst: &Instance, set: &Subset) -> Vec<usize> {
    let mut left: Vec<usize> = set.iter().collect();
    let mut taken = Subset::empty();
    let mut out = Vec::new();
    while !left.is_empty() {
        let base = inst.value(&taken);
        let (pos, _) = left
            .iter()
            .enumerate()
            .map(|(i, &l)| (i, inst.value(&taken.with(l)) - base))
            .fold(None, |best: Option<(usize, _)>, (i, g)| match best {
                Some((_, bg)) if bg >= g => best,
                _ => Some((i, g)),
            })
            .unwrap();
        let l = left.remove(pos);
        taken.insert(l);
        out.push(l);
    }
    out
}

/// Normalized covering of `set`, with each entry capped at the row bound.
fn normalized_cover(inst: &Instance, set: &Subset) -> Vec<f64> {
    (0..inst.c())
        .filter(|&j| inst.cover_bound[j] > int(0))
        .map(|j| {
            let b = to_f64(&inst.cover_bound[j]);
            set.iter().map(|l| (to_f64(&inst.covering[j][l]) / b).min(1.0)).sum()
        })
        .collect()
}

#[test]
fn correct_guess_is_enumerated_and_fits_the_residual_polytope() {
    for seed in 0..12u64 {
        let inst = generate_instance(&GenSpec::new(7, 1 + (seed % 2) as usize, 1, family(seed), 70 + seed)).unwrap();
        let opt = brute_optimum(&inst, DEFAULT_MAX_N).unwrap();
        assert!(opt.feasible_count > 0);
        let form = UnitForm::new(&inst);
        let params = Params { gamma: 2.0, ..Params::from_delta(0.1, 0.3, inst.p() + inst.c()).unwrap() };
        let grid: Vec<u32> = normalized_cover(&inst, &opt.best_set)
            .iter()
            .map(|&v| ((v.ln() / (1.0 + params.delta).ln() + 1e-9).floor() as u32).min(form.grid_top(params.delta)))
            .collect();
        // Top greedy elements of O, closed under adding the elements of O
        // that the preprocessing would discard.
        let mut e1 = Subset::from_indices(greedy_order(&inst, &opt.best_set).into_iter().take(2));
        let guess = loop {
            let g = Guess::preprocess(&inst, &form, &params, e1.clone(), grid.clone()).unwrap();
            let dropped = opt.best_set.intersection(&g.e0);
            if dropped.is_empty() {
                break g;
            }
            e1 = e1.union(&dropped);
        };
        assert!(e1.len() <= form.chosen_limit(&params));
        let all = enumerate_guesses(&inst, &form, &params, u128::MAX).unwrap();
        assert!(!all.truncated);
        assert!(
            all.guesses.iter().any(|g| g.e1 == e1 && g.grid == grid && g.e0 == guess.e0),
            "seed {seed}: guess ({e1:?}, {grid:?}) missing"
        );
        let rest = opt.best_set.difference(&e1);
        assert!(rest.is_subset(&guess.residual_subset()));
        for (i, row) in form.pack.iter().enumerate() {
            let used: f64 = rest.iter().map(|l| row[l]).sum();
            assert!(used <= guess.r[i] + 1e-9, "seed {seed} pack row {i}");
        }
        for (j, row) in form.cover.iter().enumerate() {
            let got: f64 = rest.iter().map(|l| row[l]).sum();
            assert!(got + 1e-9 >= guess.s[j], "seed {seed} cover row {j}");
        }
    }
}

#[test]
fn enumerated_guesses_are_consistent_partitions() {
    for seed in 0..8u64 {
        let inst = generate_instance(&GenSpec::new(6, 2, 1, family(seed), 300 + seed)).unwrap();
        let form = UnitForm::new(&inst);
        let params = Params::from_delta(0.1, 0.4, 3).unwrap();
        let all = enumerate_guesses(&inst, &form, &params, 5_000).unwrap();
        for g in &all.guesses {
            assert!(g.is_consistent(&inst));
            let mut union = g.e0.union(&g.e1);
            for &l in &g.residual {
                assert!(!union.contains(l));
                union.insert(l);
            }
            assert_eq!(union, Subset::full(inst.n));
            assert!(g.e0.iter().all(|l| !g.residual.contains(&l)));
            for i in (0..inst.p()).filter(|&i| inst.pack_bound[i] > int(0)) {
                let used: pcsm::Rational = g.e1.iter().map(|l| inst.packing[i][l]).sum();
                let slack = to_f64(&(int(1) - used / inst.pack_bound[i]));
                assert_eq!(g.critical_pack.contains(&i), slack <= params.delta + 1e-12, "row {i}");
            }
            for l in g.large_critical.iter() {
                assert!(g.critical_pack.iter().any(|&i| form.pack[i][l] > 0.0 && form.pack[i][l] >= params.beta * g.r[i]));
            }
        }
    }
}

#[test]
fn rounding_frequencies_match_the_point() {
    let f = SubmodularOracle::linear(vec![int(1); 6]).unwrap();
    let inst = Instance::new(vec![vec![int(1); 6]], vec![], vec![int(6)], vec![], f).unwrap();
    let form = UnitForm::new(&inst);
    let params = Params::from_delta(0.1, 0.2, 1).unwrap();
    let g = Guess::derive(&form, &params, Subset::empty(), Subset::from_indices([5]), vec![]).unwrap();
    let x = FractionalPoint { elements: g.residual.clone(), x: vec![0.1, 0.3, 0.5, 0.7, 0.9] };
    let trials = 10_000u64;
    let mut hits = [0u64; 5];
    for t in 0..trials {
        let r = round_and_filter(&g, &x, t);
        assert!(r.chosen.contains(5));
        for (k, &l) in x.elements.iter().enumerate() {
            hits[k] += r.chosen.contains(l) as u64;
        }
    }
    for (k, &p) in x.x.iter().enumerate() {
        let freq = hits[k] as f64 / trials as f64;
        let sigma = (p * (1.0 - p) / trials as f64).sqrt();
        assert!((freq - p).abs() <= 4.0 * sigma, "element {k}: {freq} vs {p}");
    }
}

/// `Σ_S f(S) Π x_ℓ Π (1 − x_ℓ)` over all subsets.
fn exact_multilinear(f: &SubmodularOracle, x: &[f64]) -> f64 {
    (0..1u64 << x.len())
        .map(|mask| {
            let w: f64 = (0..x.len()).map(|l| if mask >> l & 1 == 1 { x[l] } else { 1.0 - x[l] }).product();
            w * to_f64(&f.eval_mask(mask))
        })
        .sum()
}

#[test]
fn multilinear_estimate_matches_exact_expansion() {
    let oracles = [
        SubmodularOracle::linear(vec![int(3), int(1), int(4), int(1), int(5), int(9)]).unwrap(),
        SubmodularOracle::coverage(
            5,
            vec![vec![0, 1], vec![1, 2], vec![2, 3], vec![3, 4], vec![0, 4], vec![0, 2, 4]],
            vec![int(2), int(1), int(3), int(1), int(2)],
        )
        .unwrap(),
        SubmodularOracle::concave_of_modular(vec![int(2), int(3), int(1), int(4), int(2), int(2)], int(7)).unwrap(),
    ];
    let x = [0.15, 0.4, 0.5, 0.65, 0.8, 0.95];
    for (i, f) in oracles.iter().enumerate() {
        let exact = exact_multilinear(f, &x);
        let est = multilinear_estimate(f, &x, 100_000, 17 + i as u64).unwrap();
        assert!((est.mean - exact).abs() <= 4.0 * est.stderr, "oracle {i}: {} vs {exact}", est.mean);
    }
}

#[test]
fn residual_objective_is_monotone_submodular() {
    for seed in 0..6u64 {
        let inst = generate_instance(&GenSpec::new(8, 1, 1, family(seed), 900 + seed)).unwrap();
        let form = UnitForm::new(&inst);
        let params = Params::from_delta(0.1, 0.3, 2).unwrap();
        let g = Guess::derive(&form, &params, Subset::from_indices([7]), Subset::from_indices([0, 3]), vec![0; form.c()]).unwrap();
        let obj = ResidualObjective::new(&inst, &g);
        let m = obj.ground_size();
        assert_eq!(m, 5);
        for a in 0..1u64 << m {
            for b in 0..1u64 << m {
                if a & b != a {
                    continue;
                }
                let (sa, sb) = (Subset::from_mask(a), Subset::from_mask(b));
                assert!(obj.value(&sa) <= obj.value(&sb));
                for x in (0..m).filter(|&x| b >> x & 1 == 0) {
                    assert!(obj.marginal(&sa, x).unwrap() >= obj.marginal(&sb, x).unwrap());
                }
            }
        }
        assert_eq!(obj.value(&Subset::empty()), int(0));
    }
}

#[test]
fn greedy_point_reaches_the_concave_floor() {
    // Cardinality 6 over 10 elements with overlapping coverage.
    let sets: Vec<Vec<usize>> = (0..10).map(|l| vec![l % 7, (l * 3 + 1) % 7, (l + 5) % 9]).collect();
    let f = SubmodularOracle::coverage(9, sets, vec![int(1); 9]).unwrap();
    let inst = Instance::new(vec![vec![int(1); 10]], vec![], vec![int(6)], vec![], f.clone()).unwrap();
    let opt = brute_optimum(&inst, DEFAULT_MAX_N).unwrap();
    let form = UnitForm::new(&inst);
    let params = Params { alpha: 0.9, gamma: 1.0, ..Params::from_delta(0.1, 0.2, 1).unwrap() };
    let g = Guess::derive(&form, &params, Subset::empty(), Subset::empty(), vec![]).unwrap();
    assert!(g.large_pack.is_empty());
    let target = (1.0 - (-1.0f64).exp() - 0.05) * to_f64(&opt.best_value);
    for seed in 0..3 {
        let x = continuous_greedy(&inst, &form, &g, &GreedyOptions { steps: 40, samples: 60 }, seed).unwrap().unwrap();
        assert!(x.x.iter().sum::<f64>() <= 6.0 + 1e-9);
        let xbar = x.scaled(1.0 / (1.0 + params.delta));
        let est = multilinear_estimate(&f, &xbar.dense(10), 20_000, seed).unwrap();
        assert!(est.mean + 4.0 * est.stderr >= target, "seed {seed}: {} < {target}", est.mean);
    }
}
