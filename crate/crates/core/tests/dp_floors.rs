use pcsm::brute::{brute_optimum, brute_pareto, DEFAULT_MAX_N};
use pcsm::forbidden_dp::{forbidden_dp_solve, prepare, run_guess, enumerate_guesses, ForbiddenOptions, Recurrence};
use pcsm::gen::{generate_instance, Family, GenSpec};
use pcsm::greedy_dp::{vanilla_dp, DpOptions};
use pcsm::rational::{ratio, Rational};

fn family(i: u64) -> Family {
    [Family::Linear, Family::Coverage, Family::ConcaveOfModular][(i % 3) as usize]
}

#[test]
fn vanilla_quarter_floor() {
    let mut worst = 10.0f64;
    for seed in 0..60u64 {
        let spec = GenSpec::new(6 + (seed % 5) as usize, 1 + (seed % 2) as usize, 1 + (seed / 2 % 2) as usize, family(seed), seed);
        let inst = generate_instance(&spec).unwrap();
        let b = brute_optimum(&inst, DEFAULT_MAX_N).unwrap();
        assert!(b.feasible_count > 0);
        let out = vanilla_dp(&inst.to_integer().unwrap(), &DpOptions::default()).unwrap();
        let best = out.best.expect("a half-covering cell exists");
        assert!(best.value * Rational::from_integer(4) >= b.best_value, "seed {seed}");
        if b.best_value > Rational::from_integer(0) {
            worst = worst.min(pcsm::rational::to_f64(&(best.value / b.best_value)));
        }
    }
    eprintln!("worst vanilla ratio {worst}");
}

#[test]
fn forbidden_quarter_floor_both_recurrences() {
    let eps = ratio(1, 4);
    for rec in [Recurrence::Forward, Recurrence::Backward] {
        let mut worst = 10.0f64;
        for seed in 0..60u64 {
            let spec = GenSpec::new(6 + (seed % 5) as usize, 1, 1, family(seed), 1000 + seed);
            let inst = generate_instance(&spec).unwrap();
            let b = brute_optimum(&inst, DEFAULT_MAX_N).unwrap();
            let int = inst.to_integer().unwrap();
            let opts = ForbiddenOptions { recurrence: rec, ..Default::default() };
            let out = forbidden_dp_solve(&int, &eps, &opts).unwrap();
            let (v, s) = out.best.expect("solution");
            let pack = inst.pack_vector(&s)[0];
            let cover = inst.cover_vector(&s)[0];
            assert!(cover >= inst.cover_bound[0]);
            assert!(pack <= (Rational::from_integer(1) + eps) * inst.pack_bound[0]);
            assert!(v * Rational::from_integer(4) >= b.best_value, "seed {seed} {rec:?}");
            if b.best_value > Rational::from_integer(0) {
                worst = worst.min(pcsm::rational::to_f64(&(v / b.best_value)));
            }
            let (big, small, index) = prepare(&int, &eps).unwrap();
            for g in enumerate_guesses(&int, &big, &eps, 1_000_000).unwrap() {
                let t = run_guess(&int, &index, &small, &g, &opts).unwrap();
                for (_, pp, _, set) in &t.cells {
                    assert!(set.is_disjoint(&index.lookup(*pp)));
                }
            }
        }
        eprintln!("worst forbidden ratio {rec:?} {worst}");
    }
}

#[test]
fn pareto_dominates_exact_cells() {
    for seed in 0..20u64 {
        let inst = generate_instance(&GenSpec::new(7, 1, 1, family(seed), 500 + seed)).unwrap();
        let pareto = brute_pareto(&inst).unwrap();
        let out = vanilla_dp(&inst.to_integer().unwrap(), &DpOptions { exact_keys: true, ..Default::default() }).unwrap();
        for cell in out.table.cells() {
            let cov: Vec<Rational> = cell.key.cover.iter().map(|&v| Rational::from_integer(v as i128)).collect();
            let pk: Vec<Rational> = cell.key.pack.iter().map(|&v| Rational::from_integer(v as i128)).collect();
            let e = pareto.iter().find(|e| e.cover == cov && e.pack == pk).expect("signature exists");
            assert!(e.best_value >= cell.value);
        }
    }
}
