use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{continuous_greedy, enumerate_guesses, FractionalPoint, GreedyOptions, Guess, UnitForm};
use crate::error::Result;
use crate::instance::Instance;
use crate::params::Params;
use crate::rational::{from_f64, Rational};
use crate::subset::Subset;

/// Outcome of one rounding trial.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Rounding {
    /// Independent sample `R_D`.
    pub sampled: Subset,
    /// `R_D` minus the critical-large elements.
    pub kept: Subset,
    /// `E1 ∪ kept`.
    pub chosen: Subset,
}

/// Includes each `ℓ ∈ Ñ` with probability `x̄_ℓ`, drops the elements that are
/// large in a critical packing row and adds `E1`.
pub fn round_with<R: Rng>(guess: &Guess, xbar: &FractionalPoint, rng: &mut R) -> Rounding {
    let sampled: Subset = xbar.elements.iter().zip(&xbar.x).filter(|(_, &p)| rng.gen::<f64>() < p).map(|(&l, _)| l).collect();
    let kept = sampled.difference(&guess.large_critical);
    let chosen = guess.e1.union(&kept);
    Rounding { sampled, kept, chosen }
}

/// [`round_with`] driven by a fresh generator seeded with `seed`.
pub fn round_and_filter(guess: &Guess, xbar: &FractionalPoint, seed: u64) -> Rounding {
    round_with(guess, xbar, &mut ChaCha8Rng::seed_from_u64(seed))
}

#[derive(Clone, Debug, Serialize)]
pub struct ContinuousOptions {
    pub params: Params,
    pub greedy: GreedyOptions,
    /// Rounding trials per guess.
    pub trials: usize,
    /// Cap on the `(E1, c′)` pairs examined by the enumeration.
    pub budget: u128,
}

impl ContinuousOptions {
    /// Parameters from the theoretical schedule for `b = p + c` rows.
    pub fn theoretical(epsilon: f64, b: usize) -> Result<Self> {
        Ok(Self::with_params(Params::schedule(epsilon, b)?))
    }

    /// `α = δ³`, `β = δ²/(3b)`, `γ = 1/δ³` from a user-chosen `δ`.
    pub fn relaxed(epsilon: f64, delta: f64, b: usize) -> Result<Self> {
        Ok(Self::with_params(Params::from_delta(epsilon, delta, b)?))
    }

    pub fn with_params(params: Params) -> Self {
        ContinuousOptions { params, greedy: GreedyOptions::default(), trials: 20, budget: 100_000 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GuessStatus {
    /// The residual polytope is empty.
    Rejected,
    Rounded,
}

#[derive(Clone, Debug, Serialize)]
pub struct GuessReport {
    pub e1: Subset,
    pub grid: Vec<u32>,
    pub discarded: usize,
    pub residual: usize,
    pub critical_pack: Vec<usize>,
    pub critical_cover: Vec<usize>,
    pub large_critical: usize,
    pub status: GuessStatus,
    pub passed: usize,
    pub failed: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct MainOutcome {
    pub best: Option<Subset>,
    pub value: Option<Rational>,
    pub cover_ratio: Option<f64>,
    pub pack_ratio: Option<f64>,
    /// Rounding trials run over all guesses.
    pub trials: usize,
    pub guesses: usize,
    pub examined: u128,
    pub truncated: bool,
    pub reports: Vec<GuessReport>,
}

/// Runs every consistent guess through continuous greedy and repeated
/// rounding, and keeps the best set with `P·1_S ≤ 1` and `C·1_S ≥ (1−ε)`.
///
/// Randomness for guess `g` and trial `t` comes from stream `g` of a
/// generator seeded with `seed`, so results do not depend on scheduling.
pub fn solve_main(inst: &Instance, opts: &ContinuousOptions, seed: u64) -> Result<MainOutcome> {
    let form = UnitForm::new(inst);
    let enumeration = enumerate_guesses(inst, &form, &opts.params, opts.budget)?;
    let slack = from_f64(opts.params.epsilon, 1_000_000)?;
    let runs: Vec<GuessRun> = enumeration
        .guesses
        .par_iter()
        .enumerate()
        .map(|(g, guess)| run_guess(inst, &form, guess, opts, &slack, seed, g as u64))
        .collect::<Result<_>>()?;

    let mut best: Option<(Rational, Subset)> = None;
    let mut trials = 0;
    let mut reports = Vec::with_capacity(runs.len());
    for (report, used, cand) in runs {
        trials += used;
        reports.push(report);
        if let Some((v, s)) = cand {
            let better = match &best {
                None => true,
                Some((bv, bs)) => v > *bv || (v == *bv && s < *bs),
            };
            if better {
                best = Some((v, s));
            }
        }
    }
    let (cover_ratio, pack_ratio) = match &best {
        Some((_, s)) => {
            let (p, c) = inst.ratios_f64(s);
            (Some(c), Some(p))
        }
        None => (None, None),
    };
    let (value, best) = match best {
        Some((v, s)) => (Some(v), Some(s)),
        None => (None, None),
    };
    Ok(MainOutcome {
        best,
        value,
        cover_ratio,
        pack_ratio,
        trials,
        guesses: enumeration.guesses.len(),
        examined: enumeration.examined,
        truncated: enumeration.truncated,
        reports,
    })
}

/// Report, trials used and the best filtered set of one guess.
type GuessRun = (GuessReport, usize, Option<(Rational, Subset)>);

fn run_guess(
    inst: &Instance,
    form: &UnitForm,
    guess: &Guess,
    opts: &ContinuousOptions,
    slack: &Rational,
    seed: u64,
    stream: u64,
) -> Result<GuessRun> {
    let mut report = GuessReport {
        e1: guess.e1.clone(),
        grid: guess.grid.clone(),
        discarded: guess.e0.len(),
        residual: guess.residual.len(),
        critical_pack: guess.critical_pack.clone(),
        critical_cover: guess.critical_cover.clone(),
        large_critical: guess.large_critical.len(),
        status: GuessStatus::Rejected,
        passed: 0,
        failed: 0,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let Some(x) = continuous_greedy(inst, form, guess, &opts.greedy, rng.gen())? else {
        return Ok((report, 0, None));
    };
    report.status = GuessStatus::Rounded;
    let xbar = x.scaled(1.0 / (1.0 + opts.params.delta));
    // Without undetermined elements every trial returns E1.
    let trials = if xbar.elements.is_empty() { 1 } else { opts.trials.max(1) };
    let mut best: Option<(Rational, Subset)> = None;
    for _ in 0..trials {
        let s = round_with(guess, &xbar, &mut rng).chosen;
        if !inst.meets(&s, slack) {
            report.failed += 1;
            continue;
        }
        report.passed += 1;
        let v = inst.value(&s);
        if best.as_ref().is_none_or(|(bv, bs)| v > *bv || (v == *bv && s < *bs)) {
            best = Some((v, s));
        }
    }
    Ok((report, trials, best))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::SubmodularOracle;
    use crate::rational::int;

    fn guess_for(inst: &Instance, e1: &[usize]) -> Guess {
        let form = UnitForm::new(inst);
        let params = Params::from_delta(0.1, 0.2, 2).unwrap();
        Guess::derive(&form, &params, Subset::empty(), Subset::from_indices(e1.iter().copied()), vec![0; form.c()]).unwrap()
    }

    fn small() -> Instance {
        let f = SubmodularOracle::linear(vec![int(1); 4]).unwrap();
        Instance::new(vec![vec![int(1); 4]], vec![], vec![int(100)], vec![], f).unwrap()
    }

    #[test]
    fn zero_point_returns_e1() {
        let inst = small();
        let g = guess_for(&inst, &[1]);
        let x = FractionalPoint::zeros(g.residual.clone());
        let r = round_and_filter(&g, &x, 4);
        assert_eq!(r.chosen, Subset::from_indices([1]));
        assert!(r.sampled.is_empty());
    }

    #[test]
    fn no_large_elements_keeps_sample() {
        let inst = small();
        let g = guess_for(&inst, &[]);
        assert!(g.large_critical.is_empty());
        let x = FractionalPoint { elements: g.residual.clone(), x: vec![0.5; 4] };
        for seed in 0..20 {
            let r = round_and_filter(&g, &x, seed);
            assert_eq!(r.sampled, r.kept);
            assert_eq!(r.kept, r.chosen);
        }
    }

    #[test]
    fn critical_large_elements_are_dropped() {
        let f = SubmodularOracle::linear(vec![int(1); 3]).unwrap();
        let inst = Instance::new(vec![vec![int(9), int(1), int(0)]], vec![], vec![int(10)], vec![], f).unwrap();
        let g = guess_for(&inst, &[0]);
        assert_eq!(g.critical_pack, vec![0]);
        assert_eq!(g.large_critical, Subset::from_indices([1]));
        let x = FractionalPoint { elements: g.residual.clone(), x: vec![1.0, 1.0] };
        let r = round_and_filter(&g, &x, 0);
        assert_eq!(r.sampled, Subset::from_indices([1, 2]));
        assert_eq!(r.chosen, Subset::from_indices([0, 2]));
    }

    #[test]
    fn unconstrained_instance_takes_everything() {
        let inst = small();
        let mut opts = ContinuousOptions::relaxed(0.1, 0.5, 1).unwrap();
        opts.greedy = GreedyOptions { steps: 5, samples: 5 };
        opts.trials = 3;
        let out = solve_main(&inst, &opts, 1).unwrap();
        let best = out.best.unwrap();
        assert!(inst.meets(&best, &int(0)));
        assert!(out.value.unwrap() >= int(0));
    }

    #[test]
    fn seed_determinism() {
        let f = SubmodularOracle::coverage(4, vec![vec![0, 1], vec![1, 2], vec![2, 3]], vec![int(1); 4]).unwrap();
        let inst = Instance::new(vec![vec![int(1); 3]], vec![vec![int(1); 3]], vec![int(2)], vec![int(1)], f).unwrap();
        let mut opts = ContinuousOptions::relaxed(0.1, 0.5, 2).unwrap();
        opts.greedy = GreedyOptions { steps: 4, samples: 4 };
        let a = solve_main(&inst, &opts, 11).unwrap();
        let b = solve_main(&inst, &opts, 11).unwrap();
        assert_eq!(a.best, b.best);
        assert_eq!(a.trials, b.trials);
        assert!(a.pack_ratio.unwrap() <= 1.0);
    }
}
