//! Greedy DP for one packing and one covering row, with big-element guessing
//! and forbidden prefix sets.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{PcsmError, Result};
use crate::greedy_dp::{check_eps, scale_instance};
use crate::instance::{Instance, IntInstance};
use crate::oracle::SetFunction;
use crate::rational::Rational;
use crate::subset::Subset;

pub const DEFAULT_GUESS_BUDGET: u128 = 1_000_000;

/// Which forbidden set an extension must avoid.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub enum Recurrence {
    /// `ℓ ∉ F[p′]` for the cell being extended.
    #[default]
    Forward,
    /// `ℓ ∉ F[p′ + P_ℓ]` for the cell being written.
    Backward,
}

#[derive(Clone, Debug)]
pub struct ForbiddenOptions {
    pub recurrence: Recurrence,
    pub exact_keys: bool,
    pub guess_budget: u128,
    pub cell_budget: u128,
}

impl Default for ForbiddenOptions {
    fn default() -> Self {
        ForbiddenOptions {
            recurrence: Recurrence::Forward,
            exact_keys: false,
            guess_budget: DEFAULT_GUESS_BUDGET,
            cell_budget: crate::greedy_dp::DEFAULT_CELL_BUDGET,
        }
    }
}

/// Small elements in non-increasing `C/P` order with prefix packing sums.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ForbiddenIndex {
    pub order: Vec<usize>,
    /// `prefix_pack[i]` is the packing of the first `i` elements.
    pub prefix_pack: Vec<u64>,
    pub pack_bound: u64,
}

impl ForbiddenIndex {
    /// Zero-packing elements come first; remaining ties go to the lower index.
    pub fn build(small: &[usize], cover: &[u64], pack: &[u64], pack_bound: u64) -> Self {
        let mut order = small.to_vec();
        order.sort_by(|&x, &y| {
            // C_x/P_x > C_y/P_y  ⇔  C_x·P_y > C_y·P_x, with P = 0 as +∞.
            let key = |l: usize| (pack[l] != 0) as u8;
            key(x)
                .cmp(&key(y))
                .then_with(|| ((cover[y] as u128) * (pack[x] as u128)).cmp(&((cover[x] as u128) * (pack[y] as u128))))
                .then(x.cmp(&y))
        });
        let mut prefix_pack = vec![0u64];
        for &l in &order {
            prefix_pack.push(prefix_pack.last().unwrap() + pack[l]);
        }
        ForbiddenIndex { order, prefix_pack, pack_bound }
    }

    /// Length of `F[p′]`: the shortest prefix packing at least `p − p′`,
    /// or every small element when no prefix does.
    pub fn prefix_len(&self, p_prime: u64) -> usize {
        let need = self.pack_bound.saturating_sub(p_prime);
        self.prefix_pack.partition_point(|&s| s < need).min(self.order.len())
    }

    pub fn lookup(&self, p_prime: u64) -> Subset {
        Subset::from_indices(self.order[..self.prefix_len(p_prime)].iter().copied())
    }
}

/// Populated cells of one guess's table.
#[derive(Clone, Debug, Serialize)]
pub struct GuessTable {
    pub guess: Subset,
    /// `(c′, p′, value, set)`, sorted by `(p′, c′)`.
    pub cells: Vec<(u64, u64, Rational, Subset)>,
    pub best: Option<(Rational, Subset)>,
}

#[derive(Clone, Debug)]
pub struct ForbiddenOutcome {
    pub best: Option<(Rational, Subset)>,
    pub guesses: usize,
    pub big: Vec<usize>,
}

fn check_shape<F>(inst: &IntInstance<F>) -> Result<()> {
    if inst.p() != 1 || inst.c() != 1 {
        return Err(PcsmError::InvalidInstance(format!(
            "forbidden-set DP needs exactly one packing and one covering row, got p={} c={}",
            inst.p(),
            inst.c()
        )));
    }
    Ok(())
}

/// Elements with `P_ℓ ≥ ε·p` and `P_ℓ > 0`.
pub fn big_elements<F>(inst: &IntInstance<F>, eps: &Rational) -> Vec<usize> {
    let p = Rational::from_integer(inst.pack_bound[0] as i128);
    (0..inst.n)
        .filter(|&l| {
            let w = inst.packing[0][l];
            w > 0 && Rational::from_integer(w as i128) >= eps * p
        })
        .collect()
}

fn max_guess_size(eps: &Rational) -> usize {
    (Rational::from_integer(1) / eps).floor().to_integer() as usize
}

fn binomial_prefix_sum(b: usize, k: usize) -> u128 {
    let mut total: u128 = 0;
    let mut term: u128 = 1;
    for i in 0..=k.min(b) {
        total = total.saturating_add(term);
        term = term.saturating_mul((b - i) as u128) / (i as u128 + 1);
    }
    total
}

/// All subsets of `big` with at most `⌊1/ε⌋` elements that fit the packing bound.
pub fn enumerate_guesses<F>(inst: &IntInstance<F>, big: &[usize], eps: &Rational, budget: u128) -> Result<Vec<Subset>> {
    let k = max_guess_size(eps);
    let count = binomial_prefix_sum(big.len(), k);
    if count > budget {
        return Err(PcsmError::Budget(format!(
            "{count} guesses over {} big elements exceed the budget of {budget}",
            big.len()
        )));
    }
    let mut out = Vec::new();
    let mut stack: Vec<usize> = Vec::new();
    fn rec<F>(
        inst: &IntInstance<F>,
        big: &[usize],
        start: usize,
        k: usize,
        pack: u64,
        stack: &mut Vec<usize>,
        out: &mut Vec<Subset>,
    ) {
        out.push(Subset::from_indices(stack.iter().copied()));
        if stack.len() == k {
            return;
        }
        for i in start..big.len() {
            let w = pack + inst.packing[0][big[i]];
            if w <= inst.pack_bound[0] {
                stack.push(big[i]);
                rec(inst, big, i + 1, k, w, stack, out);
                stack.pop();
            }
        }
    }
    rec(inst, big, 0, k, 0, &mut stack, &mut out);
    out.sort();
    Ok(out)
}

fn better(a: &Option<(Rational, Subset)>, value: &Rational, set: &Subset) -> bool {
    match a {
        None => true,
        Some((v, s)) => value > v || (value == v && set < s),
    }
}

/// Runs the table for a single guess `G` over the small elements.
pub fn run_guess<F: SetFunction>(
    inst: &IntInstance<F>,
    index: &ForbiddenIndex,
    small: &[usize],
    guess: &Subset,
    opts: &ForbiddenOptions,
) -> Result<GuessTable> {
    check_shape(inst)?;
    let p = inst.pack_bound[0];
    let c = inst.cover_bound[0];
    let cover = &inst.covering[0];
    let pack = &inst.packing[0];
    let c_cap = if opts.exact_keys { cover.iter().sum::<u64>() } else { c };
    let width = c_cap as usize + 1;
    let cells_total = (p as u128 + 1) * width as u128;
    if cells_total > opts.cell_budget {
        return Err(PcsmError::Budget(format!(
            "table has {cells_total} cells, budget is {}",
            opts.cell_budget
        )));
    }
    let key_c = |v: u64| v.min(c_cap);
    let gp: u64 = guess.iter().map(|l| pack[l]).sum();
    let gc: u64 = key_c(guess.iter().map(|l| cover[l]).sum());
    let mut table: Vec<Option<(Rational, Subset)>> = vec![None; cells_total as usize];
    let idx = |c: u64, p: u64| p as usize * width + c as usize;
    if gp <= p {
        table[idx(gc, gp)] = Some((inst.objective.value(guess), guess.clone()));
    }
    // Membership masks for F[p′], rebuilt per packing level.
    let mut rank = vec![usize::MAX; inst.n];
    for (i, &l) in index.order.iter().enumerate() {
        rank[l] = i;
    }
    let forbidden = |l: usize, level: u64| rank[l] < index.prefix_len(level);

    for pp in 0..=p {
        for cc in 0..=c_cap {
            let Some((_, set)) = table[idx(cc, pp)].clone() else { continue };
            for &l in small {
                if set.contains(l) {
                    continue;
                }
                let np = pp + pack[l];
                if np > p {
                    continue;
                }
                let blocked = match opts.recurrence {
                    Recurrence::Forward => forbidden(l, pp),
                    Recurrence::Backward => forbidden(l, np),
                };
                if blocked {
                    continue;
                }
                let nc = key_c(cc + cover[l]);
                let ext = set.with(l);
                let value = inst.objective.value(&ext);
                let slot = &mut table[idx(nc, np)];
                if better(slot, &value, &ext) {
                    *slot = Some((value, ext));
                }
            }
        }
    }

    let mut cells = Vec::new();
    let mut best: Option<(Rational, Subset)> = None;
    for pp in 0..=p {
        let f_len = index.prefix_len(pp);
        let f_set = Subset::from_indices(index.order[..f_len].iter().copied());
        let f_cover: u64 = f_set.iter().map(|l| cover[l]).sum();
        for cc in 0..=c_cap {
            if let Some((value, set)) = &table[idx(cc, pp)] {
                cells.push((cc, pp, *value, set.clone()));
                if cc + f_cover >= c {
                    let out = set.union(&f_set);
                    let v = inst.objective.value(&out);
                    if better(&best, &v, &out) {
                        best = Some((v, out));
                    }
                }
            }
        }
    }
    Ok(GuessTable { guess: guess.clone(), cells, best })
}

/// Small elements and their forbidden index for a given `ε`.
pub fn prepare<F>(inst: &IntInstance<F>, eps: &Rational) -> Result<(Vec<usize>, Vec<usize>, ForbiddenIndex)> {
    check_shape(inst)?;
    check_eps(eps)?;
    let big = big_elements(inst, eps);
    let small: Vec<usize> = (0..inst.n).filter(|l| big.binary_search(l).is_err()).collect();
    let index = ForbiddenIndex::build(&small, &inst.covering[0], &inst.packing[0], inst.pack_bound[0]);
    Ok((big, small, index))
}

/// Best `T[c′,p′] ∪ F[p′]` over all guesses; covering is met exactly and
/// packing stays within `(1+ε)p`.
pub fn forbidden_dp_solve<F: SetFunction>(
    inst: &IntInstance<F>,
    eps: &Rational,
    opts: &ForbiddenOptions,
) -> Result<ForbiddenOutcome> {
    let (big, small, index) = prepare(inst, eps)?;
    let guesses = enumerate_guesses(inst, &big, eps, opts.guess_budget)?;
    let tables: Vec<Result<Option<(Rational, Subset)>>> = guesses
        .par_iter()
        .map(|g| run_guess(inst, &index, &small, g, opts).map(|t| t.best))
        .collect();
    let mut best = None;
    for t in tables {
        if let Some((v, s)) = t? {
            if better(&best, &v, &s) {
                best = Some((v, s));
            }
        }
    }
    Ok(ForbiddenOutcome { best, guesses: guesses.len(), big })
}

/// Cardinality variant: the packing row is all ones with bound `k`; no
/// guessing, every element is small.
pub fn cardinality_solve<F: SetFunction>(inst: &IntInstance<F>, opts: &ForbiddenOptions) -> Result<ForbiddenOutcome> {
    check_shape(inst)?;
    if inst.packing[0].iter().any(|&w| w != 1) {
        return Err(PcsmError::InvalidInstance("cardinality variant needs an all-ones packing row".into()));
    }
    let small: Vec<usize> = (0..inst.n).collect();
    let index = ForbiddenIndex::build(&small, &inst.covering[0], &inst.packing[0], inst.pack_bound[0]);
    let table = run_guess(inst, &index, &small, &Subset::empty(), opts)?;
    Ok(ForbiddenOutcome { best: table.best, guesses: 1, big: Vec::new() })
}

#[derive(Clone, Debug, Serialize)]
pub struct PolyOutcome {
    pub best: Option<Subset>,
    pub value: Option<Rational>,
    /// `None` when the covering bound is zero.
    pub cover_ratio: Option<Rational>,
    /// Zero when the packing bound is zero and unused.
    pub pack_ratio: Option<Rational>,
}

/// Scales rational data with `ε/2`, runs the forbidden DP with `ε/2` and
/// reports the ratios on the original instance.
pub fn solve_polynomial(inst: &Instance, eps: &Rational, opts: &ForbiddenOptions) -> Result<PolyOutcome> {
    check_eps(eps)?;
    if inst.p() != 1 || inst.c() != 1 {
        return Err(PcsmError::InvalidInstance("polynomial variant needs p = c = 1".into()));
    }
    let half = eps / Rational::from_integer(2);
    let scaled = scale_instance(inst, &half)?;
    let out = forbidden_dp_solve(&scaled.scaled, &half, opts)?;
    let Some((_, set)) = out.best else {
        return Ok(PolyOutcome { best: None, value: None, cover_ratio: None, pack_ratio: None });
    };
    let zero = Rational::from_integer(0);
    let used_p = inst.pack_vector(&set)[0];
    let used_c = inst.cover_vector(&set)[0];
    let pack_ratio = if inst.pack_bound[0] == zero {
        (used_p == zero).then_some(zero)
    } else {
        Some(used_p / inst.pack_bound[0])
    };
    let cover_ratio = (inst.cover_bound[0] != zero).then(|| used_c / inst.cover_bound[0]);
    Ok(PolyOutcome { value: Some(inst.value(&set)), best: Some(set), cover_ratio, pack_ratio })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::SubmodularOracle;
    use crate::rational::{int, ratio};

    #[test]
    fn index_example() {
        let idx = ForbiddenIndex::build(&[0, 1, 2], &[3, 2, 1], &[1, 1, 1], 3);
        assert_eq!(idx.order, vec![0, 1, 2]);
        assert_eq!(idx.lookup(2), Subset::from_indices([0]));
        assert_eq!(idx.lookup(3), Subset::empty());
        assert_eq!(idx.lookup(0), Subset::from_indices([0, 1, 2]));
    }

    #[test]
    fn zero_pack_first_then_index_ties() {
        let idx = ForbiddenIndex::build(&[0, 1, 2, 3], &[2, 4, 0, 1], &[2, 4, 0, 1], 10);
        assert_eq!(idx.order, vec![2, 0, 1, 3]);
    }

    #[test]
    fn short_of_need_takes_everything() {
        let idx = ForbiddenIndex::build(&[0, 1], &[1, 1], &[1, 1], 5);
        assert_eq!(idx.prefix_len(0), 2);
    }

    #[test]
    fn cardinality_zero() {
        let f = SubmodularOracle::linear(vec![int(1); 3]).unwrap();
        let free = IntInstance::new(vec![vec![1; 3]], vec![vec![1; 3]], vec![0], vec![0], f.clone()).unwrap();
        let out = cardinality_solve(&free, &ForbiddenOptions::default()).unwrap();
        assert_eq!(out.best.unwrap().1, Subset::empty());
        let tight = IntInstance::new(vec![vec![1; 3]], vec![vec![1; 3]], vec![0], vec![1], f).unwrap();
        assert!(cardinality_solve(&tight, &ForbiddenOptions::default()).unwrap().best.is_none());
    }

    #[test]
    fn guess_budget_refusal() {
        let f = SubmodularOracle::linear(vec![int(1); 30]).unwrap();
        let inst = IntInstance::new(vec![vec![10; 30]], vec![vec![0; 30]], vec![40], vec![0], f).unwrap();
        let opts = ForbiddenOptions { guess_budget: 100, ..Default::default() };
        let err = forbidden_dp_solve(&inst, &ratio(1, 4), &opts).unwrap_err();
        assert!(matches!(err, PcsmError::Budget(_)));
    }

    #[test]
    fn guesses_respect_packing() {
        let f = SubmodularOracle::linear(vec![int(1); 3]).unwrap();
        let inst = IntInstance::new(vec![vec![3, 3, 2]], vec![vec![0; 3]], vec![5], vec![0], f).unwrap();
        let big = big_elements(&inst, &ratio(1, 4));
        assert_eq!(big, vec![0, 1, 2]);
        let g = enumerate_guesses(&inst, &big, &ratio(1, 4), 1000).unwrap();
        assert!(g.iter().all(|s| s.iter().map(|l| inst.packing[0][l]).sum::<u64>() <= 5));
        assert!(!g.contains(&Subset::from_indices([0, 1])));
        assert!(g.contains(&Subset::from_indices([0, 2])));
    }

    #[test]
    fn polynomial_rejects_multi_row() {
        let f = SubmodularOracle::linear(vec![int(1)]).unwrap();
        let inst = Instance::new(vec![], vec![], vec![], vec![], f).unwrap();
        assert!(solve_polynomial(&inst, &int(1), &ForbiddenOptions::default()).is_err());
    }
}
