//! Greedy dynamic program over (cardinality, covering, packing) cells, its
//! completion phase, and the rescaling that makes it polynomial.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{PcsmError, Result};
use crate::instance::{Instance, IntInstance};
use crate::oracle::SetFunction;
use crate::rational::{ceil_div, floor_div, Rational};
use crate::subset::Subset;

pub const DEFAULT_CELL_BUDGET: u128 = 50_000_000;

#[derive(Clone, Debug)]
pub struct DpOptions {
    /// Keep raw covering sums as keys instead of clamping them at the bound.
    pub exact_keys: bool,
    pub cell_budget: u128,
}

impl Default for DpOptions {
    fn default() -> Self {
        DpOptions { exact_keys: false, cell_budget: DEFAULT_CELL_BUDGET }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct DpKey {
    pub q: usize,
    pub cover: Vec<u64>,
    pub pack: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DpCell {
    pub key: DpKey,
    pub value: Rational,
    pub set: Subset,
}

/// Populated cells only; an absent key is the empty entry.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DpTable {
    cells: BTreeMap<DpKey, (Rational, Subset)>,
}

impl DpTable {
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn get(&self, key: &DpKey) -> Option<&Subset> {
        self.cells.get(key).map(|(_, s)| s)
    }

    pub fn cells(&self) -> impl Iterator<Item = DpCell> + '_ {
        self.cells.iter().map(|(k, (v, s))| DpCell { key: k.clone(), value: *v, set: s.clone() })
    }

    /// Offer a candidate; keeps the larger value, then the lexicographically smaller set.
    fn offer(&mut self, key: DpKey, value: Rational, set: Subset) {
        match self.cells.get_mut(&key) {
            Some(cur) => {
                if value > cur.0 || (value == cur.0 && set < cur.1) {
                    *cur = (value, set);
                }
            }
            None => {
                self.cells.insert(key, (value, set));
            }
        }
    }

    pub fn to_json(&self) -> String {
        let cells: Vec<DpCell> = self.cells().collect();
        serde_json::to_string(&cells).expect("table serializes")
    }
}

#[derive(Clone, Debug)]
pub struct DpOutcome {
    pub table: DpTable,
    pub best: Option<DpCell>,
}

pub(crate) fn add_clamped(base: &[u64], add: &[u64], cap: &[u64], clamp: bool) -> Vec<u64> {
    base.iter()
        .zip(add)
        .zip(cap)
        .map(|((b, a), c)| {
            let s = b + a;
            if clamp {
                s.min(*c)
            } else {
                s
            }
        })
        .collect()
}

fn cell_bound<F>(inst: &IntInstance<F>, exact_keys: bool) -> u128 {
    let n = inst.n as u128;
    let mut total = n.max(1);
    for (row, &c) in inst.covering.iter().zip(&inst.cover_bound) {
        let range = if exact_keys {
            n.saturating_mul(row.iter().copied().max().unwrap_or(0) as u128)
        } else {
            c as u128
        };
        total = total.saturating_mul(range.saturating_add(1));
    }
    for &p in &inst.pack_bound {
        total = total.saturating_mul((p as u128).saturating_add(1));
    }
    total
}

/// Table of greedy partial solutions indexed by cardinality, covering and packing.
pub fn vanilla_dp<F: SetFunction>(inst: &IntInstance<F>, opts: &DpOptions) -> Result<DpOutcome> {
    let bound = cell_bound(inst, opts.exact_keys);
    if bound > opts.cell_budget {
        return Err(PcsmError::Budget(format!(
            "table may hold {bound} cells, budget is {}",
            opts.cell_budget
        )));
    }
    let clamp = !opts.exact_keys;
    let covers: Vec<Vec<u64>> = (0..inst.n).map(|l| inst.cover_of(l)).collect();
    let packs: Vec<Vec<u64>> = (0..inst.n).map(|l| inst.pack_of(l)).collect();

    let mut table = DpTable::default();
    let root = DpKey { q: 0, cover: vec![0; inst.c()], pack: vec![0; inst.p()] };
    table.offer(root.clone(), inst.objective.value(&Subset::empty()), Subset::empty());
    let mut layer: Vec<DpKey> = vec![root];
    for q in 0..inst.n {
        let candidates: Vec<(DpKey, Rational, Subset)> = layer
            .par_iter()
            .flat_map_iter(|key| {
                let set = table.get(key).expect("layer key populated").clone();
                let mut out = Vec::new();
                for l in 0..inst.n {
                    if set.contains(l) {
                        continue;
                    }
                    let pack = add_clamped(&key.pack, &packs[l], &inst.pack_bound, false);
                    if pack.iter().zip(&inst.pack_bound).any(|(u, b)| u > b) {
                        continue;
                    }
                    let cover = add_clamped(&key.cover, &covers[l], &inst.cover_bound, clamp);
                    let ext = set.with(l);
                    out.push((DpKey { q: q + 1, cover, pack }, inst.objective.value(&ext), ext));
                }
                out
            })
            .collect();
        let mut next: Vec<DpKey> = Vec::new();
        for (key, value, set) in candidates {
            if !table.cells.contains_key(&key) {
                next.push(key.clone());
            }
            table.offer(key, value, set);
        }
        if next.is_empty() {
            break;
        }
        next.sort();
        layer = next;
    }

    let best = table
        .cells()
        .filter(|cell| {
            cell.key.cover.iter().zip(&inst.cover_bound).all(|(c, b)| 2 * c >= *b)
                && cell.key.pack.iter().zip(&inst.pack_bound).all(|(p, b)| p <= b)
        })
        .fold(None::<DpCell>, |acc, cell| match acc {
            Some(a) if a.value > cell.value || (a.value == cell.value && a.set <= cell.set) => Some(a),
            _ => Some(cell),
        });
    Ok(DpOutcome { table, best })
}

/// A completed solution: a cell's set plus a feasibility witness, where an
/// element may appear twice.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Completion {
    pub cell: DpKey,
    /// Sorted, with repeats.
    pub multiset: Vec<usize>,
    pub support: Subset,
    pub value: Rational,
    pub cover: Vec<u64>,
    pub pack: Vec<u64>,
}

#[derive(Clone, Debug)]
pub struct CompletionOutcome {
    pub table: DpTable,
    pub valid_cells: usize,
    /// `None` when no cell admits a completion.
    pub best: Option<Completion>,
}

/// Every `(cover clamped at the bound, pack ≤ bound)` signature reachable by a
/// subset of the ground set, each with one witness.
struct Reach {
    states: BTreeMap<(Vec<u64>, Vec<u64>), Option<(usize, (Vec<u64>, Vec<u64>))>>,
}

impl Reach {
    fn build<F>(inst: &IntInstance<F>) -> Self {
        let mut states = BTreeMap::new();
        states.insert((vec![0; inst.c()], vec![0; inst.p()]), None);
        for l in 0..inst.n {
            let cov = inst.cover_of(l);
            let pk = inst.pack_of(l);
            let snapshot: Vec<(Vec<u64>, Vec<u64>)> = states.keys().cloned().collect();
            for st in snapshot {
                let pack = add_clamped(&st.1, &pk, &inst.pack_bound, false);
                if pack.iter().zip(&inst.pack_bound).any(|(u, b)| u > b) {
                    continue;
                }
                let cover = add_clamped(&st.0, &cov, &inst.cover_bound, true);
                states.entry((cover, pack)).or_insert(Some((l, st)));
            }
        }
        Reach { states }
    }

    fn witness(&self, key: &(Vec<u64>, Vec<u64>)) -> Vec<usize> {
        let mut out = Vec::new();
        let mut cur = key.clone();
        while let Some(Some((l, prev))) = self.states.get(&cur) {
            out.push(*l);
            cur = prev.clone();
        }
        out.reverse();
        out
    }
}

/// Runs the vanilla table, then completes each cell with a reachability
/// witness so the result meets every bound exactly.
pub fn dp_with_completion<F: SetFunction>(inst: &IntInstance<F>, opts: &DpOptions) -> Result<CompletionOutcome> {
    let DpOutcome { table, .. } = vanilla_dp(inst, opts)?;
    let reach = Reach::build(inst);
    let mut valid_cells = 0;
    let mut best: Option<Completion> = None;
    for cell in table.cells() {
        let need: Vec<u64> = inst
            .cover_bound
            .iter()
            .zip(&cell.key.cover)
            .map(|(b, c)| b.saturating_sub(*c))
            .collect();
        let room: Vec<u64> = inst.pack_bound.iter().zip(&cell.key.pack).map(|(b, p)| b - p).collect();
        let mut cell_best: Option<Completion> = None;
        for key in reach.states.keys() {
            let ok = key.0.iter().zip(&need).all(|(c, n)| c >= n) && key.1.iter().zip(&room).all(|(p, r)| p <= r);
            if !ok {
                continue;
            }
            let witness = reach.witness(key);
            let support = cell.set.union(&Subset::from_indices(witness.iter().copied()));
            let value = inst.objective.value(&support);
            let mut multiset: Vec<usize> = cell.set.iter().chain(witness.iter().copied()).collect();
            multiset.sort_unstable();
            let better = match &cell_best {
                None => true,
                Some(b) => value > b.value || (value == b.value && multiset < b.multiset),
            };
            if better {
                cell_best = Some(Completion {
                    cell: cell.key.clone(),
                    cover: inst.cover_vector(multiset.iter()),
                    pack: inst.pack_vector(multiset.iter()),
                    multiset,
                    support,
                    value,
                });
            }
        }
        if let Some(c) = cell_best {
            valid_cells += 1;
            let better = match &best {
                None => true,
                Some(b) => c.value > b.value || (c.value == b.value && c.multiset < b.multiset),
            };
            if better {
                best = Some(c);
            }
        }
    }
    Ok(CompletionOutcome { table, valid_cells, best })
}

#[derive(Clone, Debug)]
pub struct Scaled {
    pub scaled: IntInstance,
    /// Per covering row.
    pub k_c: Vec<Rational>,
    /// Per packing row.
    pub k_p: Vec<Rational>,
}

pub(crate) fn check_eps(eps: &Rational) -> Result<()> {
    if *eps <= Rational::from_integer(0) || *eps > Rational::from_integer(1) {
        return Err(PcsmError::InvalidParameter(format!("epsilon must lie in (0,1], got {eps}")));
    }
    Ok(())
}

fn to_u64(v: i128) -> Result<u64> {
    u64::try_from(v).map_err(|_| PcsmError::Numeric(format!("scaled value {v} does not fit in u64")))
}

/// Rounds rational data to integers so that sets feasible after scaling keep
/// `(1−ε)` of every covering bound and exceed packing bounds by at most `ε/2`.
/// Every set feasible before scaling stays feasible.
pub fn scale_instance(inst: &Instance, eps: &Rational) -> Result<Scaled> {
    check_eps(eps)?;
    let n = Rational::from_integer(inst.n.max(1) as i128);
    let one = Rational::from_integer(1);

    let mut covering = Vec::new();
    let mut cover_bound = Vec::new();
    let mut k_c = Vec::new();
    for (row, c) in inst.covering.iter().zip(&inst.cover_bound) {
        let clamped: Vec<Rational> = row.iter().map(|x| (*x).min(*c)).collect();
        let c_max = clamped.iter().copied().max().unwrap_or_default();
        if *c == Rational::from_integer(0) {
            covering.push(vec![0; inst.n]);
            cover_bound.push(0);
            k_c.push(one);
        } else if c_max == Rational::from_integer(0) {
            covering.push(vec![0; inst.n]);
            cover_bound.push(1);
            k_c.push(one);
        } else {
            let k = eps * c_max / n;
            covering.push(clamped.iter().map(|x| to_u64(ceil_div(x, &k))).collect::<Result<_>>()?);
            cover_bound.push(to_u64(ceil_div(c, &k))?);
            k_c.push(k);
        }
    }

    let mut packing = Vec::new();
    let mut pack_bound = Vec::new();
    let mut k_p = Vec::new();
    for (row, p) in inst.packing.iter().zip(&inst.pack_bound) {
        let p_max = row.iter().filter(|x| *x <= p).copied().max().unwrap_or_default();
        let k = if p_max == Rational::from_integer(0) { one } else { eps * p_max / (n * 2) };
        let bound = to_u64(floor_div(p, &k))?;
        packing.push(
            row.iter()
                .map(|x| if x > p { Ok(bound + 1) } else { to_u64(floor_div(x, &k)) })
                .collect::<Result<_>>()?,
        );
        pack_bound.push(bound);
        k_p.push(k);
    }

    let scaled = IntInstance::new(packing, covering, pack_bound, cover_bound, inst.objective.clone())?;
    Ok(Scaled { scaled, k_c, k_p })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::SubmodularOracle;
    use crate::rational::int;

    fn tiny() -> IntInstance {
        let f = SubmodularOracle::linear(vec![int(3)]).unwrap();
        IntInstance::new(vec![vec![1]], vec![vec![1]], vec![1], vec![1], f).unwrap()
    }

    #[test]
    fn single_element_is_chosen() {
        let out = vanilla_dp(&tiny(), &DpOptions::default()).unwrap();
        assert_eq!(out.best.unwrap().set, Subset::from_indices([0]));
    }

    #[test]
    fn budget_refusal() {
        let opts = DpOptions { cell_budget: 1, ..DpOptions::default() };
        assert!(matches!(vanilla_dp(&tiny(), &opts), Err(PcsmError::Budget(_))));
    }

    #[test]
    fn completion_of_trivially_feasible() {
        let f = SubmodularOracle::linear(vec![int(1), int(1)]).unwrap();
        let inst = IntInstance::new(vec![vec![5, 5]], vec![vec![1, 1]], vec![1], vec![0], f).unwrap();
        let out = dp_with_completion(&inst, &DpOptions::default()).unwrap();
        let best = out.best.unwrap();
        assert!(best.multiset.is_empty());
        assert_eq!(best.value, int(0));
    }

    #[test]
    fn completion_reports_no_solution() {
        // Even two copies of everything cover only 4.
        let f = SubmodularOracle::linear(vec![int(1), int(1)]).unwrap();
        let inst = IntInstance::new(vec![], vec![vec![1, 1]], vec![], vec![5], f).unwrap();
        let out = dp_with_completion(&inst, &DpOptions::default()).unwrap();
        assert!(out.best.is_none());
        assert_eq!(out.valid_cells, 0);
    }

    #[test]
    fn completion_may_duplicate() {
        // Cell {0} has cover 1; reaching cover 2 needs element 0 again.
        let f = SubmodularOracle::linear(vec![int(5), int(0)]).unwrap();
        let inst = IntInstance::new(vec![vec![1, 3]], vec![vec![1, 0]], vec![2], vec![2], f).unwrap();
        let best = dp_with_completion(&inst, &DpOptions::default()).unwrap().best.unwrap();
        assert_eq!(best.multiset, vec![0, 0]);
        assert_eq!(best.cover, vec![2]);
        assert_eq!(best.pack, vec![2]);
    }

    #[test]
    fn scaling_formula() {
        let f = SubmodularOracle::linear(vec![int(1)]).unwrap();
        let inst = Instance::new(vec![], vec![vec![int(4)]], vec![], vec![int(4)], f).unwrap();
        let s = scale_instance(&inst, &int(1)).unwrap();
        assert_eq!(s.k_c, vec![int(4)]);
        assert_eq!(s.scaled.covering, vec![vec![1]]);
        assert_eq!(s.scaled.cover_bound, vec![1]);
    }

    #[test]
    fn scaling_rejects_bad_eps() {
        let f = SubmodularOracle::linear(vec![int(1)]).unwrap();
        let inst = Instance::new(vec![], vec![], vec![], vec![], f).unwrap();
        assert!(scale_instance(&inst, &int(0)).is_err());
        assert!(scale_instance(&inst, &int(2)).is_err());
    }
}
