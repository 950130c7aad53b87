//! Exhaustive reference solver for small instances.

use std::collections::HashMap;

use num_integer::Integer;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{PcsmError, Result};
use crate::instance::Instance;
use crate::oracle::OracleKind;
use crate::rational::Rational;
use crate::subset::Subset;

pub const DEFAULT_MAX_N: usize = 22;
pub const PARETO_MAX_N: usize = 18;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BruteResult {
    /// Meaningless when `feasible_count == 0`.
    pub best_value: Rational,
    pub best_set: Subset,
    pub feasible_count: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ParetoEntry {
    pub cover: Vec<Rational>,
    pub pack: Vec<Rational>,
    pub best_value: Rational,
    pub best_set: Subset,
}

/// `a` precedes `b` when their sorted index lists compare lexicographically.
pub(crate) fn mask_lex_less(a: u64, b: u64) -> bool {
    if a == b {
        return false;
    }
    let i = (a ^ b).trailing_zeros();
    let above = |m: u64| if i == 63 { 0 } else { m >> (i + 1) };
    if a >> i & 1 == 1 {
        above(b) != 0
    } else {
        above(a) == 0
    }
}

/// One constraint row rescaled so entries and bound are integers.
struct IntRow {
    entries: Vec<i128>,
    bound: i128,
    unit: i128,
}

fn int_rows(rows: &[Vec<Rational>], bounds: &[Rational]) -> Vec<IntRow> {
    rows.iter()
        .zip(bounds)
        .map(|(row, bound)| {
            let unit = row.iter().chain(std::iter::once(bound)).fold(1i128, |acc, q| acc.lcm(q.denom()));
            let conv = |q: &Rational| q.numer() * (unit / q.denom());
            IntRow { entries: row.iter().map(conv).collect(), bound: conv(bound), unit }
        })
        .collect()
}

/// Incrementally maintained evaluation state for one bitmask walk.
struct Walker<'a> {
    inst: &'a Instance,
    pack: &'a [IntRow],
    cover: &'a [IntRow],
    pack_sum: Vec<i128>,
    cover_sum: Vec<i128>,
    value: i128,
    counts: Vec<u32>,
    mask: u64,
}

impl<'a> Walker<'a> {
    fn new(inst: &'a Instance, pack: &'a [IntRow], cover: &'a [IntRow]) -> Self {
        let counts = match inst.objective.kind() {
            OracleKind::Coverage { universe, .. } => vec![0; *universe],
            _ => Vec::new(),
        };
        Walker {
            inst,
            pack,
            cover,
            pack_sum: vec![0; pack.len()],
            cover_sum: vec![0; cover.len()],
            value: 0,
            counts,
            mask: 0,
        }
    }

    fn toggle(&mut self, i: usize) {
        let adding = self.mask >> i & 1 == 0;
        self.mask ^= 1 << i;
        let sign = if adding { 1 } else { -1 };
        for (s, r) in self.pack_sum.iter_mut().zip(self.pack) {
            *s += sign * r.entries[i];
        }
        for (s, r) in self.cover_sum.iter_mut().zip(self.cover) {
            *s += sign * r.entries[i];
        }
        let units = self.inst.objective.weight_units();
        match self.inst.objective.kind() {
            OracleKind::Coverage { sets, .. } => {
                for &u in &sets[i] {
                    if adding {
                        if self.counts[u] == 0 {
                            self.value += units[u];
                        }
                        self.counts[u] += 1;
                    } else {
                        self.counts[u] -= 1;
                        if self.counts[u] == 0 {
                            self.value -= units[u];
                        }
                    }
                }
            }
            _ => self.value += sign * units[i],
        }
    }

    /// Objective value in oracle units.
    fn objective(&self) -> i128 {
        match self.inst.objective.cap_units() {
            Some(cap) => self.value.min(cap),
            None => self.value,
        }
    }

    fn feasible(&self) -> bool {
        self.pack_sum.iter().zip(self.pack).all(|(s, r)| *s <= r.bound)
            && self.cover_sum.iter().zip(self.cover).all(|(s, r)| *s >= r.bound)
    }

    fn set_mask(&mut self, target: u64) {
        for i in 0..self.inst.n {
            if (self.mask ^ target) >> i & 1 == 1 {
                self.toggle(i);
            }
        }
        debug_assert_eq!(self.objective(), self.inst.objective.eval_units(Subset::from_mask(self.mask).iter()));
    }
}

#[derive(Clone, Copy)]
struct Best {
    value: i128,
    mask: u64,
    count: u64,
}

impl Best {
    fn merge(self, other: Best) -> Best {
        let (a, b) = (self, other);
        let count = a.count + b.count;
        let take_b = match (a.count, b.count) {
            (_, 0) => false,
            (0, _) => true,
            _ => b.value > a.value || (b.value == a.value && mask_lex_less(b.mask, a.mask)),
        };
        let w = if take_b { b } else { a };
        Best { value: w.value, mask: w.mask, count }
    }
}

/// Exact optimum by enumerating all `2^n` subsets in Gray-code order.
pub fn brute_optimum(inst: &Instance, max_n: usize) -> Result<BruteResult> {
    let n = inst.n;
    if n > max_n || n > 40 {
        return Err(PcsmError::TooLarge { n, max: max_n.min(40) });
    }
    let pack = int_rows(&inst.packing, &inst.pack_bound);
    let cover = int_rows(&inst.covering, &inst.cover_bound);
    let high = n.saturating_sub(10).min(8);
    let low = n - high;
    let best = (0u64..1 << high)
        .into_par_iter()
        .map(|h| {
            let mut w = Walker::new(inst, &pack, &cover);
            w.set_mask(h << low);
            let mut best = Best { value: 0, mask: 0, count: 0 };
            let mut visit = |w: &Walker| {
                if w.feasible() {
                    best = best.merge(Best { value: w.objective(), mask: w.mask, count: 1 });
                }
            };
            visit(&w);
            for k in 1u64..1 << low {
                w.toggle(k.trailing_zeros() as usize);
                visit(&w);
            }
            best
        })
        .reduce(|| Best { value: 0, mask: 0, count: 0 }, Best::merge);
    let best_set = Subset::from_mask(best.mask);
    Ok(BruteResult {
        best_value: inst.objective.eval(&best_set),
        best_set: if best.count == 0 { Subset::empty() } else { best_set },
        feasible_count: best.count,
    })
}

/// Best value for every achievable `(C·1_S, P·1_S)` signature.
///
/// Entries are sorted by `(cover, pack)`.
pub fn brute_pareto(inst: &Instance) -> Result<Vec<ParetoEntry>> {
    let n = inst.n;
    if n > PARETO_MAX_N {
        return Err(PcsmError::TooLarge { n, max: PARETO_MAX_N });
    }
    let pack = int_rows(&inst.packing, &inst.pack_bound);
    let cover = int_rows(&inst.covering, &inst.cover_bound);
    let mut w = Walker::new(inst, &pack, &cover);
    let mut table: HashMap<(Vec<i128>, Vec<i128>), (i128, u64)> = HashMap::new();
    let mut record = |w: &Walker| {
        let key = (w.cover_sum.clone(), w.pack_sum.clone());
        let cand = (w.objective(), w.mask);
        table
            .entry(key)
            .and_modify(|e| {
                if cand.0 > e.0 || (cand.0 == e.0 && mask_lex_less(cand.1, e.1)) {
                    *e = cand;
                }
            })
            .or_insert(cand);
    };
    record(&w);
    for k in 1u64..1 << n {
        w.toggle(k.trailing_zeros() as usize);
        record(&w);
    }
    let back = |v: &[i128], rows: &[IntRow]| -> Vec<Rational> {
        v.iter().zip(rows).map(|(s, r)| Rational::new(*s, r.unit)).collect()
    };
    let mut out: Vec<ParetoEntry> = table
        .into_iter()
        .map(|((c, p), (_, mask))| {
            let set = Subset::from_mask(mask);
            ParetoEntry {
                cover: back(&c, &cover),
                pack: back(&p, &pack),
                best_value: inst.objective.eval(&set),
                best_set: set,
            }
        })
        .collect();
    out.sort_by(|a, b| (&a.cover, &a.pack).cmp(&(&b.cover, &b.pack)));
    Ok(out)
}
