//! Problem instances and the feasibility predicates shared by every solver.

use num_traits::{Signed, Zero};

use crate::error::{PcsmError, Result};
use crate::oracle::{SetFunction, SubmodularOracle};
use crate::rational::Rational;
use crate::subset::Subset;

/// Maximize `f(S)` subject to `P·1_S ≤ pack_bound` and `C·1_S ≥ cover_bound`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    pub n: usize,
    pub packing: Vec<Vec<Rational>>,
    pub covering: Vec<Vec<Rational>>,
    pub pack_bound: Vec<Rational>,
    pub cover_bound: Vec<Rational>,
    pub objective: SubmodularOracle,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Feasibility {
    pub feasible: bool,
    /// `max(0, (P·1_S)_i − bound_i)` per packing row.
    pub pack_violations: Vec<Rational>,
    /// `max(0, bound_j − (C·1_S)_j)` per covering row.
    pub cover_deficits: Vec<Rational>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ViolationProfile {
    /// `max_i (P·1_S)_i / bound_i`; zero when there are no packing rows.
    pub pack_ratio: Rational,
    /// `min_j (C·1_S)_j / bound_j`; `None` when there are no covering rows.
    pub cover_ratio: Option<Rational>,
}

impl ViolationProfile {
    pub fn is_feasible(&self) -> bool {
        self.pack_ratio <= Rational::from_integer(1)
            && self.cover_ratio.is_none_or(|r| r >= Rational::from_integer(1))
    }
}

fn check_matrix(name: &str, rows: &[Vec<Rational>], bound: &[Rational], n: usize) -> Result<()> {
    if rows.len() != bound.len() {
        return Err(PcsmError::InvalidInstance(format!(
            "{name} has {} rows but {} bounds",
            rows.len(),
            bound.len()
        )));
    }
    for (i, row) in rows.iter().enumerate() {
        if row.len() != n {
            return Err(PcsmError::InvalidInstance(format!(
                "{name} row {i} has {} entries, expected {n}",
                row.len()
            )));
        }
        if row.iter().any(|q| q.is_negative()) {
            return Err(PcsmError::InvalidInstance(format!("{name} row {i} has a negative entry")));
        }
    }
    if bound.iter().any(|q| q.is_negative()) {
        return Err(PcsmError::InvalidInstance(format!("{name} bound is negative")));
    }
    Ok(())
}

pub(crate) fn row_sums(rows: &[Vec<Rational>], set: &Subset) -> Vec<Rational> {
    rows.iter().map(|row| set.iter().map(|i| row[i]).sum()).collect()
}

impl Instance {
    pub fn new(
        packing: Vec<Vec<Rational>>,
        covering: Vec<Vec<Rational>>,
        pack_bound: Vec<Rational>,
        cover_bound: Vec<Rational>,
        objective: SubmodularOracle,
    ) -> Result<Self> {
        let n = objective.ground_size();
        check_matrix("packing", &packing, &pack_bound, n)?;
        check_matrix("covering", &covering, &cover_bound, n)?;
        Ok(Instance { n, packing, covering, pack_bound, cover_bound, objective })
    }

    pub fn p(&self) -> usize {
        self.packing.len()
    }

    pub fn c(&self) -> usize {
        self.covering.len()
    }

    pub fn value(&self, set: &Subset) -> Rational {
        self.objective.eval(set)
    }

    pub fn pack_vector(&self, set: &Subset) -> Vec<Rational> {
        row_sums(&self.packing, set)
    }

    pub fn cover_vector(&self, set: &Subset) -> Vec<Rational> {
        row_sums(&self.covering, set)
    }

    pub fn is_feasible(&self, set: &Subset) -> Feasibility {
        let pack_violations: Vec<Rational> = self
            .pack_vector(set)
            .iter()
            .zip(&self.pack_bound)
            .map(|(used, b)| (used - b).max(Rational::zero()))
            .collect();
        let cover_deficits: Vec<Rational> = self
            .cover_vector(set)
            .iter()
            .zip(&self.cover_bound)
            .map(|(got, b)| (b - got).max(Rational::zero()))
            .collect();
        let feasible = pack_violations.iter().chain(&cover_deficits).all(Zero::is_zero);
        Feasibility { feasible, pack_violations, cover_deficits }
    }

    pub fn violation_profile(&self, set: &Subset) -> Result<ViolationProfile> {
        if let Some(row) = self.pack_bound.iter().position(Zero::is_zero) {
            return Err(PcsmError::ZeroBound { kind: "packing", row });
        }
        if let Some(row) = self.cover_bound.iter().position(Zero::is_zero) {
            return Err(PcsmError::ZeroBound { kind: "covering", row });
        }
        let pack_ratio = self
            .pack_vector(set)
            .iter()
            .zip(&self.pack_bound)
            .map(|(u, b)| u / b)
            .max()
            .unwrap_or_else(Rational::zero);
        let cover_ratio = self.cover_vector(set).iter().zip(&self.cover_bound).map(|(u, b)| u / b).min();
        Ok(ViolationProfile { pack_ratio, cover_ratio })
    }

    /// Float ratios that tolerate zero bounds (used in reports).
    ///
    /// A zero packing bound gives ratio 0 when unused and `+inf` otherwise;
    /// a zero covering bound is always satisfied (`+inf`).
    pub fn ratios_f64(&self, set: &Subset) -> (f64, f64) {
        use crate::rational::to_f64;
        let pack = self
            .pack_vector(set)
            .iter()
            .zip(&self.pack_bound)
            .map(|(u, b)| match (u.is_zero(), b.is_zero()) {
                (true, _) => 0.0,
                (false, true) => f64::INFINITY,
                _ => to_f64(&(u / b)),
            })
            .fold(0.0, f64::max);
        let cover = self
            .cover_vector(set)
            .iter()
            .zip(&self.cover_bound)
            .map(|(u, b)| if b.is_zero() { f64::INFINITY } else { to_f64(&(u / b)) })
            .fold(f64::INFINITY, f64::min);
        (pack, cover)
    }

    /// Pack ratio ≤ 1 exactly and every cover row reaches `(1 − slack)·bound`.
    pub fn meets(&self, set: &Subset, cover_slack: &Rational) -> bool {
        let one = Rational::from_integer(1);
        let pack_ok = self.pack_vector(set).iter().zip(&self.pack_bound).all(|(u, b)| u <= b);
        let cover_ok = self
            .cover_vector(set)
            .iter()
            .zip(&self.cover_bound)
            .all(|(u, b)| *u >= (one - cover_slack) * b);
        pack_ok && cover_ok
    }

    /// Integer view for the pseudo-polynomial solvers; fails on fractional data.
    pub fn to_integer(&self) -> Result<IntInstance> {
        let conv = |name: &str, q: &Rational| -> Result<u64> {
            if !q.is_integer() {
                return Err(PcsmError::InvalidInstance(format!(
                    "{name} entry {q} is not an integer; scale the instance first"
                )));
            }
            u64::try_from(*q.numer())
                .map_err(|_| PcsmError::InvalidInstance(format!("{name} entry {q} out of range")))
        };
        let rows = |name: &str, m: &[Vec<Rational>]| -> Result<Vec<Vec<u64>>> {
            m.iter().map(|r| r.iter().map(|q| conv(name, q)).collect()).collect()
        };
        let vec = |name: &str, v: &[Rational]| -> Result<Vec<u64>> { v.iter().map(|q| conv(name, q)).collect() };
        Ok(IntInstance {
            n: self.n,
            packing: rows("packing", &self.packing)?,
            covering: rows("covering", &self.covering)?,
            pack_bound: vec("pack_bound", &self.pack_bound)?,
            cover_bound: vec("cover_bound", &self.cover_bound)?,
            objective: self.objective.clone(),
        })
    }
}

/// Integer instance for the dynamic programs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntInstance<F = SubmodularOracle> {
    pub n: usize,
    pub packing: Vec<Vec<u64>>,
    pub covering: Vec<Vec<u64>>,
    pub pack_bound: Vec<u64>,
    pub cover_bound: Vec<u64>,
    pub objective: F,
}

impl<F: SetFunction> IntInstance<F> {
    pub fn new(
        packing: Vec<Vec<u64>>,
        covering: Vec<Vec<u64>>,
        pack_bound: Vec<u64>,
        cover_bound: Vec<u64>,
        objective: F,
    ) -> Result<Self> {
        let n = objective.ground_size();
        for (name, rows, bound) in [("packing", &packing, &pack_bound), ("covering", &covering, &cover_bound)] {
            if rows.len() != bound.len() || rows.iter().any(|r| r.len() != n) {
                return Err(PcsmError::InvalidInstance(format!("{name} dimensions do not match n={n}")));
            }
        }
        Ok(IntInstance { n, packing, covering, pack_bound, cover_bound, objective })
    }
}

impl<F> IntInstance<F> {
    pub fn p(&self) -> usize {
        self.packing.len()
    }

    pub fn c(&self) -> usize {
        self.covering.len()
    }

    pub fn pack_of(&self, l: usize) -> Vec<u64> {
        self.packing.iter().map(|r| r[l]).collect()
    }

    pub fn cover_of(&self, l: usize) -> Vec<u64> {
        self.covering.iter().map(|r| r[l]).collect()
    }

    pub fn pack_vector<'a, I: IntoIterator<Item = &'a usize> + Clone>(&self, items: I) -> Vec<u64> {
        self.packing.iter().map(|r| items.clone().into_iter().map(|&i| r[i]).sum()).collect()
    }

    pub fn cover_vector<'a, I: IntoIterator<Item = &'a usize> + Clone>(&self, items: I) -> Vec<u64> {
        self.covering.iter().map(|r| items.clone().into_iter().map(|&i| r[i]).sum()).collect()
    }

    pub fn is_feasible(&self, set: &Subset) -> bool {
        let pack = self.pack_vector(set.as_slice());
        let cover = self.cover_vector(set.as_slice());
        pack.iter().zip(&self.pack_bound).all(|(u, b)| u <= b)
            && cover.iter().zip(&self.cover_bound).all(|(u, b)| u >= b)
    }

    pub fn to_rational(&self) -> Instance
    where
        F: Clone + Into<SubmodularOracle>,
    {
        let q = |v: &u64| Rational::from_integer(*v as i128);
        Instance {
            n: self.n,
            packing: self.packing.iter().map(|r| r.iter().map(q).collect()).collect(),
            covering: self.covering.iter().map(|r| r.iter().map(q).collect()).collect(),
            pack_bound: self.pack_bound.iter().map(q).collect(),
            cover_bound: self.cover_bound.iter().map(q).collect(),
            objective: self.objective.clone().into(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::int;

    fn one_element(p_entry: i128, p_bound: i128, c_bound: Option<i128>) -> Instance {
        let f = SubmodularOracle::linear(vec![int(1)]).unwrap();
        let (cov, cb) = match c_bound {
            Some(b) => (vec![vec![int(1)]], vec![int(b)]),
            None => (vec![], vec![]),
        };
        Instance::new(vec![vec![int(p_entry)]], cov, vec![int(p_bound)], cb, f).unwrap()
    }

    #[test]
    fn empty_set_with_zero_cover_is_feasible() {
        let inst = one_element(1, 1, Some(0));
        assert!(inst.is_feasible(&Subset::empty()).feasible);
    }

    #[test]
    fn empty_set_misses_cover() {
        let inst = one_element(1, 1, Some(1));
        let r = inst.is_feasible(&Subset::empty());
        assert!(!r.feasible);
        assert_eq!(r.cover_deficits, vec![int(1)]);
    }

    #[test]
    fn packing_violation_reported() {
        let inst = one_element(2, 1, None);
        let r = inst.is_feasible(&Subset::from_indices([0]));
        assert!(!r.feasible);
        assert_eq!(r.pack_violations, vec![int(1)]);
    }

    #[test]
    fn profile_ratios() {
        let f = SubmodularOracle::linear(vec![int(1), int(1)]).unwrap();
        let inst =
            Instance::new(vec![vec![int(1), int(1)]], vec![vec![int(1), int(0)]], vec![int(1)], vec![int(3)], f)
                .unwrap();
        let both = inst.violation_profile(&Subset::full(2)).unwrap();
        assert_eq!(both.pack_ratio, int(2));
        let none = inst.violation_profile(&Subset::empty()).unwrap();
        assert_eq!(none.cover_ratio, Some(int(0)));
    }

    #[test]
    fn profile_rejects_zero_bound() {
        let inst = one_element(1, 0, None);
        assert!(matches!(inst.violation_profile(&Subset::empty()), Err(PcsmError::ZeroBound { .. })));
    }

    #[test]
    fn dimension_checks() {
        let f = SubmodularOracle::linear(vec![int(1), int(1)]).unwrap();
        assert!(Instance::new(vec![vec![int(1)]], vec![], vec![int(1)], vec![], f.clone()).is_err());
        assert!(Instance::new(vec![vec![int(1), int(-1)]], vec![], vec![int(1)], vec![], f).is_err());
    }
}
