//! Monotone submodular value oracles.

use num_integer::Integer;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{PcsmError, Result};
use crate::rational::Rational;
use crate::subset::Subset;

/// Anything that answers value queries `f(S)` over a ground set `0..n`.
///
/// Solvers only see the objective through this trait, so the k-median
/// reduction can plug in its matching oracle next to the closed-form families.
pub trait SetFunction: Sync {
    fn ground_size(&self) -> usize;

    fn value(&self, set: &Subset) -> Rational;

    /// `f(A ∪ {x}) − f(A)`.
    fn marginal(&self, base: &Subset, x: usize) -> Result<Rational> {
        let n = self.ground_size();
        if x >= n {
            return Err(PcsmError::ElementOutOfRange { element: x, n });
        }
        if let Some(bad) = base.iter().find(|&i| i >= n) {
            return Err(PcsmError::ElementOutOfRange { element: bad, n });
        }
        if base.contains(x) {
            return Err(PcsmError::ElementInBase(x));
        }
        Ok(self.value(&base.with(x)) - self.value(base))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum OracleKind {
    /// `f(S) = Σ_{i∈S} w_i`.
    Linear { weights: Vec<Rational> },
    /// Weighted coverage of a universe `0..universe` by the element sets.
    Coverage { universe: usize, sets: Vec<Vec<usize>>, weights: Vec<Rational> },
    /// `f(S) = min(Σ_{i∈S} w_i, cap)`.
    ConcaveOfModular { weights: Vec<Rational>, cap: Rational },
}

/// One of the closed-form monotone submodular families, with every weight
/// rescaled to a shared integer unit so evaluation is integer addition.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubmodularOracle {
    kind: OracleKind,
    n: usize,
    unit: i128,
    units: Vec<i128>,
    cap_units: Option<i128>,
}

fn common_unit<'a>(values: impl Iterator<Item = &'a Rational>) -> i128 {
    values.fold(1i128, |acc, q| acc.lcm(q.denom()))
}

fn scale(values: &[Rational], unit: i128) -> Vec<i128> {
    values.iter().map(|q| q.numer() * (unit / q.denom())).collect()
}

fn check_weights(weights: &[Rational]) -> Result<()> {
    if weights.iter().any(|w| w.is_negative()) {
        return Err(PcsmError::InvalidInstance("objective weights must be non-negative".into()));
    }
    Ok(())
}

impl SubmodularOracle {
    pub fn new(kind: OracleKind) -> Result<Self> {
        match &kind {
            OracleKind::Linear { weights } => {
                check_weights(weights)?;
                let unit = common_unit(weights.iter());
                let units = scale(weights, unit);
                Ok(SubmodularOracle { n: weights.len(), kind, unit, units, cap_units: None })
            }
            OracleKind::ConcaveOfModular { weights, cap } => {
                check_weights(weights)?;
                if cap.is_negative() {
                    return Err(PcsmError::InvalidInstance("cap must be non-negative".into()));
                }
                let unit = common_unit(weights.iter().chain(std::iter::once(cap)));
                let units = scale(weights, unit);
                let cap_units = Some(cap.numer() * (unit / cap.denom()));
                Ok(SubmodularOracle { n: weights.len(), kind, unit, units, cap_units })
            }
            OracleKind::Coverage { universe, sets, weights } => {
                check_weights(weights)?;
                if weights.len() != *universe {
                    return Err(PcsmError::InvalidInstance(format!(
                        "coverage has {} universe weights for a universe of size {universe}",
                        weights.len()
                    )));
                }
                if let Some(bad) = sets.iter().flatten().find(|&&u| u >= *universe) {
                    return Err(PcsmError::InvalidInstance(format!(
                        "coverage set references universe item {bad} >= {universe}"
                    )));
                }
                let unit = common_unit(weights.iter());
                let units = scale(weights, unit);
                Ok(SubmodularOracle { n: sets.len(), kind, unit, units, cap_units: None })
            }
        }
    }

    pub fn linear(weights: Vec<Rational>) -> Result<Self> {
        Self::new(OracleKind::Linear { weights })
    }

    pub fn coverage(universe: usize, sets: Vec<Vec<usize>>, weights: Vec<Rational>) -> Result<Self> {
        Self::new(OracleKind::Coverage { universe, sets, weights })
    }

    pub fn concave_of_modular(weights: Vec<Rational>, cap: Rational) -> Result<Self> {
        Self::new(OracleKind::ConcaveOfModular { weights, cap })
    }

    pub fn kind(&self) -> &OracleKind {
        &self.kind
    }

    pub fn family_name(&self) -> &'static str {
        match self.kind {
            OracleKind::Linear { .. } => "linear",
            OracleKind::Coverage { .. } => "coverage",
            OracleKind::ConcaveOfModular { .. } => "concave_of_modular",
        }
    }

    /// Values are `units / unit`; all units of one oracle share this denominator.
    pub fn unit(&self) -> i128 {
        self.unit
    }

    /// Per-element units for the modular families, per-universe-item units for coverage.
    pub fn weight_units(&self) -> &[i128] {
        &self.units
    }

    pub fn cap_units(&self) -> Option<i128> {
        self.cap_units
    }

    pub fn coverage_sets(&self) -> Option<&[Vec<usize>]> {
        match &self.kind {
            OracleKind::Coverage { sets, .. } => Some(sets),
            _ => None,
        }
    }

    pub fn eval_units<I: IntoIterator<Item = usize>>(&self, items: I) -> i128 {
        match &self.kind {
            OracleKind::Linear { .. } => items.into_iter().map(|i| self.units[i]).sum(),
            OracleKind::ConcaveOfModular { .. } => {
                let total: i128 = items.into_iter().map(|i| self.units[i]).sum();
                total.min(self.cap_units.unwrap_or(i128::MAX))
            }
            OracleKind::Coverage { universe, sets, .. } => {
                let mut covered = vec![false; *universe];
                let mut total = 0;
                for i in items {
                    for &u in &sets[i] {
                        if !covered[u] {
                            covered[u] = true;
                            total += self.units[u];
                        }
                    }
                }
                total
            }
        }
    }

    pub fn eval(&self, set: &Subset) -> Rational {
        Rational::new(self.eval_units(set.iter()), self.unit)
    }

    pub fn eval_mask(&self, mask: u64) -> Rational {
        Rational::new(self.eval_units((0..self.n).filter(|&i| mask >> i & 1 == 1)), self.unit)
    }

    pub fn is_zero(&self) -> bool {
        self.units.iter().all(Zero::is_zero)
    }
}

impl SetFunction for SubmodularOracle {
    fn ground_size(&self) -> usize {
        self.n
    }

    fn value(&self, set: &Subset) -> Rational {
        self.eval(set)
    }
}

/// Free-function form of [`SetFunction::marginal`].
pub fn marginal<F: SetFunction + ?Sized>(oracle: &F, base: &Subset, x: usize) -> Result<Rational> {
    oracle.marginal(base, x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::int;

    fn ints(v: &[i128]) -> Vec<Rational> {
        v.iter().map(|&x| int(x)).collect()
    }

    #[test]
    fn linear_marginal_is_weight() {
        let f = SubmodularOracle::linear(ints(&[2, 3])).unwrap();
        assert_eq!(marginal(&f, &Subset::empty(), 1).unwrap(), int(3));
    }

    #[test]
    fn coverage_marginal_counts_new_items() {
        let f = SubmodularOracle::coverage(2, vec![vec![0], vec![0, 1]], ints(&[1, 1])).unwrap();
        assert_eq!(marginal(&f, &Subset::from_indices([0]), 1).unwrap(), int(1));
    }

    #[test]
    fn concave_marginal_hits_cap() {
        let f = SubmodularOracle::concave_of_modular(ints(&[5, 5]), int(7)).unwrap();
        assert_eq!(marginal(&f, &Subset::from_indices([0]), 1).unwrap(), int(2));
    }

    #[test]
    fn marginal_errors() {
        let f = SubmodularOracle::linear(ints(&[1, 1])).unwrap();
        assert!(matches!(
            marginal(&f, &Subset::empty(), 2),
            Err(PcsmError::ElementOutOfRange { element: 2, n: 2 })
        ));
        assert!(matches!(marginal(&f, &Subset::from_indices([0]), 0), Err(PcsmError::ElementInBase(0))));
    }

    #[test]
    fn rational_weights_share_a_unit() {
        let f = SubmodularOracle::linear(vec![Rational::new(1, 2), Rational::new(1, 3)]).unwrap();
        assert_eq!(f.unit(), 6);
        assert_eq!(f.eval(&Subset::full(2)), Rational::new(5, 6));
    }

    #[test]
    fn rejects_bad_data() {
        assert!(SubmodularOracle::linear(ints(&[-1])).is_err());
        assert!(SubmodularOracle::coverage(1, vec![vec![1]], ints(&[1])).is_err());
        assert!(SubmodularOracle::coverage(2, vec![vec![0]], ints(&[1])).is_err());
    }
}
