//! Seeded random instances with a planted feasible set.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{PcsmError, Result};
use crate::instance::Instance;
use crate::oracle::SubmodularOracle;
use crate::rational::Rational;
use crate::subset::Subset;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Linear,
    Coverage,
    ConcaveOfModular,
}

impl std::str::FromStr for Family {
    type Err = PcsmError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(Family::Linear),
            "coverage" => Ok(Family::Coverage),
            "concave_of_modular" | "concave" => Ok(Family::ConcaveOfModular),
            other => Err(PcsmError::InvalidParameter(format!("unknown family `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenSpec {
    pub n: usize,
    pub p: usize,
    pub c: usize,
    pub family: Family,
    /// Probability that a matrix entry (or coverage membership) is non-zero.
    pub density: f64,
    pub seed: u64,
    /// Integer entries in `0..=9`; otherwise quarters in `[0, 9]`.
    pub integer: bool,
}

impl GenSpec {
    pub fn new(n: usize, p: usize, c: usize, family: Family, seed: u64) -> Self {
        GenSpec { n, p, c, family, density: 0.7, seed, integer: true }
    }
}

/// Draws a random instance, plants a random subset and derives the bounds from
/// it, so the planted subset is always feasible.
pub fn generate_instance(spec: &GenSpec) -> Result<Instance> {
    if !(0.0..=1.0).contains(&spec.density) {
        return Err(PcsmError::InvalidParameter(format!("density {} outside [0,1]", spec.density)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = spec.n;
    let entry = |rng: &mut ChaCha8Rng| -> Rational {
        if !rng.gen_bool(spec.density) {
            return Rational::from_integer(0);
        }
        if spec.integer {
            Rational::from_integer(rng.gen_range(1..=9))
        } else {
            Rational::new(rng.gen_range(1..=36), 4)
        }
    };
    let packing: Vec<Vec<Rational>> = (0..spec.p).map(|_| (0..n).map(|_| entry(&mut rng)).collect()).collect();
    let covering: Vec<Vec<Rational>> = (0..spec.c).map(|_| (0..n).map(|_| entry(&mut rng)).collect()).collect();
    let planted: Subset = (0..n).filter(|_| rng.gen_bool(0.5)).collect();
    let row_sum = |row: &Vec<Rational>| -> Rational { planted.iter().map(|i| row[i]).sum() };
    let pack_bound: Vec<Rational> = packing
        .iter()
        .map(|r| row_sum(r) + Rational::from_integer(rng.gen_range(0..=2)))
        .collect();
    let cover_bound: Vec<Rational> = covering
        .iter()
        .map(|r| (row_sum(r) - Rational::from_integer(rng.gen_range(0..=2))).max(Rational::from_integer(0)))
        .collect();
    let weights = |rng: &mut ChaCha8Rng, len: usize| -> Vec<Rational> {
        (0..len).map(|_| Rational::from_integer(rng.gen_range(1..=10))).collect()
    };
    let objective = match spec.family {
        Family::Linear => SubmodularOracle::linear(weights(&mut rng, n))?,
        Family::ConcaveOfModular => {
            let w = weights(&mut rng, n);
            let total: Rational = w.iter().sum();
            let cap = (total / Rational::from_integer(2)).ceil();
            SubmodularOracle::concave_of_modular(w, cap)?
        }
        Family::Coverage => {
            let universe = n.max(4);
            let sets: Vec<Vec<usize>> = (0..n)
                .map(|_| (0..universe).filter(|_| rng.gen_bool(spec.density * 0.5)).collect())
                .collect();
            SubmodularOracle::coverage(universe, sets, weights(&mut rng, universe))?
        }
    };
    Instance::new(packing, covering, pack_bound, cover_bound, objective)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::json::instance_to_json;

    #[test]
    fn deterministic() {
        let s = GenSpec::new(8, 2, 1, Family::Coverage, 42);
        assert_eq!(instance_to_json(&generate_instance(&s).unwrap()), instance_to_json(&generate_instance(&s).unwrap()));
    }

    #[test]
    fn empty_instance() {
        let inst = generate_instance(&GenSpec::new(0, 1, 1, Family::Linear, 1)).unwrap();
        assert_eq!(inst.n, 0);
        assert!(inst.is_feasible(&Subset::empty()).feasible);
    }

    #[test]
    fn rejects_bad_density() {
        let mut s = GenSpec::new(3, 1, 1, Family::Linear, 1);
        s.density = 1.5;
        assert!(generate_instance(&s).is_err());
    }
}
