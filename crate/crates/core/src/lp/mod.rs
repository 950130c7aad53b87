//! Linear programs: a dense two-phase simplex and the factor-revealing
//! programs used to bound the greedy DPs.

mod factor;
mod simplex;

pub use factor::{
    build_dual, build_lp, build_lp_f, closed_form_value, dual_witness, lp_optimum, primal_witness,
    upper_bound_point, verify_upper_bound_construction, LpVariant, UpperBoundReport, UpperBoundVariant,
};
pub use simplex::{linear_max_over_polytope, simplex_solve, LpSolution, LpStatus, PivotRule, SimplexOptions};

use num_rational::BigRational;
use num_traits::{Signed, Zero};

use crate::error::{PcsmError, Result};
use crate::rational::big_to_f64;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Min,
    Max,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Constraint<T> {
    pub name: String,
    pub coeffs: Vec<(usize, T)>,
    pub relation: Relation,
    pub rhs: T,
}

/// `sense c·x` subject to the constraints and `x ≥ 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearProgram<T = f64> {
    pub sense: Sense,
    pub names: Vec<String>,
    pub objective: Vec<T>,
    pub constraints: Vec<Constraint<T>>,
}

impl<T: Clone + Zero> LinearProgram<T> {
    pub fn new(sense: Sense) -> Self {
        LinearProgram { sense, names: Vec::new(), objective: Vec::new(), constraints: Vec::new() }
    }

    pub fn add_var(&mut self, name: impl Into<String>) -> usize {
        self.names.push(name.into());
        self.objective.push(T::zero());
        self.names.len() - 1
    }

    pub fn var(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn num_vars(&self) -> usize {
        self.names.len()
    }

    pub fn set_objective(&mut self, var: usize, coeff: T) {
        self.objective[var] = coeff;
    }

    pub fn add_constraint(
        &mut self,
        name: impl Into<String>,
        coeffs: Vec<(usize, T)>,
        relation: Relation,
        rhs: T,
    ) -> Result<()> {
        if let Some((bad, _)) = coeffs.iter().find(|(v, _)| *v >= self.names.len()) {
            return Err(PcsmError::InvalidParameter(format!("constraint references undeclared variable {bad}")));
        }
        self.constraints.push(Constraint { name: name.into(), coeffs, relation, rhs });
        Ok(())
    }

    pub fn map<U>(&self, f: impl Fn(&T) -> U) -> LinearProgram<U> {
        LinearProgram {
            sense: self.sense,
            names: self.names.clone(),
            objective: self.objective.iter().map(&f).collect(),
            constraints: self
                .constraints
                .iter()
                .map(|c| Constraint {
                    name: c.name.clone(),
                    coeffs: c.coeffs.iter().map(|(v, a)| (*v, f(a))).collect(),
                    relation: c.relation,
                    rhs: f(&c.rhs),
                })
                .collect(),
        }
    }
}

/// Exact evaluation of a point against a rational program.
#[derive(Clone, Debug, PartialEq)]
pub struct ExactCheck {
    pub objective: BigRational,
    /// Largest violation over all constraints and sign restrictions; zero when feasible.
    pub max_violation: BigRational,
    pub violated: Vec<String>,
}

impl ExactCheck {
    pub fn feasible(&self) -> bool {
        self.violated.is_empty()
    }
}

impl LinearProgram<BigRational> {
    pub fn to_f64(&self) -> LinearProgram<f64> {
        self.map(big_to_f64)
    }

    pub fn check_exact(&self, x: &[BigRational]) -> ExactCheck {
        assert_eq!(x.len(), self.names.len(), "point dimension");
        let mut max_violation = BigRational::zero();
        let mut violated = Vec::new();
        let mut note = |name: &str, v: BigRational| {
            if v.is_positive() {
                violated.push(name.to_string());
                if v > max_violation {
                    max_violation = v;
                }
            }
        };
        for (name, xi) in self.names.iter().zip(x) {
            note(name, -xi.clone());
        }
        for c in &self.constraints {
            let lhs: BigRational = c.coeffs.iter().map(|(v, a)| a * &x[*v]).sum();
            let v = match c.relation {
                Relation::Le => lhs - &c.rhs,
                Relation::Ge => &c.rhs - lhs,
                Relation::Eq => (lhs - &c.rhs).abs(),
            };
            note(&c.name, v);
        }
        let objective = self.objective.iter().zip(x).map(|(a, b)| a * b).sum();
        ExactCheck { objective, max_violation, violated }
    }
}
