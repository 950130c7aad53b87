//! Tuning parameters of the continuous track and the LP analysis.

use serde::{Deserialize, Serialize};

use crate::error::{PcsmError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub epsilon: f64,
    pub delta: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    /// Phase count for the factor-revealing programs.
    pub m: usize,
}

impl Params {
    /// The theoretical schedule for `b = p + c` constraints:
    /// `δ = ½·min(1/(15b), ε/(30b³+2))`, `α = δ³`, `β = δ²/(3b)`, `γ = 1/δ³`.
    pub fn schedule(epsilon: f64, b: usize) -> Result<Self> {
        check_epsilon(epsilon)?;
        let b = b.max(1) as f64;
        let delta = 0.5 * (1.0 / (15.0 * b)).min(epsilon / (30.0 * b.powi(3) + 2.0));
        Self::from_delta(epsilon, delta, b as usize)
    }

    /// Schedule derived from a user-chosen `δ` instead of the theoretical one.
    pub fn from_delta(epsilon: f64, delta: f64, b: usize) -> Result<Self> {
        let b = b.max(1) as f64;
        let p = Params {
            epsilon,
            delta,
            alpha: delta.powi(3),
            beta: delta * delta / (3.0 * b),
            gamma: 1.0 / delta.powi(3),
            m: 1,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        check_epsilon(self.epsilon)?;
        let open = |name: &str, v: f64| {
            if v > 0.0 && v < 1.0 {
                Ok(())
            } else {
                Err(PcsmError::InvalidParameter(format!("{name} must lie in (0,1), got {v}")))
            }
        };
        open("delta", self.delta)?;
        open("alpha", self.alpha)?;
        open("beta", self.beta)?;
        if !self.gamma.is_finite() || self.gamma < 1.0 {
            return Err(PcsmError::InvalidParameter(format!("gamma must be >= 1, got {}", self.gamma)));
        }
        if self.m == 0 {
            return Err(PcsmError::InvalidParameter("m must be >= 1".into()));
        }
        Ok(())
    }
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if epsilon > 0.0 && epsilon <= 1.0 {
        Ok(())
    } else {
        Err(PcsmError::InvalidParameter(format!("epsilon must lie in (0,1], got {epsilon}")))
    }
}
