//! Monotone submodular maximization under packing and covering constraints.
//!
//! The crate provides exact instance and oracle types, a brute-force
//! reference solver, greedy dynamic programs over resource vectors (with and
//! without forbidden sets), a continuous-greedy rounding pipeline, the
//! factor-revealing linear programs used in their analysis, and a
//! two-distance capacitated k-median reduction.

pub mod bench;
pub mod brute;
pub mod continuous;
pub mod greedy_dp;
pub mod error;
pub mod forbidden_dp;
pub mod gen;
pub mod instance;
pub mod json;
pub mod kmedian;
pub mod lp;
pub mod oracle;
pub mod params;
pub mod rational;
pub mod subset;

pub use error::{PcsmError, Result};
pub use instance::{Feasibility, Instance, IntInstance, ViolationProfile};
pub use oracle::{marginal, OracleKind, SetFunction, SubmodularOracle};
pub use params::Params;
pub use rational::Rational;
pub use subset::Subset;
