//! Guess enumeration, continuous greedy and randomized rounding for the
//! general problem with `p` packing and `c` covering rows.
//!
//! Everything here works on the unit form of an instance: every row divided
//! by its bound, covering entries clamped at 1.

mod greedy;
mod rounding;

pub use greedy::{continuous_greedy, multilinear_estimate, Estimate, FractionalPoint, GreedyOptions, ResidualObjective};
pub use rounding::{round_and_filter, round_with, solve_main, ContinuousOptions, GuessReport, GuessStatus, MainOutcome, Rounding};

use num_traits::Zero;
use serde::Serialize;

use crate::error::{PcsmError, Result};
use crate::instance::Instance;
use crate::oracle::SetFunction;
use crate::params::Params;
use crate::rational::{to_f64, Rational};
use crate::subset::Subset;

/// Rows divided by their bounds, with covering entries clamped at 1.
///
/// A packing row with bound zero maps positive entries to `+inf`. Covering
/// rows with bound zero are always met and are dropped.
#[derive(Clone, Debug)]
pub struct UnitForm {
    pub n: usize,
    pub pack: Vec<Vec<f64>>,
    pub cover: Vec<Vec<f64>>,
    /// Original index of each kept covering row.
    pub cover_rows: Vec<usize>,
    /// Elements that no feasible set contains.
    pub blocked: Subset,
}

impl UnitForm {
    pub fn new(inst: &Instance) -> Self {
        let pack: Vec<Vec<f64>> = inst
            .packing
            .iter()
            .zip(&inst.pack_bound)
            .map(|(row, b)| {
                row.iter()
                    .map(|q| match (q.is_zero(), b.is_zero()) {
                        (true, _) => 0.0,
                        (false, true) => f64::INFINITY,
                        _ => to_f64(&(q / b)),
                    })
                    .collect()
            })
            .collect();
        let mut cover = Vec::new();
        let mut cover_rows = Vec::new();
        for (j, (row, b)) in inst.covering.iter().zip(&inst.cover_bound).enumerate() {
            if b.is_zero() {
                continue;
            }
            cover.push(row.iter().map(|q| to_f64(&(q / b)).min(1.0)).collect());
            cover_rows.push(j);
        }
        let blocked = (0..inst.n)
            .filter(|&l| {
                inst.packing.iter().zip(&inst.pack_bound).any(|(row, b)| row[l] > *b)
            })
            .collect();
        UnitForm { n: inst.n, pack, cover, cover_rows, blocked }
    }

    pub fn p(&self) -> usize {
        self.pack.len()
    }

    pub fn c(&self) -> usize {
        self.cover.len()
    }

    /// Largest grid exponent `j` with `(1+δ)^(j-1) < n ≤ (1+δ)^j`.
    pub fn grid_top(&self, delta: f64) -> u32 {
        if self.n <= 1 {
            return 0;
        }
        let n = self.n as f64;
        let mut j = (n.ln() / delta.ln_1p()).ceil().max(0.0) as u32;
        while (1.0 + delta).powi(j as i32) < n {
            j += 1;
        }
        j
    }

    /// Upper bound on `|E1|`: `γ + (p+c)/(αδ)`, capped at `n`.
    pub fn chosen_limit(&self, params: &Params) -> usize {
        let k = params.gamma + (self.p() + self.c()) as f64 / (params.alpha * params.delta);
        if k >= self.n as f64 {
            self.n
        } else {
            k.floor() as usize
        }
    }
}

/// A guess `(E0, E1, c′)` with its derived residuals and element classes.
#[derive(Clone, Debug, Serialize)]
pub struct Guess {
    /// Discarded elements.
    pub e0: Subset,
    /// Chosen elements.
    pub e1: Subset,
    /// Exponents of `c′_j = (1+δ)^grid_j`, one per kept covering row.
    pub grid: Vec<u32>,
    pub c_prime: Vec<f64>,
    /// Residual packing `1 − P·1_{E1}`.
    pub r: Vec<f64>,
    /// Residual covering `max(0, c′ − C·1_{E1})`.
    pub s: Vec<f64>,
    pub critical_pack: Vec<usize>,
    pub critical_cover: Vec<usize>,
    /// Undetermined elements, ascending.
    pub residual: Vec<usize>,
    pub large_pack: Subset,
    pub large_cover: Subset,
    /// Undetermined elements that are large in some critical packing row.
    pub large_critical: Subset,
}

struct Residuals {
    r: Vec<f64>,
    s: Vec<f64>,
    critical_pack: Vec<usize>,
    critical_cover: Vec<usize>,
    c_prime: Vec<f64>,
}

impl Residuals {
    fn new(form: &UnitForm, params: &Params, e1: &Subset, grid: &[u32]) -> Self {
        let c_prime: Vec<f64> = grid.iter().map(|&j| (1.0 + params.delta).powi(j as i32)).collect();
        let r: Vec<f64> = form.pack.iter().map(|row| 1.0 - e1.iter().map(|l| row[l]).sum::<f64>()).collect();
        let s: Vec<f64> = form
            .cover
            .iter()
            .zip(&c_prime)
            .map(|(row, c)| (c - e1.iter().map(|l| row[l]).sum::<f64>()).max(0.0))
            .collect();
        let critical_pack = (0..r.len()).filter(|&i| r[i] <= params.delta).collect();
        let critical_cover = (0..s.len()).filter(|&j| s[j] <= params.delta * c_prime[j]).collect();
        Residuals { r, s, critical_pack, critical_cover, c_prime }
    }

    fn large_pack(&self, form: &UnitForm, alpha: f64, l: usize) -> bool {
        (0..self.r.len()).any(|i| !self.critical_pack.contains(&i) && form.pack[i][l] >= alpha * self.r[i])
    }

    fn large_cover(&self, form: &UnitForm, alpha: f64, l: usize) -> bool {
        (0..self.s.len()).any(|j| !self.critical_cover.contains(&j) && form.cover[j][l] >= alpha * self.s[j])
    }

    // Only elements that actually consume the row count, so a saturated
    // critical row does not discard elements it never touches.
    fn large_critical(&self, form: &UnitForm, beta: f64, l: usize) -> bool {
        self.critical_pack.iter().any(|&i| form.pack[i][l] > 0.0 && form.pack[i][l] >= beta * self.r[i])
    }
}

impl Guess {
    /// Derives residuals, critical rows and large-element sets for a fixed
    /// `(E0, E1, c′)`.
    pub fn derive(form: &UnitForm, params: &Params, e0: Subset, e1: Subset, grid: Vec<u32>) -> Result<Guess> {
        if grid.len() != form.c() {
            return Err(PcsmError::InvalidParameter(format!(
                "guess has {} grid exponents for {} covering rows",
                grid.len(),
                form.c()
            )));
        }
        if let Some(bad) = e0.iter().chain(e1.iter()).find(|&l| l >= form.n) {
            return Err(PcsmError::ElementOutOfRange { element: bad, n: form.n });
        }
        let res = Residuals::new(form, params, &e1, &grid);
        let residual: Vec<usize> = (0..form.n).filter(|&l| !e0.contains(l) && !e1.contains(l)).collect();
        let pick = |test: &dyn Fn(usize) -> bool| residual.iter().copied().filter(|&l| test(l)).collect::<Subset>();
        let large_pack = pick(&|l| res.large_pack(form, params.alpha, l));
        let large_cover = pick(&|l| res.large_cover(form, params.alpha, l));
        let large_critical = pick(&|l| res.large_critical(form, params.beta, l));
        Ok(Guess {
            e0,
            e1,
            grid,
            c_prime: res.c_prime,
            r: res.r,
            s: res.s,
            critical_pack: res.critical_pack,
            critical_cover: res.critical_cover,
            residual,
            large_pack,
            large_cover,
            large_critical,
        })
    }

    /// Builds the guess for chosen set `E1` and grid point `c′`: discards every
    /// element whose marginal exceeds `f(E1)/γ`, every element that is large
    /// for `(∅, E1, c′)`, and every blocked element.
    pub fn preprocess(inst: &Instance, form: &UnitForm, params: &Params, e1: Subset, grid: Vec<u32>) -> Result<Guess> {
        let heavy = heavy_marginals(inst, params, &e1);
        Self::preprocess_with(form, params, e1, grid, &heavy)
    }

    fn preprocess_with(form: &UnitForm, params: &Params, e1: Subset, grid: Vec<u32>, heavy: &Subset) -> Result<Guess> {
        let res = Residuals::new(form, params, &e1, &grid);
        let e0: Subset = (0..form.n)
            .filter(|&l| !e1.contains(l))
            .filter(|&l| {
                heavy.contains(l)
                    || form.blocked.contains(l)
                    || res.large_pack(form, params.alpha, l)
                    || res.large_cover(form, params.alpha, l)
            })
            .collect();
        Self::derive(form, params, e0, e1, grid)
    }

    /// The four consistency clauses; the packing clause is checked exactly on
    /// the original rows.
    pub fn is_consistent(&self, inst: &Instance) -> bool {
        let disjoint = self.e0.is_disjoint(&self.e1);
        let covering_floor = self.c_prime.iter().all(|&c| c >= 1.0);
        let packs = inst.pack_vector(&self.e1).iter().zip(&inst.pack_bound).all(|(u, b)| u <= b);
        disjoint && covering_floor && packs && self.large_pack.is_empty() && self.large_cover.is_empty()
    }

    pub fn residual_subset(&self) -> Subset {
        Subset::from_indices(self.residual.iter().copied())
    }
}

fn heavy_marginals(inst: &Instance, params: &Params, e1: &Subset) -> Subset {
    let f = &inst.objective;
    let base = to_f64(&f.value(e1));
    (0..inst.n)
        .filter(|&l| !e1.contains(l))
        .filter(|&l| to_f64(&(f.value(&e1.with(l)) - f.value(e1))) * params.gamma > base)
        .collect()
}

/// Consistent guesses produced by the preprocessing enumeration.
#[derive(Clone, Debug)]
pub struct Enumeration {
    pub guesses: Vec<Guess>,
    /// `(E1, c′)` pairs looked at, consistent or not.
    pub examined: u128,
    pub truncated: bool,
}

/// Enumerates `E1` by size, then lexicographically, and for each `E1` every
/// grid point `c′`; stops after `budget` pairs.
pub fn enumerate_guesses(inst: &Instance, form: &UnitForm, params: &Params, budget: u128) -> Result<Enumeration> {
    params.validate()?;
    let candidates: Vec<usize> = (0..inst.n).filter(|&l| !form.blocked.contains(l)).collect();
    let limit = form.chosen_limit(params).min(candidates.len());
    let top = form.grid_top(params.delta);
    let mut out = Enumeration { guesses: Vec::new(), examined: 0, truncated: false };
    'sizes: for k in 0..=limit {
        for pick in Combinations::new(candidates.len(), k) {
            let e1 = Subset::from_indices(pick.iter().map(|&i| candidates[i]));
            let packs = inst.pack_vector(&e1).iter().zip(&inst.pack_bound).all(|(u, b)| u <= b);
            let heavy = if packs { heavy_marginals(inst, params, &e1) } else { Subset::empty() };
            let mut grid = vec![0u32; form.c()];
            loop {
                if out.examined >= budget {
                    out.truncated = true;
                    break 'sizes;
                }
                out.examined += 1;
                if packs {
                    let g = Guess::preprocess_with(form, params, e1.clone(), grid.clone(), &heavy)?;
                    if g.is_consistent(inst) {
                        out.guesses.push(g);
                    }
                }
                if !advance(&mut grid, top) {
                    break;
                }
            }
        }
    }
    Ok(out)
}

fn advance(grid: &mut [u32], top: u32) -> bool {
    for g in grid.iter_mut().rev() {
        if *g < top {
            *g += 1;
            return true;
        }
        *g = 0;
    }
    false
}

/// `k`-subsets of `0..n` in lexicographic order.
struct Combinations {
    n: usize,
    idx: Vec<usize>,
    done: bool,
}

impl Combinations {
    fn new(n: usize, k: usize) -> Self {
        Combinations { n, idx: (0..k).collect(), done: k > n }
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let out = self.idx.clone();
        let k = self.idx.len();
        match (0..k).rev().find(|&i| self.idx[i] < self.n - k + i) {
            Some(i) => {
                self.idx[i] += 1;
                for t in i + 1..k {
                    self.idx[t] = self.idx[t - 1] + 1;
                }
            }
            None => self.done = true,
        }
        Some(out)
    }
}

/// `g(T) = f(T ∪ E1) − f(E1)` for `T` inside the undetermined elements.
pub fn residual_objective(inst: &Instance, guess: &Guess, t: &Subset) -> Result<Rational> {
    if let Some(bad) = t.iter().find(|&l| l >= inst.n) {
        return Err(PcsmError::ElementOutOfRange { element: bad, n: inst.n });
    }
    if !t.is_disjoint(&guess.e0) || !t.is_disjoint(&guess.e1) {
        return Err(PcsmError::InvalidParameter("residual set meets E0 or E1".into()));
    }
    Ok(inst.value(&t.union(&guess.e1)) - inst.value(&guess.e1))
}
