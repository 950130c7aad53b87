use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{Guess, UnitForm};
use crate::error::{PcsmError, Result};
use crate::instance::Instance;
use crate::lp::{linear_max_over_polytope, LpStatus};
use crate::oracle::{SetFunction, SubmodularOracle};
use crate::rational::{to_f64, Rational};
use crate::subset::Subset;

/// Point of `[0,1]^Ñ`; `x[k]` belongs to element `elements[k]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FractionalPoint {
    pub elements: Vec<usize>,
    pub x: Vec<f64>,
}

impl FractionalPoint {
    pub fn zeros(elements: Vec<usize>) -> Self {
        let x = vec![0.0; elements.len()];
        FractionalPoint { elements, x }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        FractionalPoint { elements: self.elements.clone(), x: self.x.iter().map(|v| v * factor).collect() }
    }

    /// Dense vector over a ground set of size `n`.
    pub fn dense(&self, n: usize) -> Vec<f64> {
        let mut out = vec![0.0; n];
        for (&l, &v) in self.elements.iter().zip(&self.x) {
            out[l] = v;
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
}

/// Monte-Carlo estimate of the multilinear extension `F(x) = E[f(R)]`.
pub fn multilinear_estimate<F: SetFunction + ?Sized>(f: &F, x: &[f64], samples: usize, seed: u64) -> Result<Estimate> {
    if samples == 0 {
        return Err(PcsmError::InvalidParameter("samples must be at least 1".into()));
    }
    if x.len() != f.ground_size() {
        return Err(PcsmError::InvalidParameter(format!(
            "point has {} coordinates for a ground set of {}",
            x.len(),
            f.ground_size()
        )));
    }
    if x.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(PcsmError::InvalidParameter("point leaves [0,1]".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sum = 0.0;
    let mut sq = 0.0;
    for _ in 0..samples {
        let r: Subset = (0..x.len()).filter(|&l| rng.gen::<f64>() < x[l]).collect();
        let v = to_f64(&f.value(&r));
        sum += v;
        sq += v * v;
    }
    let k = samples as f64;
    let mean = sum / k;
    let stderr = if samples > 1 { ((sq - k * mean * mean).max(0.0) / (k - 1.0) / k).sqrt() } else { 0.0 };
    Ok(Estimate { mean, stderr })
}

/// `g(T) = f(T ∪ E1) − f(E1)` with `T` given in local indices of `Ñ`.
pub struct ResidualObjective<'a> {
    f: &'a SubmodularOracle,
    e1: Subset,
    residual: Vec<usize>,
    base: Rational,
}

impl<'a> ResidualObjective<'a> {
    pub fn new(inst: &'a Instance, guess: &Guess) -> Self {
        ResidualObjective {
            f: &inst.objective,
            e1: guess.e1.clone(),
            residual: guess.residual.clone(),
            base: inst.objective.eval(&guess.e1),
        }
    }

    pub fn global(&self, local: &Subset) -> Subset {
        local.iter().map(|k| self.residual[k]).collect()
    }
}

impl SetFunction for ResidualObjective<'_> {
    fn ground_size(&self) -> usize {
        self.residual.len()
    }

    fn value(&self, set: &Subset) -> Rational {
        self.f.eval(&self.global(set).union(&self.e1)) - self.base
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct GreedyOptions {
    pub steps: usize,
    /// Random sets drawn per gradient estimate.
    pub samples: usize,
}

impl Default for GreedyOptions {
    fn default() -> Self {
        GreedyOptions { steps: 100, samples: 200 }
    }
}

/// Discretized continuous greedy for the residual problem of `guess`.
///
/// Each step estimates `∂F/∂x_ℓ = E[f(E1 ∪ R ∪ {ℓ}) − f(E1 ∪ R − {ℓ})]`,
/// moves `1/steps` along the best vertex of the residual polytope and stays
/// inside it by convexity. Returns `None` when the polytope is empty.
pub fn continuous_greedy(
    inst: &Instance,
    form: &UnitForm,
    guess: &Guess,
    opts: &GreedyOptions,
    seed: u64,
) -> Result<Option<FractionalPoint>> {
    if opts.steps == 0 || opts.samples == 0 {
        return Err(PcsmError::InvalidParameter("steps and samples must be at least 1".into()));
    }
    let tilde = &guess.residual;
    if tilde.is_empty() {
        let empty_ok = guess.s.iter().all(|&s| s <= 1e-12) && guess.r.iter().all(|&r| r >= -1e-12);
        return Ok(empty_ok.then(|| FractionalPoint::zeros(Vec::new())));
    }
    let restrict = |rows: &[Vec<f64>]| -> Vec<Vec<f64>> {
        rows.iter().map(|row| tilde.iter().map(|&l| row[l]).collect()).collect()
    };
    let pack = restrict(&form.pack);
    let cover = restrict(&form.cover);
    let probe = linear_max_over_polytope(&vec![0.0; tilde.len()], &pack, &guess.r, &cover, &guess.s)?;
    if probe.status != LpStatus::Optimal {
        return Ok(None);
    }
    let f = &inst.objective;
    let e1: Vec<usize> = guess.e1.iter().collect();
    let unit = f.unit() as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = vec![0.0; tilde.len()];
    let mut items: Vec<usize> = Vec::with_capacity(e1.len() + tilde.len() + 1);
    for _ in 0..opts.steps {
        let mut w = vec![0.0; tilde.len()];
        for _ in 0..opts.samples {
            let inside: Vec<bool> = x.iter().map(|&p| rng.gen::<f64>() < p).collect();
            items.clear();
            items.extend(&e1);
            items.extend((0..tilde.len()).filter(|&k| inside[k]).map(|k| tilde[k]));
            let with_all = f.eval_units(items.iter().copied());
            for k in 0..tilde.len() {
                let l = tilde[k];
                let gain = if inside[k] {
                    with_all - f.eval_units(items.iter().copied().filter(|&i| i != l))
                } else {
                    f.eval_units(items.iter().copied().chain(std::iter::once(l))) - with_all
                };
                w[k] += gain as f64;
            }
        }
        let scale = 1.0 / (opts.samples as f64 * unit);
        w.iter_mut().for_each(|v| *v *= scale);
        let v = linear_max_over_polytope(&w, &pack, &guess.r, &cover, &guess.s)?;
        if v.status != LpStatus::Optimal {
            return Err(PcsmError::Numeric("direction LP lost feasibility".into()));
        }
        for (xk, vk) in x.iter_mut().zip(&v.x) {
            *xk = (*xk + vk.clamp(0.0, 1.0) / opts.steps as f64).min(1.0);
        }
    }
    Ok(Some(FractionalPoint { elements: tilde.clone(), x }))
}
