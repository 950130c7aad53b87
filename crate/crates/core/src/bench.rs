//! Runs solvers over generated suites and compares them with brute force.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::brute::brute_optimum;
use crate::continuous::{solve_main, ContinuousOptions, GreedyOptions};
use crate::error::{PcsmError, Result};
use crate::forbidden_dp::{forbidden_dp_solve, solve_polynomial, ForbiddenOptions};
use crate::gen::{generate_instance, GenSpec};
use crate::greedy_dp::{dp_with_completion, vanilla_dp, DpOptions};
use crate::instance::Instance;
use crate::json::instance_digest;
use crate::lp::{lp_optimum, LpVariant, PivotRule, SimplexOptions};
use crate::rational::{format_rational, parse_rational, ratio, to_f64, Rational};
use crate::subset::Subset;

/// Largest instance for which the brute-force reference is computed.
pub const BRUTE_LIMIT: usize = 12;

pub const CSV_HEADER: [&str; 9] =
    ["instance_digest", "solver", "value", "brute", "ratio", "cover_ratio", "pack_ratio", "seconds", "seed"];

/// Solver selector, written `name` or `name:arg`.
#[derive(Clone, Debug, PartialEq)]
pub enum Solver {
    Brute,
    Dp,
    Completion,
    /// Forbidden-set DP with the given `ε`.
    Forbidden(Rational),
    /// Scaled forbidden-set DP on rational data.
    Poly(Rational),
    /// Continuous pipeline in relaxed mode with the given `δ`.
    Continuous(f64),
    /// Factor-revealing program of the given size; independent of the suite.
    Lp(LpVariant, usize),
}

impl Solver {
    pub fn is_lp(&self) -> bool {
        matches!(self, Solver::Lp(..))
    }
}

impl fmt::Display for Solver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Solver::Brute => write!(f, "brute"),
            Solver::Dp => write!(f, "dp"),
            Solver::Completion => write!(f, "completion"),
            Solver::Forbidden(e) => write!(f, "forbidden:{}", format_rational(e)),
            Solver::Poly(e) => write!(f, "poly:{}", format_rational(e)),
            Solver::Continuous(d) => write!(f, "continuous:{d}"),
            Solver::Lp(v, m) => write!(f, "{}:{m}", v.name()),
        }
    }
}

impl FromStr for Solver {
    type Err = PcsmError;

    fn from_str(s: &str) -> Result<Self> {
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s, None),
        };
        let eps = |a: Option<&str>| a.map_or(Ok(ratio(1, 4)), parse_rational);
        let m = |a: Option<&str>| -> Result<usize> {
            a.ok_or_else(|| PcsmError::InvalidParameter(format!("solver `{name}` needs a size, e.g. `{name}:10`")))?
                .parse()
                .map_err(|_| PcsmError::InvalidParameter(format!("bad size in `{s}`")))
        };
        Ok(match name {
            "brute" => Solver::Brute,
            "dp" => Solver::Dp,
            "completion" => Solver::Completion,
            "forbidden" => Solver::Forbidden(eps(arg)?),
            "poly" => Solver::Poly(eps(arg)?),
            "continuous" => Solver::Continuous(match arg {
                Some(a) => a.parse().map_err(|_| PcsmError::InvalidParameter(format!("bad delta in `{s}`")))?,
                None => 0.2,
            }),
            "lp" | "dual" | "lpf" => Solver::Lp(name.parse()?, m(arg)?),
            other => return Err(PcsmError::InvalidParameter(format!("unknown solver `{other}`"))),
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub solver: String,
    pub instance_digest: String,
    pub value: Option<f64>,
    pub brute: Option<f64>,
    /// `value / brute` when both exist and `brute > 0`.
    pub ratio: Option<f64>,
    pub cover_ratio: Option<f64>,
    pub pack_ratio: Option<f64>,
    pub seconds: f64,
    pub seed: u64,
    pub params: String,
    pub error: Option<String>,
}

#[derive(Default)]
struct Found {
    value: Option<Rational>,
    cover_ratio: Option<f64>,
    pack_ratio: Option<f64>,
}

impl Found {
    fn of_set(inst: &Instance, set: &Subset) -> Self {
        let (pack, cover) = inst.ratios_f64(set);
        Found { value: Some(inst.value(set)), cover_ratio: Some(cover), pack_ratio: Some(pack) }
    }
}

/// Settings shared by the continuous runs of a bench.
#[derive(Clone, Copy, Debug)]
pub struct BenchOptions {
    pub epsilon: f64,
    pub greedy: GreedyOptions,
    pub trials: usize,
    pub budget: u128,
}

impl Default for BenchOptions {
    fn default() -> Self {
        BenchOptions { epsilon: 0.1, greedy: GreedyOptions { steps: 10, samples: 20 }, trials: 20, budget: 100_000 }
    }
}

fn run_one(inst: &Instance, solver: &Solver, seed: u64, opts: &BenchOptions) -> Result<Found> {
    match solver {
        Solver::Brute => {
            let r = brute_optimum(inst, crate::brute::DEFAULT_MAX_N)?;
            Ok(if r.feasible_count > 0 { Found::of_set(inst, &r.best_set) } else { Found::default() })
        }
        Solver::Dp => {
            let out = vanilla_dp(&inst.to_integer()?, &DpOptions::default())?;
            Ok(out.best.map(|c| Found::of_set(inst, &c.set)).unwrap_or_default())
        }
        Solver::Completion => {
            let out = dp_with_completion(&inst.to_integer()?, &DpOptions::default())?;
            Ok(match out.best {
                Some(c) => {
                    let (pack_ratio, cover_ratio) = multiset_ratios(inst, &c.pack, &c.cover);
                    Found { value: Some(c.value), cover_ratio: Some(cover_ratio), pack_ratio: Some(pack_ratio) }
                }
                None => Found::default(),
            })
        }
        Solver::Forbidden(eps) => {
            let out = forbidden_dp_solve(&inst.to_integer()?, eps, &ForbiddenOptions::default())?;
            Ok(out.best.map(|(_, s)| Found::of_set(inst, &s)).unwrap_or_default())
        }
        Solver::Poly(eps) => {
            let out = solve_polynomial(inst, eps, &ForbiddenOptions::default())?;
            Ok(out.best.map(|s| Found::of_set(inst, &s)).unwrap_or_default())
        }
        Solver::Continuous(delta) => {
            let mut o = ContinuousOptions::relaxed(opts.epsilon, *delta, inst.p() + inst.c())?;
            o.greedy = opts.greedy;
            o.trials = opts.trials;
            o.budget = opts.budget;
            let out = solve_main(inst, &o, seed)?;
            Ok(out.best.map(|s| Found::of_set(inst, &s)).unwrap_or_default())
        }
        Solver::Lp(..) => Err(PcsmError::InvalidParameter("LP solvers take no instance".into())),
    }
}

/// Ratios of usage vectors that may count an element twice.
fn multiset_ratios(inst: &Instance, pack: &[u64], cover: &[u64]) -> (f64, f64) {
    let frac = |u: u64, b: &Rational, empty: f64| if b.numer() == &0 { empty } else { u as f64 / to_f64(b) };
    let p = pack
        .iter()
        .zip(&inst.pack_bound)
        .map(|(&u, b)| if u == 0 { 0.0 } else { frac(u, b, f64::INFINITY) })
        .fold(0.0, f64::max);
    let c = cover.iter().zip(&inst.cover_bound).map(|(&u, b)| frac(u, b, f64::INFINITY)).fold(f64::INFINITY, f64::min);
    (p, c)
}

fn params_of(solver: &Solver, opts: &BenchOptions) -> String {
    match solver {
        Solver::Continuous(_) => format!(
            "epsilon={} steps={} samples={} trials={} budget={}",
            opts.epsilon, opts.greedy.steps, opts.greedy.samples, opts.trials, opts.budget
        ),
        other => other.to_string(),
    }
}

/// Runs every instance solver on every suite entry, then each LP solver once.
/// Reports come back in input order.
pub fn bench(suite: &[GenSpec], solvers: &[Solver], opts: &BenchOptions) -> Result<Vec<RunReport>> {
    let instances: Vec<(Instance, String, Option<f64>)> = suite
        .par_iter()
        .map(|spec| {
            let inst = generate_instance(spec)?;
            let digest = instance_digest(&inst);
            let brute = if inst.n <= BRUTE_LIMIT {
                let r = brute_optimum(&inst, BRUTE_LIMIT)?;
                (r.feasible_count > 0).then(|| to_f64(&r.best_value))
            } else {
                None
            };
            Ok((inst, digest, brute))
        })
        .collect::<Result<_>>()?;
    let inst_solvers: Vec<&Solver> = solvers.iter().filter(|s| !s.is_lp()).collect();
    let pairs: Vec<(usize, &Solver)> =
        (0..suite.len()).flat_map(|i| inst_solvers.iter().map(move |s| (i, *s))).collect();
    let mut reports: Vec<RunReport> = pairs
        .par_iter()
        .map(|&(i, solver)| {
            let (inst, digest, brute) = &instances[i];
            let seed = suite[i].seed;
            let start = Instant::now();
            let outcome = run_one(inst, solver, seed, opts);
            let seconds = start.elapsed().as_secs_f64();
            let (found, error) = match outcome {
                Ok(f) => (f, None),
                Err(e) => (Found::default(), Some(e.to_string())),
            };
            let value = found.value.map(|v| to_f64(&v));
            let ratio = match (value, brute) {
                (Some(v), Some(b)) if *b > 0.0 => Some(v / b),
                _ => None,
            };
            RunReport {
                solver: solver.to_string(),
                instance_digest: digest.clone(),
                value,
                brute: *brute,
                ratio,
                cover_ratio: found.cover_ratio,
                pack_ratio: found.pack_ratio,
                seconds,
                seed,
                params: params_of(solver, opts),
                error,
            }
        })
        .collect();
    for solver in solvers.iter().filter(|s| s.is_lp()) {
        let Solver::Lp(variant, m) = solver else { continue };
        let start = Instant::now();
        let simplex = SimplexOptions { rule: PivotRule::Dantzig, ..Default::default() };
        let (value, error) = match lp_optimum(*variant, *m, &simplex) {
            Ok(v) => (Some(v), None),
            Err(e) => (None, Some(e.to_string())),
        };
        reports.push(RunReport {
            solver: solver.to_string(),
            instance_digest: format!("{}-m{m}", variant.name()),
            value,
            brute: None,
            ratio: None,
            cover_ratio: None,
            pack_ratio: None,
            seconds: start.elapsed().as_secs_f64(),
            seed: 0,
            params: format!("m={m}"),
            error,
        });
    }
    Ok(reports)
}

/// Formats with at most 12 significant digits, trimming trailing zeros.
pub fn sig12(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { "0".into() } else { x.to_string() };
    }
    let decimals = (11 - x.abs().log10().floor() as i32).clamp(0, 30) as usize;
    let s = format!("{x:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// Writes the fixed CSV schema, one row per report.
pub fn write_csv<W: Write>(reports: &[RunReport], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    let opt = |x: Option<f64>| x.map(sig12).unwrap_or_default();
    for r in reports {
        w.write_record([
            r.instance_digest.clone(),
            r.solver.clone(),
            opt(r.value),
            opt(r.brute),
            opt(r.ratio),
            opt(r.cover_ratio),
            opt(r.pack_ratio),
            format!("{:.6}", r.seconds),
            r.seed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
