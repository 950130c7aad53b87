use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use pcsm::bench::{bench, write_csv, BenchOptions, Solver};
use pcsm::brute::{brute_optimum, DEFAULT_MAX_N};
use pcsm::continuous::{solve_main, ContinuousOptions, GreedyOptions};
use pcsm::forbidden_dp::{cardinality_solve, forbidden_dp_solve, solve_polynomial, ForbiddenOptions, Recurrence};
use pcsm::gen::{generate_instance, Family, GenSpec};
use pcsm::greedy_dp::{dp_with_completion, vanilla_dp, DpOptions};
use pcsm::json::{instance_from_json, instance_to_json_pretty};
use pcsm::kmedian::{km_from_json, solve_two_distance};
use pcsm::lp::{
    build_dual, build_lp, dual_witness, lp_optimum, primal_witness, verify_upper_bound_construction, LpVariant,
    PivotRule, SimplexOptions, UpperBoundVariant,
};
use pcsm::rational::{format_rational, parse_rational, to_f64, Rational};
use pcsm::{Instance, IntInstance, Params, PcsmError, Subset};

#[derive(Parser)]
#[command(name = "pcsm", version, about = "Submodular maximization under packing and covering constraints")]
struct Cli {
    /// Seed for every randomized step.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Print machine-readable JSON instead of a summary.
    #[arg(long, global = true)]
    json: bool,
    /// Suppress notes on stderr.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random instance with a planted feasible set.
    Gen(GenArgs),
    /// Exact optimum by exhaustive search.
    Brute {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, default_value_t = DEFAULT_MAX_N)]
        max_n: usize,
    },
    /// Greedy DP over integer resource vectors.
    Dp {
        #[arg(long)]
        instance: PathBuf,
        /// Complete every cell to full coverage, allowing repeated elements.
        #[arg(long)]
        completion: bool,
        /// Keep exact covering sums in the keys instead of clamping.
        #[arg(long)]
        exact_keys: bool,
    },
    /// Greedy DP with forbidden sets for one packing and one covering row.
    Forbidden {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, default_value = "0.25")]
        epsilon: String,
        /// Replace the packing rows by `|S| <= k`.
        #[arg(long)]
        cardinality: Option<u64>,
        /// Scale rational data first.
        #[arg(long)]
        poly: bool,
        #[arg(long, value_enum, default_value_t = RecurrenceArg::Forward)]
        recurrence: RecurrenceArg,
    },
    /// Guess enumeration, continuous greedy and randomized rounding.
    Continuous(ContinuousArgs),
    /// Factor-revealing linear programs.
    Lp {
        #[arg(long, value_enum, default_value_t = VariantArg::Lpf)]
        variant: VariantArg,
        /// One or more sizes, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        m: Vec<usize>,
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Check the analytic witnesses (or the upper-bound point for lpf) exactly.
        #[arg(long)]
        verify_analytic: bool,
        #[arg(long, value_enum, default_value_t = PivotArg::Dantzig)]
        pivot: PivotArg,
    },
    /// Two-distance capacitated k-median.
    Kmedian {
        #[arg(long)]
        instance: PathBuf,
    },
    /// Run solvers over a generated suite and write CSV.
    Bench(BenchArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    p: usize,
    #[arg(long, default_value_t = 1)]
    c: usize,
    #[arg(long, default_value = "coverage")]
    family: String,
    #[arg(long, default_value_t = 0.7)]
    density: f64,
    /// Quarter-valued entries instead of integers.
    #[arg(long)]
    fractional: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ContinuousArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
    /// Use a chosen delta instead of the theoretical schedule.
    #[arg(long)]
    relaxed: bool,
    #[arg(long, default_value_t = 0.2)]
    delta: f64,
    #[arg(long, requires = "relaxed")]
    alpha: Option<f64>,
    #[arg(long, requires = "relaxed")]
    beta: Option<f64>,
    #[arg(long, requires = "relaxed")]
    gamma: Option<f64>,
    #[arg(long, default_value_t = 20)]
    trials: usize,
    #[arg(long, default_value_t = 100_000)]
    budget: u128,
    #[arg(long, default_value_t = 100)]
    steps: usize,
    #[arg(long, default_value_t = 200)]
    samples: usize,
}

#[derive(Args)]
struct BenchArgs {
    /// Instance sizes, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "8")]
    n: Vec<usize>,
    /// Instances per size.
    #[arg(long, default_value_t = 10)]
    count: usize,
    #[arg(long, default_value_t = 1)]
    p: usize,
    #[arg(long, default_value_t = 1)]
    c: usize,
    #[arg(long, default_value = "coverage")]
    family: String,
    /// Solvers such as `dp`, `forbidden:1/4`, `continuous:0.2`, `lpf:50`.
    #[arg(long, value_delimiter = ',', default_value = "dp,forbidden")]
    solvers: Vec<String>,
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum RecurrenceArg {
    Forward,
    Backward,
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    Lp,
    Dual,
    Lpf,
}

#[derive(Clone, Copy, ValueEnum)]
enum PivotArg {
    Bland,
    Dantzig,
}

const EXIT_INFEASIBLE: u8 = 2;
const EXIT_BUDGET: u8 = 3;
const EXIT_BAD_INPUT: u8 = 4;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_BAD_INPUT } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    match e.chain().find_map(|c| c.downcast_ref::<PcsmError>()) {
        Some(PcsmError::Infeasible(_)) => EXIT_INFEASIBLE,
        Some(PcsmError::Budget(_) | PcsmError::TooLarge { .. }) => EXIT_BUDGET,
        Some(PcsmError::Numeric(_)) => 1,
        Some(_) => EXIT_BAD_INPUT,
        None if e.chain().any(|c| c.downcast_ref::<std::io::Error>().is_some()) => EXIT_BAD_INPUT,
        None => 1,
    }
}

fn read_instance(path: &Path) -> Result<Instance> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    instance_from_json(&text).with_context(|| format!("parsing {}", path.display()))
}

fn num(q: &Rational) -> Value {
    if q.is_integer() {
        if let Ok(v) = i64::try_from(*q.numer()) {
            return json!(v);
        }
    }
    json!(format_rational(q))
}

fn nums(v: &[Rational]) -> Value {
    Value::Array(v.iter().map(num).collect())
}

/// Prints `doc` as JSON, or `summary` otherwise.
fn emit(cli: &Cli, doc: &Value, summary: String) {
    if cli.json {
        println!("{}", serde_json::to_string_pretty(doc).expect("json values serialize"));
    } else {
        println!("{summary}");
    }
}

fn set_report(inst: &Instance, set: &Subset) -> Value {
    let (pack_ratio, cover_ratio) = inst.ratios_f64(set);
    json!({
        "value": num(&inst.value(set)),
        "set": set,
        "cover_vec": nums(&inst.cover_vector(set)),
        "pack_vec": nums(&inst.pack_vector(set)),
        "cover_ratio": finite(cover_ratio),
        "pack_ratio": finite(pack_ratio),
    })
}

fn finite(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

fn note(cli: &Cli, msg: &str) {
    if !cli.quiet {
        eprintln!("{msg}");
    }
}

fn run(cli: &Cli) -> Result<u8> {
    match &cli.command {
        Command::Gen(a) => {
            let spec = GenSpec {
                n: a.n,
                p: a.p,
                c: a.c,
                family: a.family.parse::<Family>()?,
                density: a.density,
                seed: cli.seed,
                integer: !a.fractional,
            };
            let inst = generate_instance(&spec)?;
            let text = instance_to_json_pretty(&inst);
            match &a.out {
                Some(path) => fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))?,
                None => println!("{text}"),
            }
            Ok(0)
        }
        Command::Brute { instance, max_n } => {
            let inst = read_instance(instance)?;
            let r = brute_optimum(&inst, *max_n)?;
            if r.feasible_count == 0 {
                emit(cli, &json!({"feasible_count": 0, "best_value": null, "best_set": null}), "infeasible".into());
                return Ok(EXIT_INFEASIBLE);
            }
            let doc = json!({
                "best_value": num(&r.best_value),
                "best_set": r.best_set,
                "feasible_count": r.feasible_count,
            });
            emit(cli, &doc, format!("optimum {} at {} ({} feasible sets)", r.best_value, r.best_set, r.feasible_count));
            Ok(0)
        }
        Command::Dp { instance, completion, exact_keys } => {
            let inst = read_instance(instance)?;
            let int = inst.to_integer()?;
            let opts = DpOptions { exact_keys: *exact_keys, ..Default::default() };
            if *completion {
                let out = dp_with_completion(&int, &opts)?;
                let Some(best) = out.best else {
                    emit(cli, &json!({"value": null, "cells_populated": out.table.len()}), "no cell admits a completion".into());
                    return Ok(EXIT_INFEASIBLE);
                };
                let doc = json!({
                    "value": num(&best.value),
                    "set": best.support,
                    "multiset": best.multiset,
                    "cover_vec": best.cover,
                    "pack_vec": best.pack,
                    "cells_populated": out.table.len(),
                    "valid_cells": out.valid_cells,
                });
                emit(cli, &doc, format!("value {} with multiset {:?}", best.value, best.multiset));
            } else {
                let out = vanilla_dp(&int, &opts)?;
                let Some(best) = out.best else {
                    emit(cli, &json!({"value": null, "cells_populated": out.table.len()}), "no qualifying cell".into());
                    return Ok(EXIT_INFEASIBLE);
                };
                let mut doc = set_report(&inst, &best.set);
                doc["cells_populated"] = json!(out.table.len());
                emit(cli, &doc, format!("value {} at {}", best.value, best.set));
            }
            Ok(0)
        }
        Command::Forbidden { instance, epsilon, cardinality, poly, recurrence } => {
            let inst = read_instance(instance)?;
            let eps = parse_rational(epsilon)?;
            let opts = ForbiddenOptions {
                recurrence: match recurrence {
                    RecurrenceArg::Forward => Recurrence::Forward,
                    RecurrenceArg::Backward => Recurrence::Backward,
                },
                ..Default::default()
            };
            let best = if *poly {
                solve_polynomial(&inst, &eps, &opts)?.best
            } else {
                let int = inst.to_integer()?;
                match cardinality {
                    Some(k) => {
                        let card = IntInstance::new(
                            vec![vec![1; inst.n]],
                            int.covering.clone(),
                            vec![*k],
                            int.cover_bound.clone(),
                            int.objective.clone(),
                        )?;
                        cardinality_solve(&card, &opts)?.best.map(|(_, s)| s)
                    }
                    None => forbidden_dp_solve(&int, &eps, &opts)?.best.map(|(_, s)| s),
                }
            };
            let Some(set) = best else {
                emit(cli, &json!({"value": null}), "no qualifying set".into());
                return Ok(EXIT_INFEASIBLE);
            };
            emit(cli, &set_report(&inst, &set), format!("value {} at {}", inst.value(&set), set));
            Ok(0)
        }
        Command::Continuous(a) => run_continuous(cli, a),
        Command::Lp { variant, m, csv, verify_analytic, pivot } => {
            let variant = match variant {
                VariantArg::Lp => LpVariant::Lp,
                VariantArg::Dual => LpVariant::Dual,
                VariantArg::Lpf => LpVariant::LpF,
            };
            let rule = match pivot {
                PivotArg::Bland => PivotRule::Bland,
                PivotArg::Dantzig => PivotRule::Dantzig,
            };
            let opts = SimplexOptions { rule, ..Default::default() };
            let mut rows = Vec::new();
            for &size in m {
                rows.push((size, lp_optimum(variant, size, &opts)?));
            }
            if let Some(path) = csv {
                let mut w = csv_writer(path)?;
                w.write_record(["m", "optimum"])?;
                for (size, v) in &rows {
                    w.write_record([size.to_string(), format!("{v:.10}")])?;
                }
                w.flush()?;
            }
            let checks = if *verify_analytic { Some(analytic_checks(variant, m)?) } else { None };
            let doc = json!({
                "variant": variant.name(),
                "rows": rows.iter().map(|(s, v)| json!({"m": s, "optimum": v})).collect::<Vec<_>>(),
                "checks": checks,
            });
            let mut summary: Vec<String> = rows.iter().map(|(s, v)| format!("m={s}  {v:.8}")).collect();
            if let Some(c) = &checks {
                summary.push(serde_json::to_string_pretty(c)?);
            }
            emit(cli, &doc, summary.join("\n"));
            Ok(0)
        }
        Command::Kmedian { instance } => {
            let text = fs::read_to_string(instance).with_context(|| format!("reading {}", instance.display()))?;
            let inst = km_from_json(&text)?;
            let sol = solve_two_distance(&inst)?;
            let doc = json!({
                "open": sol.open,
                "assignment": sol.assignment,
                "matched": sol.matched,
                "cost": num(&sol.cost),
                "method": sol.method,
            });
            emit(cli, &doc, format!("cost {} opening {} ({} clients near)", sol.cost, sol.open, sol.matched));
            Ok(0)
        }
        Command::Bench(a) => {
            let family: Family = a.family.parse()?;
            let solvers: Vec<Solver> = a.solvers.iter().map(|s| s.parse()).collect::<pcsm::Result<_>>()?;
            let mut suite = Vec::new();
            for &n in &a.n {
                for i in 0..a.count {
                    suite.push(GenSpec::new(n, a.p, a.c, family, cli.seed.wrapping_add(i as u64)));
                }
            }
            let opts = BenchOptions { epsilon: a.epsilon, ..Default::default() };
            let reports = bench(&suite, &solvers, &opts)?;
            for r in reports.iter().filter(|r| r.error.is_some()) {
                note(cli, &format!("{} on {}: {}", r.solver, &r.instance_digest[..12.min(r.instance_digest.len())], r.error.as_deref().unwrap_or("")));
            }
            match &a.csv {
                Some(path) => write_csv(&reports, fs::File::create(path).with_context(|| format!("creating {}", path.display()))?)?,
                None if !cli.json => write_csv(&reports, std::io::stdout().lock())?,
                None => {}
            }
            if cli.json {
                println!("{}", serde_json::to_string_pretty(&reports)?);
            }
            Ok(0)
        }
    }
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))
}

fn analytic_checks(variant: LpVariant, m: &[usize]) -> Result<Value> {
    let mut out = Vec::new();
    for &size in m {
        match variant {
            LpVariant::Lp | LpVariant::Dual => {
                let (lp, x) = match variant {
                    LpVariant::Lp => (build_lp(size)?, primal_witness(size)?),
                    _ => (build_dual(size)?, dual_witness(size)?),
                };
                let check = lp.check_exact(&x);
                out.push(json!({
                    "m": size,
                    "feasible": check.feasible(),
                    "objective": pcsm::rational::big_to_f64(&check.objective),
                    "closed_form": ((size as f64 - 1.0) / size as f64).powi(size as i32),
                }));
            }
            LpVariant::LpF => {
                if size <= 2 || size % 2 == 1 {
                    out.push(json!({"m": size, "skipped": "upper-bound point needs an even m > 2"}));
                    continue;
                }
                for v in [UpperBoundVariant::Renormalized, UpperBoundVariant::Literal] {
                    out.push(serde_json::to_value(verify_upper_bound_construction(size, v)?)?);
                }
            }
        }
    }
    Ok(Value::Array(out))
}

fn run_continuous(cli: &Cli, a: &ContinuousArgs) -> Result<u8> {
    let inst = read_instance(&a.instance)?;
    let b = inst.p() + inst.c();
    let mut opts = if a.relaxed {
        let mut params = Params::from_delta(a.epsilon, a.delta, b)?;
        params.alpha = a.alpha.unwrap_or(params.alpha);
        params.beta = a.beta.unwrap_or(params.beta);
        params.gamma = a.gamma.unwrap_or(params.gamma);
        params.validate()?;
        ContinuousOptions::with_params(params)
    } else {
        ContinuousOptions::theoretical(a.epsilon, b)?
    };
    opts.greedy = GreedyOptions { steps: a.steps, samples: a.samples };
    opts.trials = a.trials;
    opts.budget = a.budget;
    let out = solve_main(&inst, &opts, cli.seed)?;
    if out.truncated {
        note(cli, &format!("guess enumeration stopped at the budget of {} pairs", a.budget));
    }
    let mut doc = json!({
        "params": opts.params,
        "guesses": out.guesses,
        "examined": out.examined.to_string(),
        "truncated": out.truncated,
        "trials": out.trials,
        "per_guess": out.reports,
    });
    let code = match &out.best {
        Some(set) => {
            let rep = set_report(&inst, set);
            for key in ["value", "set", "cover_vec", "pack_vec", "cover_ratio", "pack_ratio"] {
                doc[key] = rep[key].clone();
            }
            0
        }
        None if out.truncated => EXIT_BUDGET,
        None => EXIT_INFEASIBLE,
    };
    let summary = match (&out.best, &out.value) {
        (Some(s), Some(v)) => format!(
            "value {} ({:.6}) at {} from {} guesses{}",
            v,
            to_f64(v),
            s,
            out.guesses,
            if out.truncated { ", enumeration truncated" } else { "" }
        ),
        _ => format!("no qualifying set from {} guesses", out.guesses),
    };
    emit(cli, &doc, summary);
    Ok(code)
}
