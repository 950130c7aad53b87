//! Factor-revealing programs for the greedy DPs, their closed-form witnesses
//! and the explicit upper-bound point for the forbidden-set program.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

use super::{simplex_solve, ExactCheck, LinearProgram, LpStatus, Relation, Sense, SimplexOptions};
use crate::error::{PcsmError, Result};
use crate::rational::{big_pow, big_to_f64};

fn q(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

fn one() -> BigRational {
    BigRational::one()
}

fn check_m(m: usize) -> Result<()> {
    if m == 0 {
        return Err(PcsmError::InvalidParameter("m must be at least 1".into()));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LpVariant {
    Lp,
    Dual,
    LpF,
}

impl LpVariant {
    pub fn name(&self) -> &'static str {
        match self {
            LpVariant::Lp => "lp",
            LpVariant::Dual => "dual",
            LpVariant::LpF => "lpf",
        }
    }
}

impl std::str::FromStr for LpVariant {
    type Err = PcsmError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lp" => Ok(LpVariant::Lp),
            "dual" => Ok(LpVariant::Dual),
            "lpf" | "lp-f" | "lp_f" => Ok(LpVariant::LpF),
            other => Err(PcsmError::InvalidParameter(format!("unknown LP variant `{other}`"))),
        }
    }
}

/// Variables `a[1..m]` then `o[1..m]`; minimise `a[m]`.
pub fn build_lp(m: usize) -> Result<LinearProgram<BigRational>> {
    check_m(m)?;
    let mi = m as i64;
    let mut lp = LinearProgram::new(Sense::Min);
    let a: Vec<usize> = (1..=m).map(|i| lp.add_var(format!("a[{i}]"))).collect();
    let o: Vec<usize> = (1..=m).map(|i| lp.add_var(format!("o[{i}]"))).collect();
    lp.set_objective(a[m - 1], one());
    for i in 1..=m {
        let ii = i as i64;
        // a_i − a_{i−1} − (1 − i/m)·o_i ≥ 0, with a_0 absent.
        let mut coeffs = vec![(a[i - 1], one()), (o[i - 1], -q(mi - ii, mi))];
        if i > 1 {
            coeffs.push((a[i - 2], -one()));
        }
        lp.add_constraint(format!("chain[{i}]"), coeffs, Relation::Ge, BigRational::zero())?;
        // a_i + (i/m)·Σ_{j≤i} o_j ≥ i/m.
        let mut coeffs = vec![(a[i - 1], one())];
        coeffs.extend((0..i).map(|j| (o[j], q(ii, mi))));
        lp.add_constraint(format!("remaining[{i}]"), coeffs, Relation::Ge, q(ii, mi))?;
    }
    Ok(lp)
}

/// Variables `x[1..m]` then `y[1..m]`; maximise `Σ (i/m)·y_i`.
pub fn build_dual(m: usize) -> Result<LinearProgram<BigRational>> {
    check_m(m)?;
    let mi = m as i64;
    let mut lp = LinearProgram::new(Sense::Max);
    let x: Vec<usize> = (1..=m).map(|i| lp.add_var(format!("x[{i}]"))).collect();
    let y: Vec<usize> = (1..=m).map(|i| lp.add_var(format!("y[{i}]"))).collect();
    for i in 1..=m {
        lp.set_objective(y[i - 1], q(i as i64, mi));
    }
    for i in 1..m {
        lp.add_constraint(
            format!("step[{i}]"),
            vec![(x[i - 1], one()), (y[i - 1], one()), (x[i], -one())],
            Relation::Le,
            BigRational::zero(),
        )?;
    }
    lp.add_constraint("last", vec![(x[m - 1], one()), (y[m - 1], one())], Relation::Le, one())?;
    for i in 1..=m {
        let mut coeffs: Vec<(usize, BigRational)> = (i..=m).map(|j| (y[j - 1], q(j as i64, mi))).collect();
        coeffs.push((x[i - 1], -q(mi - i as i64, mi)));
        lp.add_constraint(format!("gain[{i}]"), coeffs, Relation::Le, BigRational::zero())?;
    }
    Ok(lp)
}

/// Variables `c`, then `a[i]`, `b[i]`, `o[i]`, `f[i]`, `g[i]` for `i = 0..=m`; minimise `c`.
pub fn build_lp_f(m: usize) -> Result<LinearProgram<BigRational>> {
    check_m(m)?;
    let mi = m as i64;
    let zero = BigRational::zero;
    let mut lp = LinearProgram::new(Sense::Min);
    let c = lp.add_var("c");
    let family = |lp: &mut LinearProgram<BigRational>, s: &str| -> Vec<usize> {
        (0..=m).map(|i| lp.add_var(format!("{s}[{i}]"))).collect()
    };
    let a = family(&mut lp, "a");
    let b = family(&mut lp, "b");
    let o = family(&mut lp, "o");
    let f = family(&mut lp, "f");
    let g = family(&mut lp, "g");
    lp.set_objective(c, one());

    lp.add_constraint("start_le", vec![(a[0], one()), (o[0], -one())], Relation::Le, zero())?;
    lp.add_constraint("start_ge", vec![(a[0], one()), (o[0], -one())], Relation::Ge, zero())?;
    for i in 1..=m {
        let ii = i as i64;
        lp.add_constraint(
            format!("chain[{i}]"),
            vec![(a[i], one()), (a[i - 1], -one()), (o[i], -q(mi - ii, mi))],
            Relation::Ge,
            zero(),
        )?;
    }
    for i in 0..=m {
        let ii = i as i64;
        lp.add_constraint(format!("with_forbidden[{i}]"), vec![(b[i], one()), (a[i], -one()), (g[i], -one())], Relation::Ge, zero())?;
        // a_i − (i/m)(1 − f_i − Σ_{j≤i} o_j) − f_i + g_i ≥ 0.
        let mut coeffs = vec![(a[i], one()), (f[i], q(ii - mi, mi)), (g[i], one())];
        coeffs.extend((0..=i).map(|j| (o[j], q(ii, mi))));
        lp.add_constraint(format!("remaining[{i}]"), coeffs, Relation::Ge, q(ii, mi))?;
        lp.add_constraint(format!("forbidden_value[{i}]"), vec![(b[i], one()), (f[i], -one())], Relation::Ge, zero())?;
        if i >= 1 {
            lp.add_constraint(format!("shrinking[{i}]"), vec![(f[i], one()), (f[i - 1], -one())], Relation::Le, zero())?;
        }
        lp.add_constraint(format!("overlap[{i}]"), vec![(g[i], one()), (f[i], -one())], Relation::Le, zero())?;
        let mut coeffs = vec![(f[i], one())];
        coeffs.extend((0..=i).map(|j| (o[j], one())));
        lp.add_constraint(format!("budget[{i}]"), coeffs, Relation::Le, one())?;
        lp.add_constraint(format!("max[{i}]"), vec![(c, one()), (b[i], -one())], Relation::Ge, zero())?;
    }
    Ok(lp)
}

/// Simplex optimum of one of the programs.
pub fn lp_optimum(variant: LpVariant, m: usize, opts: &SimplexOptions) -> Result<f64> {
    let lp = match variant {
        LpVariant::Lp => build_lp(m)?,
        LpVariant::Dual => build_dual(m)?,
        LpVariant::LpF => build_lp_f(m)?,
    };
    let sol = simplex_solve(&lp.to_f64(), opts)?;
    if sol.status != LpStatus::Optimal {
        return Err(PcsmError::Numeric(format!("{variant:?} at m={m} ended as {:?}", sol.status)));
    }
    Ok(sol.objective)
}

/// `(1 − 1/m)^m`.
pub fn closed_form_value(m: usize) -> BigRational {
    big_pow(&q(m as i64 - 1, m as i64), m as u32)
}

fn base_o(m: usize) -> Vec<BigRational> {
    let r = q(m as i64 - 1, m as i64);
    let inv = q(1, m as i64);
    let mut o: Vec<BigRational> = (1..m).map(|i| &inv * big_pow(&r, i as u32 - 1)).collect();
    let rest: BigRational = one() - o.iter().sum::<BigRational>();
    o.push(rest);
    o
}

/// `a_i = (i/m)(1−1/m)^i`, `o_i = (1/m)(1−1/m)^{i−1}`, `o_m = 1 − Σ_{i<m} o_i`,
/// laid out as in [`build_lp`].
pub fn primal_witness(m: usize) -> Result<Vec<BigRational>> {
    check_m(m)?;
    let r = q(m as i64 - 1, m as i64);
    let mut x: Vec<BigRational> = (1..=m).map(|i| q(i as i64, m as i64) * big_pow(&r, i as u32)).collect();
    x.extend(base_o(m));
    Ok(x)
}

/// `x_i = (1−1/m)^{m−i}`, `y_i = (1/m)(1−1/m)^{m−i−1}`, `y_m = 0`, laid out as in [`build_dual`].
pub fn dual_witness(m: usize) -> Result<Vec<BigRational>> {
    check_m(m)?;
    let r = q(m as i64 - 1, m as i64);
    let mut v: Vec<BigRational> = (1..=m).map(|i| big_pow(&r, (m - i) as u32)).collect();
    v.extend((1..m).map(|i| q(1, m as i64) * big_pow(&r, (m - i - 1) as u32)));
    v.push(BigRational::zero());
    Ok(v)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum UpperBoundVariant {
    /// `o′_m = o_m` exactly as perturbed; overshoots the total budget at `j = m`.
    Literal,
    /// `o′_m = 1 − Σ_{i<m} o′_i`, restoring the budget row.
    Renormalized,
}

fn alpha() -> BigRational {
    q(5, 8)
}
fn beta() -> BigRational {
    q(517, 10_000)
}
fn gamma() -> BigRational {
    q(647, 10_000)
}

/// The perturbed point in [`build_lp_f`] layout, with `a′` and `b′` set to
/// the smallest values the constraints allow.
pub fn upper_bound_point(m: usize, variant: UpperBoundVariant) -> Result<Vec<BigRational>> {
    if m <= 2 || m % 2 == 1 {
        return Err(PcsmError::InvalidParameter(format!("m must be even and greater than 2, got {m}")));
    }
    let (al, be, ga) = (alpha(), beta(), gamma());
    let mb = q(m as i64, 1);
    let half = m / 2;
    let base = base_o(m);
    let mut o = vec![BigRational::zero(); m + 1];
    o[1..].clone_from_slice(&base);
    let mut f = vec![BigRational::zero(); m + 1];
    for i in 1..half {
        o[i] -= &be / &mb;
        f[i] = ga.clone();
    }
    f[0] = ga.clone();
    o[half] += &al * &be;
    if variant == UpperBoundVariant::Renormalized {
        let head: BigRational = o[..m].iter().sum();
        o[m] = one() - head;
    }
    let g = f.clone();
    let mut a = vec![BigRational::zero(); m + 1];
    let mut b = vec![BigRational::zero(); m + 1];
    let mut prefix = BigRational::zero();
    for i in 0..=m {
        prefix += &o[i];
        let frac = q(i as i64, m as i64);
        let chain = if i == 0 { o[0].clone() } else { &a[i - 1] + (one() - &frac) * &o[i] };
        let rem = &frac * (one() - &f[i] - &prefix) + &f[i] - &g[i];
        a[i] = chain.max(rem).max(BigRational::zero());
        b[i] = (&a[i] + &g[i]).max(f[i].clone());
    }
    let c = b.iter().cloned().max().expect("m ≥ 1");
    let mut x = vec![c];
    for fam in [a, b, o, f, g] {
        x.extend(fam);
    }
    Ok(x)
}

#[derive(Clone, Debug, Serialize)]
pub struct UpperBoundReport {
    pub m: usize,
    pub variant: UpperBoundVariant,
    pub feasible: bool,
    pub violated: Vec<String>,
    pub value: f64,
    /// `(1−1/m)^m − β(α−½)/2 + 3β/(4m)` minus the exact point value.
    pub gap_to_closed_form: f64,
    /// `1/e − β(α−½)/2 + 3β/(4m)`.
    pub stated_bound: f64,
    #[serde(skip)]
    pub exact_value: BigRational,
    #[serde(skip)]
    pub closed_form: BigRational,
}

/// Builds the perturbed point and checks it exactly against [`build_lp_f`].
pub fn verify_upper_bound_construction(m: usize, variant: UpperBoundVariant) -> Result<UpperBoundReport> {
    let point = upper_bound_point(m, variant)?;
    let lp = build_lp_f(m)?;
    let ExactCheck { objective, violated, .. } = lp.check_exact(&point);
    let (al, be) = (alpha(), beta());
    let shift = -(&be * (&al - q(1, 2)) / q(2, 1)) + q(3, 4) * &be / q(m as i64, 1);
    let closed_form = closed_form_value(m) + &shift;
    let stated_bound = (-1.0f64).exp() + big_to_f64(&shift);
    Ok(UpperBoundReport {
        m,
        variant,
        feasible: violated.is_empty(),
        violated,
        value: big_to_f64(&objective),
        gap_to_closed_form: big_to_f64(&(&closed_form - &objective)),
        stated_bound,
        exact_value: objective,
        closed_form,
    })
}
