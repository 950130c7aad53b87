use super::{LinearProgram, Relation, Sense};
use crate::error::{PcsmError, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PivotRule {
    /// Smallest improving index; cannot cycle.
    #[default]
    Bland,
    /// Largest reduced cost, falling back to Bland after a run of degenerate pivots.
    Dantzig,
}

#[derive(Clone, Debug)]
pub struct SimplexOptions {
    pub tol_feas: f64,
    pub tol_opt: f64,
    pub rule: PivotRule,
    pub max_iter: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        SimplexOptions { tol_feas: 1e-9, tol_opt: 1e-9, rule: PivotRule::Bland, max_iter: 1_000_000 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub status: LpStatus,
    pub objective: f64,
    pub x: Vec<f64>,
    /// Per constraint, `lhs − rhs`.
    pub residuals: Vec<f64>,
    pub iterations: usize,
}

const PIVOT_TOL: f64 = 1e-11;
const DROP_TOL: f64 = 1e-14;

struct Tableau {
    rows: usize,
    cols: usize,
    /// Row-major, `cols + 1` entries per row; the last is the right-hand side.
    a: Vec<f64>,
    /// Reduced costs; the last entry is minus the objective value.
    d: Vec<f64>,
    basis: Vec<usize>,
    iterations: usize,
}

enum Outcome {
    Optimal,
    Unbounded,
}

impl Tableau {
    fn width(&self) -> usize {
        self.cols + 1
    }

    fn row(&self, r: usize) -> &[f64] {
        let w = self.width();
        &self.a[r * w..(r + 1) * w]
    }

    fn set_costs(&mut self, cost: &[f64]) {
        let w = self.width();
        let mut d = vec![0.0; w];
        d[..self.cols].copy_from_slice(cost);
        for r in 0..self.rows {
            let cb = cost[self.basis[r]];
            if cb != 0.0 {
                for (dj, aj) in d.iter_mut().zip(self.row(r)) {
                    *dj -= cb * aj;
                }
            }
        }
        self.d = d;
    }

    fn pivot(&mut self, r: usize, e: usize) {
        let w = self.width();
        let piv = self.a[r * w + e];
        for v in &mut self.a[r * w..(r + 1) * w] {
            *v /= piv;
        }
        let nz: Vec<usize> = (0..w).filter(|&j| self.a[r * w + j] != 0.0).collect();
        let prow: Vec<f64> = nz.iter().map(|&j| self.a[r * w + j]).collect();
        for i in 0..self.rows {
            if i == r {
                continue;
            }
            let f = self.a[i * w + e];
            if f == 0.0 {
                continue;
            }
            let row = &mut self.a[i * w..(i + 1) * w];
            for (&j, &pv) in nz.iter().zip(&prow) {
                let v = row[j] - f * pv;
                row[j] = if v.abs() < DROP_TOL { 0.0 } else { v };
            }
            row[e] = 0.0;
        }
        let f = self.d[e];
        if f != 0.0 {
            for (&j, &pv) in nz.iter().zip(&prow) {
                self.d[j] -= f * pv;
            }
            self.d[e] = 0.0;
        }
        self.basis[r] = e;
        self.iterations += 1;
    }

    fn run(&mut self, allowed: &[bool], opts: &SimplexOptions) -> Result<Outcome> {
        let w = self.width();
        let mut stall = 0usize;
        let mut last_obj = self.d[self.cols];
        loop {
            if self.iterations >= opts.max_iter {
                return Err(PcsmError::Numeric(format!("simplex exceeded {} iterations", opts.max_iter)));
            }
            let use_bland = opts.rule == PivotRule::Bland || stall > 50;
            let mut entering = None;
            let mut best = opts.tol_opt;
            for j in 0..self.cols {
                if allowed[j] && self.d[j] > opts.tol_opt {
                    if use_bland {
                        entering = Some(j);
                        break;
                    }
                    if self.d[j] > best {
                        best = self.d[j];
                        entering = Some(j);
                    }
                }
            }
            let Some(e) = entering else { return Ok(Outcome::Optimal) };
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.rows {
                let a = self.a[r * w + e];
                if a > PIVOT_TOL {
                    let ratio = self.a[r * w + self.cols] / a;
                    leave = match leave {
                        None => Some((r, ratio)),
                        Some((lr, lratio)) => {
                            let tie = (ratio - lratio).abs() <= 1e-12 * (1.0 + lratio.abs());
                            let wins_tie = if use_bland {
                                self.basis[r] < self.basis[lr]
                            } else {
                                a > self.a[lr * w + e]
                            };
                            if (!tie && ratio < lratio) || (tie && wins_tie) {
                                Some((r, ratio))
                            } else {
                                Some((lr, lratio))
                            }
                        }
                    };
                }
            }
            let Some((r, _)) = leave else { return Ok(Outcome::Unbounded) };
            self.pivot(r, e);
            let obj = self.d[self.cols];
            if obj < last_obj - 1e-12 {
                stall = 0;
                last_obj = obj;
            } else {
                stall += 1;
            }
        }
    }
}

/// Two-phase simplex on a dense tableau.
pub fn simplex_solve(lp: &LinearProgram<f64>, opts: &SimplexOptions) -> Result<LpSolution> {
    let n = lp.num_vars();
    if lp.objective.iter().chain(lp.constraints.iter().flat_map(|c| c.coeffs.iter().map(|(_, a)| a))).any(|v| !v.is_finite())
        || lp.constraints.iter().any(|c| !c.rhs.is_finite())
    {
        return Err(PcsmError::InvalidParameter("LP data must be finite".into()));
    }
    let m = lp.constraints.len();
    // Rows normalised to a non-negative right-hand side.
    let mut rows: Vec<(Vec<f64>, Relation, f64)> = Vec::with_capacity(m);
    for c in &lp.constraints {
        let mut dense = vec![0.0; n];
        for (v, a) in &c.coeffs {
            dense[*v] += a;
        }
        let (mut rel, mut rhs) = (c.relation, c.rhs);
        // Zero-rhs `≥` rows flip to `≤` so a slack can start in the basis.
        if rhs < 0.0 || (rhs == 0.0 && rel == Relation::Ge) {
            dense.iter_mut().for_each(|v| *v = -*v);
            rhs = -rhs;
            rel = match rel {
                Relation::Le => Relation::Ge,
                Relation::Ge => Relation::Le,
                Relation::Eq => Relation::Eq,
            };
        }
        rows.push((dense, rel, rhs));
    }
    let n_slack = rows.iter().filter(|r| r.1 != Relation::Eq).count();
    let n_art = rows.iter().filter(|r| r.1 != Relation::Le).count();
    let cols = n + n_slack + n_art;
    let w = cols + 1;
    let mut t = Tableau { rows: m, cols, a: vec![0.0; m * w], d: vec![0.0; w], basis: vec![0; m], iterations: 0 };
    let mut artificial = vec![false; cols];
    let (mut s, mut art) = (n, n + n_slack);
    for (r, (dense, rel, rhs)) in rows.iter().enumerate() {
        t.a[r * w..r * w + n].copy_from_slice(dense);
        t.a[r * w + cols] = *rhs;
        match rel {
            Relation::Le => {
                t.a[r * w + s] = 1.0;
                t.basis[r] = s;
                s += 1;
            }
            Relation::Ge => {
                t.a[r * w + s] = -1.0;
                s += 1;
                t.a[r * w + art] = 1.0;
                t.basis[r] = art;
                artificial[art] = true;
                art += 1;
            }
            Relation::Eq => {
                t.a[r * w + art] = 1.0;
                t.basis[r] = art;
                artificial[art] = true;
                art += 1;
            }
        }
    }

    let scale = 1.0 + rows.iter().map(|r| r.2).fold(0.0, f64::max);
    if n_art > 0 {
        let cost: Vec<f64> = artificial.iter().map(|&a| if a { -1.0 } else { 0.0 }).collect();
        t.set_costs(&cost);
        let all = vec![true; cols];
        t.run(&all, opts)?;
        let infeasibility = t.d[cols];
        if infeasibility > opts.tol_feas * scale {
            return Ok(LpSolution {
                status: LpStatus::Infeasible,
                objective: f64::NAN,
                x: vec![0.0; n],
                residuals: Vec::new(),
                iterations: t.iterations,
            });
        }
        for r in 0..m {
            if artificial[t.basis[r]] {
                let row = t.row(r);
                if let Some(j) = (0..cols).filter(|&j| !artificial[j]).max_by(|&x, &y| {
                    row[x].abs().partial_cmp(&row[y].abs()).unwrap().then(y.cmp(&x))
                }) {
                    if row[j].abs() > 1e-9 {
                        t.pivot(r, j);
                    }
                }
            }
        }
    }

    let sign = if lp.sense == Sense::Max { 1.0 } else { -1.0 };
    let mut cost = vec![0.0; cols];
    for j in 0..n {
        cost[j] = sign * lp.objective[j];
    }
    t.set_costs(&cost);
    let allowed: Vec<bool> = artificial.iter().map(|a| !a).collect();
    let outcome = t.run(&allowed, opts)?;

    let mut x = vec![0.0; n];
    for r in 0..m {
        if t.basis[r] < n {
            x[t.basis[r]] = t.a[r * w + cols].max(0.0);
        }
    }
    let residuals: Vec<f64> = lp
        .constraints
        .iter()
        .map(|c| c.coeffs.iter().map(|(v, a)| a * x[*v]).sum::<f64>() - c.rhs)
        .collect();
    let objective = lp.objective.iter().zip(&x).map(|(a, b)| a * b).sum();
    let status = match outcome {
        Outcome::Optimal => LpStatus::Optimal,
        Outcome::Unbounded => LpStatus::Unbounded,
    };
    if status == LpStatus::Optimal {
        let tol = opts.tol_feas.max(1e-7) * scale * 100.0;
        for (c, r) in lp.constraints.iter().zip(&residuals) {
            let bad = match c.relation {
                Relation::Le => *r > tol,
                Relation::Ge => *r < -tol,
                Relation::Eq => r.abs() > tol,
            };
            if bad {
                return Err(PcsmError::Numeric(format!("constraint {} off by {r:e} at the optimum", c.name)));
            }
        }
    }
    Ok(LpSolution { status, objective, x, residuals, iterations: t.iterations })
}

/// `argmax w·x` over `x ∈ [0,1]^n`, `pack·x ≤ pack_rhs`, `cover·x ≥ cover_rhs`.
pub fn linear_max_over_polytope(
    w: &[f64],
    pack: &[Vec<f64>],
    pack_rhs: &[f64],
    cover: &[Vec<f64>],
    cover_rhs: &[f64],
) -> Result<LpSolution> {
    let n = w.len();
    let mut lp = LinearProgram::<f64>::new(Sense::Max);
    for j in 0..n {
        let v = lp.add_var(format!("x[{j}]"));
        lp.set_objective(v, w[j]);
        lp.add_constraint(format!("box[{j}]"), vec![(v, 1.0)], Relation::Le, 1.0)?;
    }
    for (i, (row, rhs)) in pack.iter().zip(pack_rhs).enumerate() {
        lp.add_constraint(format!("pack[{i}]"), sparse(row), Relation::Le, *rhs)?;
    }
    for (i, (row, rhs)) in cover.iter().zip(cover_rhs).enumerate() {
        lp.add_constraint(format!("cover[{i}]"), sparse(row), Relation::Ge, *rhs)?;
    }
    simplex_solve(&lp, &SimplexOptions::default())
}

fn sparse(row: &[f64]) -> Vec<(usize, f64)> {
    row.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(j, v)| (j, *v)).collect()
}
