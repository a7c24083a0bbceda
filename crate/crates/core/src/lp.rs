//! Dense two-phase primal simplex with Bland's anti-cycling rule.
//!
//! Small and deterministic: the projection subproblems it serves have a few
//! variables and a dozen rows, and are frequently degenerate.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

impl Constraint {
    pub fn le(coeffs: Vec<f64>, rhs: f64) -> Self {
        Constraint { coeffs, relation: Relation::Le, rhs }
    }

    pub fn ge(coeffs: Vec<f64>, rhs: f64) -> Self {
        Constraint { coeffs, relation: Relation::Ge, rhs }
    }

    pub fn eq(coeffs: Vec<f64>, rhs: f64) -> Self {
        Constraint { coeffs, relation: Relation::Eq, rhs }
    }
}

/// `maximize objective·x` subject to `constraints`; variables are
/// nonnegative unless flagged in `free`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
    pub free: Vec<bool>,
}

impl LinearProgram {
    pub fn new(objective: Vec<f64>) -> Self {
        let n = objective.len();
        LinearProgram { objective, constraints: Vec::new(), free: vec![false; n] }
    }

    pub fn with_free(mut self, var: usize) -> Self {
        self.free[var] = true;
        self
    }

    pub fn push(&mut self, c: Constraint) {
        self.constraints.push(c);
    }

    pub fn n_vars(&self) -> usize {
        self.objective.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub objective: f64,
    pub x: Vec<f64>,
    pub pivots: usize,
}

/// Safety net; Bland's rule already rules out cycling.
const MAX_PIVOTS: usize = 100_000;

struct Tableau {
    /// `rows × (cols + 1)`; last column is the right-hand side.
    a: Vec<Vec<f64>>,
    /// Reduced-cost row for maximization; entries < 0 may enter.
    cost: Vec<f64>,
    basis: Vec<usize>,
    cols: usize,
    banned: Vec<bool>,
    pivots: usize,
    tol: f64,
}

impl Tableau {
    fn rhs(&self, i: usize) -> f64 {
        self.a[i][self.cols]
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let p = self.a[row][col];
        for v in self.a[row].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.a[row].clone();
        for (i, r) in self.a.iter_mut().enumerate() {
            if i == row {
                continue;
            }
            let f = r[col];
            if f != 0.0 {
                for (v, pv) in r.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
                r[col] = 0.0;
            }
        }
        let f = self.cost[col];
        if f != 0.0 {
            for (v, pv) in self.cost.iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
            self.cost[col] = 0.0;
        }
        self.basis[row] = col;
        self.pivots += 1;
    }

    /// Loads `maximize c·x` into the cost row, pricing out the basis.
    fn set_objective(&mut self, c: &[f64]) {
        self.cost = vec![0.0; self.cols + 1];
        for (j, cj) in c.iter().enumerate() {
            self.cost[j] = -cj;
        }
        for i in 0..self.a.len() {
            let f = self.cost[self.basis[i]];
            if f != 0.0 {
                for j in 0..=self.cols {
                    self.cost[j] -= f * self.a[i][j];
                }
            }
        }
    }

    fn optimize(&mut self) -> Result<()> {
        loop {
            if self.pivots > MAX_PIVOTS {
                return Err(Error::NonConvergence {
                    iterations: self.pivots,
                    detail: "simplex pivot cap reached".into(),
                });
            }
            // Bland: lowest-index improving column.
            let Some(col) =
                (0..self.cols).find(|&j| !self.banned[j] && self.cost[j] < -self.tol)
            else {
                return Ok(());
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.a.len() {
                let aij = self.a[i][col];
                if aij > self.tol {
                    let ratio = self.rhs(i) / aij;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((k, best)) => {
                            let tie = (ratio - best).abs() <= self.tol * (1.0 + best.abs());
                            if (!tie && ratio < best) || (tie && self.basis[i] < self.basis[k]) {
                                Some((i, ratio))
                            } else {
                                Some((k, best))
                            }
                        }
                    };
                }
            }
            let Some((row, _)) = leave else {
                return Err(Error::Unbounded);
            };
            self.pivot(row, col);
        }
    }
}

/// Solves `lp` to an optimal basic solution.
pub fn solve_lp(lp: &LinearProgram, tol: f64) -> Result<LpSolution> {
    let n = lp.n_vars();
    if lp.free.len() != n || lp.constraints.iter().any(|c| c.coeffs.len() != n) {
        return Err(Error::domain("LP dimensions are inconsistent"));
    }
    // Structural columns: one per variable, plus a mirror column for free ones.
    let mut col_of = Vec::with_capacity(n);
    let mut n_struct = 0;
    for &f in &lp.free {
        col_of.push((n_struct, f.then_some(n_struct + 1)));
        n_struct += if f { 2 } else { 1 };
    }
    let m = lp.constraints.len();
    let n_slack = lp.constraints.iter().filter(|c| c.relation != Relation::Eq).count();
    let slack_start = n_struct;
    let art_start = slack_start + n_slack;

    // Orient each row so its right-hand side is nonnegative.
    let mut rows = Vec::with_capacity(m);
    let mut needs_art = Vec::with_capacity(m);
    let mut slack_col = slack_start;
    for c in &lp.constraints {
        let mut coeffs = vec![0.0; n_struct];
        for (j, &v) in c.coeffs.iter().enumerate() {
            let (pos, neg) = col_of[j];
            coeffs[pos] = v;
            if let Some(neg) = neg {
                coeffs[neg] = -v;
            }
        }
        let mut slack = match c.relation {
            Relation::Le => Some((slack_col, 1.0)),
            Relation::Ge => Some((slack_col, -1.0)),
            Relation::Eq => None,
        };
        if slack.is_some() {
            slack_col += 1;
        }
        let mut rhs = c.rhs;
        if rhs < 0.0 {
            coeffs.iter_mut().for_each(|v| *v = -*v);
            rhs = -rhs;
            if let Some((_, s)) = slack.as_mut() {
                *s = -*s;
            }
        }
        needs_art.push(!matches!(slack, Some((_, s)) if s > 0.0));
        rows.push((coeffs, slack, rhs));
    }
    let n_art = needs_art.iter().filter(|&&b| b).count();
    let cols = art_start + n_art;

    let mut a = Vec::with_capacity(m);
    let mut basis = Vec::with_capacity(m);
    let mut art_col = art_start;
    for ((coeffs, slack, rhs), art) in rows.into_iter().zip(&needs_art) {
        let mut row = vec![0.0; cols + 1];
        row[..n_struct].copy_from_slice(&coeffs);
        if let Some((j, s)) = slack {
            row[j] = s;
        }
        if *art {
            row[art_col] = 1.0;
            basis.push(art_col);
            art_col += 1;
        } else {
            basis.push(slack.expect("slack-basic row").0);
        }
        row[cols] = rhs;
        a.push(row);
    }

    let mut t = Tableau {
        a,
        cost: Vec::new(),
        basis,
        cols,
        banned: vec![false; cols],
        pivots: 0,
        tol,
    };

    if n_art > 0 {
        let mut phase1 = vec![0.0; cols];
        phase1[art_start..].iter_mut().for_each(|v| *v = -1.0);
        t.set_objective(&phase1);
        t.optimize()?;
        let scale = 1.0 + lp.constraints.iter().map(|c| c.rhs.abs()).fold(0.0, f64::max);
        let infeas: f64 = (0..t.a.len())
            .filter(|&i| t.basis[i] >= art_start)
            .map(|i| t.rhs(i))
            .sum();
        if infeas > tol * scale * 10.0 {
            return Err(Error::Infeasible(format!("phase-one residual {infeas:.3e}")));
        }
        // Drive zero-level artificials out of the basis, dropping redundant rows.
        let mut i = 0;
        while i < t.a.len() {
            if t.basis[i] >= art_start {
                match (0..art_start).find(|&j| t.a[i][j].abs() > tol) {
                    Some(j) => t.pivot(i, j),
                    None => {
                        t.a.remove(i);
                        t.basis.remove(i);
                        continue;
                    }
                }
            }
            i += 1;
        }
        for j in art_start..cols {
            t.banned[j] = true;
        }
    }

    let mut c = vec![0.0; cols];
    for (j, &v) in lp.objective.iter().enumerate() {
        let (pos, neg) = col_of[j];
        c[pos] = v;
        if let Some(neg) = neg {
            c[neg] = -v;
        }
    }
    t.set_objective(&c);
    t.optimize()?;

    let mut col_val = vec![0.0; cols];
    for (i, &b) in t.basis.iter().enumerate() {
        col_val[b] = t.rhs(i);
    }
    let x: Vec<f64> = col_of
        .iter()
        .map(|&(pos, neg)| col_val[pos] - neg.map_or(0.0, |k| col_val[k]))
        .collect();
    let objective = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
    Ok(LpSolution { objective, x, pivots: t.pivots })
}
