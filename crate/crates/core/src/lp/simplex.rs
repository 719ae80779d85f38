//! Dense two-phase primal simplex with Bland's rule as anti-cycling fallback.
//!
//! Problems have the form `min c^T x + c0` subject to linear rows and `x >= 0`.

use thiserror::Error;

/// Smallest magnitude accepted as a pivot element.
pub const PIVOT_TOLERANCE: f64 = 1e-11;
/// Reduced costs below `-OPTIMALITY_TOLERANCE` are improving.
pub const OPTIMALITY_TOLERANCE: f64 = 1e-9;
/// Phase-one objective above this means the rows cannot all be satisfied.
pub const FEASIBILITY_TOLERANCE: f64 = 1e-8;
/// Consecutive pivots without objective progress before switching to Bland's rule.
const DEGENERATE_RUN: usize = 50;
/// Right-hand-side slack allowed when choosing a larger pivot in the ratio test.
const HARRIS_SLACK: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimplexError {
    #[error("row {row} has {got} coefficients, expected {expected}")]
    DimensionMismatch {
        row: usize,
        got: usize,
        expected: usize,
    },
    #[error("no progress after {0} pivots")]
    CycleDetected(usize),
    #[error("numerical breakdown: {0}")]
    NumericalBreakdown(String),
}

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
        Self {
            coeffs,
            relation: Relation::Le,
            rhs,
        }
    }

    pub fn ge(coeffs: Vec<f64>, rhs: f64) -> Self {
        Self {
            coeffs,
            relation: Relation::Ge,
            rhs,
        }
    }

    pub fn eq(coeffs: Vec<f64>, rhs: f64) -> Self {
        Self {
            coeffs,
            relation: Relation::Eq,
            rhs,
        }
    }

    pub fn activity(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().zip(x).map(|(a, b)| a * b).sum()
    }

    /// Amount by which `x` violates this row (zero when satisfied).
    pub fn violation(&self, x: &[f64]) -> f64 {
        let lhs = self.activity(x);
        match self.relation {
            Relation::Le => (lhs - self.rhs).max(0.0),
            Relation::Ge => (self.rhs - lhs).max(0.0),
            Relation::Eq => (lhs - self.rhs).abs(),
        }
    }
}

/// Minimization problem over non-negative variables.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub offset: f64,
    pub constraints: Vec<Constraint>,
}

impl LinearProgram {
    pub fn new(objective: Vec<f64>) -> Self {
        Self {
            objective,
            offset: 0.0,
            constraints: Vec::new(),
        }
    }

    pub fn vars(&self) -> usize {
        self.objective.len()
    }

    pub fn push(&mut self, c: Constraint) {
        self.constraints.push(c);
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        self.offset + self.objective.iter().zip(x).map(|(a, b)| a * b).sum::<f64>()
    }

    /// Largest row or bound violation of `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let rows = self
            .constraints
            .iter()
            .map(|c| c.violation(x))
            .fold(0.0, f64::max);
        x.iter().map(|v| (-v).max(0.0)).fold(rows, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    pub pivots: usize,
}

struct Tableau {
    rows: usize,
    cols: usize,
    // rows x (cols + 1), last column is the right-hand side
    a: Vec<f64>,
    basis: Vec<usize>,
    pivots: usize,
    max_pivots: usize,
}

impl Tableau {
    #[inline]
    fn at(&self, r: usize, c: usize) -> f64 {
        self.a[r * (self.cols + 1) + c]
    }

    #[inline]
    fn rhs(&self, r: usize) -> f64 {
        self.a[r * (self.cols + 1) + self.cols]
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let w = self.cols + 1;
        let p = self.a[pr * w + pc];
        for j in 0..w {
            self.a[pr * w + j] /= p;
        }
        let prow: Vec<f64> = self.a[pr * w..(pr + 1) * w].to_vec();
        for r in 0..self.rows {
            if r == pr {
                continue;
            }
            let factor = self.a[r * w + pc];
            if factor != 0.0 {
                let row = &mut self.a[r * w..(r + 1) * w];
                for (x, &pv) in row.iter_mut().zip(&prow) {
                    *x -= factor * pv;
                }
                row[pc] = 0.0;
            }
        }
        self.basis[pr] = pc;
        self.pivots += 1;
    }

    /// Reduced costs of `cost` (length `cols`) for the current basis.
    fn reduced_costs(&self, cost: &[f64]) -> Vec<f64> {
        let mut d = cost.to_vec();
        for r in 0..self.rows {
            let cb = cost[self.basis[r]];
            if cb != 0.0 {
                for (j, dj) in d.iter_mut().enumerate() {
                    *dj -= cb * self.at(r, j);
                }
            }
        }
        d
    }

    /// Minimum-ratio row, ties broken by lowest basic variable index.
    fn ratio_test_bland(&self, pc: usize) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for r in 0..self.rows {
            let coef = self.at(r, pc);
            if coef > PIVOT_TOLERANCE {
                let ratio = self.rhs(r).max(0.0) / coef;
                best = match best {
                    Some((br, bratio))
                        if !(ratio < bratio - 1e-12 * (1.0 + bratio)
                            || (ratio - bratio).abs() <= 1e-12 * (1.0 + bratio)
                                && self.basis[r] < self.basis[br]) =>
                    {
                        Some((br, bratio))
                    }
                    _ => Some((r, ratio)),
                };
            }
        }
        best
    }

    /// Two-pass ratio test: among rows whose ratio is within a small
    /// feasibility slack of the minimum, pivot on the largest element.
    fn ratio_test_harris(&self, pc: usize) -> Option<(usize, f64)> {
        let mut bound = f64::INFINITY;
        for r in 0..self.rows {
            let coef = self.at(r, pc);
            if coef > PIVOT_TOLERANCE {
                bound = bound.min((self.rhs(r).max(0.0) + HARRIS_SLACK) / coef);
            }
        }
        let mut best: Option<(usize, f64)> = None;
        let mut best_coef = 0.0;
        for r in 0..self.rows {
            let coef = self.at(r, pc);
            if coef > PIVOT_TOLERANCE {
                let ratio = self.rhs(r).max(0.0) / coef;
                if ratio <= bound && coef > best_coef {
                    best = Some((r, ratio));
                    best_coef = coef;
                }
            }
        }
        best
    }

    /// Pivots on `cost` over the allowed columns until optimal.
    ///
    /// Entering columns are priced by most negative reduced cost. After a run
    /// of `DEGENERATE_RUN` pivots without objective progress the rule falls
    /// back to Bland's (lowest index) until progress resumes, which rules out
    /// cycling. Returns `false` when the objective is unbounded below.
    fn optimize(&mut self, cost: &[f64], allowed: &[bool]) -> Result<bool, SimplexError> {
        let mut stalled = 0usize;
        loop {
            if self.pivots > self.max_pivots {
                return Err(SimplexError::CycleDetected(self.pivots));
            }
            let d = self.reduced_costs(cost);
            let candidates = (0..self.cols).filter(|&j| allowed[j] && d[j] < -OPTIMALITY_TOLERANCE);
            let bland = stalled >= DEGENERATE_RUN;
            let entering = if bland {
                candidates.min()
            } else {
                candidates.min_by(|&a, &b| d[a].total_cmp(&d[b]))
            };
            let Some(pc) = entering else {
                return Ok(true);
            };
            let best = if bland {
                self.ratio_test_bland(pc)
            } else {
                self.ratio_test_harris(pc)
            };
            match best {
                None => return Ok(false),
                Some((pr, ratio)) => {
                    if ratio * -d[pc] > 1e-14 {
                        stalled = 0;
                    } else {
                        stalled += 1;
                    }
                    self.pivot(pr, pc)
                }
            }
        }
    }
}

/// Solves `lp` with a two-phase dense primal simplex.
pub fn solve(lp: &LinearProgram) -> Result<LpSolution, SimplexError> {
    let n = lp.vars();
    for (row, c) in lp.constraints.iter().enumerate() {
        if c.coeffs.len() != n {
            return Err(SimplexError::DimensionMismatch {
                row,
                got: c.coeffs.len(),
                expected: n,
            });
        }
    }

    // Normalize to non-negative right-hand sides.
    let rows: Vec<(Vec<f64>, Relation, f64)> = lp
        .constraints
        .iter()
        .map(|c| {
            if c.rhs < 0.0 {
                let flipped = match c.relation {
                    Relation::Le => Relation::Ge,
                    Relation::Ge => Relation::Le,
                    Relation::Eq => Relation::Eq,
                };
                (c.coeffs.iter().map(|v| -v).collect(), flipped, -c.rhs)
            } else {
                (c.coeffs.clone(), c.relation, c.rhs)
            }
        })
        .collect();

    let m = rows.len();
    let n_slack = rows.iter().filter(|r| r.1 != Relation::Eq).count();
    let n_art = rows.iter().filter(|r| r.1 != Relation::Le).count();
    let cols = n + n_slack + n_art;
    let width = cols + 1;
    let mut a = vec![0.0; m * width];
    let mut basis = vec![0; m];
    let mut artificial = vec![false; cols];
    let (mut s, mut t) = (n, n + n_slack);
    for (r, (coeffs, rel, rhs)) in rows.iter().enumerate() {
        a[r * width..r * width + n].copy_from_slice(coeffs);
        a[r * width + cols] = *rhs;
        match rel {
            Relation::Le => {
                a[r * width + s] = 1.0;
                basis[r] = s;
                s += 1;
            }
            Relation::Ge => {
                a[r * width + s] = -1.0;
                s += 1;
                a[r * width + t] = 1.0;
                artificial[t] = true;
                basis[r] = t;
                t += 1;
            }
            Relation::Eq => {
                a[r * width + t] = 1.0;
                artificial[t] = true;
                basis[r] = t;
                t += 1;
            }
        }
    }

    let mut tab = Tableau {
        rows: m,
        cols,
        a,
        basis,
        pivots: 0,
        max_pivots: 50 * (m + cols) + 1000,
    };

    if n_art > 0 {
        let phase1: Vec<f64> = artificial.iter().map(|&a| if a { 1.0 } else { 0.0 }).collect();
        let all = vec![true; cols];
        tab.optimize(&phase1, &all)?;
        let infeas: f64 = (0..m)
            .filter(|&r| artificial[tab.basis[r]])
            .map(|r| tab.rhs(r))
            .sum();
        if infeas > FEASIBILITY_TOLERANCE {
            return Ok(LpSolution {
                status: LpStatus::Infeasible,
                x: vec![0.0; n],
                objective: f64::NAN,
                pivots: tab.pivots,
            });
        }
        // Drive remaining artificials out of the basis; rows where that is
        // impossible are redundant and are dropped.
        let mut r = 0;
        while r < tab.rows {
            if artificial[tab.basis[r]] {
                let col = (0..cols)
                    .filter(|&j| !artificial[j])
                    .max_by(|&i, &j| tab.at(r, i).abs().total_cmp(&tab.at(r, j).abs()))
                    .filter(|&j| tab.at(r, j).abs() > PIVOT_TOLERANCE);
                match col {
                    Some(j) => tab.pivot(r, j),
                    None => {
                        let w = tab.cols + 1;
                        tab.a.drain(r * w..(r + 1) * w);
                        tab.basis.remove(r);
                        tab.rows -= 1;
                        continue;
                    }
                }
            }
            r += 1;
        }
    }

    let mut cost = vec![0.0; cols];
    cost[..n].copy_from_slice(&lp.objective);
    let allowed: Vec<bool> = artificial.iter().map(|a| !a).collect();
    let bounded = tab.optimize(&cost, &allowed)?;

    let mut x = vec![0.0; n];
    for r in 0..tab.rows {
        let b = tab.basis[r];
        if b < n {
            x[b] = tab.rhs(r).max(0.0);
        }
    }
    if !bounded {
        return Ok(LpSolution {
            status: LpStatus::Unbounded,
            x,
            objective: f64::NEG_INFINITY,
            pivots: tab.pivots,
        });
    }
    let viol = lp.max_violation(&x);
    let scale = 1.0 + lp.constraints.iter().map(|c| c.rhs.abs()).fold(0.0, f64::max);
    if viol > FEASIBILITY_TOLERANCE * scale {
        return Err(SimplexError::NumericalBreakdown(format!(
            "optimal basis violates constraints by {viol:e}"
        )));
    }
    Ok(LpSolution {
        status: LpStatus::Optimal,
        objective: lp.evaluate(&x),
        x,
        pivots: tab.pivots,
    })
}
