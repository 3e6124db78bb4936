//! Small dense linear-program solver.
//!
//! Two-phase tableau simplex with Bland's least-index rule. Meant for the
//! desk-scale programs of the multicommodity-flow oracle and the offline
//! optimum, where determinism matters more than speed.

use alloc::vec;
use alloc::vec::Vec;

const PIVOT_EPS: f64 = 1e-9;
const ZERO_EPS: f64 = 1e-12;
const FEAS_TOL: f64 = 1e-7;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Maximize,
    Minimize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub coefficients: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

/// `optimize objective·x` subject to the constraints and `x >= lower_bounds`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearProgram {
    pub direction: Direction,
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
    pub lower_bounds: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Solution {
    pub value: f64,
    pub assignment: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome {
    Optimal(Solution),
    Infeasible,
    Unbounded,
}

impl LpOutcome {
    pub fn optimal(self) -> Option<Solution> {
        match self {
            LpOutcome::Optimal(s) => Some(s),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LpError {
    #[error("constraint {row} has {got} coefficients, expected {expected}")]
    Dimension { row: usize, got: usize, expected: usize },
    #[error("non-finite coefficient in the program")]
    NonFinite,
    #[error("simplex exceeded its iteration cap of {0}")]
    IterationLimit(usize),
}

impl LinearProgram {
    pub fn new(direction: Direction, objective: Vec<f64>) -> Self {
        let n = objective.len();
        LinearProgram {
            direction,
            objective,
            constraints: Vec::new(),
            lower_bounds: vec![0.0; n],
        }
    }

    pub fn maximize(objective: Vec<f64>) -> Self {
        Self::new(Direction::Maximize, objective)
    }

    pub fn minimize(objective: Vec<f64>) -> Self {
        Self::new(Direction::Minimize, objective)
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add_constraint(&mut self, coefficients: Vec<f64>, relation: Relation, rhs: f64) {
        self.constraints.push(Constraint {
            coefficients,
            relation,
            rhs,
        });
    }

    /// Adds a constraint given as `(variable, coefficient)` pairs.
    pub fn add_sparse(&mut self, terms: &[(usize, f64)], relation: Relation, rhs: f64) {
        let mut row = vec![0.0; self.num_vars()];
        for &(j, a) in terms {
            row[j] += a;
        }
        self.add_constraint(row, relation, rhs);
    }

    /// Largest violation of any constraint or bound by `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (xj, lj) in x.iter().zip(&self.lower_bounds) {
            worst = worst.max(lj - xj);
        }
        for c in &self.constraints {
            let lhs: f64 = c.coefficients.iter().zip(x).map(|(a, b)| a * b).sum();
            let v = match c.relation {
                Relation::Le => lhs - c.rhs,
                Relation::Ge => c.rhs - lhs,
                Relation::Eq => (lhs - c.rhs).abs(),
            };
            worst = worst.max(v);
        }
        worst
    }

    pub fn solve(&self) -> Result<LpOutcome, LpError> {
        solve(self)
    }
}

struct Tableau {
    rows: usize,
    cols: usize,
    /// `rows + 1` rows of `cols + 1` entries; the last row is the
    /// objective, the last column the right-hand side.
    data: Vec<f64>,
    basis: Vec<usize>,
}

impl Tableau {
    fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * (self.cols + 1) + j]
    }

    fn rhs(&self, i: usize) -> f64 {
        self.at(i, self.cols)
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let w = self.cols + 1;
        let p = self.data[r * w + c];
        for j in 0..w {
            self.data[r * w + j] /= p;
        }
        self.data[r * w + c] = 1.0;
        for i in 0..=self.rows {
            if i == r {
                continue;
            }
            let f = self.data[i * w + c];
            if f == 0.0 {
                continue;
            }
            for j in 0..w {
                let v = self.data[i * w + j] - f * self.data[r * w + j];
                self.data[i * w + j] = if v.abs() < ZERO_EPS { 0.0 } else { v };
            }
            self.data[i * w + c] = 0.0;
        }
        self.basis[r] = c;
    }

    /// Installs `cost` as the objective row in reduced form.
    fn set_objective(&mut self, cost: &[f64]) {
        let w = self.cols + 1;
        let base = self.rows * w;
        for j in 0..w {
            self.data[base + j] = if j < self.cols { cost[j] } else { 0.0 };
        }
        for i in 0..self.rows {
            let cb = cost[self.basis[i]];
            if cb == 0.0 {
                continue;
            }
            for j in 0..w {
                self.data[base + j] -= cb * self.data[i * w + j];
            }
        }
    }

    fn remove_row(&mut self, r: usize) {
        let w = self.cols + 1;
        self.data.drain(r * w..(r + 1) * w);
        self.basis.remove(r);
        self.rows -= 1;
    }

    /// Minimizes the installed objective. `Ok(false)` means unbounded.
    fn run(&mut self, allowed: &[bool], iterations: &mut usize, cap: usize) -> Result<bool, LpError> {
        loop {
            *iterations += 1;
            if *iterations > cap {
                return Err(LpError::IterationLimit(cap));
            }
            let entering = (0..self.cols).find(|&j| allowed[j] && self.at(self.rows, j) < -PIVOT_EPS);
            let Some(c) = entering else {
                return Ok(true);
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.rows {
                let a = self.at(i, c);
                if a <= PIVOT_EPS {
                    continue;
                }
                let ratio = self.rhs(i) / a;
                leave = match leave {
                    None => Some((i, ratio)),
                    Some((bi, br)) => {
                        if ratio < br - ZERO_EPS
                            || ((ratio - br).abs() <= ZERO_EPS && self.basis[i] < self.basis[bi])
                        {
                            Some((i, ratio))
                        } else {
                            Some((bi, br))
                        }
                    }
                };
            }
            match leave {
                None => return Ok(false),
                Some((r, _)) => self.pivot(r, c),
            }
        }
    }
}

/// Solves `lp` to optimality, or reports infeasibility/unboundedness.
pub fn solve(lp: &LinearProgram) -> Result<LpOutcome, LpError> {
    let n = lp.num_vars();
    if lp.lower_bounds.len() != n {
        return Err(LpError::Dimension {
            row: usize::MAX,
            got: lp.lower_bounds.len(),
            expected: n,
        });
    }
    for (i, c) in lp.constraints.iter().enumerate() {
        if c.coefficients.len() != n {
            return Err(LpError::Dimension {
                row: i,
                got: c.coefficients.len(),
                expected: n,
            });
        }
        if !c.rhs.is_finite() || c.coefficients.iter().any(|a| !a.is_finite()) {
            return Err(LpError::NonFinite);
        }
    }
    if lp.objective.iter().chain(&lp.lower_bounds).any(|a| !a.is_finite()) {
        return Err(LpError::NonFinite);
    }

    // Shift to x' = x - l >= 0 and normalise right-hand sides to >= 0.
    let mut rows: Vec<(Vec<f64>, Relation, f64)> = lp
        .constraints
        .iter()
        .map(|c| {
            let shift: f64 = c.coefficients.iter().zip(&lp.lower_bounds).map(|(a, l)| a * l).sum();
            let rhs = c.rhs - shift;
            if rhs < 0.0 {
                let flipped = match c.relation {
                    Relation::Le => Relation::Ge,
                    Relation::Ge => Relation::Le,
                    Relation::Eq => Relation::Eq,
                };
                (c.coefficients.iter().map(|a| -a).collect(), flipped, -rhs)
            } else {
                (c.coefficients.clone(), c.relation, rhs)
            }
        })
        .collect();

    let m = rows.len();
    let slack_count = rows.iter().filter(|r| r.1 != Relation::Eq).count();
    let artificial_count = rows.iter().filter(|r| r.1 != Relation::Le).count();
    let cols = n + slack_count + artificial_count;
    let w = cols + 1;
    let mut data = vec![0.0; (m + 1) * w];
    let mut basis = vec![0; m];
    let mut is_artificial = vec![false; cols];
    let mut next_slack = n;
    let mut next_art = n + slack_count;
    for (i, (a, rel, b)) in rows.iter_mut().enumerate() {
        data[i * w..i * w + n].copy_from_slice(a);
        data[i * w + cols] = *b;
        match rel {
            Relation::Le => {
                data[i * w + next_slack] = 1.0;
                basis[i] = next_slack;
                next_slack += 1;
            }
            Relation::Ge => {
                data[i * w + next_slack] = -1.0;
                next_slack += 1;
                data[i * w + next_art] = 1.0;
                is_artificial[next_art] = true;
                basis[i] = next_art;
                next_art += 1;
            }
            Relation::Eq => {
                data[i * w + next_art] = 1.0;
                is_artificial[next_art] = true;
                basis[i] = next_art;
                next_art += 1;
            }
        }
    }
    let mut t = Tableau {
        rows: m,
        cols,
        data,
        basis,
    };
    let cap = 50 * (m + cols).max(1);
    let mut iterations = 0;

    if artificial_count > 0 {
        let cost: Vec<f64> = is_artificial.iter().map(|&a| if a { 1.0 } else { 0.0 }).collect();
        t.set_objective(&cost);
        let all = vec![true; cols];
        t.run(&all, &mut iterations, cap)?;
        let scale = rows.iter().fold(1.0f64, |s, r| s.max(r.2.abs()));
        let infeasibility = -t.rhs(t.rows);
        if infeasibility > FEAS_TOL * scale {
            return Ok(LpOutcome::Infeasible);
        }
        // Drive remaining (zero-valued) artificials out of the basis.
        let mut i = 0;
        while i < t.rows {
            if is_artificial[t.basis[i]] {
                match (0..cols).find(|&j| !is_artificial[j] && t.at(i, j).abs() > PIVOT_EPS) {
                    Some(j) => {
                        t.pivot(i, j);
                        i += 1;
                    }
                    None => t.remove_row(i),
                }
            } else {
                i += 1;
            }
        }
    }

    let sign = match lp.direction {
        Direction::Minimize => 1.0,
        Direction::Maximize => -1.0,
    };
    let mut cost = vec![0.0; cols];
    for j in 0..n {
        cost[j] = sign * lp.objective[j];
    }
    t.set_objective(&cost);
    let allowed: Vec<bool> = is_artificial.iter().map(|a| !a).collect();
    if !t.run(&allowed, &mut iterations, cap)? {
        return Ok(LpOutcome::Unbounded);
    }

    let mut assignment = lp.lower_bounds.clone();
    for i in 0..t.rows {
        let b = t.basis[i];
        if b < n {
            assignment[b] += t.rhs(i).max(0.0);
        }
    }
    let value = lp.objective.iter().zip(&assignment).map(|(c, x)| c * x).sum();
    Ok(LpOutcome::Optimal(Solution { value, assignment }))
}
