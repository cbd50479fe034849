//! Exact linear programming and the transportation problem.

mod simplex;
pub mod transport;

pub use transport::{solve_transport, verify_plan, TransportPlan};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use simplex::{Outcome, StandardForm};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Maximize,
    Minimize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint<S> {
    pub coeffs: Vec<S>,
    pub relation: Relation,
    pub rhs: S,
}

/// Per-variable bounds; `lower = None` means unbounded below.
#[derive(Debug, Clone, PartialEq)]
pub struct Bounds<S> {
    pub lower: Option<S>,
    pub upper: Option<S>,
}

impl<S: Scalar> Bounds<S> {
    pub fn non_negative() -> Self {
        Bounds { lower: Some(S::zero()), upper: None }
    }

    pub fn unit_interval() -> Self {
        Bounds { lower: Some(S::zero()), upper: Some(S::one()) }
    }

    pub fn free() -> Self {
        Bounds { lower: None, upper: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram<S> {
    pub variables: Vec<String>,
    pub sense: Sense,
    pub objective: Vec<S>,
    pub constraints: Vec<Constraint<S>>,
    pub bounds: Vec<Bounds<S>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution<S> {
    pub status: LpStatus,
    pub value: Option<S>,
    pub assignment: Vec<S>,
    /// Shadow price of each user constraint: the rate of change of the
    /// optimal value per unit increase of its right-hand side.
    pub duals: Vec<S>,
}

impl<S: Scalar> LpSolution<S> {
    fn status_only(status: LpStatus) -> Self {
        LpSolution { status, value: None, assignment: Vec::new(), duals: Vec::new() }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

impl<S: Scalar> LinearProgram<S> {
    pub fn new(sense: Sense) -> Self {
        LinearProgram {
            variables: Vec::new(),
            sense,
            objective: Vec::new(),
            constraints: Vec::new(),
            bounds: Vec::new(),
        }
    }

    pub fn add_variable(&mut self, name: impl Into<String>, bounds: Bounds<S>) -> usize {
        self.variables.push(name.into());
        self.objective.push(S::zero());
        self.bounds.push(bounds);
        for c in &mut self.constraints {
            c.coeffs.push(S::zero());
        }
        self.variables.len() - 1
    }

    pub fn set_objective(&mut self, var: usize, coeff: S) {
        self.objective[var] = coeff;
    }

    /// Adds `sum(coeff * var) rel rhs` from sparse terms; repeated variables
    /// accumulate.
    pub fn add_constraint(&mut self, terms: &[(usize, S)], relation: Relation, rhs: S) -> usize {
        let mut coeffs = vec![S::zero(); self.variables.len()];
        for (v, a) in terms {
            coeffs[*v] = coeffs[*v].clone() + a.clone();
        }
        self.constraints.push(Constraint { coeffs, relation, rhs });
        self.constraints.len() - 1
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.variables.len();
        if self.objective.len() != n || self.bounds.len() != n {
            return Err(Error::validation("objective/bounds length differs from variable count"));
        }
        for (i, c) in self.constraints.iter().enumerate() {
            if c.coeffs.len() != n {
                return Err(Error::validation(format!(
                    "constraint {i} has {} coefficients, expected {n}",
                    c.coeffs.len()
                )));
            }
        }
        for (j, b) in self.bounds.iter().enumerate() {
            if let (Some(l), Some(u)) = (&b.lower, &b.upper) {
                if l > u {
                    return Err(Error::validation(format!(
                        "variable {} has lower bound above upper bound",
                        self.variables[j]
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn objective_at(&self, x: &[S]) -> S {
        dot(&self.objective, x)
    }

    /// Independent feasibility re-check of an assignment.
    pub fn is_feasible(&self, x: &[S]) -> bool {
        if x.len() != self.variables.len() {
            return false;
        }
        let bounds_ok = self.bounds.iter().zip(x).all(|(b, v)| {
            b.lower.as_ref().is_none_or(|l| l.approx_le(v))
                && b.upper.as_ref().is_none_or(|u| v.approx_le(u))
        });
        bounds_ok
            && self.constraints.iter().all(|c| {
                let lhs = dot(&c.coeffs, x);
                match c.relation {
                    Relation::Le => lhs.approx_le(&c.rhs),
                    Relation::Ge => c.rhs.approx_le(&lhs),
                    Relation::Eq => lhs.approx_eq(&c.rhs),
                }
            })
    }
}

pub(crate) fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    a.iter()
        .zip(b)
        .filter(|(x, y)| !x.is_zero() && !y.is_zero())
        .fold(S::zero(), |acc, (x, y)| acc + x.clone() * y.clone())
}

/// How an original variable is expressed through standard-form columns:
/// `x = offset + sum(coef * z[col])`.
struct VarMap<S> {
    offset: S,
    cols: Vec<(usize, S)>,
}

/// Solves `lp` exactly (for exact scalars). Infeasibility and unboundedness
/// are statuses, not errors.
pub fn solve_lp<S: Scalar>(lp: &LinearProgram<S>) -> Result<LpSolution<S>> {
    lp.validate()?;
    let n = lp.variables.len();

    let mut maps = Vec::with_capacity(n);
    let mut ncols = 0usize;
    let mut upper_rows: Vec<(usize, S)> = Vec::new();
    for b in &lp.bounds {
        match (&b.lower, &b.upper) {
            (Some(l), u) => {
                let col = ncols;
                ncols += 1;
                if let Some(u) = u {
                    upper_rows.push((col, u.clone() - l.clone()));
                }
                maps.push(VarMap { offset: l.clone(), cols: vec![(col, S::one())] });
            }
            (None, Some(u)) => {
                maps.push(VarMap { offset: u.clone(), cols: vec![(ncols, -S::one())] });
                ncols += 1;
            }
            (None, None) => {
                maps.push(VarMap {
                    offset: S::zero(),
                    cols: vec![(ncols, S::one()), (ncols + 1, -S::one())],
                });
                ncols += 2;
            }
        }
    }
    let nstruct = ncols;

    // Rows: user constraints followed by upper-bound rows.
    let mut rows: Vec<(Vec<S>, Relation, S)> = Vec::new();
    for c in &lp.constraints {
        let mut row = vec![S::zero(); nstruct];
        let mut rhs = c.rhs.clone();
        for (j, a) in c.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            rhs = rhs - a.clone() * maps[j].offset.clone();
            for (col, coef) in &maps[j].cols {
                row[*col] = row[*col].clone() + a.clone() * coef.clone();
            }
        }
        rows.push((row, c.relation, rhs));
    }
    for (col, cap) in &upper_rows {
        let mut row = vec![S::zero(); nstruct];
        row[*col] = S::one();
        rows.push((row, Relation::Le, cap.clone()));
    }

    // Normalize to b >= 0 and add slack/surplus columns.
    let m = rows.len();
    let mut flips = vec![S::one(); m];
    let mut slack_of_row: Vec<Option<(usize, bool)>> = vec![None; m];
    for (i, (row, rel, rhs)) in rows.iter_mut().enumerate() {
        if rhs.is_neg() {
            for v in row.iter_mut() {
                *v = -v.clone();
            }
            *rhs = -rhs.clone();
            *rel = match rel {
                Relation::Le => Relation::Ge,
                Relation::Ge => Relation::Le,
                Relation::Eq => Relation::Eq,
            };
            flips[i] = -S::one();
        }
        match rel {
            Relation::Le => {
                slack_of_row[i] = Some((ncols, true));
                ncols += 1;
            }
            Relation::Ge => {
                slack_of_row[i] = Some((ncols, false));
                ncols += 1;
            }
            Relation::Eq => {}
        }
    }
    let mut a = Vec::with_capacity(m);
    let mut b = Vec::with_capacity(m);
    let mut unit_col = Vec::with_capacity(m);
    for (i, (mut row, _, rhs)) in rows.into_iter().enumerate() {
        row.resize(ncols, S::zero());
        match slack_of_row[i] {
            Some((col, true)) => {
                row[col] = S::one();
                unit_col.push(Some(col));
            }
            Some((col, false)) => {
                row[col] = -S::one();
                unit_col.push(None);
            }
            None => unit_col.push(None),
        }
        a.push(row);
        b.push(rhs);
    }

    let sign = match lp.sense {
        Sense::Minimize => S::one(),
        Sense::Maximize => -S::one(),
    };
    let mut c = vec![S::zero(); ncols];
    for (j, cj) in lp.objective.iter().enumerate() {
        for (col, coef) in &maps[j].cols {
            c[*col] = c[*col].clone() + sign.clone() * cj.clone() * coef.clone();
        }
    }

    match simplex::solve(StandardForm { a, b, c, unit_col }) {
        Outcome::Infeasible => Ok(LpSolution::status_only(LpStatus::Infeasible)),
        Outcome::Unbounded => Ok(LpSolution::status_only(LpStatus::Unbounded)),
        Outcome::Optimal { z, duals, .. } => {
            let assignment: Vec<S> = maps
                .iter()
                .map(|vm| {
                    vm.cols
                        .iter()
                        .fold(vm.offset.clone(), |acc, (col, coef)| acc + coef.clone() * z[*col].clone())
                })
                .collect();
            let value = lp.objective_at(&assignment);
            let duals = duals
                .into_iter()
                .take(lp.constraints.len())
                .zip(&flips)
                .map(|(y, f)| sign.clone() * f.clone() * y)
                .collect();
            Ok(LpSolution { status: LpStatus::Optimal, value: Some(value), assignment, duals })
        }
    }
}

/// Solves `max c.x` subject to `A x <= b`, `x >= 0` (upper bounds allowed)
/// through its LP dual, which has one row per variable rather than one per
/// constraint. The primal optimum is read off the dual's shadow prices and
/// re-verified; anything outside that shape, or any failed check, falls
/// back to [`solve_lp`].
pub fn solve_lp_via_dual<S: Scalar>(lp: &LinearProgram<S>) -> Result<LpSolution<S>> {
    lp.validate()?;
    let shape_ok = lp.sense == Sense::Maximize
        && lp.bounds.iter().all(|b| b.lower.as_ref().is_some_and(|l| l.is_zero()))
        && lp.constraints.iter().all(|c| c.relation == Relation::Le);
    if !shape_ok {
        return solve_lp(lp);
    }
    let n = lp.variables.len();
    let mut rows: Vec<(Vec<(usize, S)>, S)> = lp
        .constraints
        .iter()
        .map(|c| {
            let terms = c.coeffs.iter().cloned().enumerate().filter(|(_, a)| !a.is_zero()).collect();
            (terms, c.rhs.clone())
        })
        .collect();
    for (j, b) in lp.bounds.iter().enumerate() {
        if let Some(u) = &b.upper {
            rows.push((vec![(j, S::one())], u.clone()));
        }
    }
    let mut dual = LinearProgram::new(Sense::Minimize);
    for (i, (_, rhs)) in rows.iter().enumerate() {
        let y = dual.add_variable(format!("y{i}"), Bounds::non_negative());
        dual.set_objective(y, rhs.clone());
    }
    let mut columns: Vec<Vec<(usize, S)>> = vec![Vec::new(); n];
    for (i, (terms, _)) in rows.iter().enumerate() {
        for (j, a) in terms {
            columns[*j].push((i, a.clone()));
        }
    }
    for (j, col) in columns.iter().enumerate() {
        dual.add_constraint(col, Relation::Ge, lp.objective[j].clone());
    }
    let sol = solve_lp(&dual)?;
    let Some(value) = sol.value else {
        return solve_lp(lp);
    };
    let assignment = sol.duals;
    if !lp.is_feasible(&assignment) || !lp.objective_at(&assignment).approx_eq(&value) {
        return solve_lp(lp);
    }
    let duals = sol.assignment[..lp.constraints.len()].to_vec();
    Ok(LpSolution { status: LpStatus::Optimal, value: Some(value), assignment, duals })
}
