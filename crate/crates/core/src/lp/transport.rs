//! Transportation problem: optimal couplings together with certifying
//! price potentials.

use crate::error::{Error, Result};
use crate::lp::{dot, solve_lp, Bounds, LinearProgram, Relation, Sense};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct TransportPlan<S> {
    /// `plan[x][y]`, row-major over source then target.
    pub plan: Vec<Vec<S>>,
    pub cost: S,
    /// Source potential; the pair satisfies `g[y] - f[x] <= cost[x][y]`.
    pub f: Vec<S>,
    pub g: Vec<S>,
}

fn check_marginal<S: Scalar>(name: &str, m: &[S]) -> Result<()> {
    if m.iter().any(|v| v.is_neg()) {
        return Err(Error::validation(format!("{name} has a negative mass")));
    }
    let total = m.iter().fold(S::zero(), |a, v| a + v.clone());
    if !total.approx_eq(&S::one()) {
        return Err(Error::validation(format!("{name} sums to {total}, expected 1")));
    }
    Ok(())
}

/// Minimum-cost coupling of `supply` and `demand` under `cost`.
pub fn solve_transport<S: Scalar>(cost: &[Vec<S>], supply: &[S], demand: &[S]) -> Result<TransportPlan<S>> {
    let (nx, ny) = (supply.len(), demand.len());
    if nx == 0 || ny == 0 {
        return Err(Error::validation("transport marginals must be non-empty"));
    }
    if cost.len() != nx || cost.iter().any(|row| row.len() != ny) {
        return Err(Error::validation(format!(
            "cost matrix must be {nx}x{ny} to match the marginals"
        )));
    }
    if cost.iter().flatten().any(|c| c.is_neg()) {
        return Err(Error::validation("transport costs must be non-negative"));
    }
    check_marginal("supply", supply)?;
    check_marginal("demand", demand)?;

    let mut lp = LinearProgram::new(Sense::Minimize);
    for (x, row) in cost.iter().enumerate() {
        for (y, c) in row.iter().enumerate() {
            let v = lp.add_variable(format!("p{x}_{y}"), Bounds::non_negative());
            lp.set_objective(v, c.clone());
        }
    }
    let var = |x: usize, y: usize| x * ny + y;
    for (x, m) in supply.iter().enumerate() {
        let terms: Vec<_> = (0..ny).map(|y| (var(x, y), S::one())).collect();
        lp.add_constraint(&terms, Relation::Eq, m.clone());
    }
    for (y, m) in demand.iter().enumerate() {
        let terms: Vec<_> = (0..nx).map(|x| (var(x, y), S::one())).collect();
        lp.add_constraint(&terms, Relation::Eq, m.clone());
    }
    let sol = solve_lp(&lp)?;
    if !sol.is_optimal() {
        return Err(Error::Internal(format!("transport LP reported {:?}", sol.status)));
    }
    let plan: Vec<Vec<S>> = (0..nx)
        .map(|x| (0..ny).map(|y| sol.assignment[var(x, y)].clone()).collect())
        .collect();
    // Row duals u, column duals v with u + v <= cost; prices f = -u, g = v.
    let f = sol.duals[..nx].iter().map(|u| -u.clone()).collect();
    let g = sol.duals[nx..].to_vec();
    let out = TransportPlan { plan, cost: sol.value.unwrap(), f, g };
    verify_plan(cost, supply, demand, &out)?;
    Ok(out)
}

/// Independent re-check of every transport-plan invariant: marginals,
/// non-negativity, potential feasibility, complementary slackness and
/// strong duality.
pub fn verify_plan<S: Scalar>(cost: &[Vec<S>], supply: &[S], demand: &[S], tp: &TransportPlan<S>) -> Result<()> {
    let fail = |msg: String| Err(Error::Internal(format!("transport certificate: {msg}")));
    let (nx, ny) = (supply.len(), demand.len());
    if tp.plan.len() != nx || tp.plan.iter().any(|r| r.len() != ny) || tp.f.len() != nx || tp.g.len() != ny {
        return fail("dimension mismatch".into());
    }
    let mut total = S::zero();
    for x in 0..nx {
        let row = tp.plan[x].iter().fold(S::zero(), |a, v| a + v.clone());
        if !row.approx_eq(&supply[x]) {
            return fail(format!("row {x} sums to {row}"));
        }
        for y in 0..ny {
            let p = &tp.plan[x][y];
            if p.is_neg() {
                return fail(format!("negative entry at ({x},{y})"));
            }
            let slack = cost[x][y].clone() - (tp.g[y].clone() - tp.f[x].clone());
            if slack.is_neg() {
                return fail(format!("potentials violate cost at ({x},{y})"));
            }
            if p.is_pos() && !slack.near_zero() {
                return fail(format!("complementary slackness fails at ({x},{y})"));
            }
            total = total + p.clone() * cost[x][y].clone();
        }
    }
    for y in 0..ny {
        let col = (0..nx).fold(S::zero(), |a, x| a + tp.plan[x][y].clone());
        if !col.approx_eq(&demand[y]) {
            return fail(format!("column {y} sums to {col}"));
        }
    }
    if !total.approx_eq(&tp.cost) {
        return fail(format!("plan cost {total} differs from reported {}", tp.cost));
    }
    let dual = dot(demand, &tp.g) - dot(supply, &tp.f);
    if !dual.approx_eq(&tp.cost) {
        return fail(format!("dual value {dual} differs from cost {}", tp.cost));
    }
    Ok(())
}
