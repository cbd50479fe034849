//! Hausdorff-Kantorovich distance between finitely generated convex sets of
//! distributions, by three independent algorithms: nested point-to-set LPs,
//! spanning-tree enumeration, and the dual price-function LPs.

use rayon::prelude::*;

use crate::distributions::{convex_combine, expectation, pushforward, Distribution, FuzzyPredicate};
use crate::error::{Error, Result};
use crate::liftings::price_lp;
use crate::lp::{solve_lp, solve_lp_via_dual, solve_transport, Bounds, LinearProgram, Relation, Sense};
use crate::scalar::{max_of, Scalar};
use crate::spaces::PseudometricSpace;

/// Largest carrier for which spanning trees of `K_{n,n}` are enumerated.
pub const SPANNING_TREE_GUARD: usize = 4;

/// Convex hull of a non-empty list of distributions on one carrier.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexSet<S> {
    generators: Vec<Distribution<S>>,
}

impl<S: Scalar> ConvexSet<S> {
    pub fn new(generators: Vec<Distribution<S>>) -> Result<Self> {
        let Some(first) = generators.first() else {
            return Err(Error::validation("a convex set needs at least one generator"));
        };
        if generators.iter().any(|g| g.len() != first.len()) {
            return Err(Error::validation("generators live on different carriers"));
        }
        Ok(ConvexSet { generators })
    }

    pub fn generators(&self) -> &[Distribution<S>] {
        &self.generators
    }

    pub fn carrier_len(&self) -> usize {
        self.generators[0].len()
    }

    /// Drops exact duplicate generators, keeping first occurrences.
    pub fn dedup(&self) -> Self {
        let mut out: Vec<Distribution<S>> = Vec::new();
        for g in &self.generators {
            if !out.contains(g) {
                out.push(g.clone());
            }
        }
        ConvexSet { generators: out }
    }

    /// Image of the set under a point map (generator-wise pushforward).
    pub fn pushforward(&self, map: &[usize], target_len: usize) -> Result<Self> {
        let generators = self.generators.iter().map(|g| pushforward(map, target_len, g)).collect::<Result<_>>()?;
        Ok(ConvexSet { generators })
    }
}

/// Closest hull point to a fixed distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct PointToSet<S> {
    pub value: S,
    /// Convex weights over the set's generators.
    pub weights: Vec<S>,
    pub nearest: Distribution<S>,
}

/// One direction of the Hausdorff distance: the generator that is farthest
/// from the other set, and its nearest point there.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionWitness<S> {
    /// Index of the generator on the `from` side.
    pub generator: usize,
    pub value: S,
    pub weights: Vec<S>,
    pub nearest: Distribution<S>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HkResult<S> {
    pub value: S,
    /// From A's generators into B's hull.
    pub forward: Option<DirectionWitness<S>>,
    /// From B's generators into A's hull.
    pub backward: Option<DirectionWitness<S>>,
    /// Nonexpansive `f` maximizing `|sup_B E[f] - sup_A E[f]|`.
    pub dual_witness: Option<FuzzyPredicate<S>>,
}

fn check_carriers<S: Scalar>(d: &PseudometricSpace<S>, sets: &[&ConvexSet<S>]) -> Result<()> {
    if sets.iter().any(|s| s.carrier_len() != d.len()) {
        return Err(Error::validation("convex set carrier does not match the space"));
    }
    Ok(())
}

/// `min_{nu in conv(B)} W_E(d)(mu, nu)` as one LP over the coupling and the
/// convex weights.
pub fn point_to_set_distance<S: Scalar>(d: &PseudometricSpace<S>, mu: &Distribution<S>, b: &ConvexSet<S>) -> Result<PointToSet<S>> {
    check_carriers(d, &[b])?;
    if mu.len() != d.len() {
        return Err(Error::validation("distribution carrier does not match the space"));
    }
    let n = d.len();
    let support = mu.support();
    let mut lp = LinearProgram::new(Sense::Minimize);
    let mut rho = vec![vec![None; n]; n];
    for &x in &support {
        for y in 0..n {
            let v = lp.add_variable(format!("rho{x}_{y}"), Bounds::non_negative());
            lp.set_objective(v, d.d(x, y).clone());
            rho[x][y] = Some(v);
        }
    }
    let weights: Vec<usize> = (0..b.generators().len())
        .map(|j| lp.add_variable(format!("c{j}"), Bounds::non_negative()))
        .collect();
    for &x in &support {
        let terms: Vec<_> = (0..n).map(|y| (rho[x][y].unwrap(), S::one())).collect();
        lp.add_constraint(&terms, Relation::Eq, mu.mass(x).clone());
    }
    for y in 0..n {
        let mut terms: Vec<_> = support.iter().map(|&x| (rho[x][y].unwrap(), S::one())).collect();
        for (j, g) in b.generators().iter().enumerate() {
            if !g.mass(y).is_zero() {
                terms.push((weights[j], -g.mass(y).clone()));
            }
        }
        lp.add_constraint(&terms, Relation::Eq, S::zero());
    }
    let ones: Vec<_> = weights.iter().map(|&w| (w, S::one())).collect();
    lp.add_constraint(&ones, Relation::Eq, S::one());

    let sol = solve_lp(&lp)?;
    let value = sol.value.ok_or_else(|| Error::Internal("point-to-set LP not optimal".into()))?;
    let c: Vec<S> = weights.iter().map(|&w| sol.assignment[w].clone()).collect();
    let nearest = convex_combine(&c, b.generators())?;
    Ok(PointToSet { value, weights: c, nearest })
}

fn direction<S: Scalar>(
    from: &ConvexSet<S>,
    dist: impl Fn(&Distribution<S>) -> Result<PointToSet<S>>,
) -> Result<DirectionWitness<S>> {
    let mut best: Option<DirectionWitness<S>> = None;
    for (i, mu) in from.generators().iter().enumerate() {
        let pts = dist(mu)?;
        if best.as_ref().is_none_or(|b| pts.value > b.value) {
            best = Some(DirectionWitness { generator: i, value: pts.value, weights: pts.weights, nearest: pts.nearest });
        }
    }
    Ok(best.expect("convex sets are non-empty"))
}

fn combine<S: Scalar>(forward: DirectionWitness<S>, backward: DirectionWitness<S>) -> HkResult<S> {
    HkResult {
        value: max_of(forward.value.clone(), backward.value.clone()),
        forward: Some(forward),
        backward: Some(backward),
        dual_witness: None,
    }
}

/// Hausdorff distance over `W_E(d)`, with outer suprema over generators.
pub fn dhk_composite<S: Scalar>(d: &PseudometricSpace<S>, a: &ConvexSet<S>, b: &ConvexSet<S>) -> Result<HkResult<S>> {
    check_carriers(d, &[a, b])?;
    let forward = direction(a, |mu| point_to_set_distance(d, mu, b))?;
    let backward = direction(b, |nu| point_to_set_distance(d, nu, a))?;
    Ok(combine(forward, backward))
}

/// Number of spanning trees of `K_{n,n}`, i.e. `n^(2n-2)`.
pub fn spanning_tree_count(n: usize) -> u128 {
    if n == 0 {
        return 0;
    }
    (n as u128).saturating_pow(2 * n as u32 - 2)
}

/// Spanning trees of `K_{n,n}`, each as a list of `(left, right)` edges.
/// Edges are included in lexicographic order; an edge closing a cycle is
/// never taken, and branches that cannot reach `2n - 1` edges are cut.
pub fn bipartite_spanning_trees(n: usize) -> Vec<Vec<(usize, usize)>> {
    fn find(parent: &mut [usize], v: usize) -> usize {
        let mut root = v;
        while parent[root] != root {
            root = parent[root];
        }
        root
    }
    fn rec(
        edges: &[(usize, usize)],
        next: usize,
        n: usize,
        chosen: &mut Vec<(usize, usize)>,
        parent: &mut Vec<usize>,
        out: &mut Vec<Vec<(usize, usize)>>,
    ) {
        let need = 2 * n - 1 - chosen.len();
        if need == 0 {
            out.push(chosen.clone());
            return;
        }
        if edges.len() - next < need {
            return;
        }
        let (l, r) = edges[next];
        let (a, b) = (find(parent, l), find(parent, n + r));
        if a != b {
            let saved = parent.clone();
            parent[a] = b;
            chosen.push((l, r));
            rec(edges, next + 1, n, chosen, parent, out);
            chosen.pop();
            *parent = saved;
        }
        rec(edges, next + 1, n, chosen, parent, out);
    }
    if n == 0 {
        return Vec::new();
    }
    let edges: Vec<(usize, usize)> = (0..n).flat_map(|l| (0..n).map(move |r| (l, r))).collect();
    let mut out = Vec::new();
    rec(&edges, 0, n, &mut Vec::new(), &mut (0..2 * n).collect(), &mut out);
    out
}

/// Tree edge flows as affine functions `alpha + beta . c` of the convex
/// weights `c` over the target generators. Vertices `0..n` are the left
/// copy (supply `mu`), `n..2n` the right copy (demand `sum_j c_j nu_j`).
fn tree_flows<S: Scalar>(tree: &[(usize, usize)], n: usize, mu: &Distribution<S>, targets: &[Distribution<S>]) -> Vec<(S, Vec<S>)> {
    let mut adj = vec![Vec::new(); 2 * n];
    for (k, &(l, r)) in tree.iter().enumerate() {
        adj[l].push((n + r, k));
        adj[n + r].push((l, k));
    }
    // iterative DFS from the first left vertex, recording the parent edge
    let mut order = Vec::with_capacity(2 * n);
    let mut parent_edge = vec![usize::MAX; 2 * n];
    let mut seen = vec![false; 2 * n];
    let mut stack = vec![0usize];
    seen[0] = true;
    while let Some(v) = stack.pop() {
        order.push(v);
        for &(w, k) in &adj[v] {
            if !seen[w] {
                seen[w] = true;
                parent_edge[w] = k;
                stack.push(w);
            }
        }
    }
    let m = targets.len();
    // net supply of each subtree: sum of mu on left minus demand on right
    let mut net: Vec<(S, Vec<S>)> = (0..2 * n)
        .map(|v| {
            if v < n {
                (mu.mass(v).clone(), vec![S::zero(); m])
            } else {
                (S::zero(), targets.iter().map(|t| -t.mass(v - n).clone()).collect())
            }
        })
        .collect();
    let mut flows = vec![(S::zero(), vec![S::zero(); m]); tree.len()];
    for &v in order.iter().rev() {
        let k = parent_edge[v];
        if k == usize::MAX {
            continue;
        }
        let (alpha, beta) = net[v].clone();
        // a left child pushes its surplus across; a right child pulls its deficit
        flows[k] = if v < n { (alpha.clone(), beta.clone()) } else { (-alpha.clone(), beta.iter().map(|b| -b.clone()).collect()) };
        let (l, r) = tree[k];
        let p = if v < n { n + r } else { l };
        net[p].0 = net[p].0.clone() + alpha;
        for (acc, b) in net[p].1.iter_mut().zip(beta) {
            *acc = acc.clone() + b;
        }
    }
    flows
}

fn tree_direction<S: Scalar>(
    d: &PseudometricSpace<S>,
    trees: &[Vec<(usize, usize)>],
    mu: &Distribution<S>,
    to: &ConvexSet<S>,
) -> Result<PointToSet<S>> {
    let n = d.len();
    let m = to.generators().len();
    let per_tree: Vec<Option<(S, Vec<S>)>> = trees
        .par_iter()
        .map(|tree| -> Result<Option<(S, Vec<S>)>> {
            let flows = tree_flows(tree, n, mu, to.generators());
            let mut lp = LinearProgram::new(Sense::Minimize);
            for j in 0..m {
                lp.add_variable(format!("c{j}"), Bounds::non_negative());
            }
            let mut constant = S::zero();
            let mut objective = vec![S::zero(); m];
            for (&(l, r), (alpha, beta)) in tree.iter().zip(&flows) {
                let terms: Vec<_> = beta.iter().cloned().enumerate().filter(|(_, b)| !b.is_zero()).collect();
                if terms.is_empty() {
                    if alpha.is_neg() {
                        return Ok(None);
                    }
                } else {
                    lp.add_constraint(&terms, Relation::Ge, -alpha.clone());
                }
                let dist = d.d(l, r);
                constant = constant + dist.clone() * alpha.clone();
                for (o, b) in objective.iter_mut().zip(beta) {
                    *o = o.clone() + dist.clone() * b.clone();
                }
            }
            for (j, o) in objective.into_iter().enumerate() {
                lp.set_objective(j, o);
            }
            let ones: Vec<_> = (0..m).map(|j| (j, S::one())).collect();
            lp.add_constraint(&ones, Relation::Eq, S::one());
            let sol = solve_lp(&lp)?;
            Ok(sol.value.map(|v| (constant + v, sol.assignment)))
        })
        .collect::<Result<_>>()?;
    let mut best: Option<(S, Vec<S>)> = None;
    for (value, c) in per_tree.into_iter().flatten() {
        if best.as_ref().is_none_or(|b| value < b.0) {
            best = Some((value, c));
        }
    }
    let (value, weights) = best.ok_or_else(|| Error::Internal("no spanning tree admits a feasible flow".into()))?;
    let nearest = convex_combine(&weights, to.generators())?;
    Ok(PointToSet { value, weights, nearest })
}

/// Same distance by enumerating basic transport plans: one small LP over
/// the convex weights per spanning tree of `K_{n,n}`.
pub fn dhk_spanning_tree<S: Scalar>(d: &PseudometricSpace<S>, a: &ConvexSet<S>, b: &ConvexSet<S>) -> Result<HkResult<S>> {
    dhk_spanning_tree_guarded(d, a, b, SPANNING_TREE_GUARD)
}

pub fn dhk_spanning_tree_guarded<S: Scalar>(
    d: &PseudometricSpace<S>,
    a: &ConvexSet<S>,
    b: &ConvexSet<S>,
    guard: usize,
) -> Result<HkResult<S>> {
    check_carriers(d, &[a, b])?;
    let n = d.len();
    if n > guard {
        return Err(Error::Guard {
            what: format!("spanning trees of K_{{{n},{n}}}"),
            size: spanning_tree_count(n),
            limit: spanning_tree_count(guard),
        });
    }
    let trees = bipartite_spanning_trees(n);
    let forward = direction(a, |mu| tree_direction(d, &trees, mu, b))?;
    let backward = direction(b, |nu| tree_direction(d, &trees, nu, a))?;
    Ok(combine(forward, backward))
}

/// Dual algorithm: for every pair of generators `(mu0, nu0)`, maximize
/// `E_nu0[f] - E_mu0[f]` (both signs) over nonexpansive `f` for which `mu0`
/// and `nu0` are the maximizing generators on their sides.
pub fn dhk_dual<S: Scalar>(d: &PseudometricSpace<S>, a: &ConvexSet<S>, b: &ConvexSet<S>) -> Result<HkResult<S>> {
    check_carriers(d, &[a, b])?;
    let n = d.len();
    let base = price_lp(d);
    let jobs: Vec<(usize, usize, bool)> = (0..a.generators().len())
        .flat_map(|i| (0..b.generators().len()).flat_map(move |j| [(i, j, true), (i, j, false)]))
        .collect();
    let results: Vec<(S, Vec<S>)> = jobs
        .par_iter()
        .map(|&(i, j, positive)| -> Result<(S, Vec<S>)> {
            let (mu0, nu0) = (&a.generators()[i], &b.generators()[j]);
            let mut lp = base.clone();
            for x in 0..n {
                let diff = nu0.mass(x).clone() - mu0.mass(x).clone();
                lp.set_objective(x, if positive { diff } else { -diff });
            }
            dominance_rows(&mut lp, mu0, a, i);
            dominance_rows(&mut lp, nu0, b, j);
            let sol = solve_lp_via_dual(&lp)?;
            let value = sol.value.ok_or_else(|| Error::Internal("dual LP not optimal".into()))?;
            Ok((value, sol.assignment))
        })
        .collect::<Result<_>>()?;
    let (value, f) = results
        .into_iter()
        .reduce(|best, cur| if cur.0 > best.0 { cur } else { best })
        .expect("convex sets are non-empty");
    Ok(HkResult { value, forward: None, backward: None, dual_witness: Some(FuzzyPredicate::new(f)?) })
}

/// `E_g[f] - E_top[f] <= 0` for every other generator `g` of the set.
fn dominance_rows<S: Scalar>(lp: &mut LinearProgram<S>, top: &Distribution<S>, set: &ConvexSet<S>, skip: usize) {
    for (k, g) in set.generators().iter().enumerate() {
        if k == skip || g == top {
            continue;
        }
        let terms: Vec<_> = (0..top.len())
            .map(|x| (x, g.mass(x).clone() - top.mass(x).clone()))
            .filter(|(_, c)| !c.is_zero())
            .collect();
        if !terms.is_empty() {
            lp.add_constraint(&terms, Relation::Le, S::zero());
        }
    }
}

/// Re-evaluates every witness in `hk` from scratch and returns the value
/// they certify; errors if witnesses disagree with the recorded value.
pub fn verify_hk<S: Scalar>(d: &PseudometricSpace<S>, a: &ConvexSet<S>, b: &ConvexSet<S>, hk: &HkResult<S>) -> Result<S> {
    check_carriers(d, &[a, b])?;
    let mut certified: Option<S> = None;
    let mut check = |v: S| -> Result<()> {
        if !v.approx_eq(&hk.value) {
            return Err(Error::Internal(format!("witness re-evaluates to {v}, recorded {}", hk.value)));
        }
        certified = Some(v);
        Ok(())
    };
    let replay = |w: &DirectionWitness<S>, from: &ConvexSet<S>, to: &ConvexSet<S>| -> Result<S> {
        let from_gen = from
            .generators()
            .get(w.generator)
            .ok_or_else(|| Error::Internal("direction witness names a missing generator".into()))?;
        let nearest = convex_combine(&w.weights, to.generators())?;
        if nearest != w.nearest && !S::is_exact() {
            // floating combinations may differ in the last bits
        } else if nearest != w.nearest {
            return Err(Error::Internal("nearest point does not match its weights".into()));
        }
        let cost = solve_transport(d.matrix(), from_gen.masses(), nearest.masses())?.cost;
        if !cost.approx_eq(&w.value) {
            return Err(Error::Internal(format!("direction value {} but transport gives {cost}", w.value)));
        }
        Ok(cost)
    };
    if let (Some(fw), Some(bw)) = (&hk.forward, &hk.backward) {
        check(max_of(replay(fw, a, b)?, replay(bw, b, a)?))?;
    }
    if let Some(f) = &hk.dual_witness {
        let nonexp = (0..d.len()).all(|x| (0..d.len()).all(|y| (f.at(x).clone() - f.at(y).clone()).approx_le(d.d(x, y))));
        if !nonexp {
            return Err(Error::Internal("dual witness is not nonexpansive".into()));
        }
        let sup = |set: &ConvexSet<S>| -> Result<S> {
            set.generators().iter().map(|g| expectation(g, f)).try_fold(None::<S>, |acc, v| {
                let v = v?;
                Ok(Some(acc.map_or(v.clone(), |a| max_of(a, v))))
            })
            .map(|v| v.unwrap())
        };
        check((sup(b)? - sup(a)?).abs())?;
    }
    certified.ok_or_else(|| Error::validation("result carries no witness"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rational;
    use num_traits::Signed;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from_ratio(n, d)
    }

    fn dist(v: &[(i64, i64)]) -> Distribution<Rational> {
        Distribution::new(v.iter().map(|&(n, d)| q(n, d)).collect()).unwrap()
    }

    fn hexagon() -> (PseudometricSpace<Rational>, ConvexSet<Rational>, ConvexSet<Rational>) {
        let a = ConvexSet::new(vec![dist(&[(1, 3), (1, 3), (1, 3)]), dist(&[(2, 3), (1, 3), (0, 1)])]).unwrap();
        let b = ConvexSet::new(vec![dist(&[(0, 1), (2, 3), (1, 3)]), dist(&[(1, 3), (0, 1), (2, 3)])]).unwrap();
        (PseudometricSpace::discrete(3), a, b)
    }

    #[test]
    fn tree_counts() {
        for n in 1..=4 {
            assert_eq!(bipartite_spanning_trees(n).len() as u128, spanning_tree_count(n));
        }
    }

    #[test]
    fn hexagon_point_to_set() {
        let (d, a, b) = hexagon();
        let pts = point_to_set_distance(&d, &a.generators()[1], &b).unwrap();
        assert_eq!(pts.value, q(1, 2));
        assert_eq!(pts.nearest, dist(&[(1, 6), (1, 3), (1, 2)]));
        let to_vertices = b
            .generators()
            .iter()
            .map(|nu| solve_transport(d.matrix(), a.generators()[1].masses(), nu.masses()).unwrap().cost)
            .min()
            .unwrap();
        assert_eq!(to_vertices, q(2, 3));
        assert_eq!(point_to_set_distance(&d, &b.generators()[0], &b).unwrap().value, q(0, 1));
    }

    #[test]
    fn hexagon_three_ways() {
        let (d, a, b) = hexagon();
        let c = dhk_composite(&d, &a, &b).unwrap();
        assert_eq!(c.value, q(1, 2));
        assert_eq!(c.forward.as_ref().unwrap().value, q(1, 2));
        assert_eq!(c.backward.as_ref().unwrap().value, q(1, 3));
        assert_eq!(verify_hk(&d, &a, &b, &c).unwrap(), q(1, 2));
        let t = dhk_spanning_tree(&d, &a, &b).unwrap();
        assert_eq!(t.value, q(1, 2));
        assert_eq!(verify_hk(&d, &a, &b, &t).unwrap(), q(1, 2));
        let du = dhk_dual(&d, &a, &b).unwrap();
        assert_eq!(du.value, q(1, 2));
        assert_eq!(verify_hk(&d, &a, &b, &du).unwrap(), q(1, 2));
    }

    #[test]
    fn trivial_cases() {
        let (d, a, _) = hexagon();
        assert_eq!(dhk_composite(&d, &a, &a).unwrap().value, q(0, 1));
        assert_eq!(dhk_dual(&d, &a, &a).unwrap().value, q(0, 1));
        assert_eq!(dhk_spanning_tree(&d, &a, &a).unwrap().value, q(0, 1));
        let line = PseudometricSpace::new(vec!["x".into(), "y".into()], vec![vec![q(0, 1), q(2, 5)], vec![q(2, 5), q(0, 1)]]).unwrap();
        let dx = ConvexSet::new(vec![Distribution::dirac(2, 0)]).unwrap();
        let dy = ConvexSet::new(vec![Distribution::dirac(2, 1)]).unwrap();
        assert_eq!(dhk_composite(&line, &dx, &dy).unwrap().value, q(2, 5));
        assert_eq!(dhk_spanning_tree(&line, &dx, &dy).unwrap().value, q(2, 5));
        let du = dhk_dual(&line, &dx, &dy).unwrap();
        assert_eq!(du.value, q(2, 5));
        let f = du.dual_witness.unwrap();
        assert_eq!((f.at(1) - f.at(0)).abs(), q(2, 5));
    }

    #[test]
    fn guard_refuses_large_carriers() {
        let d = PseudometricSpace::<Rational>::discrete(5);
        let a = ConvexSet::new(vec![Distribution::uniform(5)]).unwrap();
        assert!(matches!(dhk_spanning_tree(&d, &a, &a), Err(Error::Guard { .. })));
    }
}
