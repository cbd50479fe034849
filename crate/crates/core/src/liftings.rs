//! Kantorovich (price-function) and Wasserstein (coupling) liftings of
//! pseudometrics and fuzzy relations, plus a brute-force grid oracle for the
//! Kantorovich side.

use num_traits::{One, ToPrimitive};

use crate::convex_powerset::{dhk_composite, dhk_dual, ConvexSet};
use crate::distributions::{Coupling, Distribution, FuzzyPredicate};
use crate::error::{Error, Result};
use crate::levy_prokhorov::duality_witness;
use crate::lp::{solve_lp, solve_lp_via_dual, solve_transport, Bounds, LinearProgram, Relation, Sense};
use crate::modalities::{eval, generally, Argument, Modality};
use crate::scalar::{max_of, ominus, Scalar};
use crate::spaces::{FuzzyRelation, PointSet, PseudometricSpace};
use crate::Rational;

/// How a reported value relates to the true lifted distance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exactness {
    Exact,
    LowerBound,
    UpperBound,
    /// Exact up to truncation of irrational roots after `digits` decimals.
    Approximate { digits: u32 },
}

/// `(f, g)` with `g(y) - f(x) <= r(x,y)` for all `x, y`.
#[derive(Debug, Clone, PartialEq)]
pub struct NonexpansivePair<S> {
    pub f: FuzzyPredicate<S>,
    pub g: FuzzyPredicate<S>,
}

impl<S: Scalar> NonexpansivePair<S> {
    pub fn is_nonexpansive(&self, r: &FuzzyRelation<S>) -> bool {
        self.f.len() == r.source_len()
            && self.g.len() == r.target_len()
            && (0..r.source_len()).all(|x| {
                (0..r.target_len()).all(|y| (self.g.at(y).clone() - self.f.at(x).clone()).approx_le(r.get(x, y)))
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Witness<S> {
    None,
    Coupling(Coupling<S>),
    /// A set coupling: pairs covering both point sets.
    SetCoupling(Vec<(usize, usize)>),
    Predicate(FuzzyPredicate<S>),
    Pair(NonexpansivePair<S>),
    Convex(Box<crate::convex_powerset::HkResult<S>>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LiftedValue<S> {
    pub value: S,
    pub exactness: Exactness,
    pub witness: Witness<S>,
    /// What re-evaluating the witness gives; equal to `value` for exact
    /// certificates, a lower bound on the Kantorovich side otherwise.
    pub witnessed: Option<S>,
    /// A proved upper bound, reported alongside lower-bound values.
    pub upper: Option<S>,
}

impl<S: Scalar> LiftedValue<S> {
    fn exact(value: S, witness: Witness<S>, witnessed: Option<S>) -> Self {
        LiftedValue { value, exactness: Exactness::Exact, witness, witnessed, upper: None }
    }
}

/// The ground distance being lifted.
#[derive(Debug)]
pub enum Ground<'a, S> {
    Metric(&'a PseudometricSpace<S>),
    Relation(&'a FuzzyRelation<S>),
}

impl<S> Clone for Ground<'_, S> {
    fn clone(&self) -> Self {
        *self
    }
}

impl<S> Copy for Ground<'_, S> {}

impl<'a, S: Scalar> Ground<'a, S> {
    fn relation(&self) -> std::borrow::Cow<'a, FuzzyRelation<S>> {
        match self {
            Ground::Metric(d) => std::borrow::Cow::Owned(d.as_relation()),
            Ground::Relation(r) => std::borrow::Cow::Borrowed(*r),
        }
    }

    fn sizes(&self) -> (usize, usize) {
        match self {
            Ground::Metric(d) => (d.len(), d.len()),
            Ground::Relation(r) => (r.source_len(), r.target_len()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LiftingConfig {
    /// Witnesses for the "generally" Kantorovich side are built at
    /// `value - 2^-witness_depth`.
    pub witness_depth: u32,
    /// Grid step of the Kantorovich oracle (must be `1/2^k`).
    pub grid_delta: Rational,
    /// Largest number of grid functions the oracle may enumerate.
    pub grid_limit: u128,
}

impl Default for LiftingConfig {
    fn default() -> Self {
        LiftingConfig {
            witness_depth: 8,
            grid_delta: Rational::new(1.into(), 32.into()),
            // 17^6: six points at step 1/16
            grid_limit: 24_137_569,
        }
    }
}

fn dists<'a, S: Scalar>(
    s: Argument<'a, S>,
    t: Argument<'a, S>,
    nx: usize,
    ny: usize,
) -> Result<(&'a Distribution<S>, &'a Distribution<S>)> {
    match (s, t) {
        (Argument::Dist(a), Argument::Dist(b)) => {
            if a.len() != nx || b.len() != ny {
                return Err(Error::validation("distribution carrier does not match the ground distance"));
            }
            Ok((a, b))
        }
        _ => Err(Error::kind("this modality lifts distributions")),
    }
}

fn point_sets<'a, S: Scalar>(
    s: Argument<'a, S>,
    t: Argument<'a, S>,
    nx: usize,
    ny: usize,
) -> Result<(&'a PointSet, &'a PointSet)> {
    match (s, t) {
        (Argument::Points(a), Argument::Points(b)) => {
            if a.is_empty() || b.is_empty() {
                return Err(Error::validation("point sets must be non-empty"));
            }
            if a.iter().any(|&x| x >= nx) || b.iter().any(|&y| y >= ny) {
                return Err(Error::validation("point set leaves the carrier"));
            }
            Ok((a, b))
        }
        _ => Err(Error::kind("sup lifts point sets")),
    }
}

fn convex_sets<'a, S: Scalar>(s: Argument<'a, S>, t: Argument<'a, S>) -> Result<(&'a ConvexSet<S>, &'a ConvexSet<S>)> {
    match (s, t) {
        (Argument::Convex(a), Argument::Convex(b)) => Ok((a, b)),
        _ => Err(Error::kind("convex_sup_expectation lifts convex sets")),
    }
}

fn metric_only<'a, S>(ground: Ground<'a, S>, what: &str) -> Result<&'a PseudometricSpace<S>> {
    match ground {
        Ground::Metric(d) => Ok(d),
        Ground::Relation(_) => Err(Error::kind(format!("{what} needs a pseudometric ground distance"))),
    }
}

/// `inf { lambda(r)(c) | c coupling of s and t }`.
pub fn wasserstein<S: Scalar>(m: &Modality, ground: Ground<'_, S>, s: Argument<'_, S>, t: Argument<'_, S>) -> Result<LiftedValue<S>> {
    let (nx, ny) = ground.sizes();
    match m {
        Modality::Expectation => {
            let (mu, nu) = dists(s, t, nx, ny)?;
            let r = ground.relation();
            let tp = solve_transport(r.matrix(), mu.masses(), nu.masses())?;
            let coupling = Coupling::new(tp.plan, mu.clone(), nu.clone())?;
            Ok(LiftedValue::exact(tp.cost.clone(), Witness::Coupling(coupling), Some(tp.cost)))
        }
        Modality::Generally => {
            let (mu, nu) = dists(s, t, nx, ny)?;
            let sweep = generally_wasserstein(&ground.relation(), mu, nu)?;
            let witnessed = generally(&product_predicate(&ground.relation()), &sweep.coupling.flatten())?;
            Ok(LiftedValue::exact(sweep.value, Witness::Coupling(sweep.coupling), Some(witnessed)))
        }
        Modality::PMoment { p, digits } => {
            let (mu, nu) = dists(s, t, nx, ny)?;
            let powered = ground.relation().powered(p, *digits);
            let tp = solve_transport(powered.matrix(), mu.masses(), nu.masses())?;
            let value = tp.cost.pow_rational(&(Rational::one() / p), *digits);
            let coupling = Coupling::new(tp.plan, mu.clone(), nu.clone())?;
            Ok(LiftedValue {
                witnessed: Some(value.clone()),
                value,
                exactness: Exactness::Approximate { digits: *digits },
                witness: Witness::Coupling(coupling),
                upper: None,
            })
        }
        Modality::Sup => {
            let (a, b) = point_sets(s, t, nx, ny)?;
            let (value, pairs) = set_wasserstein(&ground.relation(), a, b);
            Ok(LiftedValue::exact(value.clone(), Witness::SetCoupling(pairs), Some(value)))
        }
        Modality::ConvexSupExpectation => {
            let d = metric_only(ground, "the convex-powerset lifting")?;
            let (a, b) = convex_sets(s, t)?;
            let hk = dhk_composite(d, a, b)?;
            Ok(LiftedValue::exact(hk.value.clone(), Witness::Convex(Box::new(hk.clone())), Some(hk.value)))
        }
        Modality::Inf => Err(Error::kind("inf is not subadditive and has no lifting here")),
    }
}

/// `sup { |lambda(f)(t) - lambda(f)(s)| | f: (X,d) -> [0,1] nonexpansive }`.
pub fn kantorovich<S: Scalar>(m: &Modality, d: &PseudometricSpace<S>, s: Argument<'_, S>, t: Argument<'_, S>) -> Result<LiftedValue<S>> {
    kantorovich_with(m, d, s, t, &LiftingConfig::default())
}

pub fn kantorovich_with<S: Scalar>(
    m: &Modality,
    d: &PseudometricSpace<S>,
    s: Argument<'_, S>,
    t: Argument<'_, S>,
    cfg: &LiftingConfig,
) -> Result<LiftedValue<S>> {
    if let Some(v) = d.validate().violations.first() {
        return Err(Error::validation(format!("not a pseudometric: {v}")));
    }
    let n = d.len();
    match m {
        Modality::Expectation => {
            let (mu, nu) = dists(s, t, n, n)?;
            let mut best: Option<(S, Vec<S>)> = None;
            for sign in [S::one(), -S::one()] {
                let mut lp = price_lp(d);
                for x in 0..n {
                    lp.set_objective(x, sign.clone() * (nu.mass(x).clone() - mu.mass(x).clone()));
                }
                let sol = solve_lp_via_dual(&lp)?;
                let v = sol.value.ok_or_else(|| Error::Internal("price LP not optimal".into()))?;
                if best.as_ref().is_none_or(|(b, _)| v > *b) {
                    best = Some((v, sol.assignment));
                }
            }
            let (value, f) = best.unwrap();
            let f = FuzzyPredicate::new(f)?;
            let witnessed = abs_gap(m, &f, s, t)?;
            Ok(LiftedValue::exact(value, Witness::Predicate(f), Some(witnessed)))
        }
        Modality::Sup => {
            let (a, b) = point_sets(s, t, n, n)?;
            let mut best: Option<(S, Vec<S>)> = None;
            for (from, to) in [(a, b), (b, a)] {
                for &target in to {
                    // maximize f(target) - z with z >= f(a) for a in `from`
                    let mut lp = price_lp(d);
                    let z = lp.add_variable("z", Bounds::non_negative());
                    lp.set_objective(target, S::one());
                    lp.set_objective(z, -S::one());
                    for &x in from {
                        lp.add_constraint(&[(x, S::one()), (z, -S::one())], Relation::Le, S::zero());
                    }
                    let sol = solve_lp_via_dual(&lp)?;
                    let v = sol.value.ok_or_else(|| Error::Internal("price LP not optimal".into()))?;
                    if best.as_ref().is_none_or(|(bv, _)| v > *bv) {
                        let mut f = sol.assignment;
                        f.truncate(n);
                        best = Some((v, f));
                    }
                }
            }
            let (value, f) = best.unwrap();
            let f = FuzzyPredicate::new(f)?;
            let witnessed = abs_gap(m, &f, s, t)?;
            Ok(LiftedValue::exact(value, Witness::Predicate(f), Some(witnessed)))
        }
        Modality::Generally => {
            let (mu, nu) = dists(s, t, n, n)?;
            let value = wasserstein(m, Ground::Metric(d), s, t)?.value;
            if value.is_zero() {
                let f = FuzzyPredicate::constant(n, S::zero());
                return Ok(LiftedValue::exact(value, Witness::Predicate(f), Some(S::zero())));
            }
            let (eps, w) = deepest_witness(&d.as_relation(), mu, nu, &value, cfg.witness_depth)?;
            // The pair (f, g) is d-nonexpansive; h(y) = min_x f(x) + d(x,y)
            // is a single nonexpansive predicate with f >= h >= g.
            let h: Vec<S> = (0..n)
                .map(|y| {
                    (0..n)
                        .map(|x| w.f.at(x).clone() + d.d(x, y).clone())
                        .reduce(crate::scalar::min_of)
                        .unwrap()
                })
                .collect();
            let h = FuzzyPredicate::new(h)?;
            let witnessed = abs_gap(m, &h, s, t)?;
            if witnessed < eps {
                return Err(Error::Internal("symmetric generally witness lost margin".into()));
            }
            Ok(LiftedValue::exact(value, Witness::Predicate(h), Some(witnessed)))
        }
        Modality::PMoment { digits, .. } => {
            let lower = kantorovich_grid_oracle(m, Ground::Metric(d), s, t, &cfg.grid_delta, cfg.grid_limit)?;
            // the coupling value is truncated, so pad it by one final digit
            let pad = S::from_rational(&Rational::new(1.into(), num_traits::pow(num_bigint::BigInt::from(10), *digits as usize)));
            let mut upper = wasserstein(m, Ground::Metric(d), s, t)?.value + pad;
            // Flooring a nonexpansive f to the grid keeps it nonexpansive when
            // every distance is a grid multiple (or at least 1), and moves
            // each side by at most delta.
            let delta = S::from_rational(&cfg.grid_delta);
            let grid_compatible = d.matrix().iter().flatten().all(|v| {
                v >= &S::one() || (v.clone() / delta.clone()).floor() * delta.clone() == *v
            });
            if grid_compatible {
                upper = crate::scalar::min_of(upper, lower.value.clone() + delta.clone() + delta);
            }
            Ok(LiftedValue { upper: Some(upper), ..lower })
        }
        Modality::ConvexSupExpectation => {
            let (a, b) = convex_sets(s, t)?;
            let hk = dhk_dual(d, a, b)?;
            let f = hk.dual_witness.clone().ok_or_else(|| Error::Internal("dual algorithm returned no price function".into()))?;
            let witnessed = abs_gap(m, &f, s, t)?;
            Ok(LiftedValue::exact(hk.value.clone(), Witness::Predicate(f), Some(witnessed)))
        }
        Modality::Inf => Err(Error::kind("inf is not subadditive and has no lifting here")),
    }
}

/// `sup { lambda(g)(t) - lambda(f)(s) | (f,g) r-nonexpansive }`, truncated at 0.
pub fn kantorovich_relational<S: Scalar>(m: &Modality, r: &FuzzyRelation<S>, s: Argument<'_, S>, t: Argument<'_, S>) -> Result<LiftedValue<S>> {
    kantorovich_relational_with(m, r, s, t, &LiftingConfig::default())
}

pub fn kantorovich_relational_with<S: Scalar>(
    m: &Modality,
    r: &FuzzyRelation<S>,
    s: Argument<'_, S>,
    t: Argument<'_, S>,
    cfg: &LiftingConfig,
) -> Result<LiftedValue<S>> {
    let (nx, ny) = (r.source_len(), r.target_len());
    match m {
        Modality::Expectation => {
            let (mu, nu) = dists(s, t, nx, ny)?;
            let mut lp = LinearProgram::new(Sense::Maximize);
            for x in 0..nx {
                let v = lp.add_variable(format!("f{x}"), Bounds::unit_interval());
                lp.set_objective(v, -mu.mass(x).clone());
            }
            for y in 0..ny {
                let v = lp.add_variable(format!("g{y}"), Bounds::unit_interval());
                lp.set_objective(v, nu.mass(y).clone());
            }
            for x in 0..nx {
                for y in 0..ny {
                    if r.get(x, y) < &S::one() {
                        lp.add_constraint(&[(nx + y, S::one()), (x, -S::one())], Relation::Le, r.get(x, y).clone());
                    }
                }
            }
            let sol = solve_lp(&lp)?;
            let value = sol.value.ok_or_else(|| Error::Internal("pair LP not optimal".into()))?;
            let pair = NonexpansivePair {
                f: FuzzyPredicate::new(sol.assignment[..nx].to_vec())?,
                g: FuzzyPredicate::new(sol.assignment[nx..].to_vec())?,
            };
            let witnessed = pair_gap(m, &pair, s, t)?;
            Ok(LiftedValue::exact(max_of(value, S::zero()), Witness::Pair(pair), Some(witnessed)))
        }
        Modality::Generally => {
            let (mu, nu) = dists(s, t, nx, ny)?;
            let value = wasserstein(m, Ground::Relation(r), s, t)?.value;
            if value.is_zero() {
                let pair = NonexpansivePair {
                    f: FuzzyPredicate::constant(nx, S::zero()),
                    g: FuzzyPredicate::constant(ny, S::zero()),
                };
                return Ok(LiftedValue::exact(value, Witness::Pair(pair), Some(S::zero())));
            }
            let (_, w) = deepest_witness(r, mu, nu, &value, cfg.witness_depth)?;
            let witnessed = pair_gap(m, &w, s, t)?;
            Ok(LiftedValue::exact(value, Witness::Pair(w), Some(witnessed)))
        }
        _ => Err(Error::kind(format!("no relational Kantorovich lifting for {m}"))),
    }
}

/// Builds the duality witness at `value - 2^-k` for the largest usable
/// `k <= depth`.
fn deepest_witness<S: Scalar>(
    r: &FuzzyRelation<S>,
    mu: &Distribution<S>,
    nu: &Distribution<S>,
    value: &S,
    depth: u32,
) -> Result<(S, NonexpansivePair<S>)> {
    let mut last_err = None;
    for k in (1..=depth.max(1)).rev() {
        let eps = value.clone() - S::from_ratio(1, 1i64 << k.min(62));
        if !eps.is_pos() {
            continue;
        }
        match duality_witness(r, mu, nu, &eps) {
            Ok(w) => return Ok((eps, w.pair)),
            Err(e) => last_err = Some(e),
        }
    }
    // value below 2^-depth: fall back to half the value
    let eps = value.clone() / S::from_ratio(2, 1);
    duality_witness(r, mu, nu, &eps)
        .map(|w| (eps, w.pair))
        .map_err(|e| last_err.unwrap_or(e))
}

fn abs_gap<S: Scalar>(m: &Modality, f: &FuzzyPredicate<S>, s: Argument<'_, S>, t: Argument<'_, S>) -> Result<S> {
    Ok((eval(m, f, t)? - eval(m, f, s)?).abs())
}

fn pair_gap<S: Scalar>(m: &Modality, pair: &NonexpansivePair<S>, s: Argument<'_, S>, t: Argument<'_, S>) -> Result<S> {
    Ok(ominus(&eval(m, &pair.g, t)?, &eval(m, &pair.f, s)?))
}

/// Unordered pairs `(x, y)` whose constraint `|f(x) - f(y)| <= d(x,y)` is
/// not already implied by `f` in `[0,1]` or by a chain through a third
/// point at strictly smaller positive distances.
pub(crate) fn essential_pairs<S: Scalar>(d: &PseudometricSpace<S>) -> Vec<(usize, usize)> {
    let n = d.len();
    let mut out = Vec::new();
    for x in 0..n {
        for y in (x + 1)..n {
            let dxy = d.d(x, y);
            if dxy >= &S::one() {
                continue;
            }
            let implied = (0..n).any(|z| {
                z != x
                    && z != y
                    && d.d(x, z).is_pos()
                    && d.d(z, y).is_pos()
                    && (d.d(x, z).clone() + d.d(z, y).clone()).approx_eq(dxy)
            });
            if !implied {
                out.push((x, y));
            }
        }
    }
    out
}

/// LP skeleton over `f: X -> [0,1]` nonexpansive w.r.t. `d`; variables are
/// indexed by point.
pub(crate) fn price_lp<S: Scalar>(d: &PseudometricSpace<S>) -> LinearProgram<S> {
    let mut lp = LinearProgram::new(Sense::Maximize);
    for x in 0..d.len() {
        lp.add_variable(format!("f{x}"), Bounds::unit_interval());
    }
    for (x, y) in essential_pairs(d) {
        let dxy = d.d(x, y).clone();
        lp.add_constraint(&[(x, S::one()), (y, -S::one())], Relation::Le, dxy.clone());
        lp.add_constraint(&[(y, S::one()), (x, -S::one())], Relation::Le, dxy);
    }
    lp
}

/// The relation viewed as a predicate on the product carrier (row-major).
pub fn product_predicate<S: Scalar>(r: &FuzzyRelation<S>) -> FuzzyPredicate<S> {
    FuzzyPredicate::new(r.matrix().iter().flatten().cloned().collect()).expect("relation entries lie in [0,1]")
}

/// Result of the threshold sweep for the "generally" Wasserstein lifting.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdSweep<S> {
    pub value: S,
    /// Threshold whose crisp transport problem realizes the value.
    pub epsilon: S,
    pub coupling: Coupling<S>,
}

/// `inf_{e >= 0} max(e, W_E(r^e)(mu, nu))`.
///
/// With `0 = v_0 < v_1 < ... < v_k` the positive entries of `r`, the map
/// `e -> W_E(r^e)` is a constant `c_i` on `(v_i, v_{i+1}]` (and 0 beyond
/// `v_k`), so the infimum over that piece is `max(v_i, c_i)`.
pub fn generally_wasserstein<S: Scalar>(r: &FuzzyRelation<S>, mu: &Distribution<S>, nu: &Distribution<S>) -> Result<ThresholdSweep<S>> {
    if mu.len() != r.source_len() || nu.len() != r.target_len() {
        return Err(Error::validation("distribution carrier does not match the relation"));
    }
    let mut breaks = vec![S::zero()];
    breaks.extend(r.positive_values());
    let mut best: Option<ThresholdSweep<S>> = None;
    for i in 0..breaks.len() {
        let lo = &breaks[i];
        if best.as_ref().is_some_and(|b| *lo >= b.value) {
            break;
        }
        let (candidate, epsilon, coupling) = match breaks.get(i + 1) {
            Some(rep) => {
                let crisp = r.crisp_threshold(rep);
                let tp = solve_transport(crisp.relation().matrix(), mu.masses(), nu.masses())?;
                let coupling = Coupling::new(tp.plan, mu.clone(), nu.clone())?;
                (max_of(lo.clone(), tp.cost), rep.clone(), coupling)
            }
            None => (lo.clone(), lo.clone(), Coupling::independent(mu.clone(), nu.clone())),
        };
        if best.as_ref().is_none_or(|b| candidate < b.value) {
            best = Some(ThresholdSweep { value: candidate, epsilon, coupling });
        }
    }
    Ok(best.expect("at least one threshold piece"))
}

/// Least `v` such that `{ (a,b) | r(a,b) <= v }` covers both sets.
fn set_wasserstein<S: Scalar>(r: &FuzzyRelation<S>, a: &PointSet, b: &PointSet) -> (S, Vec<(usize, usize)>) {
    let candidates = crate::spaces::distinct_sorted(a.iter().flat_map(|&x| b.iter().map(move |&y| r.get(x, y).clone())));
    for v in candidates {
        let pairs: Vec<(usize, usize)> = a
            .iter()
            .flat_map(|&x| b.iter().map(move |&y| (x, y)))
            .filter(|&(x, y)| r.get(x, y) <= &v)
            .collect();
        let left = a.iter().all(|&x| pairs.iter().any(|p| p.0 == x));
        let right = b.iter().all(|&y| pairs.iter().any(|p| p.1 == y));
        if left && right {
            return (v, pairs);
        }
    }
    unreachable!("the full product always covers both sets")
}

/// Brute-force lower bound on the Kantorovich lifting: enumerates price
/// functions with values in `{0, delta, ..., 1}`.
///
/// On a pseudometric every nonexpansive grid function is tried. On a fuzzy
/// relation `f` is enumerated and `g` is taken as the largest grid function
/// with `g(y) <= f(x) + r(x,y)`, which is optimal for monotone modalities.
pub fn kantorovich_grid_oracle<S: Scalar>(
    m: &Modality,
    ground: Ground<'_, S>,
    s: Argument<'_, S>,
    t: Argument<'_, S>,
    delta: &Rational,
    limit: u128,
) -> Result<LiftedValue<S>> {
    let steps = (Rational::one() / delta).to_integer();
    let steps_u = steps.to_u64().filter(|&k| k > 0 && k.is_power_of_two() && Rational::from_integer(steps.clone()) * delta == Rational::one());
    let Some(steps) = steps_u else {
        return Err(Error::validation("grid step must be 1/2^k"));
    };
    let (nx, ny) = ground.sizes();
    let size = (steps as u128 + 1).checked_pow(nx as u32).unwrap_or(u128::MAX);
    if size > limit {
        return Err(Error::Guard { what: format!("grid oracle over {nx} points at step 1/{steps}"), size, limit });
    }
    let grid = |k: u64| S::from_ratio(k as i64, steps as i64);
    let mut best: Option<(S, Witness<S>)> = None;
    let mut assignment = vec![0u64; nx];

    // iterative odometer with pruning on the symmetric constraint
    fn rec<S: Scalar>(
        i: usize,
        assignment: &mut Vec<u64>,
        steps: u64,
        ok: &dyn Fn(&[u64], usize) -> bool,
        visit: &mut dyn FnMut(&[u64]) -> Result<()>,
    ) -> Result<()> {
        if i == assignment.len() {
            return visit(assignment);
        }
        for k in 0..=steps {
            assignment[i] = k;
            if ok(assignment, i) {
                rec::<S>(i + 1, assignment, steps, ok, visit)?;
            }
        }
        Ok(())
    }

    match ground {
        Ground::Metric(d) => {
            let ok = |a: &[u64], i: usize| {
                (0..i).all(|j| {
                    let diff = S::from_ratio((a[i] as i64 - a[j] as i64).abs(), steps as i64);
                    diff.approx_le(d.d(i, j))
                })
            };
            let mut visit = |a: &[u64]| -> Result<()> {
                let f = FuzzyPredicate::new(a.iter().map(|&k| grid(k)).collect())?;
                let v = abs_gap(m, &f, s, t)?;
                if best.as_ref().is_none_or(|(b, _)| v > *b) {
                    best = Some((v, Witness::Predicate(f)));
                }
                Ok(())
            };
            rec::<S>(0, &mut assignment, steps, &ok, &mut visit)?;
        }
        Ground::Relation(r) => {
            let ok = |_: &[u64], _: usize| true;
            let mut visit = |a: &[u64]| -> Result<()> {
                let f = FuzzyPredicate::new(a.iter().map(|&k| grid(k)).collect())?;
                let g: Vec<S> = (0..ny)
                    .map(|y| {
                        let cap = (0..nx)
                            .map(|x| f.at(x).clone() + r.get(x, y).clone())
                            .reduce(crate::scalar::min_of)
                            .unwrap();
                        let cap = crate::scalar::min_of(cap, S::one());
                        // largest grid value <= cap
                        let k = (cap * S::from_ratio(steps as i64, 1) + S::tolerance()).floor();
                        k / S::from_ratio(steps as i64, 1)
                    })
                    .collect();
                let pair = NonexpansivePair { f, g: FuzzyPredicate::new(g)? };
                let v = pair_gap(m, &pair, s, t)?;
                if best.as_ref().is_none_or(|(b, _)| v > *b) {
                    best = Some((v, Witness::Pair(pair)));
                }
                Ok(())
            };
            rec::<S>(0, &mut assignment, steps, &ok, &mut visit)?;
        }
    }
    let (value, witness) = best.expect("the zero function is always on the grid");
    Ok(LiftedValue { witnessed: Some(value.clone()), value, exactness: Exactness::LowerBound, witness, upper: None })
}

/// Re-evaluates a lifted value's witness independently of how it was found.
pub fn verify_witness<S: Scalar>(
    m: &Modality,
    ground: Ground<'_, S>,
    s: Argument<'_, S>,
    t: Argument<'_, S>,
    lifted: &LiftedValue<S>,
) -> Result<S> {
    let r = ground.relation();
    let slack: S = m.slack();
    let value = match &lifted.witness {
        Witness::None => return Err(Error::validation("no witness attached")),
        Witness::Coupling(c) => {
            let (mu, nu) = dists(s, t, r.source_len(), r.target_len())?;
            Coupling::new(c.joint().to_vec(), mu.clone(), nu.clone())?;
            let pred = match m {
                Modality::PMoment { p, digits } => product_predicate(&r.powered(p, *digits)),
                _ => product_predicate(&r),
            };
            let flat = c.flatten();
            match m {
                Modality::Expectation => crate::distributions::expectation(&flat, &pred)?,
                Modality::Generally => generally(&pred, &flat)?,
                Modality::PMoment { p, digits } => {
                    crate::distributions::expectation(&flat, &pred)?.pow_rational(&(Rational::one() / p), *digits)
                }
                _ => return Err(Error::kind("coupling witness for a non-distribution modality")),
            }
        }
        Witness::SetCoupling(pairs) => {
            let (a, b) = point_sets(s, t, r.source_len(), r.target_len())?;
            let covers = a.iter().all(|&x| pairs.iter().any(|p| p.0 == x)) && b.iter().all(|&y| pairs.iter().any(|p| p.1 == y));
            if !covers || pairs.iter().any(|&(x, y)| !a.contains(&x) || !b.contains(&y)) {
                return Err(Error::Internal("set coupling does not cover both sets".into()));
            }
            pairs.iter().map(|&(x, y)| r.get(x, y).clone()).reduce(max_of).unwrap()
        }
        Witness::Predicate(f) => {
            let Ground::Metric(d) = ground else {
                return Err(Error::kind("single price functions certify symmetric liftings"));
            };
            let nonexp = (0..d.len()).all(|x| (0..d.len()).all(|y| (f.at(x).clone() - f.at(y).clone()).approx_le(d.d(x, y))));
            if !nonexp {
                return Err(Error::Internal("price function is not nonexpansive".into()));
            }
            abs_gap(m, f, s, t)?
        }
        Witness::Pair(pair) => {
            if !pair.is_nonexpansive(&r) {
                return Err(Error::Internal("price pair is not nonexpansive".into()));
            }
            pair_gap(m, pair, s, t)?
        }
        Witness::Convex(hk) => {
            let d = metric_only(ground, "convex witness")?;
            let (a, b) = convex_sets(s, t)?;
            crate::convex_powerset::verify_hk(d, a, b, hk)?
        }
    };
    if let Some(w) = &lifted.witnessed {
        if !(value.clone() - w.clone()).abs().approx_le(&slack) {
            return Err(Error::Internal(format!("witness re-evaluates to {value}, recorded {w}")));
        }
    }
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::FuzzyRelation;
    use num_traits::Signed;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    fn two_point() -> (PseudometricSpace<Rational>, Distribution<Rational>, Distribution<Rational>) {
        (
            PseudometricSpace::discrete(2),
            Distribution::new(vec![q(2, 3), q(1, 3)]).unwrap(),
            Distribution::new(vec![q(1, 3), q(2, 3)]).unwrap(),
        )
    }

    fn line() -> PseudometricSpace<Rational> {
        PseudometricSpace::new(
            vec!["a".into(), "b".into(), "c".into()],
            vec![vec![q(0, 1), q(1, 4), q(3, 4)], vec![q(1, 4), q(0, 1), q(1, 2)], vec![q(3, 4), q(1, 2), q(0, 1)]],
        )
        .unwrap()
    }

    #[test]
    fn generally_two_point() {
        let (d, mu, nu) = two_point();
        let (s, t) = (Argument::Dist(&mu), Argument::Dist(&nu));
        let w = wasserstein(&Modality::Generally, Ground::Metric(&d), s, t).unwrap();
        let k = kantorovich(&Modality::Generally, &d, s, t).unwrap();
        assert_eq!((w.value.clone(), k.value.clone()), (q(1, 3), q(1, 3)));
        assert_eq!(verify_witness(&Modality::Generally, Ground::Metric(&d), s, t, &w).unwrap(), q(1, 3));
        let witnessed = verify_witness(&Modality::Generally, Ground::Metric(&d), s, t, &k).unwrap();
        assert!(witnessed <= q(1, 3) && witnessed >= q(1, 3) - q(1, 256));
    }

    #[test]
    fn p_moment_two_point() {
        let (d, mu, nu) = two_point();
        let m = Modality::p_moment(q(2, 1)).unwrap();
        let w = wasserstein(&m, Ground::Metric(&d), Argument::Dist(&mu), Argument::Dist(&nu)).unwrap();
        assert!((Scalar::to_f64(&w.value) - 1.0 / 3f64.sqrt()).abs() < 1e-12);
        assert_eq!(w.exactness, Exactness::Approximate { digits: crate::modalities::DEFAULT_DIGITS });
        let k = kantorovich(&m, &d, Argument::Dist(&mu), Argument::Dist(&nu)).unwrap();
        assert_eq!(k.exactness, Exactness::LowerBound);
        assert!(k.value <= q(1, 3) && k.upper.unwrap() <= q(1, 3));
        assert!(w.value - k.value >= q(57, 100) - q(1, 3) - q(1, 16));
    }

    #[test]
    fn dirac_measures() {
        let d = line();
        let (x, y) = (Distribution::dirac(3, 0), Distribution::dirac(3, 2));
        let k = kantorovich(&Modality::Expectation, &d, Argument::Dist(&x), Argument::Dist(&y)).unwrap();
        assert_eq!(k.value, q(3, 4));
        let Witness::Predicate(f) = &k.witness else { panic!("expected a price function") };
        assert_eq!((f.at(2).clone() - f.at(0).clone()).abs(), q(3, 4));
        for m in [Modality::Expectation, Modality::Generally] {
            let w = wasserstein(&m, Ground::Metric(&d), Argument::Dist(&x), Argument::Dist(&y)).unwrap();
            assert_eq!(w.value, q(3, 4));
        }
    }

    #[test]
    fn sup_singletons_and_hausdorff() {
        let d = line();
        let (a, b): (PointSet, PointSet) = ([0].into(), [1].into());
        let w = wasserstein(&Modality::Sup, Ground::Metric(&d), Argument::Points(&a), Argument::Points(&b)).unwrap();
        assert_eq!(w.value, q(1, 4));
        let (a, b): (PointSet, PointSet) = ([0].into(), [1, 2].into());
        let k = kantorovich(&Modality::Sup, &d, Argument::Points(&a), Argument::Points(&b)).unwrap();
        assert_eq!(k.value, q(3, 4));
        assert_eq!(verify_witness(&Modality::Sup, Ground::Metric(&d), Argument::Points(&a), Argument::Points(&b), &k).unwrap(), q(3, 4));
    }

    #[test]
    fn reflexive() {
        let d = line();
        let mu = Distribution::new(vec![q(1, 2), q(1, 4), q(1, 4)]).unwrap();
        for m in [Modality::Expectation, Modality::Generally] {
            assert_eq!(kantorovich(&m, &d, Argument::Dist(&mu), Argument::Dist(&mu)).unwrap().value, q(0, 1));
            let g = kantorovich_grid_oracle(&m, Ground::Metric(&d), Argument::Dist(&mu), Argument::Dist(&mu), &q(1, 8), 1 << 20).unwrap();
            assert_eq!(g.value, q(0, 1));
        }
        let r = d.as_relation();
        let kr = kantorovich_relational(&Modality::Expectation, &r, Argument::Dist(&mu), Argument::Dist(&mu)).unwrap();
        assert_eq!(kr.value, q(0, 1));
    }

    #[test]
    fn constant_relations() {
        let mu = Distribution::new(vec![q(1, 3), q(2, 3)]).unwrap();
        let nu = Distribution::dirac(3, 1);
        let (s, t) = (Argument::Dist(&mu), Argument::Dist(&nu));
        let ones = FuzzyRelation::constant(2, 3, q(1, 1));
        assert_eq!(kantorovich_relational(&Modality::Expectation, &ones, s, t).unwrap().value, q(1, 1));
        let zeros = FuzzyRelation::constant(2, 3, q(0, 1));
        assert_eq!(kantorovich_relational(&Modality::Expectation, &zeros, s, t).unwrap().value, q(0, 1));
        assert_eq!(kantorovich_relational(&Modality::Generally, &zeros, s, t).unwrap().value, q(0, 1));
    }

    #[test]
    fn inf_and_kind_mismatch() {
        let d = line();
        let mu = Distribution::dirac(3, 0);
        let a: PointSet = [0].into();
        assert!(matches!(
            wasserstein(&Modality::Inf, Ground::Metric(&d), Argument::Points(&a), Argument::Points(&a)),
            Err(Error::KindMismatch(_))
        ));
        assert!(matches!(
            kantorovich(&Modality::Expectation, &d, Argument::Dist(&mu), Argument::Points(&a)),
            Err(Error::KindMismatch(_))
        ));
    }

    #[test]
    fn grid_oracle_guards() {
        let d = PseudometricSpace::<Rational>::discrete(7);
        let mu = Distribution::uniform(7);
        let res = kantorovich_grid_oracle(&Modality::Expectation, Ground::Metric(&d), Argument::Dist(&mu), Argument::Dist(&mu), &q(1, 16), 24_137_569);
        assert!(matches!(res, Err(Error::Guard { .. })));
        let res = kantorovich_grid_oracle(&Modality::Expectation, Ground::Metric(&d), Argument::Dist(&mu), Argument::Dist(&mu), &q(1, 3), 1 << 20);
        assert!(matches!(res, Err(Error::Validation(_))));
    }
}
