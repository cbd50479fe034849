//! Lévy-Prokhorov distance: the direct subset definition, its coupling
//! (Ky Fan) form, binary price pairs for crisp relations and the
//! constructive duality witness.

use crate::distributions::{expectation, Distribution, FuzzyPredicate};
use crate::error::{Error, Result};
use crate::liftings::{generally_wasserstein, wasserstein, Ground, LiftedValue, NonexpansivePair};
use crate::lp::{solve_lp, solve_transport, Bounds, LinearProgram, Relation, Sense};
use crate::modalities::{generally, Argument, Modality};
use crate::scalar::{max_of, min_of, Scalar};
use crate::spaces::{distinct_sorted, CrispRelation, FuzzyRelation, PseudometricSpace};

/// Largest support for which `lp_direct` enumerates subsets.
pub const SUBSET_GUARD: usize = 15;

/// `inf { e | for all A: mu(A) <= nu(A_e) + e }`, optionally also requiring
/// the mirrored clause with `mu` and `nu` swapped.
pub fn lp_direct<S: Scalar>(d: &PseudometricSpace<S>, mu: &Distribution<S>, nu: &Distribution<S>, symmetrized: bool) -> Result<S> {
    lp_direct_guarded(d, mu, nu, symmetrized, SUBSET_GUARD)
}

pub fn lp_direct_guarded<S: Scalar>(
    d: &PseudometricSpace<S>,
    mu: &Distribution<S>,
    nu: &Distribution<S>,
    symmetrized: bool,
    guard: usize,
) -> Result<S> {
    if let Some(v) = d.validate().violations.first() {
        return Err(Error::validation(format!("not a pseudometric: {v}")));
    }
    if mu.len() != d.len() || nu.len() != d.len() {
        return Err(Error::validation("distribution carrier does not match the space"));
    }
    let breaks = d.distance_values();
    // h is constant on [v_i, v_{i+1}) because expansions only change at
    // distance values
    let mut best: Option<S> = None;
    for (i, v) in breaks.iter().enumerate() {
        let mut h = subset_excess(d, mu, nu, v, guard)?;
        if symmetrized {
            h = max_of(h, subset_excess(d, nu, mu, v, guard)?);
        }
        let candidate = max_of(v.clone(), h);
        let inside = breaks.get(i + 1).is_none_or(|next| candidate < *next);
        if inside && best.as_ref().is_none_or(|b| candidate < *b) {
            best = Some(candidate);
        }
    }
    // the last segment is unbounded, so a candidate always exists
    Ok(best.expect("final segment always admits a candidate"))
}

/// `max_{A ⊆ supp(mu)} mu(A) - nu(A_eps)` (the empty set contributes 0).
fn subset_excess<S: Scalar>(d: &PseudometricSpace<S>, mu: &Distribution<S>, nu: &Distribution<S>, eps: &S, guard: usize) -> Result<S> {
    let support = mu.support();
    if support.len() > guard {
        return Err(Error::Guard {
            what: "subset enumeration over the support".into(),
            size: support.len() as u128,
            limit: guard as u128,
        });
    }
    let n = d.len();
    // neighbourhood of each support point as a bit mask over the carrier
    let hood: Vec<u128> = support
        .iter()
        .map(|&a| (0..n).filter(|&y| d.d(a, y).approx_le(eps)).fold(0u128, |m, y| m | (1 << y)))
        .collect();
    let mut best = S::zero();
    for subset in 1u32..(1u32 << support.len()) {
        let mut mass = S::zero();
        let mut cover = 0u128;
        for (k, &a) in support.iter().enumerate() {
            if subset & (1 << k) != 0 {
                mass = mass + mu.mass(a).clone();
                cover |= hood[k];
            }
        }
        let covered = nu.measure_where(|y| cover & (1 << y) != 0);
        let excess = mass - covered;
        if excess > best {
            best = excess;
        }
    }
    Ok(best)
}

/// Coupling form of the Lévy-Prokhorov distance, with the optimal threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct KyFan<S> {
    pub lifted: LiftedValue<S>,
    /// Threshold `e*` whose crisp transport problem realizes the value.
    pub epsilon: S,
}

pub fn ky_fan<S: Scalar>(r: &FuzzyRelation<S>, mu: &Distribution<S>, nu: &Distribution<S>) -> Result<KyFan<S>> {
    let lifted = wasserstein(&Modality::Generally, Ground::Relation(r), Argument::Dist(mu), Argument::Dist(nu))?;
    let epsilon = generally_wasserstein(r, mu, nu)?.epsilon;
    Ok(KyFan { lifted, epsilon })
}

/// Binary `(p, q)` with `q(y) - p(x) <= r(x,y)` and
/// `E_nu[q] - E_mu[p] >= W_E(r)(mu, nu)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CrispPricePair {
    pub p: Vec<u8>,
    pub q: Vec<u8>,
}

impl CrispPricePair {
    pub fn to_pair<S: Scalar>(&self) -> NonexpansivePair<S> {
        let lift = |v: &[u8]| FuzzyPredicate::new(v.iter().map(|&b| S::from_ratio(b as i64, 1)).collect()).unwrap();
        NonexpansivePair { f: lift(&self.p), g: lift(&self.q) }
    }

    /// `E_nu[q] - E_mu[p]`.
    pub fn margin<S: Scalar>(&self, mu: &Distribution<S>, nu: &Distribution<S>) -> Result<S> {
        let pair = self.to_pair::<S>();
        Ok(expectation(nu, &pair.g)? - expectation(mu, &pair.f)?)
    }
}

/// Extracts a binary optimal price pair for a crisp relation.
///
/// The bounded pair LP (`p, q` in `[0,1]`) has the transport cost as its
/// value. Thresholding both functions at a common level keeps the pair
/// feasible because `r` is 0/1, and averaging over the level reproduces the
/// objective, so the best level loses nothing. Zero-mass points are then
/// normalized to `p = 1`, `q = 0`, which can only relax the constraints.
pub fn crisp_price_pair<S: Scalar>(r: &CrispRelation<S>, mu: &Distribution<S>, nu: &Distribution<S>) -> Result<CrispPricePair> {
    let rel = r.relation();
    let (nx, ny) = (rel.source_len(), rel.target_len());
    if mu.len() != nx || nu.len() != ny {
        return Err(Error::validation("distribution carrier does not match the relation"));
    }
    let cost = solve_transport(rel.matrix(), mu.masses(), nu.masses())?.cost;

    let mut lp = LinearProgram::new(Sense::Maximize);
    for x in 0..nx {
        let v = lp.add_variable(format!("p{x}"), Bounds::unit_interval());
        lp.set_objective(v, -mu.mass(x).clone());
    }
    for y in 0..ny {
        let v = lp.add_variable(format!("q{y}"), Bounds::unit_interval());
        lp.set_objective(v, nu.mass(y).clone());
    }
    for x in 0..nx {
        for y in 0..ny {
            if !r.holds(x, y) {
                lp.add_constraint(&[(nx + y, S::one()), (x, -S::one())], Relation::Le, S::zero());
            }
        }
    }
    let sol = solve_lp(&lp)?;
    let (pf, qf) = sol.assignment.split_at(nx);

    let levels = distinct_sorted(std::iter::once(S::zero()).chain(pf.iter().chain(qf).filter(|v| *v < &S::one()).cloned()));
    let mut best: Option<(S, CrispPricePair)> = None;
    for theta in levels {
        let mut pair = CrispPricePair {
            p: pf.iter().map(|v| u8::from(*v > theta)).collect(),
            q: qf.iter().map(|v| u8::from(*v > theta)).collect(),
        };
        for x in 0..nx {
            if !mu.mass(x).is_pos() {
                pair.p[x] = 1;
            }
        }
        for y in 0..ny {
            if !nu.mass(y).is_pos() {
                pair.q[y] = 0;
            }
        }
        let m = pair.margin(mu, nu)?;
        if best.as_ref().is_none_or(|(b, _)| m > *b) {
            best = Some((m, pair));
        }
    }
    let (margin, pair) = best.expect("level 0 is always tried");
    let feasible = pair.to_pair::<S>().is_nonexpansive(rel);
    if !feasible || !cost.approx_le(&margin) {
        return Err(Error::Internal(format!(
            "crisp price pair check failed: nonexpansive={feasible}, margin {margin} vs transport cost {cost}; p={:?} q={:?}",
            pair.p, pair.q
        )));
    }
    Ok(pair)
}

/// Two-valued price pair certifying `K(r)(mu, nu) >= epsilon`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualityWitness<S> {
    pub epsilon: S,
    pub crisp: CrispPricePair,
    pub pair: NonexpansivePair<S>,
    /// `generally(g, nu) - generally(f, mu)`.
    pub margin: S,
}

pub fn duality_witness<S: Scalar>(r: &FuzzyRelation<S>, mu: &Distribution<S>, nu: &Distribution<S>, epsilon: &S) -> Result<DualityWitness<S>> {
    let value = generally_wasserstein(r, mu, nu)?.value;
    if !epsilon.is_pos() || *epsilon >= value {
        return Err(Error::Precondition(format!("witness needs 0 < epsilon < {value}, got {epsilon}")));
    }
    let crisp = crisp_price_pair(&r.crisp_threshold(epsilon), mu, nu)?;
    let binary = crisp.to_pair::<S>();
    let a = expectation(mu, &binary.f)?;
    let shift = |v: &FuzzyPredicate<S>| {
        FuzzyPredicate::new(v.values().iter().map(|b| min_of(S::one(), a.clone() + epsilon.clone() * b.clone())).collect())
    };
    let pair = NonexpansivePair { f: shift(&binary.f)?, g: shift(&binary.g)? };
    if !pair.is_nonexpansive(r) {
        return Err(Error::Internal("duality witness is not r-nonexpansive".into()));
    }
    let margin = generally(&pair.g, nu)? - generally(&pair.f, mu)?;
    if margin < *epsilon {
        return Err(Error::Internal(format!("duality witness margin {margin} below epsilon {epsilon}")));
    }
    Ok(DualityWitness { epsilon: epsilon.clone(), crisp, pair, margin })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rational;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from_ratio(n, d)
    }

    fn two_point() -> (PseudometricSpace<Rational>, Distribution<Rational>, Distribution<Rational>) {
        (
            PseudometricSpace::discrete(2),
            Distribution::new(vec![q(2, 3), q(1, 3)]).unwrap(),
            Distribution::new(vec![q(1, 3), q(2, 3)]).unwrap(),
        )
    }

    #[test]
    fn direct_examples() {
        let (d, mu, nu) = two_point();
        assert_eq!(lp_direct(&d, &mu, &nu, false).unwrap(), q(1, 3));
        assert_eq!(lp_direct(&d, &mu, &nu, true).unwrap(), q(1, 3));
        assert_eq!(lp_direct(&d, &mu, &mu, false).unwrap(), q(0, 1));
        let line = PseudometricSpace::new(
            vec!["a".into(), "b".into(), "c".into()],
            vec![vec![q(0, 1), q(1, 4), q(1, 2)], vec![q(1, 4), q(0, 1), q(1, 4)], vec![q(1, 2), q(1, 4), q(0, 1)]],
        )
        .unwrap();
        let da = Distribution::dirac(3, 0);
        let dc = Distribution::dirac(3, 2);
        assert_eq!(lp_direct(&line, &da, &dc, false).unwrap(), q(1, 2));
    }

    #[test]
    fn ky_fan_examples() {
        let (d, mu, nu) = two_point();
        let kf = ky_fan(&d.as_relation(), &mu, &nu).unwrap();
        assert_eq!(kf.lifted.value, q(1, 3));
        let zero = FuzzyRelation::constant(2, 2, q(0, 1));
        assert_eq!(ky_fan(&zero, &mu, &nu).unwrap().lifted.value, q(0, 1));
        let ones = FuzzyRelation::constant(1, 1, q(1, 1));
        let dirac = Distribution::dirac(1, 0);
        assert_eq!(ky_fan(&ones, &dirac, &dirac).unwrap().lifted.value, q(1, 1));
    }

    #[test]
    fn crisp_pairs() {
        let (d, mu, nu) = two_point();
        let r = d.as_relation().crisp_threshold(&q(1, 2));
        let pair = crisp_price_pair(&r, &mu, &nu).unwrap();
        assert!(pair.margin(&mu, &nu).unwrap() >= q(1, 3));

        let zero = FuzzyRelation::constant(2, 2, q(0, 1)).crisp_threshold(&q(1, 2));
        let pair = crisp_price_pair(&zero, &mu, &nu).unwrap();
        assert!(pair.margin(&mu, &nu).unwrap() >= q(0, 1));

        let one = FuzzyRelation::constant(1, 1, q(1, 1)).crisp_threshold(&q(1, 1));
        let dirac = Distribution::dirac(1, 0);
        let pair = crisp_price_pair(&one, &dirac, &dirac).unwrap();
        assert_eq!(pair, CrispPricePair { p: vec![0], q: vec![1] });
    }

    #[test]
    fn witness_examples() {
        let (d, mu, nu) = two_point();
        let r = d.as_relation();
        let w = duality_witness(&r, &mu, &nu, &q(1, 4)).unwrap();
        assert!(w.margin >= q(1, 4));
        assert!(matches!(duality_witness(&r, &mu, &nu, &q(1, 3)), Err(Error::Precondition(_))));
        assert!(matches!(duality_witness(&r, &mu, &mu, &q(1, 10)), Err(Error::Precondition(_))));
    }
}
