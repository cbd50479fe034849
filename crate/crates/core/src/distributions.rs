//! Finitely supported probability distributions, couplings and fuzzy
//! predicates on finite carriers.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::spaces::PointSet;

/// Dense probability vector over a carrier, indexed like the carrier's points.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution<S> {
    mass: Vec<S>,
}

impl<S: Scalar> Distribution<S> {
    pub fn new(mass: Vec<S>) -> Result<Self> {
        if mass.is_empty() {
            return Err(Error::validation("distribution over an empty carrier"));
        }
        if mass.iter().any(|m| m.is_neg()) {
            return Err(Error::validation("negative probability mass"));
        }
        let total = mass.iter().fold(S::zero(), |a, m| a + m.clone());
        if !total.approx_eq(&S::one()) {
            return Err(Error::validation(format!("masses sum to {total}, expected 1")));
        }
        Ok(Distribution { mass })
    }

    pub fn dirac(len: usize, at: usize) -> Self {
        let mut mass = vec![S::zero(); len];
        mass[at] = S::one();
        Distribution { mass }
    }

    pub fn uniform(len: usize) -> Self {
        Distribution { mass: vec![S::from_ratio(1, len as i64); len] }
    }

    pub fn len(&self) -> usize {
        self.mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mass.is_empty()
    }

    pub fn masses(&self) -> &[S] {
        &self.mass
    }

    pub fn mass(&self, x: usize) -> &S {
        &self.mass[x]
    }

    pub fn measure(&self, set: &PointSet) -> S {
        set.iter().fold(S::zero(), |a, &x| a + self.mass[x].clone())
    }

    /// Measure of `{ x | keep(x) }`.
    pub fn measure_where(&self, keep: impl Fn(usize) -> bool) -> S {
        (0..self.len())
            .filter(|&x| keep(x))
            .fold(S::zero(), |a, x| a + self.mass[x].clone())
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.len()).filter(|&x| self.mass[x].is_pos()).collect()
    }

    fn same_carrier(&self, len: usize) -> Result<()> {
        if self.len() != len {
            return Err(Error::validation(format!(
                "carrier mismatch: {} points vs {len}",
                self.len()
            )));
        }
        Ok(())
    }
}

/// Function `X -> [0,1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FuzzyPredicate<S> {
    values: Vec<S>,
}

impl<S: Scalar> FuzzyPredicate<S> {
    pub fn new(values: Vec<S>) -> Result<Self> {
        if values.iter().any(|v| v.is_neg() || !v.approx_le(&S::one())) {
            return Err(Error::validation("predicate values must lie in [0,1]"));
        }
        Ok(FuzzyPredicate { values })
    }

    pub fn constant(len: usize, c: S) -> Self {
        FuzzyPredicate { values: vec![c; len] }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    pub fn at(&self, x: usize) -> &S {
        &self.values[x]
    }

    /// `1 - f`.
    pub fn complement(&self) -> Self {
        FuzzyPredicate { values: self.values.iter().map(|v| S::one() - v.clone()).collect() }
    }

    /// Pointwise truncated sum.
    pub fn oplus(&self, other: &Self) -> Self {
        FuzzyPredicate {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| crate::scalar::oplus(a, b))
                .collect(),
        }
    }

    pub fn le(&self, other: &Self) -> bool {
        self.values.iter().zip(&other.values).all(|(a, b)| a <= b)
    }

    /// `f . h` for a point map `h: Y -> X` given as indices.
    pub fn compose(&self, h: &[usize]) -> Self {
        FuzzyPredicate { values: h.iter().map(|&x| self.values[x].clone()).collect() }
    }
}

/// `E_mu[f] = sum_x mu(x) f(x)`.
pub fn expectation<S: Scalar>(mu: &Distribution<S>, f: &FuzzyPredicate<S>) -> Result<S> {
    mu.same_carrier(f.len())?;
    Ok(crate::lp::dot(mu.masses(), f.values()))
}

/// Pointwise convex combination `sum_i w_i * dist_i`.
pub fn convex_combine<S: Scalar>(weights: &[S], dists: &[Distribution<S>]) -> Result<Distribution<S>> {
    if weights.len() != dists.len() || dists.is_empty() {
        return Err(Error::validation("need one weight per distribution"));
    }
    if weights.iter().any(|w| w.is_neg()) {
        return Err(Error::validation("negative convex weight"));
    }
    let total = weights.iter().fold(S::zero(), |a, w| a + w.clone());
    if !total.approx_eq(&S::one()) {
        return Err(Error::validation(format!("weights sum to {total}, expected 1")));
    }
    let n = dists[0].len();
    let mut mass = vec![S::zero(); n];
    for (w, d) in weights.iter().zip(dists) {
        d.same_carrier(n)?;
        if w.is_zero() {
            continue;
        }
        for (m, v) in mass.iter_mut().zip(d.masses()) {
            *m = m.clone() + w.clone() * v.clone();
        }
    }
    Ok(Distribution { mass })
}

/// Image measure under `map: X -> Y` (indices into a carrier of size `target_len`).
pub fn pushforward<S: Scalar>(map: &[usize], target_len: usize, mu: &Distribution<S>) -> Result<Distribution<S>> {
    mu.same_carrier(map.len())?;
    if map.iter().any(|&y| y >= target_len) {
        return Err(Error::validation("point map leaves the target carrier"));
    }
    let mut mass = vec![S::zero(); target_len];
    for (x, &y) in map.iter().enumerate() {
        mass[y] = mass[y].clone() + mu.mass[x].clone();
    }
    Ok(Distribution { mass })
}

/// Joint distribution on `X x Y` with prescribed marginals.
#[derive(Debug, Clone, PartialEq)]
pub struct Coupling<S> {
    joint: Vec<Vec<S>>,
    left: Distribution<S>,
    right: Distribution<S>,
}

impl<S: Scalar> Coupling<S> {
    /// Checks non-negativity and both marginal laws.
    pub fn new(joint: Vec<Vec<S>>, left: Distribution<S>, right: Distribution<S>) -> Result<Self> {
        let (nx, ny) = (left.len(), right.len());
        if joint.len() != nx || joint.iter().any(|r| r.len() != ny) {
            return Err(Error::validation("coupling shape does not match marginals"));
        }
        if joint.iter().flatten().any(|v| v.is_neg()) {
            return Err(Error::validation("negative coupling entry"));
        }
        for (x, row) in joint.iter().enumerate() {
            let s = row.iter().fold(S::zero(), |a, v| a + v.clone());
            if !s.approx_eq(left.mass(x)) {
                return Err(Error::validation(format!("left marginal fails at {x}")));
            }
        }
        for y in 0..ny {
            let s = joint.iter().fold(S::zero(), |a, row| a + row[y].clone());
            if !s.approx_eq(right.mass(y)) {
                return Err(Error::validation(format!("right marginal fails at {y}")));
            }
        }
        Ok(Coupling { joint, left, right })
    }

    /// Product coupling `mu x nu`.
    pub fn independent(left: Distribution<S>, right: Distribution<S>) -> Self {
        let joint = left
            .masses()
            .iter()
            .map(|a| right.masses().iter().map(|b| a.clone() * b.clone()).collect())
            .collect();
        Coupling { joint, left, right }
    }

    pub fn joint(&self) -> &[Vec<S>] {
        &self.joint
    }

    pub fn left(&self) -> &Distribution<S> {
        &self.left
    }

    pub fn right(&self) -> &Distribution<S> {
        &self.right
    }

    /// The joint as a distribution on the product carrier, row-major.
    pub fn flatten(&self) -> Distribution<S> {
        Distribution { mass: self.joint.iter().flatten().cloned().collect() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rational;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from_ratio(n, d)
    }

    fn dist(v: &[(i64, i64)]) -> Distribution<Rational> {
        Distribution::new(v.iter().map(|&(n, d)| q(n, d)).collect()).unwrap()
    }

    fn pred(v: &[(i64, i64)]) -> FuzzyPredicate<Rational> {
        FuzzyPredicate::new(v.iter().map(|&(n, d)| q(n, d)).collect()).unwrap()
    }

    #[test]
    fn expectation_examples() {
        let f = pred(&[(1, 5), (3, 4), (1, 2)]);
        assert_eq!(expectation(&Distribution::dirac(3, 1), &f).unwrap(), q(3, 4));
        let mu = dist(&[(1, 6), (1, 3), (1, 2)]);
        assert_eq!(expectation(&mu, &FuzzyPredicate::constant(3, q(2, 7))).unwrap(), q(2, 7));
        let mu = dist(&[(2, 3), (1, 3)]);
        assert_eq!(expectation(&mu, &pred(&[(0, 1), (1, 1)])).unwrap(), q(1, 3));
        assert!(expectation(&mu, &f).is_err());
    }

    #[test]
    fn hexagon_midpoint() {
        let mu2 = dist(&[(0, 1), (2, 3), (1, 3)]);
        let mu3 = dist(&[(1, 3), (0, 1), (2, 3)]);
        let mid = convex_combine(&[q(1, 2), q(1, 2)], &[mu2.clone(), mu3.clone()]).unwrap();
        assert_eq!(mid, dist(&[(1, 6), (1, 3), (1, 2)]));
        assert_eq!(convex_combine(&[q(1, 1), q(0, 1)], &[mu2.clone(), mu3]).unwrap(), mu2);
        let same = convex_combine(&[q(1, 3), q(2, 3)], &[mu2.clone(), mu2.clone()]).unwrap();
        assert_eq!(same, mu2);
        assert!(convex_combine(&[q(1, 2), q(1, 3)], &[mu2.clone(), mu2]).is_err());
    }

    #[test]
    fn pushforward_examples() {
        let mu = dist(&[(1, 2), (1, 4), (1, 4)]);
        assert_eq!(pushforward(&[0, 1, 2], 3, &mu).unwrap(), mu);
        assert_eq!(pushforward(&[1, 1, 1], 2, &mu).unwrap(), Distribution::dirac(2, 1));
        assert_eq!(pushforward(&[0, 0, 1], 2, &mu).unwrap(), dist(&[(3, 4), (1, 4)]));
    }

    #[test]
    fn coupling_marginals_are_checked() {
        let mu = dist(&[(1, 2), (1, 2)]);
        let nu = dist(&[(1, 4), (3, 4)]);
        let ok = Coupling::new(vec![vec![q(1, 4), q(1, 4)], vec![q(0, 1), q(1, 2)]], mu.clone(), nu.clone());
        assert!(ok.is_ok());
        let bad = Coupling::new(vec![vec![q(1, 2), q(0, 1)], vec![q(0, 1), q(1, 2)]], mu.clone(), nu.clone());
        assert!(bad.is_err());
        let ind = Coupling::independent(mu, nu);
        assert_eq!(ind.flatten().masses().iter().fold(q(0, 1), |a, v| a + v), q(1, 1));
    }

    #[test]
    fn invalid_distributions() {
        assert!(Distribution::new(vec![q(1, 2), q(1, 3)]).is_err());
        assert!(Distribution::new(vec![q(3, 2), q(-1, 2)]).is_err());
        assert!(FuzzyPredicate::new(vec![q(5, 4)]).is_err());
    }
}
