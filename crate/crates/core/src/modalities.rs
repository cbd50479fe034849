//! Evaluation functions of the supported predicate liftings and the
//! well-behavedness checks.
//!
//! The "generally" modality, `inf { e >= 0 | mu(f > e) <= e }`, is evaluated
//! exactly: `e -> mu(f > e)` is a step function whose breakpoints are the
//! values of `f`, so the crossing with the diagonal is found by scanning its
//! constant pieces.

use std::fmt;

use num_traits::One;

use crate::convex_powerset::ConvexSet;
use crate::distributions::{expectation, Distribution, FuzzyPredicate};
use crate::error::{Error, Result};
use crate::scalar::{max_of, min_of, oplus, Scalar};
use crate::spaces::{distinct_sorted, PointSet};
use crate::Rational;

pub const DEFAULT_DIGITS: u32 = 30;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Modality {
    Expectation,
    Sup,
    Inf,
    Generally,
    /// `(E_mu[f^p])^(1/p)`; roots are truncated after `digits` decimals.
    PMoment { p: Rational, digits: u32 },
    ConvexSupExpectation,
}

impl Modality {
    pub fn p_moment(p: Rational) -> Result<Self> {
        if p < Rational::one() {
            return Err(Error::validation("p-moment needs p >= 1"));
        }
        Ok(Modality::PMoment { p, digits: DEFAULT_DIGITS })
    }

    pub fn with_digits(self, digits: u32) -> Result<Self> {
        match self {
            Modality::PMoment { p, .. } if digits >= 12 => Ok(Modality::PMoment { p, digits }),
            Modality::PMoment { .. } => Err(Error::validation("root precision must be at least 12 digits")),
            other => Ok(other),
        }
    }

    /// Whether values are truncated approximations rather than exact.
    pub fn is_approximate(&self) -> bool {
        matches!(self, Modality::PMoment { .. })
    }

    /// Comparison slack for this modality's values.
    pub fn slack<S: Scalar>(&self) -> S {
        if self.is_approximate() {
            S::from_ratio(1, 1_000_000_000_000)
        } else {
            S::tolerance()
        }
    }
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Modality::Expectation => write!(f, "expectation"),
            Modality::Sup => write!(f, "sup"),
            Modality::Inf => write!(f, "inf"),
            Modality::Generally => write!(f, "generally"),
            Modality::PMoment { p, .. } => write!(f, "p_moment({})", crate::scalar::format_rational(p)),
            Modality::ConvexSupExpectation => write!(f, "convex_sup_expectation"),
        }
    }
}

/// What a modality is applied to.
#[derive(Debug)]
pub enum Argument<'a, S> {
    Dist(&'a Distribution<S>),
    Points(&'a PointSet),
    Convex(&'a ConvexSet<S>),
}

impl<S> Clone for Argument<'_, S> {
    fn clone(&self) -> Self {
        *self
    }
}

impl<S> Copy for Argument<'_, S> {}

pub fn eval<S: Scalar>(m: &Modality, f: &FuzzyPredicate<S>, arg: Argument<'_, S>) -> Result<S> {
    let mismatch = || Error::kind(format!("modality {m} cannot be applied to {}", arg_name(&arg)));
    match (m, arg) {
        (Modality::Expectation, Argument::Dist(mu)) => expectation(mu, f),
        (Modality::Generally, Argument::Dist(mu)) => generally(f, mu),
        (Modality::PMoment { p, digits }, Argument::Dist(mu)) => p_moment(f, mu, p, *digits),
        (Modality::Sup | Modality::Inf, Argument::Points(a)) => {
            if a.is_empty() {
                return Err(Error::validation("sup/inf over an empty point set"));
            }
            if a.iter().any(|&x| x >= f.len()) {
                return Err(Error::validation("point set leaves the carrier"));
            }
            let vals = a.iter().map(|&x| f.at(x).clone());
            Ok(if *m == Modality::Sup {
                vals.reduce(max_of).unwrap()
            } else {
                vals.reduce(min_of).unwrap()
            })
        }
        (Modality::ConvexSupExpectation, Argument::Convex(set)) => set
            .generators()
            .iter()
            .map(|mu| expectation(mu, f))
            .try_fold(None, |best: Option<S>, v| {
                let v = v?;
                Ok(Some(match best {
                    Some(b) => max_of(b, v),
                    None => v,
                }))
            })
            .map(|v| v.expect("convex sets are non-empty")),
        _ => Err(mismatch()),
    }
}

fn arg_name<S>(arg: &Argument<'_, S>) -> &'static str {
    match arg {
        Argument::Dist(_) => "a distribution",
        Argument::Points(_) => "a point set",
        Argument::Convex(_) => "a convex set",
    }
}

/// `1 - eval(m, 1 - f, arg)`.
pub fn dual_eval<S: Scalar>(m: &Modality, f: &FuzzyPredicate<S>, arg: Argument<'_, S>) -> Result<S> {
    Ok(S::one() - eval(m, &f.complement(), arg)?)
}

fn p_moment<S: Scalar>(f: &FuzzyPredicate<S>, mu: &Distribution<S>, p: &Rational, digits: u32) -> Result<S> {
    let powered = FuzzyPredicate::new(f.values().iter().map(|v| v.pow_rational(p, digits)).collect())?;
    let moment = expectation(mu, &powered)?;
    Ok(moment.pow_rational(&(Rational::one() / p), digits))
}

/// A constant piece of a step function of `e >= 0`.
#[derive(Debug, Clone)]
struct Piece<S> {
    lo: S,
    lo_closed: bool,
    /// `None` for the unbounded last piece.
    hi: Option<S>,
    hi_closed: bool,
    value: S,
}

/// Pieces of `e -> mu({f > e})`: `[b_i, b_{i+1})`.
fn strict_pieces<S: Scalar>(f: &FuzzyPredicate<S>, mu: &Distribution<S>) -> Vec<Piece<S>> {
    let mut breaks = vec![S::zero()];
    breaks.extend(distinct_sorted(f.values().iter().filter(|v| v.is_pos()).cloned()));
    (0..breaks.len())
        .map(|i| {
            let lo = breaks[i].clone();
            Piece {
                value: mu.measure_where(|x| *f.at(x) > lo),
                hi: breaks.get(i + 1).cloned(),
                lo,
                lo_closed: true,
                hi_closed: false,
            }
        })
        .collect()
}

/// Pieces of `e -> mu({f >= e})`: `[0,0]`, then `(b_i, b_{i+1}]`.
fn non_strict_pieces<S: Scalar>(f: &FuzzyPredicate<S>, mu: &Distribution<S>) -> Vec<Piece<S>> {
    let mut breaks = vec![S::zero()];
    breaks.extend(distinct_sorted(f.values().iter().filter(|v| v.is_pos()).cloned()));
    let mut pieces = vec![Piece {
        lo: S::zero(),
        lo_closed: true,
        hi: Some(S::zero()),
        hi_closed: true,
        value: S::one(),
    }];
    for i in 0..breaks.len() {
        let hi = breaks.get(i + 1).cloned();
        let value = match &hi {
            Some(h) => mu.measure_where(|x| f.at(x) >= h),
            None => S::zero(),
        };
        pieces.push(Piece { lo: breaks[i].clone(), lo_closed: false, hi, hi_closed: true, value });
    }
    pieces
}

/// `inf { e | step(e) <= e }`.
fn crossing_inf<S: Scalar>(pieces: &[Piece<S>]) -> S {
    pieces
        .iter()
        .filter(|p| match &p.hi {
            None => true,
            Some(h) if p.hi_closed => p.value <= *h,
            Some(h) => p.value < *h,
        })
        .map(|p| max_of(p.lo.clone(), p.value.clone()))
        .reduce(min_of)
        .expect("the last piece is always feasible")
}

/// `inf_e max(step(e), e)`.
fn inf_max<S: Scalar>(pieces: &[Piece<S>]) -> S {
    pieces
        .iter()
        .map(|p| max_of(p.value.clone(), p.lo.clone()))
        .reduce(min_of)
        .unwrap()
}

/// `sup_e min(step(e), e)`.
fn sup_min<S: Scalar>(pieces: &[Piece<S>]) -> S {
    pieces
        .iter()
        .map(|p| match &p.hi {
            Some(h) => min_of(p.value.clone(), h.clone()),
            None => p.value.clone(),
        })
        .reduce(max_of)
        .unwrap()
}

/// `sup { e | step(e) >= e }`.
fn crossing_sup<S: Scalar>(pieces: &[Piece<S>]) -> S {
    pieces
        .iter()
        .filter(|p| if p.lo_closed { p.lo <= p.value } else { p.lo < p.value })
        .map(|p| match &p.hi {
            Some(h) => min_of(p.value.clone(), h.clone()),
            None => p.value.clone(),
        })
        .fold(S::zero(), max_of)
}

/// Exact value of the "generally" modality.
pub fn generally<S: Scalar>(f: &FuzzyPredicate<S>, mu: &Distribution<S>) -> Result<S> {
    if f.len() != mu.len() {
        return Err(Error::validation("predicate and distribution live on different carriers"));
    }
    Ok(crossing_inf(&strict_pieces(f, mu)))
}

/// Closed form for a predicate with exactly two values `a < b`:
/// `min(b, max(a, mu(f^-1(b))))`.
pub fn generally_two_valued<S: Scalar>(a: &S, b: &S, mass_at_b: &S) -> S {
    min_of(b.clone(), max_of(a.clone(), mass_at_b.clone()))
}

/// The four characterizations of "generally", each with `f > e` and with
/// `f >= e`.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerallyRepresentations<S> {
    pub crossing_inf: [S; 2],
    pub inf_max: [S; 2],
    pub sup_min: [S; 2],
    pub crossing_sup: [S; 2],
}

impl<S: Scalar> GenerallyRepresentations<S> {
    pub fn values(&self) -> Vec<&S> {
        [&self.crossing_inf, &self.inf_max, &self.sup_min, &self.crossing_sup]
            .into_iter()
            .flatten()
            .collect()
    }

    pub fn all_equal(&self) -> bool {
        let v = self.values();
        v.iter().all(|x| x.approx_eq(v[0]))
    }
}

pub fn generally_representations<S: Scalar>(
    f: &FuzzyPredicate<S>,
    mu: &Distribution<S>,
) -> Result<GenerallyRepresentations<S>> {
    if f.len() != mu.len() {
        return Err(Error::validation("predicate and distribution live on different carriers"));
    }
    let strict = strict_pieces(f, mu);
    let loose = non_strict_pieces(f, mu);
    Ok(GenerallyRepresentations {
        crossing_inf: [crossing_inf(&strict), crossing_inf(&loose)],
        inf_max: [inf_max(&strict), inf_max(&loose)],
        sup_min: [sup_min(&strict), sup_min(&loose)],
        crossing_sup: [crossing_sup(&strict), crossing_sup(&loose)],
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Property {
    Monotonicity,
    Subadditivity,
    ZeroPreservation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WellBehavedViolation<S> {
    pub triple: usize,
    pub property: Property,
    pub lhs: S,
    pub rhs: S,
}

/// Checks monotonicity (when `f <= g`), subadditivity and zero preservation
/// on each `(f, g, arg)` triple.
pub fn check_well_behaved<S: Scalar>(
    m: &Modality,
    triples: &[(FuzzyPredicate<S>, FuzzyPredicate<S>, Argument<'_, S>)],
) -> Result<Vec<WellBehavedViolation<S>>> {
    let slack: S = m.slack();
    let le = |a: &S, b: &S| *a <= b.clone() + slack.clone();
    let mut out = Vec::new();
    for (i, (f, g, arg)) in triples.iter().enumerate() {
        let (ef, eg) = (eval(m, f, *arg)?, eval(m, g, *arg)?);
        if f.le(g) && !le(&ef, &eg) {
            out.push(WellBehavedViolation { triple: i, property: Property::Monotonicity, lhs: ef.clone(), rhs: eg.clone() });
        }
        let sum = eval(m, &f.oplus(g), *arg)?;
        let bound = oplus(&ef, &eg);
        if !le(&sum, &bound) {
            out.push(WellBehavedViolation { triple: i, property: Property::Subadditivity, lhs: sum, rhs: bound });
        }
        let zero = eval(m, &FuzzyPredicate::constant(f.len(), S::zero()), *arg)?;
        if !zero.is_zero() && !le(&zero, &S::zero()) {
            out.push(WellBehavedViolation { triple: i, property: Property::ZeroPreservation, lhs: zero, rhs: S::zero() });
        }
    }
    Ok(out)
}
