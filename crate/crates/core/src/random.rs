//! Seeded random instances with small rational denominators, shared by the
//! benchmark and the test suites.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::convex_powerset::ConvexSet;
use crate::distributions::{Distribution, FuzzyPredicate};
use crate::spaces::{FuzzyRelation, PointSet, PseudometricSpace};
use crate::Rational;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn q(n: i64, d: i64) -> Rational {
    Rational::new(n.into(), d.into())
}

fn labels(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

/// Rational in `[0,1]` with denominator at most `max_den`.
pub fn unit_rational(rng: &mut impl Rng, max_den: i64) -> Rational {
    let den = rng.gen_range(1..=max_den);
    q(rng.gen_range(0..=den), den)
}

/// Metric with entries of denominator at most `max_den`. Alternates between
/// two shapes: entries in `[1/2, 1]` (always a metric), and a shortest-path
/// closure of multiples of `1/max_den`, which produces many tight triangles.
pub fn metric(rng: &mut impl Rng, n: usize, max_den: i64) -> PseudometricSpace<Rational> {
    let mut d = vec![vec![q(0, 1); n]; n];
    if rng.gen_bool(0.5) {
        for x in 0..n {
            for y in (x + 1)..n {
                let den = rng.gen_range(1..=max_den);
                let v = q(rng.gen_range((den + 1) / 2..=den), den);
                d[x][y] = v.clone();
                d[y][x] = v;
            }
        }
    } else {
        for x in 0..n {
            for y in (x + 1)..n {
                let v = q(rng.gen_range(1..=max_den), max_den);
                d[x][y] = v.clone();
                d[y][x] = v;
            }
        }
        for k in 0..n {
            for x in 0..n {
                for y in 0..n {
                    let via = &d[x][k] + &d[k][y];
                    if via < d[x][y] {
                        d[x][y] = via;
                    }
                }
            }
        }
    }
    PseudometricSpace::new(labels("x", n), d).expect("generated metric is valid")
}

/// Pseudometric on `n` points in which some distinct points are at distance
/// zero: a random metric on fewer classes, pulled back along a surjection.
pub fn pseudometric(rng: &mut impl Rng, n: usize, max_den: i64) -> PseudometricSpace<Rational> {
    let classes = rng.gen_range(1..=n.max(2) - 1).max(1);
    let base = metric(rng, classes, max_den);
    let mut class_of: Vec<usize> = (0..n).map(|i| if i < classes { i } else { rng.gen_range(0..classes) }).collect();
    class_of.shuffle(rng);
    let d = (0..n)
        .map(|x| (0..n).map(|y| base.d(class_of[x], class_of[y]).clone()).collect())
        .collect();
    PseudometricSpace::new(labels("x", n), d).expect("pulled-back pseudometric is valid")
}

/// Fuzzy relation with entries of denominator at most `max_den`, with extra
/// weight on the extremes 0 and 1.
pub fn relation(rng: &mut impl Rng, nx: usize, ny: usize, max_den: i64) -> FuzzyRelation<Rational> {
    let r = (0..nx)
        .map(|_| {
            (0..ny)
                .map(|_| match rng.gen_range(0..8) {
                    0 => q(0, 1),
                    1 => q(1, 1),
                    _ => unit_rational(rng, max_den),
                })
                .collect()
        })
        .collect();
    FuzzyRelation::new(labels("x", nx), labels("y", ny), r).expect("entries lie in [0,1]")
}

/// Distribution from integer weights; roughly one point in four gets no mass.
pub fn distribution(rng: &mut impl Rng, n: usize, max_weight: i64) -> Distribution<Rational> {
    loop {
        let w: Vec<i64> = (0..n)
            .map(|_| if rng.gen_range(0..4) == 0 { 0 } else { rng.gen_range(1..=max_weight) })
            .collect();
        let total: i64 = w.iter().sum();
        if total > 0 {
            return Distribution::new(w.into_iter().map(|v| q(v, total)).collect()).expect("normalized weights");
        }
    }
}

pub fn predicate(rng: &mut impl Rng, n: usize, max_den: i64) -> FuzzyPredicate<Rational> {
    FuzzyPredicate::new((0..n).map(|_| unit_rational(rng, max_den)).collect()).expect("values lie in [0,1]")
}

/// Non-empty subset of `0..n`.
pub fn point_set(rng: &mut impl Rng, n: usize) -> PointSet {
    loop {
        let s: BTreeSet<usize> = (0..n).filter(|_| rng.gen_bool(0.4)).collect();
        if !s.is_empty() {
            return s;
        }
    }
}

pub fn convex_set(rng: &mut impl Rng, n: usize, generators: usize, max_weight: i64) -> ConvexSet<Rational> {
    ConvexSet::new((0..generators).map(|_| distribution(rng, n, max_weight)).collect()).expect("non-empty generator list")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generators_are_valid_and_deterministic() {
        let mut a = rng(7);
        let mut b = rng(7);
        for n in 1..=6 {
            let m1 = metric(&mut a, n, 12);
            assert_eq!(m1, metric(&mut b, n, 12));
            let p = pseudometric(&mut a, n, 12);
            assert!(p.validate().is_valid());
            pseudometric(&mut b, n, 12);
        }
        let mut c = rng(3);
        let p = pseudometric(&mut c, 5, 12);
        assert!(p.metric_quotient().0.len() < 5);
    }
}
