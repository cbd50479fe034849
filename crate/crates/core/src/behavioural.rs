//! Behavioural distances on finite coalgebras: least fixpoints of the
//! lifted-metric functional, reached by Kleene iteration from zero.

use std::fmt;

use crate::convex_powerset::ConvexSet;
use crate::distributions::Distribution;
use crate::error::{Error, Result};
use crate::liftings::{kantorovich, wasserstein, Ground};
use crate::modalities::{Argument, Modality};
use crate::scalar::{max_of, Scalar};
use crate::spaces::PseudometricSpace;

#[derive(Debug, Clone, PartialEq)]
pub enum Transitions<S> {
    MarkovChain(Vec<Distribution<S>>),
    ConvexAutomaton(Vec<ConvexSet<S>>),
    /// Each state emits an output in `[0,1]` and then moves randomly.
    LabelledMarkovChain(Vec<(S, Distribution<S>)>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Coalgebra<S> {
    states: Vec<String>,
    transitions: Transitions<S>,
}

impl<S: Scalar> Coalgebra<S> {
    pub fn new(states: Vec<String>, transitions: Transitions<S>) -> Result<Self> {
        let n = states.len();
        if n == 0 {
            return Err(Error::validation("a coalgebra needs at least one state"));
        }
        let carriers: Vec<usize> = match &transitions {
            Transitions::MarkovChain(t) => t.iter().map(|d| d.len()).collect(),
            Transitions::ConvexAutomaton(t) => t.iter().map(|c| c.carrier_len()).collect(),
            Transitions::LabelledMarkovChain(t) => {
                if t.iter().any(|(o, _)| o.is_neg() || !o.approx_le(&S::one())) {
                    return Err(Error::validation("outputs must lie in [0,1]"));
                }
                t.iter().map(|(_, d)| d.len()).collect()
            }
        };
        if carriers.len() != n {
            return Err(Error::validation(format!("{} successor structures for {n} states", carriers.len())));
        }
        if carriers.iter().any(|&c| c != n) {
            return Err(Error::validation("successor structures must live on the state space"));
        }
        Ok(Coalgebra { states, transitions })
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn transitions(&self) -> &Transitions<S> {
        &self.transitions
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Construction {
    Kantorovich,
    Wasserstein,
}

impl fmt::Display for Construction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Construction::Kantorovich => "kantorovich",
            Construction::Wasserstein => "wasserstein",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lifting {
    pub modality: Modality,
    pub construction: Construction,
}

fn check_kind<S>(c: &Coalgebra<S>, lifting: &Lifting) -> Result<()> {
    let ok = match (&c.transitions, &lifting.modality) {
        (Transitions::ConvexAutomaton(_), Modality::ConvexSupExpectation) => true,
        (Transitions::MarkovChain(_) | Transitions::LabelledMarkovChain(_), Modality::Expectation | Modality::Generally) => true,
        (Transitions::MarkovChain(_) | Transitions::LabelledMarkovChain(_), Modality::PMoment { .. }) => {
            lifting.construction == Construction::Wasserstein
        }
        _ => false,
    };
    if !ok {
        return Err(Error::kind(format!(
            "the {} lifting of {} does not apply to this coalgebra",
            lifting.construction, lifting.modality
        )));
    }
    Ok(())
}

/// One application of the functional: `d'(u,v)` is the lifted distance
/// between the successors of `u` and `v` under `d`.
pub fn bdist_step<S: Scalar>(c: &Coalgebra<S>, lifting: &Lifting, d: &PseudometricSpace<S>) -> Result<PseudometricSpace<S>> {
    check_kind(c, lifting)?;
    let n = c.len();
    if d.len() != n {
        return Err(Error::validation("metric does not match the state space"));
    }
    let lifted = |s: Argument<'_, S>, t: Argument<'_, S>| -> Result<S> {
        Ok(match lifting.construction {
            Construction::Kantorovich => kantorovich(&lifting.modality, d, s, t)?.value,
            Construction::Wasserstein => wasserstein(&lifting.modality, Ground::Metric(d), s, t)?.value,
        })
    };
    let mut m = vec![vec![S::zero(); n]; n];
    for u in 0..n {
        for v in (u + 1)..n {
            let value = match &c.transitions {
                Transitions::MarkovChain(t) => lifted(Argument::Dist(&t[u]), Argument::Dist(&t[v]))?,
                Transitions::ConvexAutomaton(t) => lifted(Argument::Convex(&t[u]), Argument::Convex(&t[v]))?,
                Transitions::LabelledMarkovChain(t) => {
                    let out = (t[u].0.clone() - t[v].0.clone()).abs();
                    max_of(out, lifted(Argument::Dist(&t[u].1), Argument::Dist(&t[v].1))?)
                }
            };
            m[u][v] = value.clone();
            m[v][u] = value;
        }
    }
    PseudometricSpace::new(c.states.clone(), m).map_err(|e| Error::Internal(format!("iterate is not a pseudometric: {e}")))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stop {
    /// An iterate repeated exactly: a fixpoint was reached.
    ExactRepeat,
    /// Entrywise change fell below the tolerance.
    Tolerance,
    MaxIterations,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricIterate<S> {
    pub d: PseudometricSpace<S>,
    /// Number of steps applied.
    pub iteration: usize,
    pub converged: bool,
    pub stop: Stop,
    /// Whether every iterate dominated its predecessor entrywise.
    pub monotone: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationConfig<S> {
    pub max_iters: usize,
    /// Stop once no entry moves by more than this; `None` waits for an
    /// exact repeat.
    pub tolerance: Option<S>,
}

impl<S: Scalar> Default for IterationConfig<S> {
    fn default() -> Self {
        IterationConfig { max_iters: 1000, tolerance: None }
    }
}

pub fn behavioural_distance<S: Scalar>(c: &Coalgebra<S>, lifting: &Lifting, cfg: &IterationConfig<S>) -> Result<MetricIterate<S>> {
    behavioural_distance_from(c, lifting, cfg, PseudometricSpace::new(c.states.clone(), vec![vec![S::zero(); c.len()]; c.len()])?)
}

/// Kleene iteration from an arbitrary starting pseudometric.
pub fn behavioural_distance_from<S: Scalar>(
    c: &Coalgebra<S>,
    lifting: &Lifting,
    cfg: &IterationConfig<S>,
    start: PseudometricSpace<S>,
) -> Result<MetricIterate<S>> {
    let mut d = start;
    let mut monotone = true;
    for iteration in 1..=cfg.max_iters {
        let next = bdist_step(c, lifting, &d)?;
        let mut change = S::zero();
        for (row_old, row_new) in d.matrix().iter().zip(next.matrix()) {
            for (a, b) in row_old.iter().zip(row_new) {
                if !a.approx_le(b) {
                    monotone = false;
                }
                change = max_of(change, (b.clone() - a.clone()).abs());
            }
        }
        if next == d {
            return Ok(MetricIterate { d: next, iteration, converged: true, stop: Stop::ExactRepeat, monotone });
        }
        if cfg.tolerance.as_ref().is_some_and(|t| change < *t) {
            return Ok(MetricIterate { d: next, iteration, converged: true, stop: Stop::Tolerance, monotone });
        }
        d = next;
    }
    Ok(MetricIterate { d, iteration: cfg.max_iters, converged: false, stop: Stop::MaxIterations, monotone })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rational;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from_ratio(n, d)
    }

    fn lift(m: Modality) -> Lifting {
        Lifting { modality: m, construction: Construction::Kantorovich }
    }

    fn labelled(outputs: [Rational; 2], swap: bool) -> Coalgebra<Rational> {
        let next = |s: usize| Distribution::dirac(2, if swap { 1 - s } else { s });
        Coalgebra::new(
            vec!["u".into(), "v".into()],
            Transitions::LabelledMarkovChain(outputs.into_iter().enumerate().map(|(s, o)| (o, next(s))).collect()),
        )
        .unwrap()
    }

    #[test]
    fn unlabelled_chains_are_zero() {
        let c = Coalgebra::new(
            vec!["a".into(), "b".into(), "c".into()],
            Transitions::MarkovChain(vec![
                Distribution::new(vec![q(1, 2), q(1, 2), q(0, 1)]).unwrap(),
                Distribution::dirac(3, 2),
                Distribution::uniform(3),
            ]),
        )
        .unwrap();
        let it = behavioural_distance(&c, &lift(Modality::Expectation), &IterationConfig::default()).unwrap();
        assert_eq!((it.iteration, it.converged, it.stop), (1, true, Stop::ExactRepeat));
        assert!(it.d.matrix().iter().flatten().all(|v| *v == q(0, 1)));
    }

    #[test]
    fn labelled_examples() {
        let it = behavioural_distance(&labelled([q(0, 1), q(1, 1)], false), &lift(Modality::Expectation), &IterationConfig::default())
            .unwrap();
        assert_eq!((it.iteration, it.d.d(0, 1).clone()), (2, q(1, 1)));
        let it = behavioural_distance(&labelled([q(0, 1), q(1, 2)], true), &lift(Modality::Expectation), &IterationConfig::default())
            .unwrap();
        assert_eq!((it.iteration, it.d.d(0, 1).clone()), (2, q(1, 2)));
        assert!(it.monotone);
    }

    #[test]
    fn dirac_swap_step() {
        let c = Coalgebra::new(
            vec!["u".into(), "v".into()],
            Transitions::MarkovChain(vec![Distribution::dirac(2, 1), Distribution::dirac(2, 0)]),
        )
        .unwrap();
        let d = PseudometricSpace::new(c.states().to_vec(), vec![vec![q(0, 1), q(3, 7)], vec![q(3, 7), q(0, 1)]]).unwrap();
        for m in [Modality::Expectation, Modality::Generally] {
            let next = bdist_step(&c, &lift(m), &d).unwrap();
            assert_eq!(next.d(0, 1), &q(3, 7));
        }
    }

    #[test]
    fn kind_mismatch() {
        let c = labelled([q(0, 1), q(1, 1)], false);
        assert!(matches!(
            bdist_step(&c, &lift(Modality::ConvexSupExpectation), &PseudometricSpace::discrete(2)),
            Err(Error::KindMismatch(_))
        ));
    }
}
