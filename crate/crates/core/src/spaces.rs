//! Finite pseudometric spaces and fuzzy relations.

use std::collections::BTreeSet;
use std::fmt;

use crate::error::{Error, Result};
use crate::scalar::{max_of, min_of, Scalar};

/// Indices into a carrier's point list.
pub type PointSet = BTreeSet<usize>;

/// A finite carrier with a 1-bounded distance matrix. Points are opaque
/// labels; indices follow input order.
#[derive(Debug, Clone, PartialEq)]
pub struct PseudometricSpace<S> {
    points: Vec<String>,
    d: Vec<Vec<S>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    OutOfRange { x: usize, y: usize },
    Reflexivity { x: usize },
    Symmetry { x: usize, y: usize },
    Triangle { x: usize, y: usize, z: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::OutOfRange { x, y } => write!(f, "d({x},{y}) outside [0,1]"),
            Violation::Reflexivity { x } => write!(f, "d({x},{x}) != 0"),
            Violation::Symmetry { x, y } => write!(f, "d({x},{y}) != d({y},{x})"),
            Violation::Triangle { x, y, z } => write!(f, "d({x},{z}) > d({x},{y}) + d({y},{z})"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

fn check_labels(points: &[String]) -> Result<()> {
    let unique: BTreeSet<&String> = points.iter().collect();
    if unique.len() != points.len() {
        return Err(Error::validation("duplicate point identifiers"));
    }
    Ok(())
}

fn check_square<S>(n: usize, d: &[Vec<S>]) -> Result<()> {
    if d.len() != n || d.iter().any(|r| r.len() != n) {
        return Err(Error::validation(format!("distance matrix must be {n}x{n}")));
    }
    Ok(())
}

impl<S: Scalar> PseudometricSpace<S> {
    /// Builds a space, rejecting any matrix that is not a 1-bounded
    /// pseudometric.
    pub fn new(points: Vec<String>, d: Vec<Vec<S>>) -> Result<Self> {
        let space = Self::unchecked(points, d)?;
        let report = space.validate();
        if let Some(v) = report.violations.first() {
            return Err(Error::validation(format!("not a pseudometric: {v}")));
        }
        Ok(space)
    }

    /// Shape checks only; use [`Self::validate`] to inspect the axioms.
    pub fn unchecked(points: Vec<String>, d: Vec<Vec<S>>) -> Result<Self> {
        check_labels(&points)?;
        check_square(points.len(), &d)?;
        if points.is_empty() {
            return Err(Error::validation("a space needs at least one point"));
        }
        Ok(PseudometricSpace { points, d })
    }

    /// Discrete metric on `n` points labelled `0..n`.
    pub fn discrete(n: usize) -> Self {
        let d = (0..n)
            .map(|i| (0..n).map(|j| if i == j { S::zero() } else { S::one() }).collect())
            .collect();
        PseudometricSpace { points: (0..n).map(|i| i.to_string()).collect(), d }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[String] {
        &self.points
    }

    pub fn matrix(&self) -> &[Vec<S>] {
        &self.d
    }

    pub fn d(&self, x: usize, y: usize) -> &S {
        &self.d[x][y]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.points.iter().position(|p| p == label)
    }

    pub fn as_relation(&self) -> FuzzyRelation<S> {
        FuzzyRelation {
            sources: self.points.clone(),
            targets: self.points.clone(),
            r: self.d.clone(),
        }
    }

    /// Lists every violated axiom with a witness; empty iff valid.
    pub fn validate(&self) -> ValidationReport {
        let n = self.len();
        let mut violations = Vec::new();
        let (zero, one) = (S::zero(), S::one());
        for x in 0..n {
            for y in 0..n {
                let v = &self.d[x][y];
                if v.is_neg() || !v.approx_le(&one) {
                    violations.push(Violation::OutOfRange { x, y });
                }
            }
        }
        for x in 0..n {
            if !self.d[x][x].approx_eq(&zero) {
                violations.push(Violation::Reflexivity { x });
            }
        }
        for x in 0..n {
            for y in (x + 1)..n {
                if !self.d[x][y].approx_eq(&self.d[y][x]) {
                    violations.push(Violation::Symmetry { x, y });
                }
            }
        }
        for x in 0..n {
            for y in 0..n {
                for z in 0..n {
                    let via = self.d[x][y].clone() + self.d[y][z].clone();
                    if !self.d[x][z].approx_le(&via) {
                        violations.push(Violation::Triangle { x, y, z });
                    }
                }
            }
        }
        ValidationReport { violations }
    }

    /// Identifies points at distance zero. Returns the separated quotient
    /// and the projection `point -> class`; each class is labelled by its
    /// least-index member.
    pub fn metric_quotient(&self) -> (PseudometricSpace<S>, Vec<usize>) {
        let n = self.len();
        let mut projection = vec![usize::MAX; n];
        let mut reps: Vec<usize> = Vec::new();
        for x in 0..n {
            if projection[x] != usize::MAX {
                continue;
            }
            let class = reps.len();
            reps.push(x);
            for y in x..n {
                if projection[y] == usize::MAX && self.d[x][y].near_zero() {
                    projection[y] = class;
                }
            }
        }
        let points = reps.iter().map(|&r| self.points[r].clone()).collect();
        let d = reps
            .iter()
            .map(|&a| reps.iter().map(|&b| self.d[a][b].clone()).collect())
            .collect();
        (PseudometricSpace { points, d }, projection)
    }

    /// `{ y | min_{x in A} d(x,y) <= eps }`.
    pub fn epsilon_expansion(&self, a: &PointSet, eps: &S) -> PointSet {
        (0..self.len())
            .filter(|&y| a.iter().any(|&x| self.d[x][y].approx_le(eps)))
            .collect()
    }

    /// Distinct matrix entries in increasing order (including zero).
    pub fn distance_values(&self) -> Vec<S> {
        distinct_sorted(self.d.iter().flatten().cloned().chain(std::iter::once(S::zero())))
    }

    /// Hausdorff distance between two non-empty point sets.
    pub fn hausdorff(&self, a: &PointSet, b: &PointSet) -> Result<S> {
        if a.is_empty() || b.is_empty() {
            return Err(Error::validation("Hausdorff distance needs non-empty sets"));
        }
        let directed = |from: &PointSet, to: &PointSet| {
            from.iter()
                .map(|&x| to.iter().map(|&y| self.d[x][y].clone()).reduce(min_of).unwrap())
                .reduce(max_of)
                .unwrap()
        };
        Ok(max_of(directed(a, b), directed(b, a)))
    }
}

pub(crate) fn distinct_sorted<S: Scalar>(values: impl IntoIterator<Item = S>) -> Vec<S> {
    let mut v: Vec<S> = values.into_iter().collect();
    v.sort_by(|a, b| a.partial_cmp(b).expect("unordered scalar"));
    v.dedup_by(|a, b| a == b);
    v
}

/// `r: X x Y -> [0,1]` with no symmetry or triangle requirements.
#[derive(Debug, Clone, PartialEq)]
pub struct FuzzyRelation<S> {
    sources: Vec<String>,
    targets: Vec<String>,
    r: Vec<Vec<S>>,
}

impl<S: Scalar> FuzzyRelation<S> {
    pub fn new(sources: Vec<String>, targets: Vec<String>, r: Vec<Vec<S>>) -> Result<Self> {
        check_labels(&sources)?;
        check_labels(&targets)?;
        if sources.is_empty() || targets.is_empty() {
            return Err(Error::validation("relation carriers must be non-empty"));
        }
        if r.len() != sources.len() || r.iter().any(|row| row.len() != targets.len()) {
            return Err(Error::validation(format!(
                "relation matrix must be {}x{}",
                sources.len(),
                targets.len()
            )));
        }
        if r.iter().flatten().any(|v| v.is_neg() || !v.approx_le(&S::one())) {
            return Err(Error::validation("relation entries must lie in [0,1]"));
        }
        Ok(FuzzyRelation { sources, targets, r })
    }

    /// Relation with every entry equal to `value`, carriers labelled by index.
    pub fn constant(nx: usize, ny: usize, value: S) -> Self {
        FuzzyRelation {
            sources: (0..nx).map(|i| format!("x{i}")).collect(),
            targets: (0..ny).map(|i| format!("y{i}")).collect(),
            r: vec![vec![value; ny]; nx],
        }
    }

    pub fn sources(&self) -> &[String] {
        &self.sources
    }

    pub fn targets(&self) -> &[String] {
        &self.targets
    }

    pub fn matrix(&self) -> &[Vec<S>] {
        &self.r
    }

    pub fn get(&self, x: usize, y: usize) -> &S {
        &self.r[x][y]
    }

    pub fn source_len(&self) -> usize {
        self.sources.len()
    }

    pub fn target_len(&self) -> usize {
        self.targets.len()
    }

    /// Entry-wise `p`-th power (for the p-moment lifting).
    pub fn powered(&self, p: &crate::Rational, digits: u32) -> Self {
        FuzzyRelation {
            sources: self.sources.clone(),
            targets: self.targets.clone(),
            r: self
                .r
                .iter()
                .map(|row| row.iter().map(|v| v.pow_rational(p, digits)).collect())
                .collect(),
        }
    }

    /// `r^eps(x,y) = 1` iff `r(x,y) >= eps`.
    pub fn crisp_threshold(&self, eps: &S) -> CrispRelation<S> {
        let r = self
            .r
            .iter()
            .map(|row| {
                row.iter()
                    .map(|v| if v >= eps { S::one() } else { S::zero() })
                    .collect()
            })
            .collect();
        CrispRelation(FuzzyRelation {
            sources: self.sources.clone(),
            targets: self.targets.clone(),
            r,
        })
    }

    /// Distinct strictly positive entries in increasing order.
    pub fn positive_values(&self) -> Vec<S> {
        distinct_sorted(self.r.iter().flatten().filter(|v| v.is_pos()).cloned())
    }
}

/// A fuzzy relation whose entries are all 0 or 1.
#[derive(Debug, Clone, PartialEq)]
pub struct CrispRelation<S>(FuzzyRelation<S>);

impl<S: Scalar> CrispRelation<S> {
    pub fn new(rel: FuzzyRelation<S>) -> Result<Self> {
        if rel.r.iter().flatten().any(|v| !v.is_zero() && !v.is_one()) {
            return Err(Error::validation("crisp relation entries must be 0 or 1"));
        }
        Ok(CrispRelation(rel))
    }

    pub fn relation(&self) -> &FuzzyRelation<S> {
        &self.0
    }

    pub fn holds(&self, x: usize, y: usize) -> bool {
        self.0.r[x][y].is_one()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rational;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from_ratio(n, d)
    }

    fn labels(n: usize) -> Vec<String> {
        ["x", "y", "z", "w"][..n].iter().map(|s| s.to_string()).collect()
    }

    fn set(v: &[usize]) -> PointSet {
        v.iter().copied().collect()
    }

    #[test]
    fn discrete_is_valid() {
        assert!(PseudometricSpace::<Rational>::discrete(3).validate().is_valid());
    }

    #[test]
    fn triangle_violation_is_witnessed() {
        let d = vec![
            vec![q(0, 1), q(1, 4), q(1, 1)],
            vec![q(1, 4), q(0, 1), q(1, 4)],
            vec![q(1, 1), q(1, 4), q(0, 1)],
        ];
        let s = PseudometricSpace::unchecked(labels(3), d).unwrap();
        let report = s.validate();
        assert!(report.violations.contains(&Violation::Triangle { x: 0, y: 1, z: 2 }));
        assert!(PseudometricSpace::new(labels(3), s.matrix().to_vec()).is_err());
    }

    #[test]
    fn asymmetry_is_witnessed() {
        let d = vec![vec![q(0, 1), q(1, 2)], vec![q(1, 3), q(0, 1)]];
        let report = PseudometricSpace::unchecked(labels(2), d).unwrap().validate();
        assert_eq!(report.violations, vec![Violation::Symmetry { x: 0, y: 1 }]);
    }

    #[test]
    fn quotient_examples() {
        let metric = PseudometricSpace::<Rational>::discrete(3);
        let (qs, proj) = metric.metric_quotient();
        assert_eq!(qs, metric);
        assert_eq!(proj, vec![0, 1, 2]);

        let d = vec![vec![q(0, 1), q(0, 1)], vec![q(0, 1), q(0, 1)]];
        let (qs, proj) = PseudometricSpace::new(labels(2), d).unwrap().metric_quotient();
        assert_eq!(qs.len(), 1);
        assert_eq!(proj, vec![0, 0]);

        let d = vec![
            vec![q(0, 1), q(0, 1), q(1, 2)],
            vec![q(0, 1), q(0, 1), q(1, 2)],
            vec![q(1, 2), q(1, 2), q(0, 1)],
        ];
        let (qs, proj) = PseudometricSpace::new(labels(3), d).unwrap().metric_quotient();
        assert_eq!(qs.points(), &["x".to_string(), "z".to_string()]);
        assert_eq!(proj, vec![0, 0, 1]);
        assert_eq!(qs.d(0, 1), &q(1, 2));
        assert!(qs.validate().is_valid());
    }

    #[test]
    fn expansion_examples() {
        let s = PseudometricSpace::<Rational>::discrete(3);
        assert_eq!(s.epsilon_expansion(&set(&[0]), &q(1, 1)), set(&[0, 1, 2]));
        assert_eq!(s.epsilon_expansion(&set(&[0, 2]), &q(0, 1)), set(&[0, 2]));
        assert_eq!(s.epsilon_expansion(&set(&[1]), &q(1, 2)), set(&[1]));
    }

    #[test]
    fn threshold_examples() {
        let r = FuzzyRelation::new(
            labels(2),
            labels(2),
            vec![vec![q(1, 5), q(1, 2)], vec![q(0, 1), q(3, 4)]],
        )
        .unwrap();
        let all = r.crisp_threshold(&q(0, 1));
        assert!((0..2).all(|x| (0..2).all(|y| all.holds(x, y))));
        let none = r.crisp_threshold(&q(4, 5));
        assert!((0..2).all(|x| (0..2).all(|y| !none.holds(x, y))));
        let at = r.crisp_threshold(&q(1, 2));
        assert!(at.holds(0, 1) && at.holds(1, 1) && !at.holds(0, 0));
    }

    #[test]
    fn relation_range_is_checked() {
        let bad = FuzzyRelation::new(labels(1), labels(1), vec![vec![q(3, 2)]]);
        assert!(bad.is_err());
        let crisp = CrispRelation::new(FuzzyRelation::constant(1, 1, q(1, 2)));
        assert!(crisp.is_err());
    }

    #[test]
    fn hausdorff_of_singletons() {
        let d = vec![vec![q(0, 1), q(2, 5)], vec![q(2, 5), q(0, 1)]];
        let s = PseudometricSpace::new(labels(2), d).unwrap();
        assert_eq!(s.hausdorff(&set(&[0]), &set(&[1])).unwrap(), q(2, 5));
        assert_eq!(s.hausdorff(&set(&[0]), &set(&[0, 1])).unwrap(), q(2, 5));
    }
}
