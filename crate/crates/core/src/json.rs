//! JSON file formats. Rationals travel as `"p/q"` strings (plain integers
//! and decimals are accepted on input); points are referenced by label.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;
use serde_json::{json, Value};

use crate::behavioural::{Coalgebra, Transitions};
use crate::convex_powerset::ConvexSet;
use crate::distributions::{Distribution, FuzzyPredicate};
use crate::error::{Error, Result};
use crate::modalities::Modality;
use crate::scalar::{format_rational, parse_rational, to_decimal_string};
use crate::spaces::{FuzzyRelation, PointSet, PseudometricSpace};
use crate::Rational;

pub fn read_value(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::validation(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::validation(format!("{}: invalid JSON: {e}", path.display())))
}

fn parse<T: for<'de> Deserialize<'de>>(value: Value, what: &str) -> Result<T> {
    serde_json::from_value(value).map_err(|e| Error::validation(format!("malformed {what}: {e}")))
}

fn rational(text: &str) -> Result<Rational> {
    parse_rational(text)
}

pub fn rat(r: &Rational) -> Value {
    Value::String(format_rational(r))
}

/// Exact form alongside a decimal rendering.
pub fn exact_and_decimal(r: &Rational) -> Value {
    json!({ "exact": format_rational(r), "decimal": to_decimal_string(r, 12) })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MatrixFile {
    points: Vec<String>,
    #[serde(default)]
    targets: Option<Vec<String>>,
    d: Vec<Vec<String>>,
}

/// A ground distance: either a pseudometric or (with `"targets"`) a fuzzy
/// relation.
#[derive(Debug, Clone, PartialEq)]
pub enum GroundFile {
    Space(PseudometricSpace<Rational>),
    Relation(FuzzyRelation<Rational>),
}

impl GroundFile {
    pub fn sources(&self) -> &[String] {
        match self {
            GroundFile::Space(s) => s.points(),
            GroundFile::Relation(r) => r.sources(),
        }
    }

    pub fn targets(&self) -> &[String] {
        match self {
            GroundFile::Space(s) => s.points(),
            GroundFile::Relation(r) => r.targets(),
        }
    }
}

fn matrix(rows: Vec<Vec<String>>) -> Result<Vec<Vec<Rational>>> {
    rows.into_iter().map(|row| row.iter().map(|v| rational(v)).collect()).collect()
}

fn check_labels(labels: &[String]) -> Result<()> {
    let mut seen = std::collections::BTreeSet::new();
    for l in labels {
        if !seen.insert(l) {
            return Err(Error::validation(format!("duplicate point label {l:?}")));
        }
    }
    Ok(())
}

pub fn ground_from_json(value: Value) -> Result<GroundFile> {
    let f: MatrixFile = parse(value, "space")?;
    check_labels(&f.points)?;
    let d = matrix(f.d)?;
    match f.targets {
        Some(targets) => {
            check_labels(&targets)?;
            Ok(GroundFile::Relation(FuzzyRelation::new(f.points, targets, d)?))
        }
        None => Ok(GroundFile::Space(PseudometricSpace::new(f.points, d)?)),
    }
}

pub fn space_from_json(value: Value) -> Result<PseudometricSpace<Rational>> {
    match ground_from_json(value)? {
        GroundFile::Space(s) => Ok(s),
        GroundFile::Relation(_) => Err(Error::validation("expected a pseudometric, found a relation (\"targets\" given)")),
    }
}

pub fn space_to_json(s: &PseudometricSpace<Rational>) -> Value {
    json!({
        "points": s.points(),
        "d": s.matrix().iter().map(|row| row.iter().map(rat).collect::<Vec<_>>()).collect::<Vec<_>>(),
    })
}

fn index_of(labels: &[String], label: &str) -> Result<usize> {
    labels
        .iter()
        .position(|l| l == label)
        .ok_or_else(|| Error::validation(format!("unknown point {label:?}")))
}

/// Accepts `{"mass": {...}}` (optionally with a `"space"` field, which is
/// informational) or a bare `{"a": "1/2", ...}` map. Omitted points have
/// mass zero.
pub fn distribution_from_json(value: Value, labels: &[String]) -> Result<Distribution<Rational>> {
    let masses = match value {
        Value::Object(mut obj) if obj.contains_key("mass") => {
            if let Some(Value::Object(space)) = obj.get("space") {
                if let Some(points) = space.get("points") {
                    let points: Vec<String> = parse(points.clone(), "inline space")?;
                    if points != labels {
                        return Err(Error::validation("distribution's inline space differs from the given space"));
                    }
                }
            }
            obj.remove("mass").unwrap()
        }
        other => other,
    };
    let masses: BTreeMap<String, String> = parse(masses, "distribution")?;
    let mut mass = vec![Rational::from_integer(0.into()); labels.len()];
    for (label, m) in masses {
        mass[index_of(labels, &label)?] = rational(&m)?;
    }
    Distribution::new(mass)
}

pub fn distribution_to_json(mu: &Distribution<Rational>, labels: &[String]) -> Value {
    let map: serde_json::Map<String, Value> = labels
        .iter()
        .zip(mu.masses())
        .filter(|(_, m)| !num_traits::Zero::is_zero(*m))
        .map(|(l, m)| (l.clone(), rat(m)))
        .collect();
    json!({ "mass": map })
}

/// `{"set": ["a", ...]}` or a bare label array.
pub fn point_set_from_json(value: Value, labels: &[String]) -> Result<PointSet> {
    let items = match value {
        Value::Object(mut obj) if obj.contains_key("set") => obj.remove("set").unwrap(),
        other => other,
    };
    let items: Vec<String> = parse(items, "point set")?;
    items.iter().map(|l| index_of(labels, l)).collect()
}

pub fn convex_set_from_json(value: Value, labels: &[String]) -> Result<ConvexSet<Rational>> {
    #[derive(Deserialize)]
    struct File {
        #[serde(default)]
        #[allow(dead_code)]
        space: Option<Value>,
        generators: Vec<Value>,
    }
    let f: File = parse(value, "convex set")?;
    let generators = f.generators.into_iter().map(|g| distribution_from_json(g, labels)).collect::<Result<_>>()?;
    ConvexSet::new(generators)
}

pub fn predicate_to_json(f: &FuzzyPredicate<Rational>, labels: &[String]) -> Value {
    Value::Object(labels.iter().zip(f.values()).map(|(l, v)| (l.clone(), rat(v))).collect())
}

pub fn coalgebra_from_json(value: Value) -> Result<Coalgebra<Rational>> {
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct File {
        kind: String,
        states: Vec<String>,
        gamma: BTreeMap<String, Value>,
    }
    let f: File = parse(value, "coalgebra")?;
    check_labels(&f.states)?;
    let mut gamma = f.gamma;
    let mut take = |s: &String| gamma.remove(s).ok_or_else(|| Error::validation(format!("no transitions for state {s:?}")));
    let states = &f.states;
    let transitions = match f.kind.as_str() {
        "markov_chain" => Transitions::MarkovChain(
            states.iter().map(|s| distribution_from_json(take(s)?, states)).collect::<Result<_>>()?,
        ),
        "convex_automaton" => Transitions::ConvexAutomaton(
            states.iter().map(|s| convex_set_from_json(take(s)?, states)).collect::<Result<_>>()?,
        ),
        "labelled_markov_chain" => {
            #[derive(Deserialize)]
            #[serde(deny_unknown_fields)]
            struct Step {
                out: String,
                next: Value,
            }
            Transitions::LabelledMarkovChain(
                states
                    .iter()
                    .map(|s| {
                        let step: Step = parse(take(s)?, "labelled transition")?;
                        Ok((rational(&step.out)?, distribution_from_json(step.next, states)?))
                    })
                    .collect::<Result<_>>()?,
            )
        }
        other => return Err(Error::validation(format!("unknown coalgebra kind {other:?}"))),
    };
    if let Some(extra) = gamma.keys().next() {
        return Err(Error::validation(format!("transitions given for unknown state {extra:?}")));
    }
    Coalgebra::new(f.states, transitions)
}

/// `"expectation" | "sup" | "inf" | "generally" | {"p_moment": "2"} |
/// "convex_sup_expectation"`; on the command line `p_moment=2` also works.
pub fn modality_from_json(value: &Value) -> Result<Modality> {
    match value {
        Value::String(s) => match s.as_str() {
            "expectation" => Ok(Modality::Expectation),
            "sup" => Ok(Modality::Sup),
            "inf" => Ok(Modality::Inf),
            "generally" => Ok(Modality::Generally),
            "convex_sup_expectation" => Ok(Modality::ConvexSupExpectation),
            other => match other.strip_prefix("p_moment=").or_else(|| other.strip_prefix("p_moment:")) {
                Some(p) => Modality::p_moment(rational(p)?),
                None => Err(Error::validation(format!("unknown modality {other:?}"))),
            },
        },
        Value::Object(obj) if obj.len() == 1 && obj.contains_key("p_moment") => {
            let p = match &obj["p_moment"] {
                Value::String(s) => rational(s)?,
                Value::Number(n) => rational(&n.to_string())?,
                _ => return Err(Error::validation("p_moment exponent must be a string or number")),
            };
            Modality::p_moment(p)
        }
        _ => Err(Error::validation(format!("unknown modality {value}"))),
    }
}

pub fn modality_from_arg(text: &str) -> Result<Modality> {
    let value = serde_json::from_str(text).unwrap_or_else(|_| Value::String(text.to_string()));
    modality_from_json(&value)
}

pub fn modality_to_json(m: &Modality) -> Value {
    match m {
        Modality::PMoment { p, .. } => json!({ "p_moment": format_rational(p) }),
        other => Value::String(other.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    #[test]
    fn round_trips() {
        let s = space_from_json(json!({"points": ["a", "b"], "d": [["0", "1/2"], ["1/2", "0"]]})).unwrap();
        assert_eq!(s.d(0, 1), &q(1, 2));
        assert_eq!(space_from_json(space_to_json(&s)).unwrap(), s);
        let mu = distribution_from_json(json!({"space": "s.json", "mass": {"a": "2/3", "b": "1/3"}}), s.points()).unwrap();
        assert_eq!(mu.masses(), &[q(2, 3), q(1, 3)]);
        assert_eq!(distribution_from_json(distribution_to_json(&mu, s.points()), s.points()).unwrap(), mu);
        let bare = distribution_from_json(json!({"b": "1"}), s.points()).unwrap();
        assert_eq!(bare, Distribution::dirac(2, 1));
        assert!(distribution_from_json(json!({"c": "1"}), s.points()).is_err());
        let set = point_set_from_json(json!({"set": ["b"]}), s.points()).unwrap();
        assert_eq!(set.into_iter().collect::<Vec<_>>(), vec![1]);
    }

    #[test]
    fn relations_and_modalities() {
        let g = ground_from_json(json!({"points": ["a"], "targets": ["u", "v"], "d": [["1", "0.25"]]})).unwrap();
        assert!(matches!(g, GroundFile::Relation(_)));
        assert!(space_from_json(json!({"points": ["a", "b"], "d": [["0", "1/2"], ["1/3", "0"]]})).is_err());
        assert_eq!(modality_from_arg("generally").unwrap(), Modality::Generally);
        assert_eq!(modality_from_arg("p_moment=2").unwrap(), Modality::p_moment(q(2, 1)).unwrap());
        assert_eq!(modality_from_arg(r#"{"p_moment": "2"}"#).unwrap(), Modality::p_moment(q(2, 1)).unwrap());
        assert!(modality_from_arg("median").is_err());
    }

    #[test]
    fn coalgebras() {
        let c = coalgebra_from_json(json!({
            "kind": "labelled_markov_chain",
            "states": ["u", "v"],
            "gamma": {"u": {"out": "0", "next": {"v": "1"}}, "v": {"out": "1/2", "next": {"mass": {"u": "1"}}}}
        }))
        .unwrap();
        assert_eq!(c.len(), 2);
        assert!(coalgebra_from_json(json!({"kind": "markov_chain", "states": ["u"], "gamma": {}})).is_err());
    }
}
