// Matrix code indexes several arrays with the same loop variable.
#![allow(clippy::needless_range_loop)]

pub mod behavioural;
pub mod cli;
pub mod convex_powerset;
pub mod distributions;
pub mod error;
pub mod json;
pub mod levy_prokhorov;
pub mod liftings;
pub mod lp;
pub mod modalities;
pub mod random;
pub mod scalar;
pub mod spaces;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Arbitrary-precision rational, the exact scalar used throughout.
pub type Rational = num_rational::BigRational;

pub type Space = spaces::PseudometricSpace<Rational>;
pub type Relation = spaces::FuzzyRelation<Rational>;
pub type Dist = distributions::Distribution<Rational>;
pub type Predicate = distributions::FuzzyPredicate<Rational>;
pub type Convex = convex_powerset::ConvexSet<Rational>;
