//! Newton polytopes of bracket determinants, the generalized affine
//! arclength weight, flow-map jets, and numerical estimators for weighted
//! multilinear Radon-like forms
//! `∫ ∏_j f_j(π_j(x)) ρ(x) a(x) dx`.
//!
//! The algebra (polynomials, vector fields, jets, the simplex solver) is
//! generic over [`scalar::Scalar`]; exact work uses [`Rational`].

pub mod arclength;
pub mod error;
pub mod estimator;
pub mod field;
pub mod flows;
pub mod grid;
pub mod jet;
pub mod lp;
pub mod numeric;
pub mod poly;
pub mod polytope;
pub mod scalar;
pub mod systems;
pub mod tolerances;
pub mod words;

pub use error::{Error, Result};
pub use scalar::Rational;

pub type QPolynomial = poly::Polynomial<Rational>;
pub type FPolynomial = poly::Polynomial<f64>;
pub type QVectorField = field::VectorField<Rational>;
pub type FVectorField = field::VectorField<f64>;
pub type QPolyMap = field::PolyMap<Rational>;
pub type QJet = jet::Jet<Rational>;
pub type FJet = jet::Jet<f64>;
pub type QLinearProgram = lp::LinearProgram<Rational>;
pub type FLinearProgram = lp::LinearProgram<f64>;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
