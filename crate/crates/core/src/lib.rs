//! Exact evaluation of Kontsevich (micro-)graphs into multivector fields for
//! Nambu-determinant Poisson structures on ℝ², ℝ³ and ℝ⁴, together with the
//! sparse rational linear algebra used to solve graph-coefficient systems.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod error;
pub mod eval;
pub mod fixtures;
pub mod graph;
pub mod jet;
pub mod linalg;
pub mod multivector;
pub mod nambu;
pub mod parse;
pub mod pipeline;
pub mod rational;
pub mod tetra;

pub use error::Error;
pub use graph::{canonical_form, CanonicalForm, MicroGraph, VertexRole};
pub use jet::{DiffPolynomial, Field, JetRing, JetVariable, Monomial};
pub use multivector::Multivector;
pub use rational::Rational;
