//! Regularized and penalized moment-SOS hierarchies for polynomial
//! optimization over basic semialgebraic sets.
//!
//! The pipeline: polynomials come in monomial form, are rewritten over a
//! tensor orthonormal basis of a reference product measure
//! ([`basis1d`], [`poly`]), assembled into conic moment relaxations
//! ([`momentsos`]), solved by the companion interior-point crate, and turned
//! into certified lower bounds using Bernstein-Markov constants ([`bm`])
//! with independent verification against brute-force oracles ([`oracle`]).
//! [`driver`] orchestrates runs across relaxation levels.

pub mod basis1d;
pub mod bench;
pub mod driver;
pub mod momentsos;
pub mod bm;
pub mod oracle;
pub mod poly;

pub use basis1d::MeasureFamily;
