//! Assembly of the regularized and penalized pseudo-moment relaxations,
//! recovery of the dual sum-of-squares certificate, and independent
//! certificate verification.
//!
//! At relaxation level `d` the moment side optimizes over pseudo-moment
//! vectors `y` indexed by the orthonormal basis up to degree `2d`, subject
//! to `l_y(1) = 1` and positive semidefiniteness of the moment and
//! localizing matrices `M_{d-d_j}(g_j y)`. The regularized variant adds
//! `eps * ||y||_2` to the objective through a second-order cone; the
//! penalized variant instead constrains `||y||_2 <= c_{2d}` with a
//! Bernstein-Markov constant, which makes the dual optimum a certified
//! lower bound on the global minimum.
//!
//! Working in the orthonormal basis end to end keeps `||y||_2` equal to the
//! dual `L^2(mu)` norm, so the norm constraint is exactly a Euclidean
//! second-order cone on the decision vector.

mod assemble;
mod certificate;
mod instance;
mod operators;

pub use assemble::{assemble, assemble_sos_direct, assemble_standard, Assembly, Layout, Mode};
pub use certificate::{
    certified_bound, recover_certificate, verify_certificate, BoundRecord, Certificate,
    VerificationReport,
};
pub use instance::POPInstance;
pub use operators::{build_operators, MomentOperators, OperatorBlock};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum MomentError {
    #[error("relaxation level {d} is below the minimum admissible level {min}")]
    LevelTooSmall { d: usize, min: usize },
    #[error(transparent)]
    Basis(#[from] crate::basis1d::BasisError),
    #[error("conic program assembly failed: {0}")]
    Program(#[from] regmomsos_conic::ProgramError),
    #[error("dual multipliers unavailable; the solver did not converge dually")]
    MissingDuals,
}
