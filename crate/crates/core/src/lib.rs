//! Discrete logarithms over GF(2^n), represented in type-II optimal normal
//! bases, reduced to QUBO instances and solved by exhaustive search or
//! simulated annealing.

pub mod cli;
pub mod dlp_transform;
pub mod error;
pub mod gf2_poly;
pub mod normal_basis;
pub mod pseudo_boolean;
pub mod qubo;
pub mod verify_stats;

pub use dlp_transform::{transform, DlpInstance, TransformResult};
pub use error::{Error, Result};
pub use gf2_poly::Gf2Poly;
pub use normal_basis::{BitMatrix, FieldParams, NbElement};
