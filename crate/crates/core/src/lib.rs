// Negated float comparisons are deliberate: they reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod birman_schwinger;
pub mod cli;
pub mod error;
mod fem;
pub mod fourier_bessel;
pub mod halfline;
pub mod linalg;
pub mod mesh;
pub mod potential;
pub mod quad;
pub mod special;
pub mod tree;
pub mod tree_solver;

pub use error::{Error, Result};
