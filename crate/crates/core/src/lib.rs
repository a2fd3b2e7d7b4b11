//! Exact computation of gl_N rational R-matrices, the qKZ difference
//! operators `K_m`, the dynamical operators `L_a`, and residual checks for
//! the identities relating them.

pub mod exact;
pub mod flow;
pub mod harness;
pub mod modules;
pub mod operators;
pub mod rmatrix;
