//! A desk-scale numerical laboratory for electric networks, quantum walks on
//! the edge (arc) space, zero-error transducers with explicit catalysts,
//! phase-estimation resistance estimators, electric-flow sampling ("elfs"),
//! span-program witness sizes, and expander / label-propagation experiments.
//!
//! Everything is dense linear algebra at small scale: graphs up to a couple
//! thousand vertices, arc spaces up to about a thousand dimensions. The point
//! is exactness of identity checks, not speed.

pub mod edge_space;
pub mod electric;
pub mod elfs;
pub mod error;
pub mod estimator;
pub mod expander;
pub mod graph;
pub mod linalg;
pub mod span_program;
pub mod transducer;
pub mod walk;

pub use error::{Error, Result};

/// Relative residual target for linear solves.
pub const SOLVER_TOL: f64 = 1e-10;
/// Tolerance for exact algebraic identities (leaves headroom over the solver).
pub const IDENTITY_TOL: f64 = 1e-8;
/// Tolerance for transduction-certificate residuals.
pub const CERT_TOL: f64 = 1e-9;
/// Relative singular-value cutoff for pseudoinverses and kernel extraction.
pub const PINV_CUT: f64 = 1e-10;
