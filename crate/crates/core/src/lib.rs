//! Spacelike graphs over compact fibers of Generalized Robertson-Walker
//! spacetimes `I ×_f F` with metric `-dt² + f(t)² g`.
//!
//! The crate is organised bottom-up:
//!
//! * [`fiber`]: discrete compact fibers (circle, flat torus, icosphere) with
//!   gradient, divergence, Laplacian and integration that are exactly adjoint
//!   with respect to the lumped measure.
//! * [`warp`]: warping function catalog and curvature-condition evaluators
//!   (Hubble function, null convergence margin, Einstein conditions).
//! * [`graph`]: geometry of a spacelike graph `{(u(p), p)}`: mean curvature,
//!   volume, the action functional, shape operator and Newton transformations.
//! * [`identities`]: refinement-ladder checks of the geometric identities and
//!   a classifier for the uniqueness theorems.
//! * [`solver`]: Jacobian-free Newton-Krylov solver for `H(u) = f'(u)/f(u)`.
//!
//! The crate is `no_std` (with `alloc`); the `std` feature only switches the
//! standard library back on for downstream convenience.

#![cfg_attr(not(any(feature = "std", test)), no_std)]

extern crate alloc;

mod error;
pub mod fiber;
pub mod graph;
pub mod identities;
pub mod linalg;
mod math;
pub mod solver;
pub mod sum;
pub mod testfield;
pub mod warp;

pub use error::{Error, Result};
pub use fiber::{Backend, FiberMesh};
pub use graph::{GraphFunction, GraphGeometry};
pub use solver::{SolveConfig, SolveReport, Verdict};
pub use warp::{Interval, WarpSpec};

/// Crate version string embedded in reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
