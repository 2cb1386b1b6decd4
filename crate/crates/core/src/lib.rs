//! Reduced-order modelling of geometrically nonlinear structures.
//!
//! The crate builds total-Lagrangian finite-element models (6-node plane-stress
//! triangles and a 2-node von Kármán beam), extracts vibration modes and Krylov
//! vectors, differentiates the tangent stiffness to obtain static (modal)
//! derivatives and full modal derivatives, and assembles either a quadratic
//! manifold `u = Vz + ½Θzz` or a deflated linear basis from them. Full and
//! reduced systems are marched in time by the same HHT-α/Newton integrator, and
//! the results are compared through the mass-weighted global relative error.
//!
//! Everything here is pure computation on `alloc` collections; file formats,
//! caching and the command line live in the `qmrom` companion crate.

#![no_std]
#![allow(
    clippy::needless_range_loop,
    clippy::neg_cmp_op_on_partial_ord,
    clippy::excessive_precision
)]

extern crate alloc;
#[cfg(test)]
#[macro_use]
extern crate std;

pub mod basis;
pub mod error;
pub mod fem;
pub mod integrate;
pub mod mesh;
pub mod methods;
pub mod metrics;
pub mod numerics;
pub mod rom;
pub mod scenarios;

pub use error::{Error, Result};

/// Dense column vector used throughout the crate.
pub type Vector = nalgebra::DVector<f64>;
/// Dense column-major matrix used throughout the crate.
pub type Matrix = nalgebra::DMatrix<f64>;
