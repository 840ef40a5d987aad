//! Numerical core for forced mean curvature flow of graphs in a periodic
//! (laminated) medium, and for its homogenization limit.
//!
//! The crate provides, on uniform 1-d/2-d grids:
//!
//! - the quasilinear graph operator with a periodic forcing term and its
//!   gradient-cutoff modification ([`operator`], [`force`]),
//! - explicit monotone time stepping for the flow itself and for the
//!   small-scale ("epsilon") problem ([`parabolic`]),
//! - the discounted cell problem, correctors, and tabulated effective
//!   Hamiltonians ([`cell`]),
//! - a Lax–Friedrichs solver for the effective first-order equation ([`hj`]),
//! - convergence-rate experiments: sweeps over the medium period, the expanding
//!   cone example, and a priori monitor suites ([`experiments`]).
//!
//! The crate is `no_std` (with `alloc`); all file formats, configuration and
//! the command line live in the companion `homog-mcf` crate.

#![no_std]

extern crate alloc;

pub mod cell;
pub mod error;
pub mod experiments;
pub mod force;
pub mod grid;
pub mod hj;
pub mod linalg;
pub mod operator;
pub mod parabolic;

pub use error::{CoreError, Result};
