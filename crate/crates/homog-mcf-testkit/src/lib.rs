//! Test-only oracles and fixtures for the solver crates.
//!
//! Everything here is computed independently of the grid solvers it is used
//! to check: the expander constant comes from a shooting ODE, the expanding
//! corner solution from a geometric front-tracking construction, and the RNG
//! is a self-contained SplitMix64 so property tests stay reproducible
//! forever.

pub mod expander;
pub mod front_tracking;
pub mod rng;
