//! Stochastic adaptive regularization with cubics.
//!
//! The crate is organized bottom-up:
//!
//! * [`problems`]: benchmark objectives with analytic derivatives;
//! * [`oracles`]: stochastic value, gradient and Hessian estimators;
//! * [`subproblem`]: global minimization of the cubic model;
//! * [`driver`]: the outer loop, telemetry and per-iteration checks;
//! * [`analysis`]: constants and probability bounds for the iteration count.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod driver;
pub mod oracles;
pub mod problems;
pub mod rng;
pub mod subproblem;
