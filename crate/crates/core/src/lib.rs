//! Steady heat conduction on a square plate with a circular hole, solved two
//! ways: a physics-informed tanh network trained with Adam and L-BFGS, and a
//! linear/quadratic triangular finite-element reference. The harness compares
//! both against the closed-form temperature field.

pub mod cli;
pub mod error;
pub mod fem;
pub mod geometry;
pub mod harness;
pub mod net;
pub mod numfmt;
pub mod optim;
pub mod pinn;
pub mod problem;
pub mod rng;

pub use error::{Error, Result};
