//! Extrapolated simultaneous subgradient projections for convex feasibility.
//!
//! The solver iterates
//! `x_{k+1} = P_Q(x_k + alpha_k * sum_i lambda_{i,k} beta_{i,k} (T_i x_k - x_k))`
//! where each `T_i` is a metric or subgradient projection and `beta` adds a
//! vanishing overrelaxation `r_k` along each displacement.

pub mod diagnostics;
pub mod error;
pub mod experiment;
pub mod geometry;
pub mod operators;
pub mod sampling;
pub mod schedules;
pub mod solver;

pub use error::{Error, Result};
