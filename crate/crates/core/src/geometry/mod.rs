//! Points, closed convex sets, and convex functions on `R^n`.
//!
//! The ambient space is `R^n` with the standard inner product; in finite
//! dimension weak and norm convergence coincide.

mod function;
mod point;
mod set;

pub use function::{AffinePiece, ConvexFunction};
pub use point::Point;
pub use set::{AffineSubspace, ConvexSet, Erosion};
