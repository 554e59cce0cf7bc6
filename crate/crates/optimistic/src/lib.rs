//! Generalized optimistic methods for composite convex-concave saddle point
//! problems: first-order, second-order and p-th-order variants with an
//! adaptive bracket-and-bisect stepsize search.
//!
//! The problem is min_x max_y f(x, y) + h₁(x) − h₂(y), written as the
//! inclusion 0 ∈ F(z) + H(z) with F = (∇_x f, −∇_y f).

// `!(x > 0.0)` style checks are used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod geometry;
pub mod linalg;
pub mod linesearch;
pub mod problems;
pub mod solvers;
pub mod subsolvers;

pub use error::{Error, Result};
pub use geometry::{bregman_distance, Euclidean, MirrorMap};
pub use linesearch::{LineSearchConfig, LineSearchStatus};
pub use problems::{make_test_problem, reference_saddle_point, residual, ProblemSpec, SaddleProblem};
pub use solvers::{Method, SolverConfig, StepRecord, StopReason, Trajectory};
