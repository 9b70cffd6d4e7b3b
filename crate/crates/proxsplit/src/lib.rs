//! Splitting proximal point methods for minimizing a finite sum of
//! prox-convex functions over a box.
//!
//! The library solves
//!
//! ```text
//! min { f(x) = f_1(x) + ... + f_N(x) : x in K },   K a box in R^n,
//! ```
//!
//! where each component `f_i` is built from structured pieces acting on
//! disjoint coordinate blocks: a 1-D nonconvex quadratic `-t^2 - t`, a 1-D
//! piece `5t + ln(10t + 1)`, or a PSD quadratic form `u' M u`. Each piece has
//! an exact (or high-accuracy) constrained proximal operator, so the sum can
//! be minimized by applying one component prox at a time:
//!
//! * [`methods::run_cyclic`] / [`methods::run_permuted`] — one outer cycle
//!   applies all `N` component proxes in a fixed or per-cycle random order;
//! * [`methods::run_stochastic`] — each step applies the prox of one
//!   uniformly sampled component.
//!
//! Both use a diminishing stepsize schedule `beta_k = c / (k+1)^p`. The
//! [`diagnostics`] module machine-checks the descent inequalities these
//! methods satisfy, and [`bench`] generates the random nonconvex quadratic
//! test family, an independent ground-truth minimizer, and CSV experiment
//! output. The `proxsplit` binary exposes all of it (`gen`, `run`, `bench`,
//! `check`).
//!
//! Core types are generic over the scalar via [`scalar::Scalar`] (`f32` or
//! `f64`); concrete `f64` aliases are exported at the crate root.

// Negated comparisons like `!(beta > 0)` are used on purpose: they reject
// NaN arguments along with out-of-range ones.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod diagnostics;
pub mod domain;
pub mod error;
pub mod linalg;
pub mod methods;
pub mod prox;
pub mod rng;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// `f64` aliases for the domain types; the CLI and benchmark harness use these.
pub type BoxSet64 = domain::BoxSet<f64>;
pub type BlockPiece64 = domain::BlockPiece<f64>;
pub type Component64 = domain::Component<f64>;
pub type Problem64 = domain::Problem<f64>;
pub type Schedule64 = domain::Schedule<f64>;
pub type StoppingRule64 = domain::StoppingRule<f64>;
pub type Trace64 = domain::Trace<f64>;
pub type SymMatrix64 = linalg::SymMatrix<f64>;
