//! Incremental gradient methods for finite sums of convex functions.
//!
//! A problem is `F(x) = (1/n) Σ f_i(x) + h(x)` with smooth `f_i` and an
//! optional nonsmooth `h` handled through its proximal operator. The
//! [`solvers`] share one [`solvers::Solver`] interface and are driven by
//! [`solvers::run`], which records traces with optional theoretical bounds
//! from [`diagnostics`].

pub mod bench_cli;
pub mod diagnostics;
pub mod error;
pub mod linalg;
pub mod ordering;
pub mod problem;
pub mod prox;
pub mod rng;
pub mod solvers;
pub mod verify;

pub use error::{Error, Result};
pub use problem::FiniteSumProblem;
pub use solvers::{Method, MethodConfig, Solver, StepSize};
