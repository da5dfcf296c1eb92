//! Lyapunov functions, theoretical rate bounds, reference minimizers and
//! the SAGA constants checker.
//!
//! Expectation statements are checked by averaging over every index `j`
//! ([`exhaustive_mean`]) rather than by sampling, so on small instances they
//! become exact finite sums.

mod bounds;
mod constants;
mod lyapunov;
mod reference;

pub use bounds::{finito_beta, finito_reduction, finito_rho, rate_bound, sdca_rho, svrg_c4, Quantity, RateBound, Shape};
pub use constants::{saga_constants_check, ConstantsMode, ConstantsReport, SagaConstants};
pub use lyapunov::{
    finito_lyapunov, lyapunov, miso_lyapunov, prox_finito_lower_bound, prox_finito_lyapunov, saga_lyapunov,
    LyapunovValue,
};
pub use reference::{gradient_map_norm, reference_minimizer, reference_with, ReferenceMode, DEFAULT_TOL};

use crate::error::Result;
use crate::problem::FiniteSumProblem;
use crate::solvers::{Oracle, Solver};

/// `(1/n) Σ_j value(step(state, j))`: the exact expectation of `value` after
/// one uniformly sampled step.
pub fn exhaustive_mean<S, F>(state: &S, p: &FiniteSumProblem, mut value: F) -> Result<f64>
where
    S: Solver + Clone,
    F: FnMut(&S) -> Result<f64>,
{
    let mut total = 0.0;
    for j in 0..p.n() {
        let mut next = state.clone();
        let mut oracle = Oracle::new(p);
        next.step(&mut oracle, j)?;
        total += value(&next)?;
    }
    Ok(total / p.n() as f64)
}

/// Same as [`exhaustive_mean`] for vector-valued functions.
pub fn exhaustive_mean_vec<S, F>(state: &S, p: &FiniteSumProblem, mut value: F) -> Result<Vec<f64>>
where
    S: Solver + Clone,
    F: FnMut(&S) -> Vec<f64>,
{
    let mut total: Option<Vec<f64>> = None;
    for j in 0..p.n() {
        let mut next = state.clone();
        let mut oracle = Oracle::new(p);
        next.step(&mut oracle, j)?;
        let v = value(&next);
        match &mut total {
            None => total = Some(v),
            Some(t) => crate::linalg::axpy(1.0, &v, t),
        }
    }
    let mut t = total.unwrap_or_default();
    crate::linalg::scale(1.0 / p.n() as f64, &mut t);
    Ok(t)
}
