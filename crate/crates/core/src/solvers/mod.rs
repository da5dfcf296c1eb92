//! Incremental gradient methods as step-driven state machines.
//!
//! Each solver owns its state and touches the problem only through an
//! [`Oracle`], which counts term accesses. A step consumes one index drawn
//! by the caller, so any [`crate::ordering::Ordering`] can drive any method.

mod finito;
mod prox_finito;
mod runner;
mod saga;
mod sag;
mod sdca;
mod sgd;
mod svrg;
mod table;

pub use finito::{Finito, FinitoStorage};
pub use prox_finito::ProxFinito;
pub use runner::{run, run_grid, RunConfig, Trace, TraceRow, TRACE_SCHEMA};
pub use sag::Sag;
pub use saga::{Saga, SagaForm, SagaJit, SagaMode, SagaTwoVar};
pub use sdca::{PrimalSdca, Sdca, SdcaInit, SdcaMode};
pub use sgd::{Sgd, SgdSchedule};
pub use svrg::{Svrg, XTilde};
pub use table::{Grad, GradientTable};

use std::any::Any;
use std::fmt;
use std::str::FromStr;

use crate::error::{invalid, Result};
use crate::problem::FiniteSumProblem;

/// Counting access to a problem's term oracles.
#[derive(Debug)]
pub struct Oracle<'a> {
    problem: &'a FiniteSumProblem,
    evals: u64,
    seen: Option<Vec<bool>>,
    unseen: usize,
}

impl<'a> Oracle<'a> {
    pub fn new(problem: &'a FiniteSumProblem) -> Self {
        Oracle { problem, evals: 0, seen: None, unseen: problem.n() }
    }

    /// Also records which indices have ever been accessed.
    pub fn tracking(problem: &'a FiniteSumProblem) -> Self {
        Oracle { problem, evals: 0, seen: Some(vec![false; problem.n()]), unseen: problem.n() }
    }

    pub fn problem(&self) -> &'a FiniteSumProblem {
        self.problem
    }

    /// Term accesses so far.
    pub fn evals(&self) -> u64 {
        self.evals
    }

    /// Indices never accessed, when tracking.
    pub fn unseen(&self) -> Option<usize> {
        self.seen.as_ref().map(|_| self.unseen)
    }

    #[inline]
    fn touch(&mut self, i: usize) {
        self.evals += 1;
        if let Some(s) = &mut self.seen {
            if !s[i] {
                s[i] = true;
                self.unseen -= 1;
            }
        }
    }

    /// `f_i(x)` with `f_i'(x)` written to `out`.
    pub fn term_grad(&mut self, i: usize, x: &[f64], out: &mut [f64]) -> f64 {
        self.touch(i);
        self.problem.term_into(i, x, Some(out))
    }

    /// `loss_i(x)` with `loss_i'(x)` written to `out`.
    pub fn loss_grad(&mut self, i: usize, x: &[f64], out: &mut [f64]) -> f64 {
        self.touch(i);
        self.problem.loss_into(i, x, Some(out))
    }

    /// Scalar loss derivative of a linear term at `a_iᵀx`.
    pub fn linear_deriv(&mut self, i: usize, x: &[f64]) -> f64 {
        self.touch(i);
        self.problem.linear_deriv(i, x).expect("linear_deriv on a non-linear problem")
    }

    /// Prox of the full term (`with_ridge`) or of the loss alone.
    pub fn prox(&mut self, i: usize, eta: f64, z: &[f64], with_ridge: bool) -> Result<(Vec<f64>, Option<f64>)> {
        self.touch(i);
        let ridge = if with_ridge { self.problem.ridge() } else { 0.0 };
        self.problem.prox_raw(i, eta, z, ridge)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Sgd,
    Sag,
    Saga,
    Saga2Var,
    Svrg,
    Finito,
    ProxFinito,
    Miso,
    Sdca,
    SdcaPrimal,
}

impl Method {
    pub const ALL: [Method; 10] = [
        Method::Sgd,
        Method::Sag,
        Method::Saga,
        Method::Saga2Var,
        Method::Svrg,
        Method::Finito,
        Method::ProxFinito,
        Method::Miso,
        Method::Sdca,
        Method::SdcaPrimal,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Method::Sgd => "sgd",
            Method::Sag => "sag",
            Method::Saga => "saga",
            Method::Saga2Var => "saga2var",
            Method::Svrg => "svrg",
            Method::Finito => "finito",
            Method::ProxFinito => "proxfinito",
            Method::Miso => "miso",
            Method::Sdca => "sdca",
            Method::SdcaPrimal => "sdca-primal",
        }
    }

    /// Whether the method accepts a nonsmooth `h`.
    pub fn supports_prox(&self) -> bool {
        matches!(self, Method::Sgd | Method::Saga | Method::Svrg)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = crate::error::Error;
    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .iter()
            .copied()
            .find(|m| m.name() == s)
            .ok_or_else(|| invalid("method", format!("unknown method `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum StepSize {
    /// Theorem default for the method.
    #[default]
    Auto,
    Fixed(f64),
}

/// Everything needed to build a solver. Fields irrelevant to the chosen
/// method are ignored.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodConfig {
    pub method: Method,
    /// Step size; for Finito the inverse-step factor α, for MISO the inverse step L,
    /// for SVRG the inverse step η.
    pub step: StepSize,
    pub saga_mode: SagaMode,
    pub saga_form: SagaForm,
    /// Start with an empty table and average over terms seen so far (SAG, SAGA, Finito).
    pub lazy_init: bool,
    pub svrg_m: Option<usize>,
    pub svrg_xtilde: XTilde,
    pub sdca_mode: SdcaMode,
    pub finito_storage: FinitoStorage,
    /// Seed for solver-internal randomness (SVRG sampled x̃).
    pub seed: u64,
    /// Record SAGA table points so its Lyapunov value can be evaluated.
    pub track_points: bool,
}

impl MethodConfig {
    pub fn new(method: Method) -> Self {
        MethodConfig {
            method,
            step: StepSize::Auto,
            saga_mode: SagaMode::Adaptive,
            saga_form: SagaForm::Canonical,
            lazy_init: false,
            svrg_m: None,
            svrg_xtilde: XTilde::Last,
            sdca_mode: SdcaMode::Exact,
            finito_storage: FinitoStorage::TwoTables,
            seed: 0,
            track_points: false,
        }
    }

    pub fn with_step(mut self, step: StepSize) -> Self {
        self.step = step;
        self
    }
}

/// Common interface of every method.
pub trait Solver: Send {
    fn method(&self) -> Method;

    /// Advances the state using term `j`.
    fn step(&mut self, oracle: &mut Oracle<'_>, j: usize) -> Result<()>;

    /// The point the method reports (see each solver for which one).
    fn iterate(&self) -> Vec<f64>;

    /// Resolved step parameter, echoed into traces.
    fn step_param(&self) -> f64;

    /// Steps taken.
    fn steps(&self) -> u64;

    /// Dual objective value, for dual methods.
    fn dual_value(&self, _problem: &FiniteSumProblem) -> Option<f64> {
        None
    }

    fn as_any(&self) -> &dyn Any;
}

/// Builds the configured solver at `x0`, performing any table initialization
/// through `oracle` (those accesses are counted).
pub fn build_solver(oracle: &mut Oracle<'_>, cfg: &MethodConfig, x0: &[f64]) -> Result<Box<dyn Solver>> {
    let p = oracle.problem();
    if x0.len() != p.d() {
        return Err(crate::error::Error::DimensionMismatch { expected: p.d(), got: x0.len() });
    }
    crate::error::check_finite(x0, "x0")?;
    if !p.regularizer().is_none() && !cfg.method.supports_prox() {
        return Err(crate::error::Error::Unsupported(format!(
            "{} does not handle a nonsmooth regularizer",
            cfg.method
        )));
    }
    Ok(match cfg.method {
        Method::Sgd => Box::new(Sgd::new(p, SgdSchedule::from_step(p, cfg.step)?, x0)?),
        Method::Sag => Box::new(Sag::new(oracle, cfg.step, cfg.lazy_init, x0)?),
        Method::Saga => match cfg.saga_form {
            SagaForm::Jit => Box::new(SagaJit::new(oracle, cfg.step, cfg.saga_mode, x0)?),
            form => {
                let mut s = Saga::new(oracle, cfg.step, cfg.saga_mode, form, cfg.lazy_init, x0)?;
                if cfg.track_points && form == SagaForm::Canonical && !cfg.lazy_init {
                    s.track_points()?;
                }
                Box::new(s)
            }
        },
        Method::Saga2Var => Box::new(SagaTwoVar::new(oracle, cfg.step, cfg.saga_mode, x0)?),
        Method::Svrg => Box::new(Svrg::new(p, cfg.step, cfg.svrg_m, cfg.svrg_xtilde, cfg.seed, x0)?),
        Method::Finito => Box::new(Finito::finito(oracle, cfg.step, cfg.lazy_init, cfg.finito_storage, x0)?),
        Method::Miso => Box::new(Finito::miso(oracle, cfg.step, x0)?),
        Method::ProxFinito => Box::new(ProxFinito::new(oracle, x0)?),
        Method::Sdca => Box::new(Sdca::new(oracle, cfg.sdca_mode, SdcaInit::Zero)?),
        Method::SdcaPrimal => Box::new(PrimalSdca::new(oracle, x0)?),
    })
}

pub(crate) fn fixed_or(step: StepSize, auto: f64, name: &'static str) -> Result<f64> {
    match step {
        StepSize::Auto => Ok(auto),
        StepSize::Fixed(v) if v.is_finite() && v > 0.0 => Ok(v),
        StepSize::Fixed(v) => Err(invalid(name, format!("must be finite and > 0, got {v}"))),
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use crate::problem::{FiniteSumProblem, QuadraticTerms};
    use crate::prox::Regularizer;

    /// `f_i(x) = ½(x − a_i)²`, `a = [0, 2]`: `μ = L = 1`, `x* = 1`.
    pub(crate) fn two_quadratics() -> FiniteSumProblem {
        let t = QuadraticTerms::scalar(&[1.0, 1.0], &[0.0, 2.0]).unwrap();
        FiniteSumProblem::quadratic(t, 0.0, Regularizer::None).unwrap()
    }
}
