use std::any::Any;

use super::{Method, Oracle, Solver, StepSize};
use crate::error::{invalid, Result};
use crate::problem::FiniteSumProblem;
use crate::prox::{self, Regularizer};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SgdSchedule {
    Constant(f64),
    /// `gamma_k = min(cap, theta/k)` for the k-th step (1-based).
    InverseK { theta: f64, cap: f64 },
}

impl SgdSchedule {
    /// Fixed → constant step; auto → `min(1/L, 1/(mu k))`, or `1/L` when `mu = 0`.
    pub fn from_step(p: &FiniteSumProblem, step: StepSize) -> Result<Self> {
        match step {
            StepSize::Fixed(g) if g.is_finite() && g > 0.0 => Ok(SgdSchedule::Constant(g)),
            StepSize::Fixed(g) => Err(invalid("step", format!("must be > 0, got {g}"))),
            StepSize::Auto if p.mu() > 0.0 => Ok(SgdSchedule::InverseK { theta: 1.0 / p.mu(), cap: 1.0 / p.l_max() }),
            StepSize::Auto => Ok(SgdSchedule::Constant(1.0 / p.l_max())),
        }
    }

    pub fn gamma(&self, k: u64) -> f64 {
        match *self {
            SgdSchedule::Constant(g) => g,
            SgdSchedule::InverseK { theta, cap } => (theta / k.max(1) as f64).min(cap),
        }
    }
}

/// Plain stochastic gradient steps `x ← prox(x − γ_k f_j'(x))`.
#[derive(Debug, Clone)]
pub struct Sgd {
    x: Vec<f64>,
    schedule: SgdSchedule,
    reg: Regularizer,
    k: u64,
    buf: Vec<f64>,
}

impl Sgd {
    pub fn new(p: &FiniteSumProblem, schedule: SgdSchedule, x0: &[f64]) -> Result<Self> {
        Ok(Sgd { x: x0.to_vec(), schedule, reg: *p.regularizer(), k: 0, buf: vec![0.0; p.d()] })
    }

    pub fn schedule(&self) -> SgdSchedule {
        self.schedule
    }
}

impl Solver for Sgd {
    fn method(&self) -> Method {
        Method::Sgd
    }

    fn step(&mut self, oracle: &mut Oracle<'_>, j: usize) -> Result<()> {
        self.k += 1;
        let gamma = self.schedule.gamma(self.k);
        oracle.term_grad(j, &self.x, &mut self.buf);
        crate::linalg::axpy(-gamma, &self.buf, &mut self.x);
        prox::prox_in_place(&self.reg, 1.0 / gamma, &mut self.x);
        Ok(())
    }

    fn iterate(&self) -> Vec<f64> {
        self.x.clone()
    }

    fn step_param(&self) -> f64 {
        match self.schedule {
            SgdSchedule::Constant(g) => g,
            SgdSchedule::InverseK { theta, .. } => theta,
        }
    }

    fn steps(&self) -> u64 {
        self.k
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solvers::tests::two_quadratics;

    #[test]
    fn hand_example() {
        let p = two_quadratics();
        let mut o = Oracle::new(&p);
        let mut s = Sgd::new(&p, SgdSchedule::Constant(0.5), &[0.0]).unwrap();
        s.step(&mut o, 1).unwrap();
        assert_eq!(s.iterate(), vec![1.0]);
        assert_eq!(o.evals(), 1);
    }

    #[test]
    fn stationary_term_leaves_x() {
        let p = two_quadratics();
        let mut o = Oracle::new(&p);
        let mut s = Sgd::new(&p, SgdSchedule::Constant(0.5), &[2.0]).unwrap();
        s.step(&mut o, 1).unwrap();
        assert_eq!(s.iterate(), vec![2.0]);
    }

    #[test]
    fn inverse_k_halves() {
        let sch = SgdSchedule::InverseK { theta: 1.0, cap: f64::INFINITY };
        assert_eq!(sch.gamma(2), sch.gamma(1) / 2.0);
    }
}
