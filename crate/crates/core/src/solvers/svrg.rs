use std::any::Any;

use super::{fixed_or, Method, Oracle, Solver, StepSize};
use crate::error::{invalid, Error, Result};
use crate::linalg;
use crate::problem::FiniteSumProblem;
use crate::prox::{self, Regularizer};
use crate::rng::CounterRng;

/// Which point becomes the new snapshot `x̃` at recalibration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum XTilde {
    #[default]
    Last,
    /// Mean of the inner iterates since the previous recalibration.
    Average,
    /// One inner iterate drawn uniformly (reservoir sampling).
    Sampled,
}

/// SVRG: `x ← x − (1/η)f_j'(x) + (1/η)[f_j'(x̃) − g]` with `g = f'(x̃)`.
///
/// [`Solver::step`] recalibrates automatically before the first inner step
/// and every `m` inner steps after that. [`Svrg::inner_step`] does not.
#[derive(Debug, Clone)]
pub struct Svrg {
    x: Vec<f64>,
    snapshot: Option<Vec<f64>>,
    g: Vec<f64>,
    eta: f64,
    m: usize,
    variant: XTilde,
    reg: Regularizer,
    inner: usize,
    recalibrations: u64,
    k: u64,
    avg: Vec<f64>,
    pick: Vec<f64>,
    rng: CounterRng,
    b1: Vec<f64>,
    b2: Vec<f64>,
}

impl Svrg {
    /// Defaults: `η = 4L`, `m = n`, last-iterate snapshot.
    pub fn new(p: &FiniteSumProblem, step: StepSize, m: Option<usize>, variant: XTilde, seed: u64, x0: &[f64]) -> Result<Self> {
        let eta = fixed_or(step, 4.0 * p.l_max(), "step")?;
        let m = m.unwrap_or(p.n());
        if m == 0 {
            return Err(invalid("svrg_m", "must be >= 1"));
        }
        let d = p.d();
        Ok(Svrg {
            x: x0.to_vec(),
            snapshot: None,
            g: vec![0.0; d],
            eta,
            m,
            variant,
            reg: *p.regularizer(),
            inner: 0,
            recalibrations: 0,
            k: 0,
            avg: vec![0.0; d],
            pick: x0.to_vec(),
            rng: CounterRng::derived(seed, 0x5_7AA6),
            b1: vec![0.0; d],
            b2: vec![0.0; d],
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }
    pub fn eta(&self) -> f64 {
        self.eta
    }
    pub fn snapshot(&self) -> Option<&[f64]> {
        self.snapshot.as_deref()
    }
    pub fn recalibrations(&self) -> u64 {
        self.recalibrations
    }

    /// Chooses the snapshot, resets `x` to it and recomputes `g` (n accesses).
    pub fn recalibrate(&mut self, oracle: &mut Oracle<'_>) -> Result<()> {
        let p = oracle.problem();
        let xt = if self.snapshot.is_none() || self.inner == 0 {
            self.x.clone()
        } else {
            match self.variant {
                XTilde::Last => self.x.clone(),
                XTilde::Average => self.avg.iter().map(|v| v / self.inner as f64).collect(),
                XTilde::Sampled => self.pick.clone(),
            }
        };
        self.g.fill(0.0);
        for i in 0..p.n() {
            oracle.term_grad(i, &xt, &mut self.b1);
            linalg::axpy(1.0, &self.b1, &mut self.g);
        }
        linalg::scale(1.0 / p.n() as f64, &mut self.g);
        self.x.copy_from_slice(&xt);
        self.snapshot = Some(xt);
        self.inner = 0;
        self.avg.fill(0.0);
        self.recalibrations += 1;
        Ok(())
    }

    /// Update direction `f_j'(x) − f_j'(x̃) + g` (two accesses).
    pub fn direction(&mut self, oracle: &mut Oracle<'_>, j: usize) -> Result<Vec<f64>> {
        let xt = self.snapshot.as_ref().ok_or(Error::NotReady("SVRG step before any recalibration"))?;
        let mut v = vec![0.0; self.x.len()];
        oracle.term_grad(j, &self.x, &mut v);
        oracle.term_grad(j, xt, &mut self.b2);
        for k in 0..v.len() {
            v[k] += self.g[k] - self.b2[k];
        }
        Ok(v)
    }

    pub fn inner_step(&mut self, oracle: &mut Oracle<'_>, j: usize) -> Result<()> {
        let v = self.direction(oracle, j)?;
        linalg::axpy(-1.0 / self.eta, &v, &mut self.x);
        prox::prox_in_place(&self.reg, self.eta, &mut self.x);
        self.inner += 1;
        self.k += 1;
        linalg::axpy(1.0, &self.x, &mut self.avg);
        if self.variant == XTilde::Sampled && self.rng.below(self.inner as u64) == 0 {
            self.pick.copy_from_slice(&self.x);
        }
        Ok(())
    }
}

impl Solver for Svrg {
    fn method(&self) -> Method {
        Method::Svrg
    }

    fn step(&mut self, oracle: &mut Oracle<'_>, j: usize) -> Result<()> {
        if self.snapshot.is_none() || self.inner >= self.m {
            self.recalibrate(oracle)?;
        }
        self.inner_step(oracle, j)
    }

    fn iterate(&self) -> Vec<f64> {
        self.x.clone()
    }

    fn step_param(&self) -> f64 {
        self.eta
    }

    fn steps(&self) -> u64 {
        self.k
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
}
