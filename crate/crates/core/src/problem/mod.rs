//! Finite-sum objectives `f(x) = (1/n) Σ f_i(x)` plus an optional nonsmooth `h`.
//!
//! Canonical form keeps a ridge term `(ridge/2)‖x‖²` inside every `f_i`, so
//! `f_i = loss_i + (ridge/2)‖x‖²`. Dual methods work on `loss_i` alone and carry
//! `ridge` as the explicit regularizer; see [`FiniteSumProblem::loss_eval`].
//!
//! Term indices are 0-based throughout the library.

mod libsvm;
pub(crate) mod linear;
mod quadratic;
pub mod synthetic;

pub use libsvm::{load_libsvm, parse_libsvm};
pub use linear::{LinearModelData, LossKind};
pub use quadratic::QuadraticTerms;

use std::sync::OnceLock;

use crate::error::{check_finite, invalid, Error, Result};
use crate::linalg::{self, SparseRow};
use crate::prox::Regularizer;
use crate::rng::CounterRng;

/// Where the strong-convexity constant lives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Convention {
    /// `(mu/2)‖x‖²` is part of every term (primal methods).
    MuInside,
    /// Terms are bare losses, `mu` is a separate regularizer (dual methods).
    ExplicitRegularizer,
}

#[derive(Debug, Clone)]
pub enum Terms {
    Linear(LinearModelData),
    Quadratic(QuadraticTerms),
}

/// Minimizer of `F = f + h` with its value.
#[derive(Debug, Clone, PartialEq)]
pub struct Reference {
    pub x: Vec<f64>,
    pub f: f64,
    /// Norm of the gradient map at `x` (0 for closed forms).
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub struct FiniteSumProblem {
    terms: Terms,
    n: usize,
    d: usize,
    ridge: f64,
    mu: f64,
    lipschitz: Vec<f64>,
    l_max: f64,
    l_mean: f64,
    reg: Regularizer,
    known_optimum: Option<Reference>,
    pub(crate) reference: OnceLock<Reference>,
    label: String,
}

/// Result of [`estimate_constants`].
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantsReport {
    pub lipschitz: Vec<f64>,
    pub l_max: f64,
    pub l_mean: f64,
    /// Sampled strong-convexity lower bound held on every pair.
    pub mu_check: bool,
    pub pairs_checked: usize,
}

impl FiniteSumProblem {
    pub fn linear(data: LinearModelData, ridge: f64, reg: Regularizer) -> Result<Self> {
        check_ridge(ridge)?;
        reg.validate()?;
        let lipschitz: Vec<f64> = (0..data.n()).map(|i| data.loss_smoothness(i) + ridge).collect();
        let label = format!("linear-{}", data.loss().name());
        Self::assemble(Terms::Linear(data), ridge, ridge, lipschitz, reg, label)
    }

    pub fn quadratic(terms: QuadraticTerms, ridge: f64, reg: Regularizer) -> Result<Self> {
        check_ridge(ridge)?;
        reg.validate()?;
        let lipschitz: Vec<f64> = (0..terms.n()).map(|i| terms.max_curvature(i) + ridge).collect();
        let mu = ridge + terms.min_curvature();
        Self::assemble(Terms::Quadratic(terms), ridge, mu, lipschitz, reg, "quadratic".into())
    }

    /// `f_i(w) = (n/2)(w_i − 1)² + ½‖w‖²` on `R^n`.
    pub fn worst_case(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(invalid("n", "must be >= 1"));
        }
        let rows = (0..n).map(SparseRow::unit).collect();
        let data = LinearModelData::new(rows, vec![1.0; n], LossKind::Squared, n)?
            .with_loss_weight(n as f64)?;
        let mut p = Self::linear(data, 1.0, Regularizer::None)?;
        p.known_optimum = Some(Reference {
            x: vec![0.5; n],
            f: n as f64 / 4.0,
            residual: 0.0,
        });
        p.label = "worstcase".into();
        Ok(p)
    }

    fn assemble(
        terms: Terms,
        ridge: f64,
        mu: f64,
        lipschitz: Vec<f64>,
        reg: Regularizer,
        label: String,
    ) -> Result<Self> {
        let (n, d) = match &terms {
            Terms::Linear(t) => (t.n(), t.d()),
            Terms::Quadratic(t) => (t.n(), t.d()),
        };
        if n == 0 || d == 0 {
            return Err(invalid("terms", "need n >= 1 and d >= 1"));
        }
        let mut p = FiniteSumProblem {
            terms,
            n,
            d,
            ridge,
            mu,
            lipschitz: Vec::new(),
            l_max: 0.0,
            l_mean: 0.0,
            reg,
            known_optimum: None,
            reference: OnceLock::new(),
            label,
        };
        p.set_lipschitz(lipschitz)?;
        Ok(p)
    }

    fn set_lipschitz(&mut self, l: Vec<f64>) -> Result<()> {
        if l.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: l.len(),
            });
        }
        // A term with zero curvature (e.g. an all-zero row, no ridge) still needs L_i > 0.
        let l: Vec<f64> = l.into_iter().map(|v| v.max(self.mu).max(f64::MIN_POSITIVE)).collect();
        if l.iter().any(|v| !v.is_finite()) {
            return Err(invalid("lipschitz", "non-finite constant"));
        }
        self.l_max = l.iter().copied().fold(0.0, f64::max);
        self.l_mean = l.iter().sum::<f64>() / self.n as f64;
        self.lipschitz = l;
        Ok(())
    }

    /// Replace the per-term constants with user-declared ones.
    /// Use [`estimate_constants`] to check them against sampled pairs.
    pub fn with_lipschitz(mut self, l: Vec<f64>) -> Result<Self> {
        self.set_lipschitz(l)?;
        self.reference = OnceLock::new();
        Ok(self)
    }

    pub fn with_regularizer(mut self, reg: Regularizer) -> Result<Self> {
        reg.validate()?;
        self.reg = reg;
        self.reference = OnceLock::new();
        if !reg.is_none() {
            self.known_optimum = None;
        }
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn d(&self) -> usize {
        self.d
    }
    pub fn mu(&self) -> f64 {
        self.mu
    }
    /// Ridge weight inside each term; the explicit regularizer of the dual view.
    pub fn ridge(&self) -> f64 {
        self.ridge
    }
    pub fn lipschitz(&self) -> &[f64] {
        &self.lipschitz
    }
    pub fn l_max(&self) -> f64 {
        self.l_max
    }
    pub fn l_mean(&self) -> f64 {
        self.l_mean
    }
    /// Smoothness of `loss_i` alone.
    pub fn loss_lipschitz(&self, i: usize) -> f64 {
        (self.lipschitz[i] - self.ridge).max(0.0)
    }
    pub fn loss_l_max(&self) -> f64 {
        (0..self.n).map(|i| self.loss_lipschitz(i)).fold(0.0, f64::max)
    }
    pub fn regularizer(&self) -> &Regularizer {
        &self.reg
    }
    pub fn convention(&self) -> Convention {
        Convention::MuInside
    }
    pub fn terms(&self) -> &Terms {
        &self.terms
    }
    pub fn linear_data(&self) -> Option<&LinearModelData> {
        match &self.terms {
            Terms::Linear(t) => Some(t),
            _ => None,
        }
    }
    pub fn label(&self) -> &str {
        &self.label
    }
    pub fn known_optimum(&self) -> Option<&Reference> {
        self.known_optimum.as_ref()
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i < self.n {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange { index: i, n: self.n })
        }
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                got: x.len(),
            });
        }
        check_finite(x, "point")
    }

    /// `loss_i(x)`; writes `loss_i'(x)` into `grad` when given.
    pub(crate) fn loss_into(&self, i: usize, x: &[f64], grad: Option<&mut [f64]>) -> f64 {
        match &self.terms {
            Terms::Linear(t) => {
                let s = t.row(i).dot(x);
                let (v, dv) = t.loss_at(i, s);
                if let Some(g) = grad {
                    g.fill(0.0);
                    t.row(i).axpy_into(dv, g);
                }
                v
            }
            Terms::Quadratic(t) => t.eval_into(i, x, grad),
        }
    }

    /// `f_i(x)`; writes `f_i'(x)` into `grad` when given. No validation, no counting.
    pub(crate) fn term_into(&self, i: usize, x: &[f64], grad: Option<&mut [f64]>) -> f64 {
        match grad {
            Some(g) => {
                let v = self.loss_into(i, x, Some(&mut *g));
                if self.ridge != 0.0 {
                    linalg::axpy(self.ridge, x, g);
                }
                v + 0.5 * self.ridge * linalg::norm_sq(x)
            }
            None => self.loss_into(i, x, None) + 0.5 * self.ridge * linalg::norm_sq(x),
        }
    }

    /// Loss derivative along the row of a linear term: `loss_i'(x) = d·a_i`.
    pub(crate) fn linear_deriv(&self, i: usize, x: &[f64]) -> Option<f64> {
        self.linear_data().map(|t| t.loss_at(i, t.row(i).dot(x)).1)
    }

    /// `(f_i(x), f_i'(x))`.
    pub fn eval_term(&self, i: usize, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        self.check_index(i)?;
        self.check_point(x)?;
        let mut g = vec![0.0; self.d];
        let v = self.term_into(i, x, Some(&mut g));
        Ok((v, g))
    }

    /// `(loss_i(x), loss_i'(x))`: the term with its ridge part removed.
    pub fn loss_eval(&self, i: usize, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        self.check_index(i)?;
        self.check_point(x)?;
        let mut g = vec![0.0; self.d];
        let v = self.loss_into(i, x, Some(&mut g));
        Ok((v, g))
    }

    /// Smooth part `f(x)` only.
    pub fn smooth_value(&self, x: &[f64]) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n {
            s += self.loss_into(i, x, None);
        }
        s / self.n as f64 + 0.5 * self.ridge * linalg::norm_sq(x)
    }

    /// `f'(x)`.
    pub fn smooth_grad(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.d];
        match &self.terms {
            Terms::Linear(t) => {
                for i in 0..self.n {
                    let (_, dv) = t.loss_at(i, t.row(i).dot(x));
                    t.row(i).axpy_into(dv, &mut g);
                }
            }
            Terms::Quadratic(_) => {
                let mut gi = vec![0.0; self.d];
                for i in 0..self.n {
                    self.loss_into(i, x, Some(&mut gi));
                    linalg::axpy(1.0, &gi, &mut g);
                }
            }
        }
        let inv = 1.0 / self.n as f64;
        for k in 0..self.d {
            g[k] = g[k] * inv + self.ridge * x[k];
        }
        g
    }

    /// `F(x) = f(x) + h(x)`.
    pub fn objective(&self, x: &[f64]) -> f64 {
        self.smooth_value(x) + self.reg.value(x)
    }

    /// `(F(x), f'(x))`: the value includes `h`, the gradient does not.
    pub fn eval_full(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        self.check_point(x)?;
        Ok((self.objective(x), self.smooth_grad(x)))
    }

    /// `argmin_x f_i(x) + (eta/2)‖x − z‖²` and `f_i'(phi) = eta(z − phi)`.
    pub fn prox_term(&self, i: usize, eta: f64, z: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        self.prox_checked(i, eta, z, self.ridge)
    }

    /// As [`prox_term`](Self::prox_term) on `loss_i` alone (dual view).
    pub fn prox_loss(&self, i: usize, eta: f64, z: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        self.prox_checked(i, eta, z, 0.0)
    }

    fn prox_checked(&self, i: usize, eta: f64, z: &[f64], ridge: f64) -> Result<(Vec<f64>, Vec<f64>)> {
        self.check_index(i)?;
        self.check_point(z)?;
        if !(eta.is_finite() && eta > 0.0) {
            return Err(invalid("eta", format!("must be finite and > 0, got {eta}")));
        }
        let phi = self.prox_raw(i, eta, z, ridge)?.0;
        let g = z.iter().zip(&phi).map(|(zk, pk)| eta * (zk - pk)).collect();
        Ok((phi, g))
    }

    /// Returns `phi` and, for linear terms, the loss derivative at `a_i·phi`.
    pub(crate) fn prox_raw(&self, i: usize, eta: f64, z: &[f64], ridge: f64) -> Result<(Vec<f64>, Option<f64>)> {
        match &self.terms {
            Terms::Linear(t) => {
                let (phi, dv) = t.prox(i, eta, ridge, z)?;
                Ok((phi, Some(dv)))
            }
            Terms::Quadratic(t) => Ok((t.prox(i, eta, ridge, z)?, None)),
        }
    }
}

fn check_ridge(r: f64) -> Result<()> {
    if r.is_finite() && r >= 0.0 {
        Ok(())
    } else {
        Err(invalid("l2", format!("must be finite and >= 0, got {r}")))
    }
}

/// `true` iff `n >= beta·L/mu`.
pub fn big_data_check(problem: &FiniteSumProblem, beta: f64) -> Result<bool> {
    if !(beta.is_finite() && beta >= 1.0) {
        return Err(invalid("beta", format!("must be >= 1, got {beta}")));
    }
    if problem.mu() <= 0.0 {
        return Err(Error::NotStronglyConvex(problem.mu()));
    }
    Ok(problem.n() as f64 >= beta * problem.l_max() / problem.mu())
}

/// Closed-form or spectral constants, checked against sampled pairs.
///
/// The declared `L_i` of `problem` are verified on `samples` random pairs
/// per term; violations are reported as [`Error::ConstantViolation`].
pub fn estimate_constants(problem: &FiniteSumProblem, samples: usize, seed: u64) -> Result<ConstantsReport> {
    use rand_distr::{Distribution, StandardNormal};
    if samples == 0 {
        return Err(invalid("samples", "must be >= 1"));
    }
    let n = problem.n();
    let d = problem.d();
    let lipschitz: Vec<f64> = match problem.terms() {
        Terms::Linear(t) => (0..n).map(|i| t.loss_smoothness(i) + problem.ridge()).collect(),
        Terms::Quadratic(t) => (0..n).map(|i| t.max_curvature(i) + problem.ridge()).collect(),
    };
    let mut rng = CounterRng::derived(seed, 0xC0_57A7);
    let mut violations = 0usize;
    let mut worst: f64 = 0.0;
    let mut mu_ok = true;
    let (mut gx, mut gy) = (vec![0.0; d], vec![0.0; d]);
    for i in 0..n {
        for _ in 0..samples {
            let x: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
            let y: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
            let fx = problem.term_into(i, &x, Some(&mut gx));
            let fy = problem.term_into(i, &y, Some(&mut gy));
            let dx = linalg::dist_sq(&x, &y).sqrt();
            let dg = linalg::dist_sq(&gx, &gy).sqrt();
            let declared = problem.lipschitz()[i];
            if dg > declared * dx * (1.0 + 1e-9) + 1e-12 {
                violations += 1;
                worst = worst.max(dg / (declared * dx));
            }
            let diff = linalg::sub(&y, &x);
            let lb = fx + linalg::dot(&gx, &diff) + 0.5 * problem.mu() * dx * dx;
            if fy - lb < -1e-9 * fy.abs().max(lb.abs()).max(1.0) {
                mu_ok = false;
            }
        }
    }
    if violations > 0 {
        return Err(Error::ConstantViolation { count: violations, worst });
    }
    let l_max = lipschitz.iter().copied().fold(0.0, f64::max);
    let l_mean = lipschitz.iter().sum::<f64>() / n as f64;
    Ok(ConstantsReport {
        lipschitz,
        l_max,
        l_mean,
        mu_check: mu_ok,
        pairs_checked: n * samples,
    })
}

/// The `(1 − 1/n)^k` lower-bound instance.
pub fn worst_case_problem(n: usize) -> Result<FiniteSumProblem> {
    FiniteSumProblem::worst_case(n)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn two_quadratics() -> FiniteSumProblem {
        // f_i(x) = ½(x − a_i)², a = [0, 2], as squared loss with unit rows.
        let rows = vec![SparseRow::unit(0), SparseRow::unit(0)];
        let data = LinearModelData::new(rows, vec![0.0, 2.0], LossKind::Squared, 1).unwrap();
        FiniteSumProblem::linear(data, 0.0, Regularizer::None).unwrap()
    }

    #[test]
    fn quadratic_term_example() {
        let p = two_quadratics();
        assert_eq!(p.eval_term(1, &[0.0]).unwrap(), (2.0, vec![-2.0]));
    }

    #[test]
    fn zero_row_logistic_term() {
        let data = LinearModelData::new(vec![SparseRow::default()], vec![1.0], LossKind::Logistic, 3).unwrap();
        let p = FiniteSumProblem::linear(data, 0.0, Regularizer::None).unwrap();
        let (v, g) = p.eval_term(0, &[0.3, -1.0, 2.0]).unwrap();
        assert!((v - 2f64.ln()).abs() < 1e-15);
        assert_eq!(g, vec![0.0; 3]);
    }

    #[test]
    fn squared_loss_example_matches_finite_differences() {
        let data = LinearModelData::new(vec![SparseRow::from_dense(&[1.0, 0.0])], vec![1.0], LossKind::Squared, 2).unwrap();
        let p = FiniteSumProblem::linear(data, 0.0, Regularizer::None).unwrap();
        let (v, g) = p.eval_term(0, &[0.0, 0.0]).unwrap();
        assert_eq!(v, 0.5);
        assert_eq!(g, vec![-1.0, 0.0]);
        let h = 1e-6;
        for k in 0..2 {
            let mut xp = vec![0.0, 0.0];
            let mut xm = vec![0.0, 0.0];
            xp[k] += h;
            xm[k] -= h;
            let fd = (p.eval_term(0, &xp).unwrap().0 - p.eval_term(0, &xm).unwrap().0) / (2.0 * h);
            assert!((fd - g[k]).abs() < 1e-8);
        }
    }

    #[test]
    fn eval_full_examples() {
        let p = two_quadratics();
        assert_eq!(p.eval_full(&[1.0]).unwrap(), (1.0 / 2.0 * 1.0, vec![0.0]));
        let w = worst_case_problem(2).unwrap();
        assert_eq!(w.eval_full(&[0.0, 0.0]).unwrap().0, 1.0);
    }

    #[test]
    fn single_term_full_equals_term() {
        let data = LinearModelData::new(vec![SparseRow::from_dense(&[0.5, -1.0])], vec![1.0], LossKind::Logistic, 2).unwrap();
        let p = FiniteSumProblem::linear(data, 0.2, Regularizer::None).unwrap();
        let x = [0.3, 0.7];
        let (v, g) = p.eval_full(&x).unwrap();
        let (vt, gt) = p.eval_term(0, &x).unwrap();
        assert!((v - vt).abs() < 1e-15);
        for k in 0..2 {
            assert!((g[k] - gt[k]).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let p = two_quadratics();
        assert!(matches!(p.eval_term(2, &[0.0]), Err(Error::IndexOutOfRange { index: 2, n: 2 })));
        assert!(matches!(p.eval_term(0, &[f64::NAN]), Err(Error::NonFinite(_))));
        assert!(matches!(p.eval_term(0, &[0.0, 1.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn closed_form_lipschitz_examples() {
        let row = SparseRow::from_dense(&[2.0, 0.0]);
        let data = LinearModelData::new(vec![row], vec![1.0], LossKind::Logistic, 2).unwrap();
        let p = FiniteSumProblem::linear(data, 0.1, Regularizer::None).unwrap();
        let r = estimate_constants(&p, 50, 1).unwrap();
        assert!((r.lipschitz[0] - 1.1).abs() < 1e-15);
        assert!(r.mu_check);

        let data = LinearModelData::new(vec![SparseRow::from_dense(&[0.6, 0.8])], vec![0.3], LossKind::Squared, 2).unwrap();
        let p = FiniteSumProblem::linear(data, 0.0, Regularizer::None).unwrap();
        let r = estimate_constants(&p, 50, 1).unwrap();
        assert!((r.lipschitz[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn pure_ridge_constants() {
        let data = LinearModelData::new(vec![SparseRow::default(); 3], vec![0.0; 3], LossKind::Squared, 2).unwrap();
        let p = FiniteSumProblem::linear(data, 0.4, Regularizer::None).unwrap();
        for v in [p.l_max(), p.l_mean(), p.mu()] {
            assert!((v - 0.4).abs() < 1e-15);
        }
    }

    #[test]
    fn declared_constant_violation_is_reported() {
        let data = LinearModelData::new(vec![SparseRow::from_dense(&[2.0, 1.0])], vec![1.0], LossKind::Squared, 2).unwrap();
        let p = FiniteSumProblem::linear(data, 0.0, Regularizer::None)
            .unwrap()
            .with_lipschitz(vec![1.0])
            .unwrap();
        assert!(matches!(estimate_constants(&p, 20, 3), Err(Error::ConstantViolation { .. })));
    }

    #[test]
    fn big_data_examples() {
        let rows = vec![SparseRow::default(); 100];
        let data = LinearModelData::new(rows, vec![0.0; 100], LossKind::Squared, 1).unwrap();
        let p = FiniteSumProblem::linear(data, 1.0, Regularizer::None)
            .unwrap()
            .with_lipschitz(vec![10.0; 100])
            .unwrap();
        assert!(big_data_check(&p, 2.0).unwrap());
        let rows = vec![SparseRow::default(); 10];
        let data = LinearModelData::new(rows, vec![0.0; 10], LossKind::Squared, 1).unwrap();
        let p = FiniteSumProblem::linear(data, 1.0, Regularizer::None)
            .unwrap()
            .with_lipschitz(vec![10.0; 10])
            .unwrap();
        assert!(!big_data_check(&p, 2.0).unwrap());
        assert!(matches!(big_data_check(&two_quadratics(), 2.0), Err(Error::NotStronglyConvex(_))));
    }

    #[test]
    fn worst_case_instance_facts() {
        let p = worst_case_problem(2).unwrap();
        let r = p.known_optimum().unwrap();
        assert_eq!(r.x, vec![0.5, 0.5]);
        assert_eq!(r.f, 0.5);
        assert_eq!(p.objective(&r.x), 0.5);
        assert_eq!(p.smooth_grad(&r.x), vec![0.0, 0.0]);

        let p1 = worst_case_problem(1).unwrap();
        assert_eq!(p1.objective(&[0.5]), 0.25);
        assert!(p1.objective(&[0.49]) > 0.25 && p1.objective(&[0.51]) > 0.25);
        assert!(worst_case_problem(0).is_err());
    }

    #[test]
    fn prox_term_example() {
        let p = two_quadratics();
        let (phi, g) = p.prox_term(1, 1.0, &[0.0]).unwrap();
        assert_eq!(phi, vec![1.0]);
        assert_eq!(g, vec![-1.0]);
        let (phi, g) = p.prox_term(1, 3.0, &[2.0]).unwrap();
        assert_eq!(phi, vec![2.0]);
        assert_eq!(g, vec![0.0]);
    }
}
