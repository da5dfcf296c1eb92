use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Error, Result};
use crate::linalg;
use crate::problem::{FiniteSumProblem, LossKind, Reference, Terms};
use crate::prox;

/// Default stationarity tolerance for reference solves.
pub const DEFAULT_TOL: f64 = 1e-12;

/// How to obtain `x*`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReferenceMode {
    /// Closed form when available, Newton for smooth logistic, long run otherwise.
    #[default]
    Auto,
    ClosedForm,
    LongRun,
}

/// Norm of the gradient map `(x − prox_{1/γ}(x − γ f'(x)))/γ`, `γ = 1/L`.
/// Equals `‖f'(x)‖` when `h` is absent.
pub fn gradient_map_norm(p: &FiniteSumProblem, x: &[f64]) -> f64 {
    let g = p.smooth_grad(x);
    if p.regularizer().is_none() {
        return linalg::norm_sq(&g).sqrt();
    }
    let gamma = 1.0 / p.l_max();
    let mut v: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a - gamma * b).collect();
    prox::prox_in_place(p.regularizer(), 1.0 / gamma, &mut v);
    (linalg::dist_sq(x, &v)).sqrt() / gamma
}

/// Cached reference minimizer (`Auto` mode).
pub fn reference_minimizer(p: &FiniteSumProblem, tol: f64) -> Result<Reference> {
    if let Some(r) = p.reference.get() {
        return Ok(r.clone());
    }
    let r = reference_with(p, ReferenceMode::Auto, tol)?;
    Ok(p.reference.get_or_init(|| r).clone())
}

/// Uncached reference solve in the given mode.
pub fn reference_with(p: &FiniteSumProblem, mode: ReferenceMode, tol: f64) -> Result<Reference> {
    if !(tol.is_finite() && tol > 0.0) {
        return Err(invalid("tol", "must be finite and > 0"));
    }
    if mode != ReferenceMode::LongRun {
        if let Some(r) = p.known_optimum() {
            return Ok(r.clone());
        }
    }
    match mode {
        ReferenceMode::ClosedForm => closed_form(p)
            .ok_or_else(|| Error::Unsupported("no closed form for this problem".into())),
        ReferenceMode::LongRun => long_run(p, tol),
        ReferenceMode::Auto => {
            if let Some(r) = closed_form(p) {
                return Ok(r);
            }
            let smooth_logistic = p.regularizer().is_none()
                && matches!(p.linear_data(), Some(t) if t.loss() == LossKind::Logistic);
            if smooth_logistic && p.mu() > 0.0 {
                newton_logistic(p, tol)
            } else {
                long_run(p, tol)
            }
        }
    }
}

fn finish(p: &FiniteSumProblem, x: Vec<f64>) -> Reference {
    let residual = gradient_map_norm(p, &x);
    Reference { f: p.objective(&x), x, residual }
}

fn closed_form(p: &FiniteSumProblem) -> Option<Reference> {
    if !p.regularizer().is_none() {
        return None;
    }
    match p.terms() {
        Terms::Quadratic(q) => Some(finish(p, q.minimizer(p.ridge()))),
        Terms::Linear(t) if t.loss() == LossKind::Squared => {
            // (w/n)AᵀA x + ridge x = (w/n)Aᵀy
            let (n, d) = (p.n(), p.d());
            let c = t.weight() / n as f64;
            let mut a = DMatrix::<f64>::identity(d, d) * p.ridge();
            let mut b = DVector::<f64>::zeros(d);
            for i in 0..n {
                let r = t.row(i);
                for (&j, &vj) in r.idx.iter().zip(&r.val) {
                    b[j] += c * vj * t.label(i);
                    for (&k, &vk) in r.idx.iter().zip(&r.val) {
                        a[(j, k)] += c * vj * vk;
                    }
                }
            }
            let x = match a.clone().cholesky() {
                Some(ch) if p.ridge() > 0.0 => ch.solve(&b),
                // Minimum-norm solution; the singular case is the underdetermined one.
                _ => a.svd(true, true).solve(&b, 1e-12).ok()?,
            };
            Some(finish(p, x.as_slice().to_vec()))
        }
        _ => None,
    }
}

/// Damped Newton on a strongly convex smooth logistic objective.
fn newton_logistic(p: &FiniteSumProblem, tol: f64) -> Result<Reference> {
    let t = p.linear_data().expect("logistic problem is linear");
    let (n, d) = (p.n(), p.d());
    let mut x = vec![0.0; d];
    let mut fx = p.smooth_value(&x);
    for _ in 0..200 {
        let g = p.smooth_grad(&x);
        let gn = linalg::norm_sq(&g).sqrt();
        if gn <= tol {
            return Ok(finish(p, x));
        }
        let mut h = DMatrix::<f64>::identity(d, d) * p.ridge();
        for i in 0..n {
            let r = t.row(i);
            let c = t.loss_second(i, r.dot(&x)) / n as f64;
            for (&j, &vj) in r.idx.iter().zip(&r.val) {
                for (&k, &vk) in r.idx.iter().zip(&r.val) {
                    h[(j, k)] += c * vj * vk;
                }
            }
        }
        let step = h
            .cholesky()
            .ok_or(Error::NoConvergence(gn))?
            .solve(&DVector::from_column_slice(&g));
        let mut s = 1.0;
        loop {
            let trial: Vec<f64> = x.iter().zip(step.iter()).map(|(a, b)| a - s * b).collect();
            let ft = p.smooth_value(&trial);
            if ft <= fx - 1e-4 * s * linalg::dot(&g, step.as_slice()) || s < 1e-10 {
                if ft > fx && s < 1e-10 {
                    // Rounding floor reached.
                    return if gn <= 1e3 * tol { Ok(finish(p, x)) } else { Err(Error::NoConvergence(gn)) };
                }
                x = trial;
                fx = ft;
                break;
            }
            s *= 0.5;
        }
    }
    let r = finish(p, x);
    if r.residual <= 1e3 * tol {
        Ok(r)
    } else {
        Err(Error::NoConvergence(r.residual))
    }
}

/// SAGA in strongly convex mode (adaptive when `μ = 0`), then proximal
/// gradient polishing, until the gradient map norm reaches `tol`.
fn long_run(p: &FiniteSumProblem, tol: f64) -> Result<Reference> {
    use crate::ordering::{Ordering, OrderingKind};
    use crate::solvers::{Oracle, Saga, SagaForm, SagaMode, Solver, StepSize};
    let n = p.n();
    let x0 = vec![0.0; p.d()];
    let mut oracle = Oracle::new(p);
    let mode = if p.mu() > 0.0 { SagaMode::StronglyConvex } else { SagaMode::Adaptive };
    let mut saga = Saga::new(&mut oracle, StepSize::Auto, mode, SagaForm::Canonical, false, &x0)?;
    let mut order = Ordering::new(OrderingKind::Randomized, n, 0x5EED)?;
    let mut x = x0;
    let mut best = f64::INFINITY;
    // Stochastic phase: stop once it stops paying off.
    for _ in 0..2000 {
        for _ in 0..n {
            saga.step(&mut oracle, order.next_index())?;
        }
        x = saga.iterate();
        let r = gradient_map_norm(p, &x);
        if r <= tol {
            return Ok(finish(p, x));
        }
        if r > 0.5 * best {
            break;
        }
        best = best.min(r);
    }
    // Deterministic polish: accelerated proximal gradient with gradient-based
    // restarts. Function-value restarts stall near the optimum, where objective
    // differences fall below rounding.
    let gamma = 1.0 / p.l_max();
    let mut y = x.clone();
    let mut t = 1.0f64;
    for _ in 0..200_000 {
        let g = p.smooth_grad(&y);
        let mut next: Vec<f64> = y.iter().zip(&g).map(|(a, b)| a - gamma * b).collect();
        prox::prox_in_place(p.regularizer(), 1.0 / gamma, &mut next);
        let restart: f64 = (0..y.len()).map(|k| (y[k] - next[k]) * (next[k] - x[k])).sum();
        let t_next = if restart > 0.0 { 1.0 } else { 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt()) };
        let beta = if restart > 0.0 { 0.0 } else { (t - 1.0) / t_next };
        for k in 0..y.len() {
            y[k] = next[k] + beta * (next[k] - x[k]);
        }
        x = next;
        t = t_next;
        if gradient_map_norm(p, &x) <= tol {
            return Ok(finish(p, x));
        }
    }
    let r = finish(p, x);
    Err(Error::NoConvergence(r.residual))
}
