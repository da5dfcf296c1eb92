use crate::error::{Error, Result};
use crate::linalg;
use crate::problem::{FiniteSumProblem, Reference};
use crate::solvers::{Finito, Method, ProxFinito, Saga, Solver};

/// A Lyapunov value with its named parts.
#[derive(Debug, Clone, PartialEq)]
pub struct LyapunovValue {
    pub method: Method,
    pub value: f64,
    pub terms: Vec<(&'static str, f64)>,
}

fn term_value(p: &FiniteSumProblem, i: usize, x: &[f64]) -> f64 {
    p.term_into(i, x, None)
}

/// Finito: `T = T1 + T2 + T3 + T4` with
/// `T1 = f(φ̄)`, `T2 = −(1/n)Σ f_i(φ_i) − (1/n)Σ⟨f_i'(φ_i), w − φ_i⟩`,
/// `T3 = −(μ/(2n))Σ‖w − φ_i‖²`, `T4 = (μ/(2n))Σ‖φ̄ − φ_i‖²`.
/// Needs two-table storage.
pub fn finito_lyapunov(s: &Finito, p: &FiniteSumProblem) -> Result<LyapunovValue> {
    let phi_bar = s.phi_bar().ok_or_else(|| Error::Unsupported("Lyapunov value needs two-table storage".into()))?;
    let n = p.n() as f64;
    let mu = p.mu();
    let w = s.w();
    let t1 = p.smooth_value(&phi_bar);
    let (mut t2, mut t3, mut t4) = (0.0, 0.0, 0.0);
    for i in 0..p.n() {
        let phi = s.phi(i).unwrap();
        let g = s.grad(i).unwrap();
        let diff = linalg::sub(w, phi);
        t2 -= term_value(p, i, phi) + linalg::dot(g, &diff);
        t3 -= linalg::norm_sq(&diff);
        t4 += linalg::dist_sq(&phi_bar, phi);
    }
    let (t2, t3, t4) = (t2 / n, 0.5 * mu * t3 / n, 0.5 * mu * t4 / n);
    Ok(LyapunovValue {
        method: Method::Finito,
        value: t1 + t2 + t3 + t4,
        terms: vec![("t1", t1), ("t2", t2), ("t3", t3), ("t4", t4)],
    })
}

/// SAGA: `(1/n)Σ[f_i(φ_i) − f_i(x*) − ⟨f_i'(x*), φ_i − x*⟩] + c‖x − x*‖²`
/// with `c = 1/(2γ(1 − γμ)n)`. Needs tracked table points.
pub fn saga_lyapunov(s: &Saga, p: &FiniteSumProblem, r: &Reference) -> Result<LyapunovValue> {
    if s.point(0).is_none() {
        return Err(Error::Unsupported("SAGA Lyapunov value needs tracked table points".into()));
    }
    let n = p.n() as f64;
    let gamma = s.gamma();
    let c = 1.0 / (2.0 * gamma * (1.0 - gamma * p.mu()) * n);
    let mut bregman = 0.0;
    let mut g = vec![0.0; p.d()];
    for i in 0..p.n() {
        let phi = s.point(i).unwrap();
        let fs = p.term_into(i, &r.x, Some(&mut g));
        bregman += term_value(p, i, phi) - fs - linalg::dot(&g, &linalg::sub(phi, &r.x));
    }
    let bregman = bregman / n;
    let dist = c * linalg::dist_sq(&s.iterate(), &r.x);
    Ok(LyapunovValue { method: Method::Saga, value: bregman + dist, terms: vec![("table_bregman", bregman), ("distance", dist)] })
}

/// Prox-Finito lower bound `B(x) = (1/n)Σ[f_i(φ_i) + ⟨f_i'(φ_i), x − φ_i⟩ + (μ/2)‖x − φ_i‖²]`.
pub fn prox_finito_lower_bound(s: &ProxFinito, p: &FiniteSumProblem, x: &[f64]) -> f64 {
    let mut b = 0.0;
    for i in 0..p.n() {
        let phi = s.phi(i);
        let diff = linalg::sub(x, phi);
        b += term_value(p, i, phi) + linalg::dot(s.grad(i), &diff) + 0.5 * s.mu() * linalg::norm_sq(&diff);
    }
    b / p.n() as f64
}

/// Prox-Finito: `T = f(w*) − B(w)` at the minimizer `w` of `B`.
pub fn prox_finito_lyapunov(s: &ProxFinito, p: &FiniteSumProblem, r: &Reference) -> LyapunovValue {
    let b = prox_finito_lower_bound(s, p, &s.iterate());
    LyapunovValue { method: Method::ProxFinito, value: r.f - b, terms: vec![("lower_bound", b)] }
}

/// MISO: mean path distance `(1/n)Σ d(w, φ_i)`.
pub fn miso_lyapunov(s: &Finito) -> LyapunovValue {
    let v = s.path_distance();
    LyapunovValue { method: Method::Miso, value: v, terms: vec![("path_distance", v)] }
}

/// Dispatches on the solver type. `reference` is required for SAGA and Prox-Finito.
pub fn lyapunov(solver: &dyn Solver, p: &FiniteSumProblem, reference: Option<&Reference>) -> Result<LyapunovValue> {
    let need = || reference.ok_or(Error::NotReady("Lyapunov value needs a reference minimizer"));
    let any = solver.as_any();
    match solver.method() {
        Method::Finito => finito_lyapunov(any.downcast_ref::<Finito>().unwrap(), p),
        Method::Miso => Ok(miso_lyapunov(any.downcast_ref::<Finito>().unwrap())),
        Method::ProxFinito => Ok(prox_finito_lyapunov(any.downcast_ref::<ProxFinito>().unwrap(), p, need()?)),
        Method::Saga => match any.downcast_ref::<Saga>() {
            Some(s) => saga_lyapunov(s, p, need()?),
            None => Err(Error::Unsupported("SAGA Lyapunov value needs the canonical form".into())),
        },
        m => Err(Error::Unsupported(format!("no Lyapunov function for {m}"))),
    }
}
