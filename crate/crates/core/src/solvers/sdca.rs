use std::any::Any;

use super::{Grad, GradientTable, Method, Oracle, Solver};
use crate::error::{Error, Result};
use crate::linalg;
use crate::problem::linear::sigmoid;
use crate::problem::{FiniteSumProblem, LinearModelData, LossKind, Terms};

/// Dual coordinate update rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SdcaMode {
    /// Exact maximization of the dual along coordinate `j`.
    #[default]
    Exact,
    /// Best point on the segment from `α_j` to `u = loss_j'(x)`.
    LineSearch,
    /// Fixed move `α_j ← α_j + s(u − α_j)`, `s = μn/(μn + L)`.
    Constant,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SdcaInit {
    /// `α_i = 0`.
    Zero,
    /// `α_i = loss_i'(φ⁰)`.
    FromPoint(Vec<f64>),
}

#[derive(Debug, Clone)]
enum Duals {
    /// `α_i = β_i a_i`.
    Linear(Vec<f64>),
    /// Dense `α_i` with the primal points `φ_i` satisfying `α_i = loss_i'(φ_i)`.
    Generic { alpha: Vec<f64>, phi: Vec<f64> },
}

const DUAL_TOL: f64 = 1e-13;
const DUAL_MAX_ITER: usize = 100;

/// Dual coordinate ascent on `D(α) = −(1/n)Σ loss_i*(α_i) − (μ/2)‖x‖²`,
/// `x = −(1/(μn)) Σ α_i`, with `μ` the problem's ridge weight.
///
/// Linear models keep scalar duals and solve the coordinate problem in the
/// dual variable itself (closed form for squared loss, safeguarded Newton in
/// logit coordinates for logistic loss). Other terms use the Moreau route
/// through the loss prox and support only the exact mode.
#[derive(Debug, Clone)]
pub struct Sdca {
    mode: SdcaMode,
    mu_n: f64,
    x: Vec<f64>,
    duals: Duals,
    s_const: f64,
    k: u64,
}

impl Sdca {
    pub fn new(oracle: &mut Oracle<'_>, mode: SdcaMode, init: SdcaInit) -> Result<Self> {
        let p = oracle.problem();
        let mu = p.ridge();
        if mu <= 0.0 {
            return Err(Error::NotStronglyConvex(mu));
        }
        let (n, d) = (p.n(), p.d());
        let mu_n = mu * n as f64;
        if let SdcaInit::FromPoint(phi0) = &init {
            if phi0.len() != d {
                return Err(Error::DimensionMismatch { expected: d, got: phi0.len() });
            }
        }
        let mut x = vec![0.0; d];
        let duals = match (p.terms(), &init) {
            (Terms::Linear(_), SdcaInit::Zero) => Duals::Linear(vec![0.0; n]),
            (Terms::Linear(t), SdcaInit::FromPoint(phi0)) => {
                let beta: Vec<f64> = (0..n).map(|i| oracle.linear_deriv(i, phi0)).collect();
                for i in 0..n {
                    t.row(i).axpy_into(-beta[i] / mu_n, &mut x);
                }
                Duals::Linear(beta)
            }
            (Terms::Quadratic(q), init) => {
                if mode != SdcaMode::Exact {
                    return Err(Error::Unsupported("non-exact SDCA modes need a linear model".into()));
                }
                let mut alpha = vec![0.0; n * d];
                let mut phi = vec![0.0; n * d];
                for i in 0..n {
                    match init {
                        // loss_i is minimized at its center, where the gradient vanishes.
                        SdcaInit::Zero => phi[i * d..(i + 1) * d].copy_from_slice(q.center(i)),
                        SdcaInit::FromPoint(phi0) => {
                            phi[i * d..(i + 1) * d].copy_from_slice(phi0);
                            oracle.loss_grad(i, phi0, &mut alpha[i * d..(i + 1) * d]);
                            linalg::axpy(-1.0 / mu_n, &alpha[i * d..(i + 1) * d], &mut x);
                        }
                    }
                }
                Duals::Generic { alpha, phi }
            }
        };
        Ok(Sdca { mode, mu_n, x, duals, s_const: mu_n / (mu_n + p.loss_l_max()), k: 0 })
    }

    pub fn mode(&self) -> SdcaMode {
        self.mode
    }

    /// The constant-mode fraction `μn/(μn + L)`.
    pub fn constant_fraction(&self) -> f64 {
        self.s_const
    }

    /// Dual variable `α_i` as a dense vector.
    pub fn alpha(&self, i: usize, p: &FiniteSumProblem) -> Vec<f64> {
        match &self.duals {
            Duals::Linear(b) => Grad::Scalar(b[i]).to_dense(i, p),
            Duals::Generic { alpha, .. } => alpha[i * p.d()..(i + 1) * p.d()].to_vec(),
        }
    }

    fn step_linear(&mut self, oracle: &mut Oracle<'_>, t: &LinearModelData, j: usize) -> Result<()> {
        let Duals::Linear(beta) = &mut self.duals else { unreachable!() };
        let row = t.row(j);
        let q = t.row_norm_sq(j);
        let s0 = row.dot(&self.x);
        let bj = beta[j];
        let k = q / self.mu_n;
        let new = match self.mode {
            SdcaMode::Exact => {
                oracle.touch(j);
                exact_scalar(t, j, s0, bj, k)?
            }
            SdcaMode::Constant | SdcaMode::LineSearch => {
                let u = oracle.linear_deriv(j, &self.x);
                let s = if self.mode == SdcaMode::Constant {
                    self.s_const
                } else {
                    line_search(t, j, s0, bj, u, k)
                };
                bj + s * (u - bj)
            }
        };
        beta[j] = new;
        row.axpy_into(-(new - bj) / self.mu_n, &mut self.x);
        Ok(())
    }

    fn step_generic(&mut self, oracle: &mut Oracle<'_>, j: usize) -> Result<()> {
        let d = self.x.len();
        let Duals::Generic { alpha, phi } = &mut self.duals else { unreachable!() };
        let aj = &mut alpha[j * d..(j + 1) * d];
        let v: Vec<f64> = (0..d).map(|c| self.x[c] + aj[c] / self.mu_n).collect();
        // Moreau: α⁺ = μn·v − μn·prox_{μn}^{loss_j}(v).
        let (p_new, _) = oracle.prox(j, self.mu_n, &v, false)?;
        for c in 0..d {
            let new = self.mu_n * (v[c] - p_new[c]);
            self.x[c] -= (new - aj[c]) / self.mu_n;
            aj[c] = new;
        }
        phi[j * d..(j + 1) * d].copy_from_slice(&p_new);
        Ok(())
    }
}

/// Exact coordinate maximizer for a linear term.
///
/// Solves `loss*'(β) − s0 + (β − β_j)·k = 0`, `k = ‖a_j‖²/(μn)`.
fn exact_scalar(t: &LinearModelData, j: usize, s0: f64, bj: f64, k: f64) -> Result<f64> {
    let w = t.weight();
    let y = t.label(j);
    match t.loss() {
        LossKind::Squared => Ok((s0 - y + bj * k) / (1.0 / w + k)),
        LossKind::Logistic => {
            // β = −w y σ(u); in u the equation reads F(u) = u + y s0 + (w σ(u) + y β_j) k = 0.
            let c = y * s0 + y * bj * k;
            let f = |u: f64| u + c + w * sigmoid(u) * k;
            let (mut lo, mut hi) = (-c - w * k, -c);
            let mut u = 0.5 * (lo + hi);
            let mut r = f(u);
            for _ in 0..DUAL_MAX_ITER {
                if r.abs() <= DUAL_TOL * (1.0 + c.abs()) {
                    break;
                }
                if r > 0.0 {
                    hi = u;
                } else {
                    lo = u;
                }
                let sg = sigmoid(u);
                let mut next = u - r / (1.0 + w * sg * (1.0 - sg) * k);
                if !(next > lo && next < hi) {
                    next = 0.5 * (lo + hi);
                }
                if next == u {
                    break;
                }
                u = next;
                r = f(u);
            }
            if r.abs() > 1e3 * DUAL_TOL * (1.0 + c.abs()) {
                return Err(Error::InnerSolve { iterations: DUAL_MAX_ITER, residual: r.abs() });
            }
            Ok(-w * y * sigmoid(u))
        }
    }
}

/// Derivative of the scalar conjugate, clamped inside its domain.
fn conjugate_deriv(t: &LinearModelData, j: usize, b: f64) -> f64 {
    let w = t.weight();
    let y = t.label(j);
    match t.loss() {
        LossKind::Squared => b / w + y,
        LossKind::Logistic => {
            let tt = (-b * y / w).clamp(1e-300, 1.0 - 1e-16);
            -y * (tt / (1.0 - tt)).ln()
        }
    }
}

/// Maximizes the dual along `β(s) = β_j + s(u − β_j)`, `s ∈ [0, 1]`, by bisection
/// on the (decreasing) directional derivative.
fn line_search(t: &LinearModelData, j: usize, s0: f64, bj: f64, u: f64, k: f64) -> f64 {
    let delta = u - bj;
    if delta == 0.0 {
        return 0.0;
    }
    let h = |s: f64| {
        let b = bj + s * delta;
        delta * (-conjugate_deriv(t, j, b) + s0 - (b - bj) * k)
    };
    if h(1.0) >= 0.0 {
        return 1.0;
    }
    if h(0.0) <= 0.0 {
        return 0.0;
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if h(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `D(β)` for linear models via closed-form conjugates.
fn linear_dual(t: &LinearModelData, beta: &[f64], x: &[f64], mu: f64) -> f64 {
    let n = beta.len();
    let mut s = 0.0;
    for i in 0..n {
        s += t.conjugate(i, beta[i]);
    }
    -s / n as f64 - 0.5 * mu * linalg::norm_sq(x)
}

/// `D = (1/n)Σ[loss_i(φ_i) + ⟨α_i, x − φ_i⟩] + (μ/2)‖x‖²`, valid when `α_i = loss_i'(φ_i)`.
fn generic_dual(p: &FiniteSumProblem, alpha: &[f64], phi: &[f64], x: &[f64]) -> f64 {
    let (n, d) = (p.n(), p.d());
    let mut s = 0.0;
    for i in 0..n {
        let pi = &phi[i * d..(i + 1) * d];
        let ai = &alpha[i * d..(i + 1) * d];
        s += p.loss_into(i, pi, None) + linalg::dot(ai, x) - linalg::dot(ai, pi);
    }
    s / n as f64 + 0.5 * p.ridge() * linalg::norm_sq(x)
}

impl Solver for Sdca {
    fn method(&self) -> Method {
        Method::Sdca
    }

    fn step(&mut self, oracle: &mut Oracle<'_>, j: usize) -> Result<()> {
        let p = oracle.problem();
        match p.terms() {
            Terms::Linear(t) => self.step_linear(oracle, t, j)?,
            Terms::Quadratic(_) => self.step_generic(oracle, j)?,
        }
        self.k += 1;
        Ok(())
    }

    fn iterate(&self) -> Vec<f64> {
        self.x.clone()
    }

    fn step_param(&self) -> f64 {
        match self.mode {
            SdcaMode::Constant => self.s_const,
            _ => 1.0,
        }
    }

    fn steps(&self) -> u64 {
        self.k
    }

    fn dual_value(&self, p: &FiniteSumProblem) -> Option<f64> {
        Some(match (&self.duals, p.terms()) {
            (Duals::Linear(b), Terms::Linear(t)) => linear_dual(t, b, &self.x, p.ridge()),
            (Duals::Generic { alpha, phi }, _) => generic_dual(p, alpha, phi, &self.x),
            _ => return None,
        })
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
}

/// Primal form of exact SDCA. With `λ = 1/(μn)`:
/// `z = −λ Σ_{i≠j} loss_i'(φ_i)`, `φ_j = argmin loss_j(x) + (1/(2λ))‖x − z‖²`,
/// stored gradient `(1/λ)(z − φ_j)`, iterate `x = −λ Σ loss_i'(φ_i)`.
/// Initialized at `φ_i⁰ = x0`.
#[derive(Debug, Clone)]
pub struct PrimalSdca {
    lambda: f64,
    table: GradientTable,
    phi: Option<Vec<f64>>,
    k: u64,
}

impl PrimalSdca {
    pub fn new(oracle: &mut Oracle<'_>, x0: &[f64]) -> Result<Self> {
        let p = oracle.problem();
        if p.ridge() <= 0.0 {
            return Err(Error::NotStronglyConvex(p.ridge()));
        }
        let lambda = 1.0 / (p.ridge() * p.n() as f64);
        let mut table = GradientTable::for_problem(p, false);
        table.fill_at(oracle, x0)?;
        let phi = (!table.is_scalar()).then(|| x0.repeat(p.n()));
        Ok(PrimalSdca { lambda, table, phi, k: 0 })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
    pub fn table(&self) -> &GradientTable {
        &self.table
    }
}

impl Solver for PrimalSdca {
    fn method(&self) -> Method {
        Method::SdcaPrimal
    }

    fn step(&mut self, oracle: &mut Oracle<'_>, j: usize) -> Result<()> {
        let p = oracle.problem();
        let mut z = self.iterate();
        self.table.add_entry(j, self.lambda, &mut z, p);
        let (phi, dv) = oracle.prox(j, 1.0 / self.lambda, &z, false)?;
        let g = match dv {
            Some(s) => Grad::Scalar(s),
            None => Grad::Dense((0..p.d()).map(|c| (z[c] - phi[c]) / self.lambda).collect()),
        };
        self.table.replace(j, &g, p);
        if let Some(store) = &mut self.phi {
            store[j * p.d()..(j + 1) * p.d()].copy_from_slice(&phi);
        }
        self.k += 1;
        Ok(())
    }

    fn iterate(&self) -> Vec<f64> {
        self.table.sum().iter().map(|s| -self.lambda * s).collect()
    }

    fn step_param(&self) -> f64 {
        self.lambda
    }

    fn steps(&self) -> u64 {
        self.k
    }

    fn dual_value(&self, p: &FiniteSumProblem) -> Option<f64> {
        let x = self.iterate();
        match (p.terms(), &self.phi) {
            (Terms::Linear(t), _) => Some(linear_dual(t, self.table.scalars()?, &x, p.ridge())),
            (_, Some(phi)) => {
                let alpha: Vec<f64> = (0..p.n()).flat_map(|i| self.table.entry_dense(i, p)).collect();
                Some(generic_dual(p, &alpha, phi, &x))
            }
            _ => None,
        }
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
}
