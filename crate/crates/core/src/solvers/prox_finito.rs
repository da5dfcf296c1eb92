use std::any::Any;

use super::{Method, Oracle, Solver};
use crate::error::{invalid, Error, Result};
use crate::linalg;

/// Prox-Finito. With `η = μ(n − 1)`, a step forms
/// `z = (1/(n−1)) Σ_{i≠j} φ_i − (1/η) Σ_{i≠j} f_i'(φ_i)`, sets
/// `φ_j = argmin f_j(x) + (η/2)‖x − z‖²` and stores `f_j'(φ_j) = η(z − φ_j)`.
/// The iterate is `x = φ̄ − (1/(μn)) Σ f_i'(φ_i)`.
#[derive(Debug, Clone)]
pub struct ProxFinito {
    n: usize,
    d: usize,
    mu: f64,
    eta: f64,
    phi: Vec<f64>,
    grads: Vec<f64>,
    phi_sum: Vec<f64>,
    grad_sum: Vec<f64>,
    k: u64,
}

impl ProxFinito {
    pub fn new(oracle: &mut Oracle<'_>, x0: &[f64]) -> Result<Self> {
        let p = oracle.problem();
        let (n, d) = (p.n(), p.d());
        if p.mu() <= 0.0 {
            return Err(Error::NotStronglyConvex(p.mu()));
        }
        if n < 2 {
            return Err(invalid("n", "Prox-Finito needs n > 1"));
        }
        let mut s = ProxFinito {
            n,
            d,
            mu: p.mu(),
            eta: p.mu() * (n - 1) as f64,
            phi: vec![0.0; n * d],
            grads: vec![0.0; n * d],
            phi_sum: vec![0.0; d],
            grad_sum: vec![0.0; d],
            k: 0,
        };
        let mut g = vec![0.0; d];
        for i in 0..n {
            oracle.term_grad(i, x0, &mut g);
            s.phi[i * d..(i + 1) * d].copy_from_slice(x0);
            s.grads[i * d..(i + 1) * d].copy_from_slice(&g);
            linalg::axpy(1.0, x0, &mut s.phi_sum);
            linalg::axpy(1.0, &g, &mut s.grad_sum);
        }
        Ok(s)
    }

    /// Starts from arbitrary points `φ_i` (row-major) with exact gradients.
    pub fn from_points(oracle: &mut Oracle<'_>, phi: &[f64]) -> Result<Self> {
        let p = oracle.problem();
        let (n, d) = (p.n(), p.d());
        if phi.len() != n * d {
            return Err(Error::DimensionMismatch { expected: n * d, got: phi.len() });
        }
        let mut s = Self::new(oracle, &vec![0.0; d])?;
        s.phi_sum.fill(0.0);
        s.grad_sum.fill(0.0);
        let mut g = vec![0.0; d];
        for i in 0..n {
            let pi = &phi[i * d..(i + 1) * d];
            oracle.term_grad(i, pi, &mut g);
            s.phi[i * d..(i + 1) * d].copy_from_slice(pi);
            s.grads[i * d..(i + 1) * d].copy_from_slice(&g);
            linalg::axpy(1.0, pi, &mut s.phi_sum);
            linalg::axpy(1.0, &g, &mut s.grad_sum);
        }
        Ok(s)
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }
    pub fn mu(&self) -> f64 {
        self.mu
    }
    pub fn phi(&self, i: usize) -> &[f64] {
        &self.phi[i * self.d..(i + 1) * self.d]
    }
    pub fn grad(&self, i: usize) -> &[f64] {
        &self.grads[i * self.d..(i + 1) * self.d]
    }

    /// The prox center used when `j` is sampled.
    pub fn center(&self, j: usize) -> Vec<f64> {
        let d = self.d;
        let m = (self.n - 1) as f64;
        (0..d)
            .map(|c| (self.phi_sum[c] - self.phi[j * d + c]) / m - (self.grad_sum[c] - self.grads[j * d + c]) / self.eta)
            .collect()
    }
}

impl Solver for ProxFinito {
    fn method(&self) -> Method {
        Method::ProxFinito
    }

    fn step(&mut self, oracle: &mut Oracle<'_>, j: usize) -> Result<()> {
        let d = self.d;
        let z = self.center(j);
        let (phi, _) = oracle.prox(j, self.eta, &z, true)?;
        for c in 0..d {
            let g = self.eta * (z[c] - phi[c]);
            self.phi_sum[c] += phi[c] - self.phi[j * d + c];
            self.grad_sum[c] += g - self.grads[j * d + c];
            self.phi[j * d + c] = phi[c];
            self.grads[j * d + c] = g;
        }
        self.k += 1;
        Ok(())
    }

    fn iterate(&self) -> Vec<f64> {
        let n = self.n as f64;
        (0..self.d).map(|c| self.phi_sum[c] / n - self.grad_sum[c] / (self.mu * n)).collect()
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
