use std::any::Any;

use super::{fixed_or, Method, Oracle, Solver, StepSize};
use crate::error::{Error, Result};
use crate::linalg;
use crate::problem::big_data_check;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FinitoStorage {
    /// Points `φ_i` and gradients `f_i'(φ_i)` kept separately.
    #[default]
    TwoTables,
    /// Only `p_i = f_i'(φ_i) − s·φ_i` with `w = −Σp_i/(s n)`, where `s` is the
    /// inverse step. Halves memory; `φ̄` is then unavailable.
    Combined,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Kind {
    Finito { alpha: f64 },
    Miso { l: f64 },
}

/// Finito and MISO, which differ only in the inverse step `s`:
/// `w = φ̄ − (1/(s n)) Σ f_i'(φ_i)` with `s = αμ` (Finito) or `s = L` (MISO).
/// A step sets `φ_j ← w`, refreshes `f_j'(φ_j)` and recomputes `w`.
///
/// The reported iterate is `φ̄` for Finito (the point its rate covers) and
/// `w` for MISO and for combined storage.
#[derive(Debug, Clone)]
pub struct Finito {
    kind: Kind,
    storage: FinitoStorage,
    n: usize,
    d: usize,
    mu: f64,
    /// φ_i (two tables) or p_i (combined), row-major.
    points: Vec<f64>,
    grads: Vec<f64>,
    point_sum: Vec<f64>,
    grad_sum: Vec<f64>,
    w: Vec<f64>,
    x0: Vec<f64>,
    first_pass: Option<(Vec<bool>, usize)>,
    path_total: f64,
    path_at: Vec<f64>,
    contraction: Option<(f64, f64)>,
    k: u64,
    buf: Vec<f64>,
}

impl Finito {
    /// `step` is α; auto gives α = 2 when the big-data condition holds with β = 2.
    pub fn finito(oracle: &mut Oracle<'_>, step: StepSize, first_pass: bool, storage: FinitoStorage, x0: &[f64]) -> Result<Self> {
        let p = oracle.problem();
        if p.mu() <= 0.0 {
            return Err(Error::NotStronglyConvex(p.mu()));
        }
        let alpha = match step {
            StepSize::Auto if big_data_check(p, 2.0)? => 2.0,
            StepSize::Auto => {
                return Err(Error::Hypothesis(format!(
                    "big-data condition fails (n = {}, 2L/mu = {:.3}); pass an explicit alpha",
                    p.n(),
                    2.0 * p.l_max() / p.mu()
                )))
            }
            s => fixed_or(s, 2.0, "alpha")?,
        };
        if first_pass && storage == FinitoStorage::Combined {
            return Err(Error::Unsupported("first-pass mode needs two-table storage".into()));
        }
        Self::build(oracle, Kind::Finito { alpha }, storage, first_pass, x0)
    }

    /// `step` is the inverse step L; auto uses the largest `L_i`.
    pub fn miso(oracle: &mut Oracle<'_>, step: StepSize, x0: &[f64]) -> Result<Self> {
        let l = fixed_or(step, oracle.problem().l_max(), "inverse step")?;
        Self::build(oracle, Kind::Miso { l }, FinitoStorage::TwoTables, false, x0)
    }

    fn build(oracle: &mut Oracle<'_>, kind: Kind, storage: FinitoStorage, first_pass: bool, x0: &[f64]) -> Result<Self> {
        let p = oracle.problem();
        let (n, d) = (p.n(), p.d());
        let mut s = Finito {
            kind,
            storage,
            n,
            d,
            mu: p.mu(),
            points: vec![0.0; n * d],
            grads: if storage == FinitoStorage::TwoTables { vec![0.0; n * d] } else { Vec::new() },
            point_sum: vec![0.0; d],
            grad_sum: vec![0.0; d],
            w: x0.to_vec(),
            x0: x0.to_vec(),
            first_pass: first_pass.then(|| (vec![false; n], 0)),
            path_total: 0.0,
            path_at: vec![0.0; n],
            contraction: None,
            k: 0,
            buf: vec![0.0; d],
        };
        if !first_pass {
            let sc = s.inv_step();
            for i in 0..n {
                oracle.term_grad(i, x0, &mut s.buf);
                match storage {
                    FinitoStorage::TwoTables => {
                        s.points[i * d..(i + 1) * d].copy_from_slice(x0);
                        s.grads[i * d..(i + 1) * d].copy_from_slice(&s.buf);
                        linalg::axpy(1.0, x0, &mut s.point_sum);
                        linalg::axpy(1.0, &s.buf, &mut s.grad_sum);
                    }
                    FinitoStorage::Combined => {
                        let slot = &mut s.points[i * d..(i + 1) * d];
                        for c in 0..d {
                            slot[c] = s.buf[c] - sc * x0[c];
                            s.point_sum[c] += slot[c];
                        }
                    }
                }
            }
            s.w = s.compute_w();
            s.path_total = linalg::dist_sq(&s.w, x0).sqrt();
        }
        Ok(s)
    }

    /// Two-table Finito (`miso = false`) or MISO at arbitrary points `φ_i`
    /// (row-major) with exact gradients; `step` as in the plain constructors.
    /// Path distances are only meaningful from a uniform start and are not
    /// tracked here.
    pub fn from_points(oracle: &mut Oracle<'_>, miso: bool, step: StepSize, phi: &[f64]) -> Result<Self> {
        let p = oracle.problem();
        let (n, d) = (p.n(), p.d());
        if phi.len() != n * d {
            return Err(Error::DimensionMismatch { expected: n * d, got: phi.len() });
        }
        let zero = vec![0.0; d];
        let mut s = if miso {
            Self::miso(oracle, step, &zero)?
        } else {
            Self::finito(oracle, step, false, FinitoStorage::TwoTables, &zero)?
        };
        s.point_sum.fill(0.0);
        s.grad_sum.fill(0.0);
        for i in 0..n {
            let pi = &phi[i * d..(i + 1) * d];
            oracle.term_grad(i, pi, &mut s.buf);
            s.points[i * d..(i + 1) * d].copy_from_slice(pi);
            s.grads[i * d..(i + 1) * d].copy_from_slice(&s.buf);
            linalg::axpy(1.0, pi, &mut s.point_sum);
            linalg::axpy(1.0, &s.buf, &mut s.grad_sum);
        }
        s.w = s.compute_w();
        Ok(s)
    }

    /// Inverse step `αμ` or `L`.
    pub fn inv_step(&self) -> f64 {
        match self.kind {
            Kind::Finito { alpha } => alpha * self.mu,
            Kind::Miso { l } => l,
        }
    }

    pub fn alpha(&self) -> Option<f64> {
        match self.kind {
            Kind::Finito { alpha } => Some(alpha),
            Kind::Miso { .. } => None,
        }
    }

    pub fn storage(&self) -> FinitoStorage {
        self.storage
    }

    fn compute_w(&self) -> Vec<f64> {
        let sc = self.inv_step();
        match self.storage {
            FinitoStorage::Combined => self.point_sum.iter().map(|v| -v / (sc * self.n as f64)).collect(),
            FinitoStorage::TwoTables => {
                let m = match &self.first_pass {
                    Some((_, 0)) => return self.x0.clone(),
                    Some((_, m)) => *m as f64,
                    None => self.n as f64,
                };
                (0..self.d).map(|c| self.point_sum[c] / m - self.grad_sum[c] / (sc * m)).collect()
            }
        }
    }

    /// The point the next step writes into `φ_j`.
    pub fn w(&self) -> &[f64] {
        &self.w
    }

    pub fn phi(&self, i: usize) -> Option<&[f64]> {
        (self.storage == FinitoStorage::TwoTables).then(|| &self.points[i * self.d..(i + 1) * self.d])
    }

    pub fn grad(&self, i: usize) -> Option<&[f64]> {
        (self.storage == FinitoStorage::TwoTables).then(|| &self.grads[i * self.d..(i + 1) * self.d])
    }

    pub fn phi_bar(&self) -> Option<Vec<f64>> {
        (self.storage == FinitoStorage::TwoTables).then(|| self.point_sum.iter().map(|v| v / self.n as f64).collect())
    }

    pub fn grad_sum(&self) -> &[f64] {
        &self.grad_sum
    }

    /// Mean path distance `(1/n) Σ_i (P − P_i)` along `φ⁰, w⁰, w¹, …`.
    pub fn path_distance(&self) -> f64 {
        self.path_at.iter().map(|pi| self.path_total - pi).sum::<f64>() / self.n as f64
    }

    /// `(‖w⁺ − w‖, (1 − μ/(μ+L))·(1/n)·‖w − φ_j‖)` for the last step.
    pub fn last_contraction(&self) -> Option<(f64, f64)> {
        self.contraction
    }
}

impl Solver for Finito {
    fn method(&self) -> Method {
        match self.kind {
            Kind::Finito { .. } => Method::Finito,
            Kind::Miso { .. } => Method::Miso,
        }
    }

    fn step(&mut self, oracle: &mut Oracle<'_>, j: usize) -> Result<()> {
        let d = self.d;
        let sc = self.inv_step();
        let w = std::mem::take(&mut self.w);
        oracle.term_grad(j, &w, &mut self.buf);
        match self.storage {
            FinitoStorage::TwoTables => {
                if let Some((seen, m)) = &mut self.first_pass {
                    if !seen[j] {
                        seen[j] = true;
                        *m += 1;
                        // Treat the unseen slot as empty.
                        self.points[j * d..(j + 1) * d].fill(0.0);
                        self.grads[j * d..(j + 1) * d].fill(0.0);
                    }
                }
                let old_dist = linalg::dist_sq(&w, &self.points[j * d..(j + 1) * d]).sqrt();
                for c in 0..d {
                    let pj = &mut self.points[j * d + c];
                    self.point_sum[c] += w[c] - *pj;
                    *pj = w[c];
                    let gj = &mut self.grads[j * d + c];
                    self.grad_sum[c] += self.buf[c] - *gj;
                    *gj = self.buf[c];
                }
                self.w = self.compute_w();
                let step_len = linalg::dist_sq(&self.w, &w).sqrt();
                let l = match self.kind {
                    Kind::Miso { l } => l,
                    Kind::Finito { .. } => f64::NAN,
                };
                self.contraction = Some((step_len, (1.0 - self.mu / (self.mu + l)) * old_dist / self.n as f64));
                self.path_at[j] = self.path_total;
                self.path_total += step_len;
            }
            FinitoStorage::Combined => {
                for c in 0..d {
                    let pj = &mut self.points[j * d + c];
                    let new = self.buf[c] - sc * w[c];
                    self.point_sum[c] += new - *pj;
                    *pj = new;
                }
                self.w = self.compute_w();
            }
        }
        self.k += 1;
        Ok(())
    }

    fn iterate(&self) -> Vec<f64> {
        match (self.kind, self.storage) {
            (Kind::Finito { .. }, FinitoStorage::TwoTables) => match &self.first_pass {
                Some((_, m)) if *m < self.n => self.w.clone(),
                _ => self.phi_bar().unwrap(),
            },
            _ => self.w.clone(),
        }
    }

    fn step_param(&self) -> f64 {
        match self.kind {
            Kind::Finito { alpha } => alpha,
            Kind::Miso { l } => l,
        }
    }

    fn steps(&self) -> u64 {
        self.k
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
}
