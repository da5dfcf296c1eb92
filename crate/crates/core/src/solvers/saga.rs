use std::any::Any;

use super::{fixed_or, Grad, GradientTable, Method, Oracle, Solver, StepSize};
use crate::error::{Error, Result};
use crate::linalg;
use crate::problem::FiniteSumProblem;
use crate::prox::{self, Regularizer};

/// Theorem step-size defaults.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SagaMode {
    /// `γ = 1/(3L)`, adapts to any `μ ≥ 0`.
    #[default]
    Adaptive,
    /// `γ = 1/(2(μn + L))`.
    StronglyConvex,
}

impl SagaMode {
    pub fn gamma(&self, p: &FiniteSumProblem) -> f64 {
        match self {
            SagaMode::Adaptive => 1.0 / (3.0 * p.l_max()),
            SagaMode::StronglyConvex => 1.0 / (2.0 * (p.mu() * p.n() as f64 + p.l_max())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SagaForm {
    /// Ridge inside each term; the table stores full term gradients.
    #[default]
    Canonical,
    /// Table stores loss gradients, ridge applied to the current iterate:
    /// `x ← (1 − μγ)x − γ[loss_j'(x) − loss_j'(φ_j) + mean]`.
    ExplicitRegularizer,
    /// Explicit-regularizer form on sparse linear models with lazily applied
    /// dense updates. Built as [`SagaJit`].
    Jit,
}

/// SAGA: `x ← prox_{1/γ}(x − γ[f_j'(x) − f_j'(φ_j) + (1/n)Σ f_i'(φ_i)])`.
///
/// The prox subscript `1/γ` means the quadratic is weighted by `1/(2γ)`.
#[derive(Debug, Clone)]
pub struct Saga {
    x: Vec<f64>,
    table: GradientTable,
    gamma: f64,
    form: SagaForm,
    reg: Regularizer,
    seen: Option<(Vec<bool>, usize)>,
    points: Option<Vec<f64>>,
    k: u64,
    buf: Vec<f64>,
}

impl Saga {
    pub fn new(
        oracle: &mut Oracle<'_>,
        step: StepSize,
        mode: SagaMode,
        form: SagaForm,
        lazy: bool,
        x0: &[f64],
    ) -> Result<Self> {
        let p = oracle.problem();
        if form == SagaForm::Jit {
            return Err(Error::Unsupported("use SagaJit for the sparse form".into()));
        }
        let gamma = fixed_or(step, mode.gamma(p), "step")?;
        let mut table = GradientTable::for_problem(p, form == SagaForm::Canonical);
        let seen = if lazy {
            Some((vec![false; p.n()], 0))
        } else {
            table.fill_at(oracle, x0)?;
            None
        };
        Ok(Saga { x: x0.to_vec(), table, gamma, form, reg: *p.regularizer(), seen, points: None, k: 0, buf: vec![0.0; p.d()] })
    }

    /// Canonical SAGA at an arbitrary state: iterate `x` and table points `φ_i`
    /// (row-major). The points are kept, see [`Saga::point`].
    pub fn from_points(oracle: &mut Oracle<'_>, step: StepSize, mode: SagaMode, x: &[f64], phi: &[f64]) -> Result<Self> {
        let p = oracle.problem();
        let d = p.d();
        if x.len() != d || phi.len() != p.n() * d {
            return Err(Error::DimensionMismatch { expected: p.n() * d, got: phi.len() });
        }
        let mut s = Saga::new(oracle, step, mode, SagaForm::Canonical, true, x)?;
        s.seen = None;
        for i in 0..p.n() {
            let g = s.table.eval(oracle, i, &phi[i * d..(i + 1) * d]);
            s.table.replace(i, &g, p);
        }
        s.points = Some(phi.to_vec());
        Ok(s)
    }

    /// Starts recording the table points `φ_i`. Only valid before the first step
    /// of a fully initialized table, where every `φ_i = x`.
    pub fn track_points(&mut self) -> Result<()> {
        if self.k > 0 || self.seen.is_some() {
            return Err(Error::Unsupported("point tracking must start at a full initial table".into()));
        }
        self.points = Some(self.x.repeat(self.table.n()));
        Ok(())
    }

    /// Table point `φ_i`, when tracked.
    pub fn point(&self, i: usize) -> Option<&[f64]> {
        let d = self.x.len();
        self.points.as_ref().map(|p| &p[i * d..(i + 1) * d])
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }
    pub fn table(&self) -> &GradientTable {
        &self.table
    }
    pub fn form(&self) -> SagaForm {
        self.form
    }

    /// Bracketed estimate `f_j'(x) − f_j'(φ_j) + mean` at the current state.
    pub fn direction(&self, oracle: &mut Oracle<'_>, j: usize) -> Vec<f64> {
        let p = oracle.problem();
        let g = self.table.eval(oracle, j, &self.x);
        let mut dir = vec![0.0; p.d()];
        self.bracket(p, j, &g, &mut dir);
        dir
    }

    fn bracket(&self, p: &FiniteSumProblem, j: usize, g: &Grad, out: &mut [f64]) {
        let n = p.n() as f64;
        for (b, s) in out.iter_mut().zip(self.table.sum()) {
            *b = s / n;
        }
        g.add_to(1.0, j, out, p);
        self.table.add_entry(j, -1.0, out, p);
    }
}

impl Solver for Saga {
    fn method(&self) -> Method {
        Method::Saga
    }

    fn step(&mut self, oracle: &mut Oracle<'_>, j: usize) -> Result<()> {
        let p = oracle.problem();
        self.k += 1;
        let g = self.table.eval(oracle, j, &self.x);
        let mut buf = std::mem::take(&mut self.buf);
        match &mut self.seen {
            None => {
                self.bracket(p, j, &g, &mut buf);
                self.table.replace(j, &g, p);
                if let Some(pts) = &mut self.points {
                    let d = self.x.len();
                    pts[j * d..(j + 1) * d].copy_from_slice(&self.x);
                }
            }
            Some((seen, m)) => {
                // An unseen entry is inserted first, so the bracket is the seen-average.
                if !seen[j] {
                    seen[j] = true;
                    *m += 1;
                }
                self.table.replace(j, &g, p);
                let m = *m as f64;
                for (b, s) in buf.iter_mut().zip(self.table.sum()) {
                    *b = s / m;
                }
            }
        }
        if self.form == SagaForm::ExplicitRegularizer {
            linalg::scale(1.0 - p.ridge() * self.gamma, &mut self.x);
        }
        linalg::axpy(-self.gamma, &buf, &mut self.x);
        prox::prox_in_place(&self.reg, 1.0 / self.gamma, &mut self.x);
        self.buf = buf;
        Ok(())
    }

    fn iterate(&self) -> Vec<f64> {
        self.x.clone()
    }

    fn step_param(&self) -> f64 {
        self.gamma
    }

    fn steps(&self) -> u64 {
        self.k
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
}

/// Two-variable SAGA: keeps `u` with `x = u − γ Σ f_i'(φ_i)`,
/// `u ← u + (x − u)/n` and `φ_j ← x`. Produces the same iterates as [`Saga`]
/// (up to rounding) when started from a fully initialized table.
#[derive(Debug, Clone)]
pub struct SagaTwoVar {
    u: Vec<f64>,
    table: GradientTable,
    gamma: f64,
    k: u64,
}

impl SagaTwoVar {
    pub fn new(oracle: &mut Oracle<'_>, step: StepSize, mode: SagaMode, x0: &[f64]) -> Result<Self> {
        let p = oracle.problem();
        if !p.regularizer().is_none() {
            return Err(Error::Unsupported("two-variable SAGA has no proximal form".into()));
        }
        let gamma = fixed_or(step, mode.gamma(p), "step")?;
        let mut table = GradientTable::for_problem(p, true);
        table.fill_at(oracle, x0)?;
        let mut u = x0.to_vec();
        linalg::axpy(gamma, table.sum(), &mut u);
        Ok(SagaTwoVar { u, table, gamma, k: 0 })
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }
}

impl Solver for SagaTwoVar {
    fn method(&self) -> Method {
        Method::Saga2Var
    }

    fn step(&mut self, oracle: &mut Oracle<'_>, j: usize) -> Result<()> {
        let p = oracle.problem();
        self.k += 1;
        let x = self.iterate();
        let g = self.table.eval(oracle, j, &x);
        let inv_n = 1.0 / p.n() as f64;
        for (u, xv) in self.u.iter_mut().zip(&x) {
            *u += (xv - *u) * inv_n;
        }
        self.table.replace(j, &g, p);
        Ok(())
    }

    fn iterate(&self) -> Vec<f64> {
        let mut x = self.u.clone();
        linalg::axpy(-self.gamma, self.table.sum(), &mut x);
        x
    }

    fn step_param(&self) -> f64 {
        self.gamma
    }

    fn steps(&self) -> u64 {
        self.k
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
}

/// Explicit-regularizer SAGA on sparse linear models with just-in-time
/// updates: coordinates outside the sampled row are caught up only when
/// next read, applying the skipped steps `x_c ← prox((1 − μγ)x_c − γ ḡ_c)`
/// in closed form when the map is affine and one by one otherwise.
#[derive(Debug, Clone)]
pub struct SagaJit {
    x: Vec<f64>,
    last: Vec<u64>,
    table: GradientTable,
    gamma: f64,
    decay: f64,
    inv_n: f64,
    reg: Regularizer,
    k: u64,
}

impl SagaJit {
    pub fn new(oracle: &mut Oracle<'_>, step: StepSize, mode: SagaMode, x0: &[f64]) -> Result<Self> {
        let p = oracle.problem();
        if p.linear_data().is_none() {
            return Err(Error::Unsupported("just-in-time SAGA needs a linear model".into()));
        }
        let gamma = fixed_or(step, mode.gamma(p), "step")?;
        let mut table = GradientTable::for_problem(p, false);
        table.fill_at(oracle, x0)?;
        Ok(SagaJit {
            x: x0.to_vec(),
            last: vec![0; p.d()],
            table,
            gamma,
            decay: 1.0 - p.ridge() * gamma,
            inv_n: 1.0 / p.n() as f64,
            reg: *p.regularizer(),
            k: 0,
        })
    }

    /// One dense-equivalent coordinate update with table-mean component `m`.
    #[inline]
    fn one(&self, xc: f64, m: f64) -> f64 {
        self.reg.prox_scalar(1.0 / self.gamma, self.decay * xc - self.gamma * m)
    }

    fn catch_up(&self, xc: f64, m: f64, steps: u64) -> f64 {
        if steps == 0 {
            return xc;
        }
        // The composite map is affine for these regularizers: x ← t(a x + b).
        let t = match self.reg {
            Regularizer::None => Some(1.0),
            Regularizer::L2 { mu } => {
                let g = 1.0 / self.gamma;
                Some(g / (mu + g))
            }
            _ => None,
        };
        match t {
            Some(t) => {
                let a = t * self.decay;
                let b = -t * self.gamma * m;
                if a == 1.0 {
                    xc + steps as f64 * b
                } else {
                    let ak = a.powi(steps.min(i32::MAX as u64) as i32);
                    ak * xc + b * (1.0 - ak) / (1.0 - a)
                }
            }
            None => {
                let mut v = xc;
                for _ in 0..steps {
                    v = self.one(v, m);
                }
                v
            }
        }
    }
}

impl Solver for SagaJit {
    fn method(&self) -> Method {
        Method::Saga
    }

    fn step(&mut self, oracle: &mut Oracle<'_>, j: usize) -> Result<()> {
        let p = oracle.problem();
        let row = p.linear_data().unwrap().row(j);
        let k = self.k;
        for &c in &row.idx {
            let m = self.table.sum()[c] * self.inv_n;
            self.x[c] = self.catch_up(self.x[c], m, k - self.last[c]);
        }
        let g = self.table.eval(oracle, j, &self.x);
        let delta = match (&g, self.table.entry(j)) {
            (Grad::Scalar(new), Grad::Scalar(old)) => new - old,
            _ => unreachable!("scalar table"),
        };
        for (t, &c) in row.idx.iter().enumerate() {
            let m = self.table.sum()[c] * self.inv_n;
            let w = self.decay * self.x[c] - self.gamma * (delta * row.val[t] + m);
            self.x[c] = self.reg.prox_scalar(1.0 / self.gamma, w);
            self.last[c] = k + 1;
        }
        self.table.replace(j, &g, p);
        self.k += 1;
        Ok(())
    }

    fn iterate(&self) -> Vec<f64> {
        (0..self.x.len())
            .map(|c| self.catch_up(self.x[c], self.table.sum()[c] * self.inv_n, self.k - self.last[c]))
            .collect()
    }

    fn step_param(&self) -> f64 {
        self.gamma
    }

    fn steps(&self) -> u64 {
        self.k
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
}
