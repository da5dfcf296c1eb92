use crate::error::Result;
use crate::linalg;
use crate::problem::FiniteSumProblem;

use super::Oracle;

/// One stored term gradient: a dense vector, or a scalar `s` standing for `s·a_i`.
#[derive(Debug, Clone, PartialEq)]
pub enum Grad {
    Dense(Vec<f64>),
    Scalar(f64),
}

impl Grad {
    /// out += c·g, where `i` selects the row for scalar entries.
    pub fn add_to(&self, c: f64, i: usize, out: &mut [f64], problem: &FiniteSumProblem) {
        match self {
            Grad::Dense(g) => linalg::axpy(c, g, out),
            Grad::Scalar(s) => problem
                .linear_data()
                .expect("scalar gradient on a non-linear problem")
                .row(i)
                .axpy_into(c * s, out),
        }
    }

    pub fn to_dense(&self, i: usize, problem: &FiniteSumProblem) -> Vec<f64> {
        let mut out = vec![0.0; problem.d()];
        self.add_to(1.0, i, &mut out, problem);
        out
    }
}

#[derive(Debug, Clone)]
enum Store {
    Dense(Vec<f64>),
    Scalar(Vec<f64>),
}

/// Per-term stored gradients `g_i` with a running sum `S = Σ g_i`.
///
/// `full` tables hold term gradients `f_i'`, otherwise loss gradients with
/// the ridge part removed. Scalar storage is only available for linear
/// models, and for full tables only when the ridge is zero.
/// The sum is recomputed from the entries every `1000·n` replacements.
#[derive(Debug, Clone)]
pub struct GradientTable {
    n: usize,
    d: usize,
    full: bool,
    store: Store,
    sum: Vec<f64>,
    updates: u64,
}

impl GradientTable {
    /// Chooses scalar storage whenever the problem allows it.
    pub fn for_problem(problem: &FiniteSumProblem, full: bool) -> Self {
        let (n, d) = (problem.n(), problem.d());
        let scalar = problem.linear_data().is_some() && (!full || problem.ridge() == 0.0);
        GradientTable {
            n,
            d,
            full,
            store: if scalar { Store::Scalar(vec![0.0; n]) } else { Store::Dense(vec![0.0; n * d]) },
            sum: vec![0.0; d],
            updates: 0,
        }
    }

    pub fn dense(problem: &FiniteSumProblem, full: bool) -> Self {
        let (n, d) = (problem.n(), problem.d());
        GradientTable {
            n,
            d,
            full,
            store: Store::Dense(vec![0.0; n * d]),
            sum: vec![0.0; d],
            updates: 0,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn is_scalar(&self) -> bool {
        matches!(self.store, Store::Scalar(_))
    }
    pub fn is_full(&self) -> bool {
        self.full
    }
    pub fn sum(&self) -> &[f64] {
        &self.sum
    }

    /// Evaluates the gradient this table stores for term `j` at `x` (one access).
    pub fn eval(&self, oracle: &mut Oracle<'_>, j: usize, x: &[f64]) -> Grad {
        match self.store {
            Store::Scalar(_) => Grad::Scalar(oracle.linear_deriv(j, x)),
            Store::Dense(_) => {
                let mut g = vec![0.0; self.d];
                if self.full {
                    oracle.term_grad(j, x, &mut g);
                } else {
                    oracle.loss_grad(j, x, &mut g);
                }
                Grad::Dense(g)
            }
        }
    }

    pub fn entry(&self, i: usize) -> Grad {
        match &self.store {
            Store::Dense(v) => Grad::Dense(v[i * self.d..(i + 1) * self.d].to_vec()),
            Store::Scalar(c) => Grad::Scalar(c[i]),
        }
    }

    pub fn entry_dense(&self, i: usize, problem: &FiniteSumProblem) -> Vec<f64> {
        match &self.store {
            Store::Dense(v) => v[i * self.d..(i + 1) * self.d].to_vec(),
            Store::Scalar(c) => Grad::Scalar(c[i]).to_dense(i, problem),
        }
    }

    /// out += c·g_i
    pub fn add_entry(&self, i: usize, c: f64, out: &mut [f64], problem: &FiniteSumProblem) {
        match &self.store {
            Store::Dense(v) => linalg::axpy(c, &v[i * self.d..(i + 1) * self.d], out),
            Store::Scalar(s) => problem.linear_data().unwrap().row(i).axpy_into(c * s[i], out),
        }
    }

    pub fn replace(&mut self, i: usize, g: &Grad, problem: &FiniteSumProblem) {
        let d = self.d;
        match (&mut self.store, g) {
            (Store::Dense(v), Grad::Dense(g)) => {
                let slot = &mut v[i * d..(i + 1) * d];
                for k in 0..d {
                    self.sum[k] += g[k] - slot[k];
                }
                slot.copy_from_slice(g);
            }
            (Store::Scalar(c), Grad::Scalar(s)) => {
                let delta = s - c[i];
                c[i] = *s;
                problem.linear_data().unwrap().row(i).axpy_into(delta, &mut self.sum);
            }
            _ => panic!("gradient representation does not match table storage"),
        }
        self.updates += 1;
        if self.updates % (1000 * self.n as u64) == 0 {
            self.sum = self.recomputed_sum(problem);
        }
    }

    /// Σ g_i in index order.
    pub fn recomputed_sum(&self, problem: &FiniteSumProblem) -> Vec<f64> {
        let mut s = vec![0.0; self.d];
        for i in 0..self.n {
            self.add_entry(i, 1.0, &mut s, problem);
        }
        s
    }

    /// Fills every entry with the gradient at `x` (n accesses).
    pub fn fill_at(&mut self, oracle: &mut Oracle<'_>, x: &[f64]) -> Result<()> {
        for i in 0..self.n {
            let g = self.eval(oracle, i, x);
            self.replace(i, &g, oracle.problem());
        }
        self.sum = self.recomputed_sum(oracle.problem());
        Ok(())
    }

    pub fn scalars(&self) -> Option<&[f64]> {
        match &self.store {
            Store::Scalar(c) => Some(c),
            Store::Dense(_) => None,
        }
    }
}
