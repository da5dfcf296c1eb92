use std::any::Any;

use super::{fixed_or, Grad, GradientTable, Method, Oracle, Solver, StepSize};
use crate::error::Result;
use crate::linalg;

/// SAG in its single-equation form:
/// `x ← x − γ[(f_j'(x) − y_j)/n + (1/n)Σ y_i]`, then `y_j ← f_j'(x_old)`.
///
/// With lazy initialization the table starts empty and the step uses the
/// average over the `m` terms seen so far: `x ← x − (γ/m)Σ_seen y_i`.
#[derive(Debug, Clone)]
pub struct Sag {
    x: Vec<f64>,
    table: GradientTable,
    gamma: f64,
    seen: Option<(Vec<bool>, usize)>,
    k: u64,
    buf: Vec<f64>,
}

impl Sag {
    /// Default step `1/L`.
    pub fn new(oracle: &mut Oracle<'_>, step: StepSize, lazy: bool, x0: &[f64]) -> Result<Self> {
        let p = oracle.problem();
        let gamma = fixed_or(step, 1.0 / p.l_max(), "step")?;
        let mut table = GradientTable::for_problem(p, true);
        let seen = if lazy {
            Some((vec![false; p.n()], 0))
        } else {
            table.fill_at(oracle, x0)?;
            None
        };
        Ok(Sag { x: x0.to_vec(), table, gamma, seen, k: 0, buf: vec![0.0; p.d()] })
    }

    pub fn table(&self) -> &GradientTable {
        &self.table
    }

    /// The update direction for index `j` at the current state, without stepping.
    pub fn direction(&self, oracle: &mut Oracle<'_>, j: usize) -> Vec<f64> {
        let p = oracle.problem();
        let n = p.n() as f64;
        let g: Grad = self.table.eval(oracle, j, &self.x);
        let mut dir: Vec<f64> = self.table.sum().iter().map(|s| s / n).collect();
        g.add_to(1.0 / n, j, &mut dir, p);
        self.table.add_entry(j, -1.0 / n, &mut dir, p);
        dir
    }
}

impl Solver for Sag {
    fn method(&self) -> Method {
        Method::Sag
    }

    fn step(&mut self, oracle: &mut Oracle<'_>, j: usize) -> Result<()> {
        let p = oracle.problem();
        self.k += 1;
        let g = self.table.eval(oracle, j, &self.x);
        match &mut self.seen {
            None => {
                let n = p.n() as f64;
                for (b, s) in self.buf.iter_mut().zip(self.table.sum()) {
                    *b = s / n;
                }
                g.add_to(1.0 / n, j, &mut self.buf, p);
                self.table.add_entry(j, -1.0 / n, &mut self.buf, p);
                self.table.replace(j, &g, p);
            }
            Some((seen, m)) => {
                if !seen[j] {
                    seen[j] = true;
                    *m += 1;
                }
                self.table.replace(j, &g, p);
                let m = *m as f64;
                for (b, s) in self.buf.iter_mut().zip(self.table.sum()) {
                    *b = s / m;
                }
            }
        }
        linalg::axpy(-self.gamma, &self.buf, &mut self.x);
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
