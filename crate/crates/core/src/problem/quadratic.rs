use nalgebra::{DMatrix, DVector};

use crate::error::{check_finite, invalid, Error, Result};

/// Dense quadratic terms `loss_i(x) = ½(x − c_i)ᵀH_i(x − c_i)`, `H_i` symmetric PSD.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticTerms {
    d: usize,
    hessians: Vec<DMatrix<f64>>,
    centers: Vec<DVector<f64>>,
    eig_min: Vec<f64>,
    eig_max: Vec<f64>,
}

impl QuadraticTerms {
    pub fn new(hessians: Vec<DMatrix<f64>>, centers: Vec<Vec<f64>>) -> Result<Self> {
        if hessians.len() != centers.len() {
            return Err(Error::DimensionMismatch {
                expected: hessians.len(),
                got: centers.len(),
            });
        }
        let d = centers.first().map_or(0, |c| c.len());
        if d == 0 {
            return Err(invalid("d", "must be >= 1"));
        }
        let mut eig_min = Vec::with_capacity(hessians.len());
        let mut eig_max = Vec::with_capacity(hessians.len());
        for (h, c) in hessians.iter().zip(&centers) {
            if h.nrows() != d || h.ncols() != d || c.len() != d {
                return Err(Error::DimensionMismatch { expected: d, got: c.len() });
            }
            check_finite(h.as_slice(), "hessian")?;
            check_finite(c, "center")?;
            if (h - h.transpose()).amax() > 1e-12 * h.amax().max(1.0) {
                return Err(invalid("hessian", "must be symmetric"));
            }
            let ev = h.clone().symmetric_eigenvalues();
            let lo = ev.min();
            if lo < -1e-10 * ev.amax().max(1.0) {
                return Err(invalid("hessian", format!("not positive semidefinite (eigenvalue {lo:e})")));
            }
            eig_min.push(lo.max(0.0));
            eig_max.push(ev.max().max(0.0));
        }
        Ok(QuadraticTerms {
            d,
            hessians,
            centers: centers.into_iter().map(DVector::from_vec).collect(),
            eig_min,
            eig_max,
        })
    }

    /// Scalar terms `½h_i(x − c_i)²` in one dimension.
    pub fn scalar(curvatures: &[f64], centers: &[f64]) -> Result<Self> {
        QuadraticTerms::new(
            curvatures.iter().map(|&h| DMatrix::from_element(1, 1, h)).collect(),
            centers.iter().map(|&c| vec![c]).collect(),
        )
    }

    pub fn n(&self) -> usize {
        self.hessians.len()
    }
    pub fn d(&self) -> usize {
        self.d
    }
    pub fn hessian(&self, i: usize) -> &DMatrix<f64> {
        &self.hessians[i]
    }
    pub fn center(&self, i: usize) -> &[f64] {
        self.centers[i].as_slice()
    }
    pub fn max_curvature(&self, i: usize) -> f64 {
        self.eig_max[i]
    }
    pub fn min_curvature(&self) -> f64 {
        self.eig_min.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub(crate) fn eval_into(&self, i: usize, x: &[f64], grad: Option<&mut [f64]>) -> f64 {
        let r = DVector::from_column_slice(x) - &self.centers[i];
        let hr = &self.hessians[i] * &r;
        if let Some(g) = grad {
            g.copy_from_slice(hr.as_slice());
        }
        0.5 * r.dot(&hr)
    }

    /// Solves `(H + (ridge + eta)I) x = H c + eta z`.
    pub(crate) fn prox(&self, i: usize, eta: f64, ridge: f64, z: &[f64]) -> Result<Vec<f64>> {
        let h = &self.hessians[i];
        let a = h + DMatrix::identity(self.d, self.d) * (ridge + eta);
        let rhs = h * &self.centers[i] + DVector::from_column_slice(z) * eta;
        let chol = a
            .cholesky()
            .ok_or(Error::InnerSolve { iterations: 0, residual: f64::NAN })?;
        Ok(chol.solve(&rhs).as_slice().to_vec())
    }

    /// Minimizer of `(1/n)Σ loss_i + (ridge/2)‖x‖²` by one linear solve.
    /// Uses the pseudo-inverse when the system is singular.
    pub(crate) fn minimizer(&self, ridge: f64) -> Vec<f64> {
        let n = self.n() as f64;
        let mut a = DMatrix::identity(self.d, self.d) * ridge;
        let mut b = DVector::zeros(self.d);
        for (h, c) in self.hessians.iter().zip(&self.centers) {
            a += h / n;
            b += h * c / n;
        }
        match a.clone().cholesky() {
            Some(ch) => ch.solve(&b).as_slice().to_vec(),
            None => a
                .svd(true, true)
                .solve(&b, 1e-13)
                .map(|v| v.as_slice().to_vec())
                .unwrap_or_else(|_| vec![0.0; self.d]),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn value_and_gradient() {
        let q = QuadraticTerms::new(
            vec![DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 3.0])],
            vec![vec![1.0, -1.0]],
        )
        .unwrap();
        let mut g = [0.0; 2];
        let v = q.eval_into(0, &[2.0, 0.0], Some(&mut g));
        // r = (1, 1), Hr = (3, 4)
        assert_eq!(g, [3.0, 4.0]);
        assert_eq!(v, 3.5);
    }

    #[test]
    fn prox_stationarity() {
        let h = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 3.0]);
        let q = QuadraticTerms::new(vec![h.clone()], vec![vec![1.0, -1.0]]).unwrap();
        let z = [0.5, 0.25];
        let phi = q.prox(0, 1.5, 0.3, &z).unwrap();
        let mut g = [0.0; 2];
        q.eval_into(0, &phi, Some(&mut g));
        for k in 0..2 {
            assert!((g[k] + 0.3 * phi[k] + 1.5 * (phi[k] - z[k])).abs() < 1e-13);
        }
    }

    #[test]
    fn rejects_indefinite_or_asymmetric() {
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(QuadraticTerms::new(vec![bad], vec![vec![0.0, 0.0]]).is_err());
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(QuadraticTerms::new(vec![asym], vec![vec![0.0, 0.0]]).is_err());
    }
}
