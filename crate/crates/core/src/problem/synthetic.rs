//! Seeded synthetic instances. Feature rows are Gaussian, normalized to unit
//! length so `L_i` is known exactly.

use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};

use super::{FiniteSumProblem, LinearModelData, LossKind, QuadraticTerms};
use crate::error::{invalid, Result};
use crate::linalg::{self, SparseRow};
use crate::prox::Regularizer;
use crate::rng::CounterRng;

fn gaussian(rng: &mut CounterRng, d: usize) -> Vec<f64> {
    (0..d).map(|_| StandardNormal.sample(rng)).collect()
}

fn unit_rows(rng: &mut CounterRng, n: usize, d: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| loop {
            let mut a = gaussian(rng, d);
            let nrm = linalg::norm_sq(&a).sqrt();
            if nrm > 1e-12 {
                linalg::scale(1.0 / nrm, &mut a);
                break a;
            }
        })
        .collect()
}

fn check_size(n: usize, d: usize) -> Result<()> {
    if n == 0 || d == 0 {
        Err(invalid("size", "need n >= 1 and d >= 1"))
    } else {
        Ok(())
    }
}

/// Regression data `y_i = a_iᵀw + 0.1·noise`.
pub fn regression_data(n: usize, d: usize, seed: u64) -> Result<LinearModelData> {
    check_size(n, d)?;
    let mut rng = CounterRng::derived(seed, 0x5EED_0001);
    let w = gaussian(&mut rng, d);
    let rows = unit_rows(&mut rng, n, d);
    let labels = rows
        .iter()
        .map(|a| linalg::dot(a, &w) + 0.1 * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng))
        .collect();
    LinearModelData::new(rows.iter().map(|a| SparseRow::from_dense(a)).collect(), labels, LossKind::Squared, d)
}

/// Classification data with labels `sign(a_iᵀw + 0.5·noise)`.
pub fn classification_data(n: usize, d: usize, seed: u64) -> Result<LinearModelData> {
    check_size(n, d)?;
    let mut rng = CounterRng::derived(seed, 0x5EED_0002);
    let w = gaussian(&mut rng, d);
    let rows = unit_rows(&mut rng, n, d);
    let labels = rows
        .iter()
        .map(|a| {
            let t = linalg::dot(a, &w) + 0.5 * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng);
            if t >= 0.0 {
                1.0
            } else {
                -1.0
            }
        })
        .collect();
    LinearModelData::new(rows.iter().map(|a| SparseRow::from_dense(a)).collect(), labels, LossKind::Logistic, d)
}

/// Ridge least squares, squared loss with `l2` inside every term.
pub fn ridge(n: usize, d: usize, l2: f64, seed: u64) -> Result<FiniteSumProblem> {
    FiniteSumProblem::linear(regression_data(n, d, seed)?, l2, Regularizer::None)
}

/// Regularized logistic regression with Gaussian features.
pub fn logistic(n: usize, d: usize, l2: f64, seed: u64) -> Result<FiniteSumProblem> {
    FiniteSumProblem::linear(classification_data(n, d, seed)?, l2, Regularizer::None)
}

/// Unregularized least squares; consistent when `d >= n`.
pub fn least_squares(n: usize, d: usize, seed: u64) -> Result<FiniteSumProblem> {
    FiniteSumProblem::linear(regression_data(n, d, seed)?, 0.0, Regularizer::None)
}

/// Dense quadratics `½(x − c_i)ᵀH_i(x − c_i)` with `H_i = s_i(B_iB_iᵀ/d + 0.2 I)`,
/// scales `s_i` spread over `[0.5, 2]` so the `L_i` differ.
pub fn random_quadratics(n: usize, d: usize, ridge: f64, seed: u64) -> Result<FiniteSumProblem> {
    check_size(n, d)?;
    let mut rng = CounterRng::derived(seed, 0x5EED_0003);
    let mut hs = Vec::with_capacity(n);
    let mut cs = Vec::with_capacity(n);
    for _ in 0..n {
        let b = DMatrix::<f64>::from_fn(d, d, |_, _| StandardNormal.sample(&mut rng));
        let s = 0.5 + 1.5 * rng.uniform_f64();
        let h = (&b * b.transpose() / d as f64 + DMatrix::identity(d, d) * 0.2) * s;
        hs.push((&h + h.transpose()) * 0.5);
        cs.push(gaussian(&mut rng, d));
    }
    FiniteSumProblem::quadratic(QuadraticTerms::new(hs, cs)?, ridge, Regularizer::None)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generators_are_seeded() {
        let a = logistic(20, 4, 0.1, 9).unwrap();
        let b = logistic(20, 4, 0.1, 9).unwrap();
        let c = logistic(20, 4, 0.1, 10).unwrap();
        assert_eq!(a.linear_data(), b.linear_data());
        assert_ne!(a.linear_data(), c.linear_data());
    }

    #[test]
    fn unit_rows_fix_lipschitz() {
        let p = logistic(30, 5, 0.1, 1).unwrap();
        for &l in p.lipschitz() {
            assert!((l - 0.35).abs() < 1e-12);
        }
        let p = ridge(30, 5, 0.1, 1).unwrap();
        assert!((p.l_max() - 1.1).abs() < 1e-12);
    }

    #[test]
    fn quadratic_constants_are_ordered() {
        let p = random_quadratics(6, 3, 0.1, 2).unwrap();
        assert!(p.l_max() >= p.l_mean() && p.l_mean() >= p.mu() && p.mu() > 0.1);
    }
}
