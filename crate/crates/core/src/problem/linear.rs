use crate::error::{check_finite, invalid, Error, Result};
use crate::linalg::SparseRow;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    /// `log(1 + exp(−y s))`, labels in {−1, +1}.
    Logistic,
    /// `½(s − y)²`.
    Squared,
}

impl LossKind {
    pub fn name(&self) -> &'static str {
        match self {
            LossKind::Logistic => "logistic",
            LossKind::Squared => "squared",
        }
    }

    /// Upper bound on the second derivative of the scalar loss.
    pub fn curvature(&self) -> f64 {
        match self {
            LossKind::Logistic => 0.25,
            LossKind::Squared => 1.0,
        }
    }
}

/// Linear-model terms `loss_i(x) = w·ℓ(a_iᵀx, y_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModelData {
    rows: Vec<SparseRow>,
    labels: Vec<f64>,
    loss: LossKind,
    weight: f64,
    d: usize,
    row_norm_sq: Vec<f64>,
}

#[inline]
pub(crate) fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + exp(t))` without overflow.
#[inline]
pub(crate) fn softplus(t: f64) -> f64 {
    t.max(0.0) + (-t.abs()).exp().ln_1p()
}

const NEWTON_TOL: f64 = 1e-12;
const NEWTON_MAX_ITER: usize = 100;

impl LinearModelData {
    pub fn new(rows: Vec<SparseRow>, labels: Vec<f64>, loss: LossKind, d: usize) -> Result<Self> {
        if rows.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: rows.len(),
                got: labels.len(),
            });
        }
        if d == 0 {
            return Err(invalid("d", "must be >= 1"));
        }
        check_finite(&labels, "labels")?;
        for r in &rows {
            check_finite(&r.val, "features")?;
            if let Some(m) = r.max_index() {
                if m >= d {
                    return Err(Error::IndexOutOfRange { index: m, n: d });
                }
            }
        }
        if loss == LossKind::Logistic && labels.iter().any(|&y| y != 1.0 && y != -1.0) {
            return Err(invalid("labels", "logistic loss needs labels in {-1, +1}"));
        }
        let row_norm_sq = rows.iter().map(|r| r.norm_sq()).collect();
        Ok(LinearModelData {
            rows,
            labels,
            loss,
            weight: 1.0,
            d,
            row_norm_sq,
        })
    }

    /// Multiply every loss by `w > 0`.
    pub fn with_loss_weight(mut self, w: f64) -> Result<Self> {
        if !(w.is_finite() && w > 0.0) {
            return Err(invalid("loss_weight", format!("must be > 0, got {w}")));
        }
        self.weight = w;
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }
    pub fn d(&self) -> usize {
        self.d
    }
    pub fn loss(&self) -> LossKind {
        self.loss
    }
    pub fn weight(&self) -> f64 {
        self.weight
    }
    pub fn row(&self, i: usize) -> &SparseRow {
        &self.rows[i]
    }
    pub fn rows(&self) -> &[SparseRow] {
        &self.rows
    }
    pub fn label(&self, i: usize) -> f64 {
        self.labels[i]
    }
    pub fn labels(&self) -> &[f64] {
        &self.labels
    }
    pub fn row_norm_sq(&self, i: usize) -> f64 {
        self.row_norm_sq[i]
    }

    /// Smoothness of `loss_i`: `w·curv·‖a_i‖²`.
    pub fn loss_smoothness(&self, i: usize) -> f64 {
        self.weight * self.loss.curvature() * self.row_norm_sq[i]
    }

    /// Scalar loss and derivative at `s = a_iᵀx`.
    #[inline]
    pub fn loss_at(&self, i: usize, s: f64) -> (f64, f64) {
        let y = self.labels[i];
        let w = self.weight;
        match self.loss {
            LossKind::Logistic => (w * softplus(-y * s), -w * y * sigmoid(-y * s)),
            LossKind::Squared => (w * 0.5 * (s - y) * (s - y), w * (s - y)),
        }
    }

    #[inline]
    pub(crate) fn loss_second(&self, i: usize, s: f64) -> f64 {
        match self.loss {
            LossKind::Logistic => {
                let p = sigmoid(s * self.labels[i]);
                self.weight * p * (1.0 - p)
            }
            LossKind::Squared => self.weight,
        }
    }

    /// Convex conjugate of the scalar loss, `(wℓ)*(b)`.
    pub fn conjugate(&self, i: usize, b: f64) -> f64 {
        let y = self.labels[i];
        let w = self.weight;
        match self.loss {
            LossKind::Squared => b * b / (2.0 * w) + b * y,
            LossKind::Logistic => {
                let t = -b * y / w;
                if !(-1e-15..=1.0 + 1e-15).contains(&t) {
                    return f64::INFINITY;
                }
                let t = t.clamp(0.0, 1.0);
                let xlogx = |v: f64| if v <= 0.0 { 0.0 } else { v * v.ln() };
                w * (xlogx(t) + xlogx(1.0 - t))
            }
        }
    }

    /// `argmin_x w·ℓ(a_iᵀx) + (ridge/2)‖x‖² + (eta/2)‖x − z‖²`.
    ///
    /// Reduces to the scalar `s = a_iᵀx`, solving
    /// `G(s) = ρs − η a_iᵀz + w ℓ'(s)‖a_i‖² = 0` with `ρ = ridge + η`.
    /// Returns `phi` and the loss derivative at `s`.
    pub(crate) fn prox(&self, i: usize, eta: f64, ridge: f64, z: &[f64]) -> Result<(Vec<f64>, f64)> {
        let row = &self.rows[i];
        let rho = ridge + eta;
        let q = self.row_norm_sq[i];
        let b = eta * row.dot(z);
        let s = self.solve_scalar(i, rho, b, q)?;
        let dv = self.loss_at(i, s).1;
        let mut phi: Vec<f64> = z.iter().map(|v| eta * v / rho).collect();
        row.axpy_into(-dv / rho, &mut phi);
        Ok((phi, dv))
    }

    fn solve_scalar(&self, i: usize, rho: f64, b: f64, q: f64) -> Result<f64> {
        if q == 0.0 {
            return Ok(0.0);
        }
        let w = self.weight;
        match self.loss {
            LossKind::Squared => {
                let y = self.labels[i];
                Ok((b + w * q * y) / (rho + w * q))
            }
            LossKind::Logistic => {
                // |ℓ'| < 1, so the root lies in [(b − wq)/ρ, (b + wq)/ρ].
                let mut lo = (b - w * q) / rho;
                let mut hi = (b + w * q) / rho;
                let g = |s: f64| rho * s - b + self.loss_at(i, s).1 * q;
                let scale = rho * (b.abs() / rho + w * q / rho).max(1.0);
                let mut s = b / rho;
                let mut r = g(s);
                for _ in 0..NEWTON_MAX_ITER {
                    if r.abs() <= NEWTON_TOL * scale {
                        return Ok(s);
                    }
                    if r > 0.0 {
                        hi = s;
                    } else {
                        lo = s;
                    }
                    let dg = rho + self.loss_second(i, s) * q;
                    let mut next = s - r / dg;
                    if !(next > lo && next < hi) {
                        next = 0.5 * (lo + hi);
                    }
                    if next == s {
                        return Ok(s);
                    }
                    s = next;
                    r = g(s);
                }
                if r.abs() <= 1e3 * NEWTON_TOL * scale {
                    Ok(s)
                } else {
                    Err(Error::InnerSolve {
                        iterations: NEWTON_MAX_ITER,
                        residual: r.abs(),
                    })
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn softplus_is_stable() {
        assert_eq!(softplus(1000.0), 1000.0);
        assert!(softplus(-1000.0) >= 0.0 && softplus(-1000.0) < 1e-300);
        assert!((softplus(0.0) - 2f64.ln()).abs() < 1e-16);
    }

    #[test]
    fn logistic_conjugate_matches_fenchel_sup() {
        let data = LinearModelData::new(vec![SparseRow::unit(0)], vec![1.0], LossKind::Logistic, 1).unwrap();
        for b in [-0.9, -0.5, -0.1] {
            // sup_s b·s − ℓ(s) by dense scan.
            let mut best = f64::NEG_INFINITY;
            for k in -40000..40000 {
                let s = k as f64 * 1e-3;
                best = best.max(b * s - data.loss_at(0, s).0);
            }
            assert!((best - data.conjugate(0, b)).abs() < 1e-6, "b={b}");
        }
        assert!(data.conjugate(0, 0.5).is_infinite());
    }

    #[test]
    fn squared_conjugate_matches_fenchel_sup() {
        let data = LinearModelData::new(vec![SparseRow::unit(0)], vec![0.7], LossKind::Squared, 1)
            .unwrap()
            .with_loss_weight(2.0)
            .unwrap();
        let b = 1.3;
        let s = b / 2.0 + 0.7;
        let sup = b * s - data.loss_at(0, s).0;
        assert!((sup - data.conjugate(0, b)).abs() < 1e-14);
    }

    #[test]
    fn logistic_prox_satisfies_stationarity() {
        let row = SparseRow::from_dense(&[1.5, -0.5]);
        let data = LinearModelData::new(vec![row.clone()], vec![-1.0], LossKind::Logistic, 2).unwrap();
        let z = [0.4, 2.0];
        let (eta, ridge) = (0.7, 0.2);
        let (phi, dv) = data.prox(0, eta, ridge, &z).unwrap();
        let s = row.dot(&phi);
        assert!((dv - data.loss_at(0, s).1).abs() < 1e-15);
        for k in 0..2 {
            let g = dv * row.to_dense(2)[k] + ridge * phi[k] + eta * (phi[k] - z[k]);
            assert!(g.abs() < 1e-11, "component {k}: {g}");
        }
    }

    #[test]
    fn rejects_bad_logistic_labels() {
        assert!(LinearModelData::new(vec![SparseRow::unit(0)], vec![0.5], LossKind::Logistic, 1).is_err());
        assert!(LinearModelData::new(vec![SparseRow::unit(3)], vec![1.0], LossKind::Squared, 2).is_err());
    }
}
