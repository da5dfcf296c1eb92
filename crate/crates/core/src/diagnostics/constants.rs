use crate::error::{invalid, Result};

/// Which SAGA analysis the constants belong to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstantsMode {
    /// `γ = 1/(2(μn + L))`.
    StronglyConvex,
    /// `γ = 1/(3L)` with `μ > 0`.
    Adaptive,
    /// `γ = 1/(3L)` with `μ = 0`.
    NonSc,
}

/// Free constants of the SAGA Lyapunov argument. `alpha` is only used by
/// the non-strongly-convex system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SagaConstants {
    pub gamma: f64,
    pub beta: f64,
    pub c: f64,
    pub kappa_inv: f64,
    pub alpha: f64,
}

impl SagaConstants {
    /// The published constant set for each mode.
    pub fn published(mode: ConstantsMode, mu: f64, l: f64, n: usize) -> Self {
        let nf = n as f64;
        match mode {
            ConstantsMode::StronglyConvex => {
                let gamma = 1.0 / (2.0 * (mu * nf + l));
                SagaConstants {
                    gamma,
                    beta: (2.0 * mu * nf + l) / l,
                    c: 1.0 / (2.0 * gamma * (1.0 - gamma * mu) * nf),
                    kappa_inv: gamma * mu,
                    alpha: 0.0,
                }
            }
            ConstantsMode::Adaptive => {
                let gamma = 1.0 / (3.0 * l);
                SagaConstants {
                    gamma,
                    beta: 2.0,
                    c: 1.0 / (2.0 * gamma * (1.0 - gamma * mu) * nf),
                    kappa_inv: f64::min(1.0 / (4.0 * nf), mu / (3.0 * l)),
                    alpha: 0.0,
                }
            }
            ConstantsMode::NonSc => SagaConstants {
                gamma: 1.0 / (3.0 * l),
                beta: 1.5,
                c: 3.0 * l / (2.0 * nf),
                kappa_inv: 0.0,
                alpha: 3.0 * l / (20.0 * nf),
            },
        }
    }
}

/// Values of `c1..c4` (strongly convex modes) or `τ1..τ3` (non-SC).
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantsReport {
    pub mode: ConstantsMode,
    pub values: Vec<(&'static str, f64)>,
    /// Every value is `≤ 0` up to rounding.
    pub pass: bool,
}

/// Sum of terms, with the magnitude used for the rounding allowance.
fn combine(terms: &[f64]) -> (f64, f64) {
    (terms.iter().sum(), terms.iter().map(|t| t.abs()).sum())
}

/// Evaluates every bracketed constant of the SAGA descent inequality.
///
/// A constant counts as non-positive when it is `≤ 1e−12` times the sum of
/// the magnitudes of its terms, since several are exactly zero by design.
pub fn saga_constants_check(k: &SagaConstants, mu: f64, l: f64, n: usize, mode: ConstantsMode) -> Result<ConstantsReport> {
    if !(l > 0.0 && mu >= 0.0 && n >= 1) {
        return Err(invalid("constants", "need L > 0, mu >= 0, n >= 1"));
    }
    if !(k.beta > 0.0 && k.gamma > 0.0) {
        return Err(invalid("constants", "need beta > 0 and gamma > 0"));
    }
    let nf = n as f64;
    let (g, b, c) = (k.gamma, k.beta, k.c);
    let raw: Vec<(&'static str, (f64, f64))> = match mode {
        ConstantsMode::StronglyConvex | ConstantsMode::Adaptive => vec![
            ("c1", combine(&[1.0 / nf, -2.0 * c * g * (l - mu) / l, -2.0 * c * g * g * mu * b])),
            ("c2", combine(&[k.kappa_inv, 2.0 * (1.0 + 1.0 / b) * c * g * g * l, -1.0 / nf])),
            ("c3", combine(&[c * k.kappa_inv, -g * mu * c])),
            ("c4", combine(&[(1.0 + b) * c * g * g, -c * g / l])),
        ],
        ConstantsMode::NonSc => vec![
            ("tau1", combine(&[1.0 / nf, -2.0 * c * g])),
            (
                "tau2",
                combine(&[4.0 * (1.0 + 1.0 / b) * k.alpha * l * g * g, 2.0 * (1.0 + 1.0 / b) * c * l * g * g, -1.0 / nf]),
            ),
            ("tau3", combine(&[(1.0 + b) * c * g, 2.0 * (1.0 + b) * k.alpha * g, -c / l])),
        ],
    };
    let pass = raw.iter().all(|(_, (v, scale))| *v <= 1e-12 * scale);
    Ok(ConstantsReport { mode, values: raw.into_iter().map(|(name, (v, _))| (name, v)).collect(), pass })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strongly_convex_example() {
        let k = SagaConstants::published(ConstantsMode::StronglyConvex, 1.0, 10.0, 100);
        let r = saga_constants_check(&k, 1.0, 10.0, 100, ConstantsMode::StronglyConvex).unwrap();
        assert!(r.pass, "{r:?}");
        assert_eq!(r.values.len(), 4);
    }

    #[test]
    fn adaptive_grid() {
        for mu in [1e-3, 0.1, 1.0] {
            for lf in [1.0, 3.0, 100.0] {
                for n in [1, 7, 1000] {
                    let l = mu * lf;
                    let k = SagaConstants::published(ConstantsMode::Adaptive, mu, l, n);
                    assert!(saga_constants_check(&k, mu, l, n, ConstantsMode::Adaptive).unwrap().pass);
                }
            }
        }
    }

    #[test]
    fn doubled_step_fails() {
        let mut k = SagaConstants::published(ConstantsMode::StronglyConvex, 1.0, 10.0, 100);
        k.gamma *= 2.0;
        let r = saga_constants_check(&k, 1.0, 10.0, 100, ConstantsMode::StronglyConvex).unwrap();
        assert!(!r.pass);
        assert!(r.values.iter().any(|(_, v)| *v > 0.0));
    }

    #[test]
    fn non_sc_set() {
        let k = SagaConstants::published(ConstantsMode::NonSc, 0.0, 2.0, 50);
        let r = saga_constants_check(&k, 0.0, 2.0, 50, ConstantsMode::NonSc).unwrap();
        assert!(r.pass, "{r:?}");
        // tau2 = (1/9 + 5/9 − 1)/n.
        let tau2 = r.values[1].1;
        assert!((tau2 * 50.0 + 1.0 / 3.0).abs() < 1e-12);
    }
}
