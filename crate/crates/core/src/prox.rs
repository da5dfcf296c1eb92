//! Proximal operators.
//!
//! Weighting convention: `prox(reg, gamma, v) = argmin_x h(x) + (gamma/2)‖x − v‖²`.
//! Larger `gamma` means a *smaller* move. Most libraries weight the quadratic
//! by `1/(2 gamma)` instead; callers porting code should invert the argument.

use crate::error::{check_finite, invalid, Result};
use crate::problem::FiniteSumProblem;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Regularizer {
    #[default]
    None,
    /// `(mu/2)‖x‖²`
    L2 { mu: f64 },
    /// `lambda‖x‖₁`
    L1 { lambda: f64 },
    /// `lambda‖x‖₁ + (mu/2)‖x‖²`
    Elastic { mu: f64, lambda: f64 },
    /// Indicator of `[lo, hi]^d`.
    Box { lo: f64, hi: f64 },
}

#[inline]
fn soft(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

impl Regularizer {
    pub fn validate(&self) -> Result<()> {
        let ok = |x: f64| x.is_finite() && x >= 0.0;
        match *self {
            Regularizer::None => Ok(()),
            Regularizer::L2 { mu } if ok(mu) => Ok(()),
            Regularizer::L1 { lambda } if ok(lambda) => Ok(()),
            Regularizer::Elastic { mu, lambda } if ok(mu) && ok(lambda) => Ok(()),
            Regularizer::Box { lo, hi } if lo <= hi && !lo.is_nan() && !hi.is_nan() => Ok(()),
            r => Err(invalid("regularizer", format!("{r:?}"))),
        }
    }

    pub fn is_none(&self) -> bool {
        matches!(self, Regularizer::None)
            || matches!(self, Regularizer::L1 { lambda } if *lambda == 0.0)
            || matches!(self, Regularizer::L2 { mu } if *mu == 0.0)
            || matches!(self, Regularizer::Elastic { mu, lambda } if *mu == 0.0 && *lambda == 0.0)
    }

    /// `h(x)`; `+inf` outside the box.
    pub fn value(&self, x: &[f64]) -> f64 {
        match *self {
            Regularizer::None => 0.0,
            Regularizer::L2 { mu } => 0.5 * mu * crate::linalg::norm_sq(x),
            Regularizer::L1 { lambda } => lambda * x.iter().map(|v| v.abs()).sum::<f64>(),
            Regularizer::Elastic { mu, lambda } => {
                lambda * x.iter().map(|v| v.abs()).sum::<f64>()
                    + 0.5 * mu * crate::linalg::norm_sq(x)
            }
            Regularizer::Box { lo, hi } => {
                if x.iter().all(|&v| v >= lo && v <= hi) {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    /// Per-coordinate prox. All supported regularizers are separable.
    #[inline]
    pub fn prox_scalar(&self, gamma: f64, v: f64) -> f64 {
        match *self {
            Regularizer::None => v,
            Regularizer::L2 { mu } => gamma * v / (mu + gamma),
            Regularizer::L1 { lambda } => soft(v, lambda / gamma),
            Regularizer::Elastic { mu, lambda } => soft(v, lambda / gamma) * gamma / (mu + gamma),
            Regularizer::Box { lo, hi } => v.clamp(lo, hi),
        }
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma.is_finite() && gamma > 0.0 {
        Ok(())
    } else {
        Err(invalid("gamma", format!("must be finite and > 0, got {gamma}")))
    }
}

/// `argmin_x h(x) + (gamma/2)‖x − v‖²`
pub fn prox(reg: &Regularizer, gamma: f64, v: &[f64]) -> Result<Vec<f64>> {
    check_gamma(gamma)?;
    check_finite(v, "prox input")?;
    Ok(v.iter().map(|&t| reg.prox_scalar(gamma, t)).collect())
}

/// In-place variant used on solver hot paths. No validation.
pub(crate) fn prox_in_place(reg: &Regularizer, gamma: f64, v: &mut [f64]) {
    if matches!(reg, Regularizer::None) {
        return;
    }
    for t in v.iter_mut() {
        *t = reg.prox_scalar(gamma, *t);
    }
}

/// Prox of the convex conjugate `h*` through the Moreau decomposition
/// `prox_gamma^{h*}(v) = v − (1/gamma)·prox_{1/gamma}^{h}(gamma·v)`.
/// `h*` itself is never evaluated.
pub fn prox_conjugate(reg: &Regularizer, gamma: f64, v: &[f64]) -> Result<Vec<f64>> {
    check_gamma(gamma)?;
    check_finite(v, "prox_conjugate input")?;
    Ok(v
        .iter()
        .map(|&t| t - reg.prox_scalar(1.0 / gamma, gamma * t) / gamma)
        .collect())
}

/// `argmin_x f_i(x) + (eta/2)‖x − z‖²` together with `f_i'(phi) = eta(z − phi)`.
pub fn prox_term(
    problem: &FiniteSumProblem,
    i: usize,
    eta: f64,
    z: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    problem.prox_term(i, eta, z)
}

/// Largest violation of `0 ∈ λ∂|p| + gamma(p − v)` over coordinates, for l1.
pub fn l1_optimality_residual(lambda: f64, gamma: f64, v: &[f64], p: &[f64]) -> f64 {
    let mut worst: f64 = 0.0;
    for (&vi, &pi) in v.iter().zip(p) {
        let g = gamma * (vi - pi);
        let r = if pi > 0.0 {
            (g - lambda).abs()
        } else if pi < 0.0 {
            (g + lambda).abs()
        } else {
            (g.abs() - lambda).max(0.0)
        };
        worst = worst.max(r);
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // Golden-section-free oracle: nested grid refinement on a 1-D objective.
    fn grid_argmin(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
        let (mut a, mut b) = (lo, hi);
        let mut best = a;
        for _ in 0..8 {
            let steps = 400;
            let h = (b - a) / steps as f64;
            let mut bv = f64::INFINITY;
            for k in 0..=steps {
                let x = a + h * k as f64;
                let v = f(x);
                if v < bv {
                    bv = v;
                    best = x;
                }
            }
            a = best - 2.0 * h;
            b = best + 2.0 * h;
        }
        best
    }

    fn reg_strategy() -> impl Strategy<Value = Regularizer> {
        prop_oneof![
            Just(Regularizer::None),
            (0.0..3.0f64).prop_map(|mu| Regularizer::L2 { mu }),
            (0.0..3.0f64).prop_map(|lambda| Regularizer::L1 { lambda }),
            (0.0..3.0f64, 0.0..3.0f64).prop_map(|(mu, lambda)| Regularizer::Elastic { mu, lambda }),
            (-2.0..0.0f64, 0.0..2.0f64).prop_map(|(lo, hi)| Regularizer::Box { lo, hi }),
        ]
    }

    #[test]
    fn l1_soft_threshold_example() {
        let p = prox(&Regularizer::L1 { lambda: 1.0 }, 2.0, &[3.0]).unwrap();
        assert_eq!(p, vec![2.5]);
    }

    #[test]
    fn l2_shrink_example() {
        let p = prox(&Regularizer::L2 { mu: 1.0 }, 1.0, &[1.0]).unwrap();
        assert_eq!(p, vec![0.5]);
    }

    #[test]
    fn none_is_identity_and_conjugate_is_zero() {
        let v = [1.5, -2.0];
        assert_eq!(prox(&Regularizer::None, 0.3, &v).unwrap(), v.to_vec());
        assert_eq!(prox_conjugate(&Regularizer::None, 0.3, &v).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn conjugate_of_half_square_example() {
        let p = prox_conjugate(&Regularizer::L2 { mu: 1.0 }, 1.0, &[1.0]).unwrap();
        assert!((p[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn conjugate_of_l1_projects_onto_box() {
        // h = |x| has h* = indicator of [-1, 1]; its prox is clipping for every gamma.
        let p = prox_conjugate(&Regularizer::L1 { lambda: 1.0 }, 2.0, &[3.0, -0.25]).unwrap();
        assert!((p[0] - 1.0).abs() < 1e-15, "got {p:?}");
        assert!((p[1] + 0.25).abs() < 1e-15, "got {p:?}");
    }

    #[test]
    fn rejects_bad_gamma() {
        assert!(prox(&Regularizer::None, 0.0, &[1.0]).is_err());
        assert!(prox(&Regularizer::None, -1.0, &[1.0]).is_err());
        assert!(prox_conjugate(&Regularizer::None, f64::NAN, &[1.0]).is_err());
    }

    #[test]
    fn rejects_non_finite_input() {
        assert!(prox(&Regularizer::None, 1.0, &[f64::NAN]).is_err());
    }

    #[test]
    fn grid_oracle_agrees_on_fixed_cases() {
        let cases = [
            (Regularizer::L1 { lambda: 0.7 }, 1.3, 0.4),
            (Regularizer::Elastic { mu: 0.5, lambda: 0.2 }, 0.8, -1.7),
            (Regularizer::Box { lo: -0.5, hi: 0.25 }, 2.0, 1.0),
        ];
        for (reg, g, v) in cases {
            let p = reg.prox_scalar(g, v);
            let o = grid_argmin(|x| reg.value(&[x]) + 0.5 * g * (x - v).powi(2), -5.0, 5.0);
            assert!((p - o).abs() < 1e-6, "{reg:?}: closed form {p}, grid {o}");
        }
    }

    proptest! {
        #[test]
        fn prox_is_nonexpansive(reg in reg_strategy(), g in 0.05..10.0f64,
                                u in prop::collection::vec(-5.0..5.0f64, 3),
                                v in prop::collection::vec(-5.0..5.0f64, 3)) {
            let pu = prox(&reg, g, &u).unwrap();
            let pv = prox(&reg, g, &v).unwrap();
            let lhs = crate::linalg::dist_sq(&pu, &pv).sqrt();
            let rhs = crate::linalg::dist_sq(&u, &v).sqrt();
            prop_assert!(lhs <= rhs + 1e-12);
        }

        #[test]
        fn moreau_identity_at_unit_weight(reg in reg_strategy(), v in prop::collection::vec(-5.0..5.0f64, 4)) {
            let p = prox(&reg, 1.0, &v).unwrap();
            let q = prox_conjugate(&reg, 1.0, &v).unwrap();
            for k in 0..v.len() {
                prop_assert!((p[k] + q[k] - v[k]).abs() <= 1e-12);
            }
        }

        #[test]
        fn l1_subgradient_condition(lambda in 0.0..3.0f64, g in 0.05..10.0f64,
                                    v in prop::collection::vec(-5.0..5.0f64, 5)) {
            let p = prox(&Regularizer::L1 { lambda }, g, &v).unwrap();
            prop_assert!(l1_optimality_residual(lambda, g, &v, &p) <= 1e-12);
        }
    }
}
