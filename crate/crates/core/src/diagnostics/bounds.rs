use crate::error::{Error, Result};
use crate::linalg;
use crate::problem::{big_data_check, FiniteSumProblem, Reference};
use crate::solvers::{Method, MethodConfig, SagaMode, StepSize};

/// The measured quantity a bound controls.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    /// `F(x^k) − F*` at the reported iterate.
    Suboptimality,
    /// `‖x^k − x*‖²`.
    DistSq,
    /// `F(x̄^k) − F*` at the running average of iterates.
    AvgSuboptimality,
    /// `D* − D(α^k)`.
    DualSuboptimality,
    /// `‖x̃ − x*‖² + (c4/(2L))(f(x̃) − f*)` at the latest snapshot.
    SnapshotLyapunov,
}

impl Quantity {
    pub fn name(&self) -> &'static str {
        match self {
            Quantity::Suboptimality => "suboptimality",
            Quantity::DistSq => "dist_sq",
            Quantity::AvgSuboptimality => "avg_suboptimality",
            Quantity::DualSuboptimality => "dual_suboptimality",
            Quantity::SnapshotLyapunov => "snapshot_lyapunov",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    /// `ρ^k·C₀`.
    Geometric { rho: f64 },
    /// `C₀/k` for `k ≥ 1`.
    Sublinear,
}

/// Theoretical envelope `bound(k)` for one method on one problem.
#[derive(Debug, Clone, PartialEq)]
pub struct RateBound {
    pub method: Method,
    pub shape: Shape,
    pub c0: f64,
    /// `Some(m)`: `k` counts recalibrations of `m` inner steps, not steps.
    pub per_epoch: Option<usize>,
    pub quantity: Quantity,
    /// Holds only under an extra unproven assumption.
    pub conditional: bool,
}

impl RateBound {
    /// Bound after `k` steps (or recalibrations when `per_epoch` is set).
    pub fn value(&self, k: u64) -> f64 {
        match self.shape {
            Shape::Geometric { rho } => rho.powf(k as f64) * self.c0,
            Shape::Sublinear if k == 0 => f64::INFINITY,
            Shape::Sublinear => self.c0 / k as f64,
        }
    }

    /// Geometric factor, or `None` for sublinear envelopes.
    pub fn rho(&self) -> Option<f64> {
        match self.shape {
            Shape::Geometric { rho } => Some(rho),
            Shape::Sublinear => None,
        }
    }
}

/// Inverse-step factor `β` needed by Finito for a given `α`.
pub fn finito_beta(alpha: f64) -> Result<f64> {
    if !(alpha > 1.0) {
        return Err(Error::Hypothesis(format!("Finito rate needs alpha > 1, got {alpha}")));
    }
    Ok(f64::max(2.0, (2.0 * alpha - 1.0) / (alpha * (alpha - 1.0))))
}

/// SDCA's per-step factor `1 − μ/(L + μn)`; `L` is the largest loss smoothness.
pub fn sdca_rho(mu: f64, l: f64, n: usize) -> f64 {
    1.0 - mu / (l + mu * n as f64)
}

/// Finito's per-step factor `1 − 1/(αn)`.
pub fn finito_rho(alpha: f64, n: usize) -> f64 {
    1.0 - 1.0 / (alpha * n as f64)
}

/// Factor by which the Finito bound shrinks over `epochs` epochs at `α = 2`.
pub fn finito_reduction(n: usize, epochs: u64) -> f64 {
    finito_rho(2.0, n).powf(-((epochs * n as u64) as f64))
}

fn hypothesis(msg: impl Into<String>) -> Error {
    Error::Hypothesis(msg.into())
}

fn require_auto(step: StepSize, what: &str) -> Result<()> {
    match step {
        StepSize::Auto => Ok(()),
        StepSize::Fixed(_) => Err(hypothesis(format!("{what} rate holds only at the theorem step size"))),
    }
}

/// Rate bound for `cfg` started from `x0` (every table point at `x0`).
///
/// `reference` supplies `x*` and `F*`. `dual0` is the dual value at the start
/// for dual methods. Refuses, with [`Error::Hypothesis`], when the theorem's
/// assumptions do not hold or the method has no bound.
pub fn rate_bound(
    cfg: &MethodConfig,
    p: &FiniteSumProblem,
    x0: &[f64],
    reference: &Reference,
    dual0: Option<f64>,
) -> Result<RateBound> {
    let n = p.n();
    let nf = n as f64;
    let mu = p.mu();
    let l = p.l_max();
    let g0 = p.smooth_grad(x0);
    let g0_sq = linalg::norm_sq(&g0);
    let geometric = |rho: f64, c0: f64, quantity: Quantity| RateBound {
        method: cfg.method,
        shape: Shape::Geometric { rho },
        c0,
        per_epoch: None,
        quantity,
        conditional: false,
    };
    let strongly = || if mu > 0.0 { Ok(()) } else { Err(Error::NotStronglyConvex(mu)) };
    // Bregman divergence of f at x0 around x*.
    let bregman = || {
        let gs = p.smooth_grad(&reference.x);
        p.smooth_value(x0) - p.smooth_value(&reference.x) - linalg::dot(&gs, &linalg::sub(x0, &reference.x))
    };
    let dist0 = linalg::dist_sq(x0, &reference.x);
    match cfg.method {
        Method::Finito => {
            strongly()?;
            let alpha = match cfg.step {
                StepSize::Auto => 2.0,
                StepSize::Fixed(a) => a,
            };
            let beta = finito_beta(alpha)?;
            if !big_data_check(p, beta)? {
                return Err(hypothesis(format!("Finito rate needs n >= {beta}·L/mu")));
            }
            if cfg.lazy_init {
                return Err(hypothesis("Finito rate assumes a full initial table"));
            }
            let c = 1.0 - 1.0 / (2.0 * alpha);
            Ok(geometric(finito_rho(alpha, n), c / mu * g0_sq, Quantity::Suboptimality))
        }
        Method::Saga | Method::Saga2Var => {
            require_auto(cfg.step, "SAGA")?;
            if cfg.lazy_init {
                return Err(hypothesis("SAGA rate assumes a full initial table"));
            }
            if mu == 0.0 {
                if cfg.saga_mode != SagaMode::Adaptive {
                    return Err(Error::NotStronglyConvex(mu));
                }
                let c0 = 10.0 * nf * (2.0 * l / nf * dist0 + bregman());
                return Ok(RateBound {
                    method: cfg.method,
                    shape: Shape::Sublinear,
                    c0,
                    per_epoch: None,
                    quantity: Quantity::AvgSuboptimality,
                    conditional: false,
                });
            }
            let (rho, coef) = match cfg.saga_mode {
                SagaMode::StronglyConvex => (1.0 - mu / (2.0 * (mu * nf + l)), nf / (mu * nf + l)),
                SagaMode::Adaptive => (1.0 - f64::min(1.0 / (4.0 * nf), mu / (3.0 * l)), 2.0 * nf / (3.0 * l)),
            };
            Ok(geometric(rho, dist0 + coef * bregman(), Quantity::DistSq))
        }
        Method::Sdca | Method::SdcaPrimal => {
            let mu = p.ridge();
            if mu <= 0.0 {
                return Err(Error::NotStronglyConvex(mu));
            }
            if !p.regularizer().is_none() {
                return Err(hypothesis("SDCA rate covers the ridge-only problem"));
            }
            let d0 = dual0.ok_or_else(|| hypothesis("SDCA bound needs the initial dual value"))?;
            Ok(geometric(sdca_rho(mu, p.loss_l_max(), n), reference.f - d0, Quantity::DualSuboptimality))
        }
        Method::Miso => {
            strongly()?;
            require_auto(cfg.step, "MISO")?;
            let r = 1.0 - mu / ((mu + l) * nf);
            Ok(geometric(r * r, 2.0 * nf / mu * g0_sq, Quantity::Suboptimality))
        }
        Method::ProxFinito => {
            strongly()?;
            if n < 2 {
                return Err(hypothesis("Prox-Finito needs n > 1"));
            }
            // Uniform start: B⁰(w⁰) = f(x0) − ‖f'(x0)‖²/(2μ).
            let b0 = p.smooth_value(x0) - g0_sq / (2.0 * mu);
            let lr = l - mu;
            let rho = 1.0 - mu / (mu * nf + lr);
            Ok(geometric(rho, (mu * nf + lr) / mu * (reference.f - b0), Quantity::Suboptimality))
        }
        Method::Svrg => {
            strongly()?;
            require_auto(cfg.step, "SVRG")?;
            let m = cfg.svrg_m.unwrap_or(n);
            let eta = 4.0 * l;
            let c4 = svrg_c4(mu, eta, m);
            let rho = f64::max(0.5, (1.0 - mu / (4.0 * l)).powf(m as f64));
            let c0 = dist0 + c4 / (2.0 * l) * (p.objective(x0) - reference.f);
            Ok(RateBound {
                method: cfg.method,
                shape: Shape::Geometric { rho },
                c0,
                per_epoch: Some(m),
                quantity: Quantity::SnapshotLyapunov,
                conditional: true,
            })
        }
        Method::Sgd | Method::Sag => Err(hypothesis(format!("no rate bound is provided for {}", cfg.method))),
    }
}

/// `c4 = Σ_{t=0}^{m} (1 − μ/η)^t`.
pub fn svrg_c4(mu: f64, eta: f64, m: usize) -> f64 {
    let c1 = 1.0 - mu / eta;
    (0..=m).map(|t| c1.powi(t as i32)).sum()
}
