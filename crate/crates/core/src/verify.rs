//! Numeric checks of standard convexity inequalities and small lemmas
//! against the problem oracles.
//!
//! Every inequality is stored as `lhs ≤ rhs`, and `slack = rhs − lhs`.
//! A case passes when `slack / max(1, |lhs|, |rhs|) ≥ −1e−9`.

use std::fmt;
use std::str::FromStr;

use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Error, Result};
use crate::linalg;
use crate::problem::{synthetic, FiniteSumProblem, QuadraticTerms};
use crate::prox::Regularizer;
use crate::rng::CounterRng;

/// Scaled slack below this fails.
pub const SLACK_TOL: f64 = -1e-9;

/// A differentiable function with known curvature bounds.
pub trait SmoothFn {
    fn dim(&self) -> usize;
    /// Value, with the gradient written to `grad`.
    fn eval(&self, x: &[f64], grad: &mut [f64]) -> f64;
    /// Smoothness constant `L`.
    fn lipschitz(&self) -> f64;
    /// Strong convexity constant `μ ≥ 0`.
    fn mu(&self) -> f64;
}

/// Term `f_i` of a problem, with `L = L_i` and `μ` the problem's.
pub struct TermFn<'a> {
    pub problem: &'a FiniteSumProblem,
    pub i: usize,
}

impl SmoothFn for TermFn<'_> {
    fn dim(&self) -> usize {
        self.problem.d()
    }
    fn eval(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        self.problem.term_into(self.i, x, Some(grad))
    }
    fn lipschitz(&self) -> f64 {
        self.problem.lipschitz()[self.i]
    }
    fn mu(&self) -> f64 {
        self.problem.mu()
    }
}

/// The smooth average `f`, with `L = max_i L_i`.
pub struct SumFn<'a>(pub &'a FiniteSumProblem);

impl SmoothFn for SumFn<'_> {
    fn dim(&self) -> usize {
        self.0.d()
    }
    fn eval(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        grad.copy_from_slice(&self.0.smooth_grad(x));
        self.0.smooth_value(x)
    }
    fn lipschitz(&self) -> f64 {
        self.0.l_max()
    }
    fn mu(&self) -> f64 {
        self.0.mu()
    }
}

macro_rules! tags {
    ($name:ident { $($v:ident => $s:literal),* $(,)? }) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
        pub enum $name { $($v),* }
        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$v),*];
            pub fn name(&self) -> &'static str {
                match self { $($name::$v => $s),* }
            }
        }
        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.name())
            }
        }
        impl FromStr for $name {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                $name::ALL.iter().copied().find(|t| t.name() == s)
                    .ok_or_else(|| invalid("tag", format!("unknown tag `{s}`")))
            }
        }
    };
}

tags!(InequalityTag {
    ConvexityLb => "convexity-lb",
    LipschitzUb => "lipschitz-ub",
    StrongUb => "strong-ub",
    LipschitzLb => "lipschitz-lb",
    IpL => "ip-l",
    IpMu => "ip-mu",
    TightIp => "tight-ip",
    FullStrongLb => "full-strong-lb",
    Contraction => "contraction",
});

tags!(LemmaTag {
    SquaredTriangle => "squared-triangle",
    ExpLog => "exp-log",
    Bernoulli => "bernoulli",
    RootBernoulli => "root-bernoulli",
    UpperBernoulli => "upper-bernoulli",
    VarianceDecomposition => "variance-decomposition",
});

/// Both sides of one inequality instance.
#[derive(Debug, Clone, PartialEq)]
pub struct InequalityCase {
    pub tag: InequalityTag,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    /// `false` when the hypotheses do not apply (e.g. `μ = 0` for strong-ub).
    pub applicable: bool,
}

fn scaled(lhs: f64, rhs: f64) -> f64 {
    (rhs - lhs) / 1f64.max(lhs.abs()).max(rhs.abs())
}

impl InequalityCase {
    fn new(tag: InequalityTag, lhs: f64, rhs: f64) -> Self {
        InequalityCase { tag, lhs, rhs, slack: rhs - lhs, applicable: true }
    }
    fn skipped(tag: InequalityTag) -> Self {
        InequalityCase { tag, lhs: 0.0, rhs: 0.0, slack: 0.0, applicable: false }
    }
    pub fn scaled_slack(&self) -> f64 {
        scaled(self.lhs, self.rhs)
    }
    pub fn holds(&self) -> bool {
        !self.applicable || self.scaled_slack() >= SLACK_TOL
    }
}

/// Evaluates `tag` for `f` at `(x, y)`. `t` is the step of the contraction
/// bound and is ignored otherwise.
pub fn check_inequality<F: SmoothFn + ?Sized>(tag: InequalityTag, f: &F, x: &[f64], y: &[f64], t: f64) -> Result<InequalityCase> {
    let d = f.dim();
    if x.len() != d || y.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: x.len().min(y.len()) });
    }
    let (l, mu) = (f.lipschitz(), f.mu());
    let (mut gx, mut gy) = (vec![0.0; d], vec![0.0; d]);
    let fx = f.eval(x, &mut gx);
    let fy = f.eval(y, &mut gy);
    let ymx = linalg::sub(y, x);
    let dist2 = linalg::norm_sq(&ymx);
    let dg = linalg::sub(&gx, &gy);
    let dg2 = linalg::norm_sq(&dg);
    // ⟨f'(x) − f'(y), x − y⟩
    let ip = -linalg::dot(&dg, &ymx);
    let lin = fx + linalg::dot(&gx, &ymx);
    use InequalityTag::*;
    Ok(match tag {
        ConvexityLb => InequalityCase::new(tag, lin + 0.5 * mu * dist2, fy),
        LipschitzUb => InequalityCase::new(tag, fy, lin + 0.5 * l * dist2),
        StrongUb if mu > 0.0 => InequalityCase::new(tag, fy, lin + dg2 / (2.0 * mu)),
        StrongUb => InequalityCase::skipped(tag),
        LipschitzLb => InequalityCase::new(tag, lin + dg2 / (2.0 * l), fy),
        IpL => InequalityCase::new(tag, dg2 / l, ip),
        IpMu => InequalityCase::new(tag, mu * dist2, ip),
        TightIp => InequalityCase::new(tag, mu * l / (mu + l) * dist2 + dg2 / (mu + l), ip),
        FullStrongLb if l > mu * (1.0 + 1e-9) => {
            let k = l - mu;
            // f(y) + ⟨f'(y), x − y⟩ + ... ≤ f(x); note ⟨Δg, y − x⟩ = −ip.
            let lhs = fy - linalg::dot(&gy, &ymx) + dg2 / (2.0 * k) + mu * l / (2.0 * k) * dist2 - mu / k * ip;
            InequalityCase::new(tag, lhs, fx)
        }
        FullStrongLb => InequalityCase::skipped(tag),
        Contraction => {
            if !(t > 0.0) {
                return Err(invalid("t", "contraction step must be > 0"));
            }
            let v: Vec<f64> = (0..d).map(|k| x[k] - y[k] - t * dg[k]).collect();
            let factor = f64::max((1.0 - t * l).abs(), (1.0 - t * mu).abs());
            InequalityCase::new(tag, linalg::norm_sq(&v).sqrt(), factor * dist2.sqrt())
        }
    })
}

/// Worst case over a batch of lemma evaluations.
#[derive(Debug, Clone, PartialEq)]
pub struct LemmaReport {
    pub tag: LemmaTag,
    pub cases: usize,
    pub min_slack: f64,
    pub pass: bool,
}

/// `(lhs, rhs)` of `‖a + b‖² ≤ (1+β)‖a‖² + (1+1/β)‖b‖²`.
pub fn squared_triangle(a: &[f64], b: &[f64], beta: f64) -> (f64, f64) {
    let s: Vec<f64> = a.iter().zip(b).map(|(u, v)| u + v).collect();
    (linalg::norm_sq(&s), (1.0 + beta) * linalg::norm_sq(a) + (1.0 + 1.0 / beta) * linalg::norm_sq(b))
}

/// `(1 − kα, (1 − α)^k)` for `α ∈ [0, 1)`.
pub fn bernoulli(alpha: f64, k: u32) -> (f64, f64) {
    (1.0 - k as f64 * alpha, (1.0 - alpha).powi(k as i32))
}

/// `((1 − α)^r, 1 − rα)` for `α ≤ 1`, `r ∈ (0, 1)`.
pub fn root_bernoulli(alpha: f64, r: f64) -> (f64, f64) {
    ((1.0 - alpha).powf(r), 1.0 - r * alpha)
}

/// `((1 − α)^k, exp(−kα))`; requires `α ≤ 1`.
pub fn upper_bernoulli(alpha: f64, k: u32) -> (f64, f64) {
    ((1.0 - alpha).powi(k as i32), (-(k as f64) * alpha).exp())
}

/// `(E‖y − X‖², ‖y − EX‖² + E‖EX − X‖²)` for `X` uniform over `points`.
pub fn variance_decomposition(points: &[Vec<f64>], y: &[f64]) -> (f64, f64) {
    let m = points.len() as f64;
    let mut mean = vec![0.0; y.len()];
    for p in points {
        linalg::axpy(1.0 / m, p, &mut mean);
    }
    let lhs = points.iter().map(|p| linalg::dist_sq(y, p)).sum::<f64>() / m;
    let var = points.iter().map(|p| linalg::dist_sq(&mean, p)).sum::<f64>() / m;
    (lhs, linalg::dist_sq(y, &mean) + var)
}

fn gaussian(rng: &mut CounterRng, d: usize, scale: f64) -> Vec<f64> {
    (0..d).map(|_| scale * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng)).collect::<Vec<f64>>()
}

/// Random-input check of one lemma. Equalities are checked in both directions.
pub fn check_lemma(tag: LemmaTag, samples: usize, seed: u64) -> LemmaReport {
    let mut rng = CounterRng::derived(seed, 0x1E_77A0 + tag as u64);
    let mut min_slack = f64::INFINITY;
    let mut record = |lhs: f64, rhs: f64| min_slack = min_slack.min(scaled(lhs, rhs));
    for _ in 0..samples {
        match tag {
            LemmaTag::SquaredTriangle => {
                let a = gaussian(&mut rng, 5, 1.0);
                let b = gaussian(&mut rng, 5, 1.0);
                let beta = (4.0 * rng.uniform_f64() - 2.0).exp2().powi(3);
                let (l, r) = squared_triangle(&a, &b, beta);
                record(l, r);
            }
            LemmaTag::ExpLog => {
                let x = 20.0 * rng.uniform_f64() - 10.0;
                record(1.0 + x, (1.0 + x).exp());
                let z = -1.0 + 1e-9 + 10.0 * rng.uniform_f64();
                record((1.0 + z).ln(), 1.0 + z);
            }
            LemmaTag::Bernoulli => {
                let (l, r) = bernoulli(rng.uniform_f64(), rng.below(200) as u32);
                record(l, r);
            }
            LemmaTag::RootBernoulli => {
                let alpha = 1.0 - 5.0 * rng.uniform_f64();
                let r = (rng.uniform_f64()).max(1e-6).min(1.0 - 1e-6);
                let (l, rr) = root_bernoulli(alpha, r);
                record(l, rr);
            }
            LemmaTag::UpperBernoulli => {
                let alpha = 1.0 - 3.0 * rng.uniform_f64();
                let (l, r) = upper_bernoulli(alpha, rng.below(200) as u32);
                record(l, r);
            }
            LemmaTag::VarianceDecomposition => {
                let m = 1 + rng.below(8) as usize;
                let pts: Vec<Vec<f64>> = (0..m).map(|_| gaussian(&mut rng, 3, 1.0)).collect();
                let y = gaussian(&mut rng, 3, 1.0);
                let (l, r) = variance_decomposition(&pts, &y);
                record(l, r);
                record(r, l);
            }
        }
    }
    LemmaReport { tag, cases: samples, min_slack, pass: min_slack >= SLACK_TOL }
}

/// Result for one instance class.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceReport {
    pub instance: &'static str,
    /// `(tag, cases evaluated, min scaled slack)`.
    pub results: Vec<(InequalityTag, usize, f64)>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CatalogReport {
    pub instances: Vec<InstanceReport>,
    pub lemmas: Vec<LemmaReport>,
    pub pass: bool,
}

impl fmt::Display for CatalogReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for inst in &self.instances {
            for (tag, n, s) in &inst.results {
                let ok = if *s >= SLACK_TOL { "ok" } else { "FAIL" };
                writeln!(f, "{:<10} {:<22} cases={:<5} min_slack={:+.3e} {ok}", inst.instance, tag.name(), n, s)?;
            }
        }
        for l in &self.lemmas {
            let ok = if l.pass { "ok" } else { "FAIL" };
            writeln!(f, "{:<10} {:<22} cases={:<5} min_slack={:+.3e} {ok}", "lemma", l.tag.name(), l.cases, l.min_slack)?;
        }
        write!(f, "catalog {}", if self.pass { "passed" } else { "FAILED" })
    }
}

/// Checks every inequality on `pairs` random pairs per instance, cycling
/// through the terms, then each lemma on `pairs` random inputs.
pub fn check_instance(name: &'static str, p: &FiniteSumProblem, pairs: usize, seed: u64) -> Result<InstanceReport> {
    let mut rng = CounterRng::derived(seed, 0x1E_0001);
    let d = p.d();
    let mut results = Vec::new();
    for &tag in InequalityTag::ALL {
        let mut min = f64::INFINITY;
        let mut count = 0;
        for k in 0..pairs {
            let x = gaussian(&mut rng, d, 2.0);
            let y = if k % 10 == 0 { x.clone() } else { gaussian(&mut rng, d, 2.0) };
            let term = TermFn { problem: p, i: k % p.n() };
            let l = term.lipschitz();
            let t = (1.0 - rng.uniform_f64()) * 2.0 / (term.mu() + l);
            let c = if k % 7 == 3 {
                check_inequality(tag, &SumFn(p), &x, &y, t)?
            } else {
                check_inequality(tag, &term, &x, &y, t)?
            };
            if c.applicable {
                count += 1;
                min = min.min(c.scaled_slack());
            }
        }
        results.push((tag, count, if count == 0 { 0.0 } else { min }));
    }
    let pass = results.iter().all(|(_, _, s)| *s >= SLACK_TOL);
    Ok(InstanceReport { instance: name, results, pass })
}

/// The full catalog on ridge quadratics, logistic regression and 1-D terms.
pub fn run_catalog(pairs: usize, seed: u64) -> Result<CatalogReport> {
    if pairs == 0 {
        return Err(invalid("pairs", "must be >= 1"));
    }
    let quad = synthetic::random_quadratics(6, 4, 0.1, seed)?;
    let logistic = synthetic::logistic(40, 5, 0.05, seed)?;
    let mut r = CounterRng::derived(seed, 0x1D);
    let curv: Vec<f64> = (0..5).map(|_| 0.5 + r.uniform_f64()).collect();
    let cent: Vec<f64> = (0..5).map(|_| 4.0 * r.uniform_f64() - 2.0).collect();
    let one_d = FiniteSumProblem::quadratic(QuadraticTerms::scalar(&curv, &cent)?, 0.0, Regularizer::None)?
        .with_lipschitz(curv.clone())?;
    let instances = vec![
        check_instance("quadratic", &quad, pairs, seed)?,
        check_instance("logistic", &logistic, pairs, seed)?,
        check_instance("1d", &one_d, pairs, seed)?,
    ];
    let lemmas: Vec<LemmaReport> = LemmaTag::ALL.iter().map(|&t| check_lemma(t, pairs, seed)).collect();
    let pass = instances.iter().all(|i| i.pass) && lemmas.iter().all(|l| l.pass);
    Ok(CatalogReport { instances, lemmas, pass })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn half_square(c: f64) -> FiniteSumProblem {
        FiniteSumProblem::quadratic(QuadraticTerms::scalar(&[c], &[0.0]).unwrap(), 0.0, Regularizer::None).unwrap()
    }

    #[test]
    fn lipschitz_ub_tight_on_half_square() {
        let p = half_square(1.0);
        let c = check_inequality(InequalityTag::LipschitzUb, &TermFn { problem: &p, i: 0 }, &[0.0], &[2.0], 1.0).unwrap();
        assert_eq!((c.lhs, c.rhs), (2.0, 2.0));
    }

    #[test]
    fn strong_ub_equal_at_same_point() {
        let p = synthetic::logistic(5, 3, 0.1, 1).unwrap();
        let x = [0.3, -1.0, 2.0];
        let c = check_inequality(InequalityTag::StrongUb, &TermFn { problem: &p, i: 2 }, &x, &x, 1.0).unwrap();
        assert_eq!(c.slack, 0.0);
        assert_eq!(c.lhs, p.term_into(2, &x, None));
    }

    #[test]
    fn equality_when_l_equals_mu() {
        let p = half_square(3.0);
        let f = TermFn { problem: &p, i: 0 };
        for (x, y) in [([0.5], [-1.5]), ([2.0], [7.0])] {
            for tag in [InequalityTag::LipschitzUb, InequalityTag::ConvexityLb] {
                let c = check_inequality(tag, &f, &x, &y, 1.0).unwrap();
                assert!(c.slack.abs() < 1e-12, "{tag}: {c:?}");
            }
        }
    }

    #[test]
    fn unknown_tag_rejected() {
        assert!("not-a-tag".parse::<InequalityTag>().is_err());
        assert_eq!("tight-ip".parse::<InequalityTag>().unwrap(), InequalityTag::TightIp);
        assert_eq!(InequalityTag::ALL.len(), 9);
        assert_eq!(LemmaTag::ALL.len(), 6);
    }

    #[test]
    fn lemma_examples() {
        let pts = vec![vec![0.0], vec![2.0]];
        let (l, r) = variance_decomposition(&pts, &[0.0]);
        assert_eq!((l, r), (2.0, 2.0));
        let (lo, hi) = bernoulli(0.01, 50);
        assert!((hi - 0.6050).abs() < 5e-5 && lo == 0.5);
        for beta in [0.01, 0.3, 1.0, 4.0, 100.0] {
            let (l, r) = squared_triangle(&[1.0, -2.0], &[0.5, 3.0], beta);
            assert!(r >= l);
        }
    }

    #[test]
    fn upper_bernoulli_needs_alpha_at_most_one() {
        let (l, r) = upper_bernoulli(3.0, 2);
        assert!(l > r);
    }

    #[test]
    fn catalog_passes() {
        let r = run_catalog(300, 11).unwrap();
        assert!(r.pass, "{r}");
    }
}
