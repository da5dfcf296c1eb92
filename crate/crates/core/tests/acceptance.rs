//! Acceptance suite. Each criterion prints one PASS/FAIL line; the binary
//! exits nonzero when any criterion fails.
//!
//! Runs as a plain binary (`harness = false`) so the lines show up under
//! `cargo test` without `--nocapture`.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand_distr::{Distribution, StandardNormal};
use sumopt::diagnostics::{
    exhaustive_mean, exhaustive_mean_vec, finito_lyapunov, prox_finito_lyapunov, reference_minimizer,
    saga_constants_check, saga_lyapunov, ConstantsMode, SagaConstants, DEFAULT_TOL,
};
use sumopt::linalg;
use sumopt::ordering::{Ordering, OrderingKind};
use sumopt::problem::{big_data_check, synthetic, FiniteSumProblem, QuadraticTerms};
use sumopt::prox::{prox, prox_conjugate, prox_term, Regularizer};
use sumopt::rng::CounterRng;
use sumopt::solvers::{
    run, run_grid, Finito, Method, MethodConfig, Oracle, PrimalSdca, ProxFinito, RunConfig, Saga, SagaMode, Sdca,
    SdcaInit, SdcaMode, Sgd, SgdSchedule, Solver, StepSize, Svrg, Trace, TraceRow, XTilde,
};
use sumopt::verify::run_catalog;

type Outcome = Result<String, String>;

const SEEDS: u64 = 20;

fn threads() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(t: Instant, limit: u64) -> Result<(), String> {
    let e = t.elapsed();
    ensure(e < Duration::from_secs(limit), || format!("took {e:?}, limit {limit} s"))
}

fn gaussian(rng: &mut CounterRng, d: usize, scale: f64) -> Vec<f64> {
    (0..d).map(|_| scale * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng)).collect()
}

/// Runs `cfg` over `SEEDS` seeds.
fn seeded(p: &FiniteSumProblem, cfg: &RunConfig) -> Result<Vec<Trace>, String> {
    let cfgs: Vec<RunConfig> = (0..SEEDS)
        .map(|s| {
            let mut c = cfg.clone();
            c.seed = 1000 + s;
            c
        })
        .collect();
    run_grid(p, &cfgs, threads()).into_iter().map(|r| r.map_err(|e| e.to_string())).collect()
}

/// Checks the seed-mean of `value` against the bound column at each checkpoint
/// with `step >= from`. Returns the largest ratio mean/bound.
fn mean_below_bound(traces: &[Trace], from: u64, value: impl Fn(&TraceRow) -> Option<f64>) -> Result<f64, String> {
    let rows = traces[0].rows.len();
    let mut worst: f64 = 0.0;
    for r in 0..rows {
        let step = traces[0].rows[r].step;
        if step < from {
            continue;
        }
        let bound = traces[0].rows[r].bound.ok_or_else(|| format!("no bound at step {step}"))?;
        let mut sum = 0.0;
        for t in traces {
            sum += value(&t.rows[r]).ok_or_else(|| format!("no measurement at step {step}"))?;
        }
        let mean = sum / traces.len() as f64;
        ensure(mean <= bound, || format!("step {step}: mean {mean:e} > bound {bound:e}"))?;
        worst = worst.max(mean / bound);
    }
    Ok(worst)
}

/// Ridge-logistic instance with n = 200 that satisfies the big-data condition.
fn logistic_200() -> Result<FiniteSumProblem, String> {
    let p = synthetic::logistic(200, 10, 0.005, 7).map_err(|e| e.to_string())?;
    ensure(big_data_check(&p, 2.0).unwrap_or(false), || "instance is not big-data".into())?;
    Ok(p)
}

fn c1_finito_rate() -> Outcome {
    let t = Instant::now();
    let p = logistic_200()?;
    let mut cfg = RunConfig::new(MethodConfig::new(Method::Finito).with_step(StepSize::Fixed(2.0)), OrderingKind::Randomized, 15, 0);
    cfg.bounds = true;
    let traces = seeded(&p, &cfg)?;
    let worst = mean_below_bound(&traces, 0, |r| r.metric)?;
    within(t, 30)?;
    Ok(format!("20 seeds x 15 epochs, max mean/bound {worst:.3e}"))
}

fn c2_saga_rates() -> Outcome {
    let t = Instant::now();
    let p = logistic_200()?;
    let mut out = Vec::new();
    for mode in [SagaMode::StronglyConvex, SagaMode::Adaptive] {
        let mut m = MethodConfig::new(Method::Saga);
        m.saga_mode = mode;
        let mut cfg = RunConfig::new(m, OrderingKind::Randomized, 15, 0);
        cfg.bounds = true;
        let traces = seeded(&p, &cfg)?;
        ensure(traces[0].quantity.map(|q| q.name()) == Some("dist_sq"), || "bound is not on the distance".into())?;
        out.push(format!("{mode:?} max {:.3e}", mean_below_bound(&traces, 0, |r| r.metric)?));
    }
    within(t, 30)?;
    Ok(out.join(", "))
}

fn c3_saga_non_sc() -> Outcome {
    let t = Instant::now();
    let n = 20;
    let p = synthetic::least_squares(n, 40, 3).map_err(|e| e.to_string())?;
    ensure(p.mu() == 0.0, || "instance is strongly convex".into())?;
    let mut cfg = RunConfig::new(MethodConfig::new(Method::Saga), OrderingKind::Randomized, 30, 0);
    cfg.bounds = true;
    cfg.average_iterate = true;
    let traces = seeded(&p, &cfg)?;
    // Check the closed form of the envelope at k = n.
    let r = reference_minimizer(&p, DEFAULT_TOL).map_err(|e| e.to_string())?;
    let x0 = vec![0.0; p.d()];
    let c0 = 10.0 * n as f64 * (2.0 * p.l_max() / n as f64 * linalg::dist_sq(&x0, &r.x) + p.smooth_value(&x0) - r.f);
    let b = traces[0].rows[1].bound.unwrap_or(f64::NAN);
    ensure((b - c0 / n as f64).abs() <= 1e-9 * b, || format!("bound at k = n is {b}, expected {}", c0 / n as f64))?;
    let worst = mean_below_bound(&traces, n as u64, |r| r.metric)?;
    within(t, 60)?;
    Ok(format!("average iterate, max mean/bound {worst:.3e}"))
}

fn c4_sdca() -> Outcome {
    let t = Instant::now();
    let p = logistic_200()?;
    let mut cfg = RunConfig::new(MethodConfig::new(Method::Sdca), OrderingKind::Randomized, 10, 0);
    cfg.bounds = true;
    cfg.checkpoint_every = Some(1);
    let traces = seeded(&p, &cfg)?;
    let worst = mean_below_bound(&traces, 0, |r| r.metric)?;
    let fstar = traces[0].reference.as_ref().ok_or("no reference")?.f;
    let tol = 1e-12 * fstar.abs().max(1.0);
    let mut checked = 0;
    for tr in &traces {
        for r in &tr.rows {
            let d = r.dual_value.ok_or("no dual value")?;
            ensure(d <= fstar + tol && fstar <= r.f_value + tol, || {
                format!("seed {} step {}: D = {d}, f* = {fstar}, f = {}", r.seed, r.step, r.f_value)
            })?;
            checked += 1;
        }
    }
    within(t, 30)?;
    Ok(format!("max mean/bound {worst:.3e}, sandwich on {checked} steps"))
}

fn c5_primal_dual_sdca() -> Outcome {
    let quad = synthetic::random_quadratics(12, 3, 0.2, 5).map_err(|e| e.to_string())?;
    let logi = synthetic::logistic(40, 5, 0.05, 5).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for p in [&quad, &logi] {
        let mut o = Oracle::new(p);
        let x0 = vec![0.0; p.d()];
        let mut primal = PrimalSdca::new(&mut o, &x0).map_err(|e| e.to_string())?;
        let mut dual = Sdca::new(&mut o, SdcaMode::Exact, SdcaInit::FromPoint(x0.clone())).map_err(|e| e.to_string())?;
        let mut order = Ordering::new(OrderingKind::Randomized, p.n(), 17).map_err(|e| e.to_string())?;
        for _ in 0..100 {
            let j = order.next_index();
            primal.step(&mut o, j).map_err(|e| e.to_string())?;
            dual.step(&mut o, j).map_err(|e| e.to_string())?;
            let dev = linalg::dist_sq(&primal.iterate(), &dual.iterate()).sqrt();
            worst = worst.max(dev);
        }
    }
    ensure(worst <= 1e-10, || format!("max deviation {worst:e}"))?;
    Ok(format!("max iterate deviation {worst:.2e}"))
}

fn c6_miso() -> Outcome {
    let p = logistic_200()?;
    let mut out = Vec::new();
    for kind in [OrderingKind::Cyclic, OrderingKind::Permuted, OrderingKind::Randomized] {
        let mut cfg = RunConfig::new(MethodConfig::new(Method::Miso), kind.clone(), 10, 3);
        cfg.bounds = true;
        let trace = run(&p, &cfg).map_err(|e| e.to_string())?;
        for row in &trace.rows {
            let (s, b) = (row.suboptimality.ok_or("no suboptimality")?, row.bound.ok_or("no bound")?);
            ensure(s <= b, || format!("{} step {}: {s:e} > {b:e}", kind.name(), row.step))?;
        }
        // Per-step contraction, driven by hand.
        let mut o = Oracle::new(&p);
        let mut s = Finito::miso(&mut o, StepSize::Auto, &vec![0.0; p.d()]).map_err(|e| e.to_string())?;
        let mut order = Ordering::new(kind.clone(), p.n(), 3).map_err(|e| e.to_string())?;
        let steps = 10 * p.n();
        for k in 0..steps {
            s.step(&mut o, order.next_index()).map_err(|e| e.to_string())?;
            let (lhs, rhs) = s.last_contraction().ok_or("no contraction recorded")?;
            ensure(lhs <= rhs + 1e-12 * rhs.max(1e-300).max(lhs), || format!("{} step {k}: {lhs:e} > {rhs:e}", kind.name()))?;
        }
        let last = trace.rows.last().unwrap().suboptimality.unwrap();
        out.push(format!("{} final {:.2e}, contraction {steps}/{steps}", kind.name(), last));
    }
    Ok(out.join("; "))
}

fn close_vec(a: &[f64], b: &[f64]) -> bool {
    let scale = linalg::norm_sq(a).sqrt().max(linalg::norm_sq(b).sqrt()).max(1.0);
    linalg::dist_sq(a, b).sqrt() <= 1e-12 * scale
}

/// Ridge quadratics with `n = 8` that satisfy the big-data condition for β = 2.
fn small_quadratics() -> Result<FiniteSumProblem, String> {
    let mut ridge = 1.0;
    loop {
        let p = synthetic::random_quadratics(8, 3, ridge, 11).map_err(|e| e.to_string())?;
        if big_data_check(&p, 2.0).map_err(|e| e.to_string())? {
            return Ok(p);
        }
        ridge *= 1.5;
    }
}

fn c7_exhaustive() -> Outcome {
    let p = small_quadratics()?;
    let (n, d) = (p.n(), p.d());
    let r = reference_minimizer(&p, DEFAULT_TOL).map_err(|e| e.to_string())?;
    let mut rng = CounterRng::new(77);
    let e = |e: sumopt::Error| e.to_string();
    let mut worst = [f64::NEG_INFINITY; 3];
    for state in 0..50 {
        // States scattered around x*.
        let mut near = || {
            let mut v = gaussian(&mut rng, d, 1.0);
            linalg::axpy(1.0, &r.x, &mut v);
            v
        };
        let x = near();
        let phi: Vec<f64> = (0..n).flat_map(|_| near()).collect();
        let fx = p.smooth_grad(&x);
        let mut o = Oracle::new(&p);

        // SGD: E[x⁺] = x − γ f'(x).
        let sched = SgdSchedule::Constant(0.1);
        let sgd = Sgd::new(&p, sched, &x).map_err(e)?;
        let m = exhaustive_mean_vec(&sgd, &p, |s: &Sgd| s.iterate()).map_err(e)?;
        let expect: Vec<f64> = (0..d).map(|c| x[c] - 0.1 * fx[c]).collect();
        ensure(close_vec(&m, &expect), || format!("state {state}: SGD step is biased"))?;

        // SAGA: mean direction is f'(x).
        for mode in [SagaMode::StronglyConvex, SagaMode::Adaptive] {
            let saga = Saga::from_points(&mut o, StepSize::Auto, mode, &x, &phi).map_err(e)?;
            let mut mean = vec![0.0; d];
            for j in 0..n {
                linalg::axpy(1.0 / n as f64, &saga.direction(&mut o, j), &mut mean);
            }
            ensure(close_vec(&mean, &fx), || format!("state {state}: SAGA direction is biased"))?;

            // Lyapunov descent with factor 1 − 1/κ.
            let gamma = saga.gamma();
            let kinv = match mode {
                SagaMode::StronglyConvex => gamma * p.mu(),
                SagaMode::Adaptive => f64::min(1.0 / (4.0 * n as f64), p.mu() / (3.0 * p.l_max())),
            };
            let t0 = saga_lyapunov(&saga, &p, &r).map_err(e)?.value;
            let t1 = exhaustive_mean(&saga, &p, |s: &Saga| Ok(saga_lyapunov(s, &p, &r)?.value)).map_err(e)?;
            let rhs = (1.0 - kinv) * t0;
            ensure(t1 <= rhs + 1e-12 * rhs.abs().max(1.0), || format!("state {state}: SAGA {mode:?} {t1:e} > {rhs:e}"))?;
            worst[1] = worst[1].max(t1 / rhs);
        }

        // SVRG: mean direction is f'(x) once x has moved off the snapshot.
        let xt = gaussian(&mut rng, d, 1.0);
        let mut svrg = Svrg::new(&p, StepSize::Auto, None, XTilde::Last, 1, &xt).map_err(e)?;
        svrg.recalibrate(&mut o).map_err(e)?;
        for k in 0..3 {
            svrg.inner_step(&mut o, (state + 3 * k) % n).map_err(e)?;
        }
        let sx = svrg.iterate();
        let mut mean = vec![0.0; d];
        for j in 0..n {
            let v = svrg.clone().direction(&mut o, j).map_err(e)?;
            linalg::axpy(1.0 / n as f64, &v, &mut mean);
        }
        ensure(close_vec(&mean, &p.smooth_grad(&sx)), || format!("state {state}: SVRG direction is biased"))?;

        // Finito: E[w⁺] − w = −f'(w)/(αμn), and Lyapunov descent 1 − 1/(αn).
        let alpha = 2.0;
        let fin = Finito::from_points(&mut o, false, StepSize::Fixed(alpha), &phi).map_err(e)?;
        let w = fin.w().to_vec();
        let gw = p.smooth_grad(&w);
        let m = exhaustive_mean_vec(&fin, &p, |s: &Finito| s.w().to_vec()).map_err(e)?;
        let expect: Vec<f64> = (0..d).map(|c| w[c] - gw[c] / (alpha * p.mu() * n as f64)).collect();
        ensure(close_vec(&m, &expect), || format!("state {state}: Finito expected step {m:?} vs {expect:?}"))?;
        let t0 = finito_lyapunov(&fin, &p).map_err(e)?.value;
        let t1 = exhaustive_mean(&fin, &p, |s: &Finito| Ok(finito_lyapunov(s, &p)?.value)).map_err(e)?;
        let rhs = (1.0 - 1.0 / (alpha * n as f64)) * t0;
        ensure(t1 <= rhs + 1e-12 * rhs.abs().max(1.0), || format!("state {state}: Finito {t1:e} > {rhs:e}"))?;
        worst[0] = worst[0].max(t1 / rhs);

        // Prox-Finito: factor 1 − μ/(μn + L − μ).
        let pf = ProxFinito::from_points(&mut o, &phi).map_err(e)?;
        let t0 = prox_finito_lyapunov(&pf, &p, &r).value;
        let t1 = exhaustive_mean(&pf, &p, |s: &ProxFinito| Ok(prox_finito_lyapunov(s, &p, &r).value)).map_err(e)?;
        let mu = p.mu();
        let rhs = (1.0 - mu / (mu * n as f64 + p.l_max() - mu)) * t0;
        ensure(t1 <= rhs + 1e-12 * rhs.abs().max(1.0), || format!("state {state}: Prox-Finito {t1:e} > {rhs:e}"))?;
        worst[2] = worst[2].max(t1 / rhs);
    }
    Ok(format!(
        "50 states, n = {n}; max E[T+]/(rho T): finito {:.4}, saga {:.4}, prox-finito {:.4}",
        worst[0], worst[1], worst[2]
    ))
}

fn c8_constants() -> Outcome {
    let mus = [1e-4, 1e-2, 0.1, 1.0, 10.0];
    let ratios = [1.0, 2.0, 10.0, 100.0, 1e4];
    let ns = [1usize, 2, 10, 100, 10_000];
    let mut cells = 0;
    for &mu in &mus {
        for &ratio in &ratios {
            for &n in &ns {
                let l = mu * ratio;
                for mode in [ConstantsMode::StronglyConvex, ConstantsMode::Adaptive] {
                    let k = SagaConstants::published(mode, mu, l, n);
                    let r = saga_constants_check(&k, mu, l, n, mode).map_err(|e| e.to_string())?;
                    ensure(r.pass, || format!("{mode:?} mu={mu} L={l} n={n}: {:?}", r.values))?;
                }
                let k = SagaConstants::published(ConstantsMode::NonSc, 0.0, l, n);
                let r = saga_constants_check(&k, 0.0, l, n, ConstantsMode::NonSc).map_err(|e| e.to_string())?;
                ensure(r.pass, || format!("NonSc L={l} n={n}: {:?}", r.values))?;
                cells += 1;
            }
        }
    }
    Ok(format!("{cells} grid cells, c1..c4 and tau1..tau3 non-positive"))
}

/// Minimizes a convex function of one or two variables by repeated grid
/// refinement around the best grid point.
fn grid_min(dim: usize, center: &[f64], radius: f64, f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
    let per = if dim == 1 { 401 } else { 61 };
    let mut c = center.to_vec();
    let mut r = radius;
    for _ in 0..60 {
        let mut best = (f64::INFINITY, c.clone());
        let step = 2.0 * r / (per - 1) as f64;
        let mut pt = vec![0.0; dim];
        let total = if dim == 1 { per } else { per * per };
        for idx in 0..total {
            pt[0] = c[0] - r + step * (idx % per) as f64;
            if dim == 2 {
                pt[1] = c[1] - r + step * (idx / per) as f64;
            }
            let v = f(&pt);
            if v < best.0 {
                best = (v, pt.clone());
            }
        }
        c = best.1;
        r = 4.0 * step;
        if r < 1e-10 {
            break;
        }
    }
    c
}

fn c9_prox_oracle() -> Outcome {
    let mut rng = CounterRng::new(9);
    let mut worst: f64 = 0.0;
    let mut moreau: f64 = 0.0;
    for case in 0..100 {
        let gamma = 0.1 + 5.0 * rng.uniform_f64();
        let a = 0.05 + 2.0 * rng.uniform_f64();
        let b = 0.05 + 2.0 * rng.uniform_f64();
        let reg = match case % 5 {
            0 => Regularizer::L1 { lambda: a },
            1 => Regularizer::L2 { mu: a },
            2 => Regularizer::Elastic { mu: a, lambda: b },
            3 => Regularizer::Box { lo: -a, hi: b },
            _ => Regularizer::None,
        };
        let dim = 1 + case % 2;
        let v = gaussian(&mut rng, dim, 3.0);
        let p = prox(&reg, gamma, &v).map_err(|e| e.to_string())?;
        let obj = |x: &[f64]| {
            let h = reg.value(x);
            if h.is_finite() {
                h + 0.5 * gamma * linalg::dist_sq(x, &v)
            } else {
                f64::INFINITY
            }
        };
        let g = grid_min(dim, &v, 10.0, obj);
        worst = worst.max(linalg::dist_sq(&g, &p).sqrt());

        // Moreau: v = prox_γ^h(v) + (1/γ) prox_{1/γ}^{h*}(γ v).
        let gv: Vec<f64> = v.iter().map(|t| gamma * t).collect();
        let conj = prox_conjugate(&reg, 1.0 / gamma, &gv).map_err(|e| e.to_string())?;
        for c in 0..dim {
            moreau = moreau.max((v[c] - p[c] - conj[c] / gamma).abs());
        }
        // Independent conjugate prox for l1 (projection onto [−λ, λ]).
        if let Regularizer::L1 { lambda } = reg {
            let direct = prox_conjugate(&reg, 1.5, &v).map_err(|e| e.to_string())?;
            for c in 0..dim {
                worst = worst.max((direct[c] - v[c].clamp(-lambda, lambda)).abs());
            }
        }
    }
    // prox_term on one- and two-dimensional terms.
    let quad = synthetic::random_quadratics(5, 2, 0.1, 4).map_err(|e| e.to_string())?;
    let logi = synthetic::logistic(5, 2, 0.1, 4).map_err(|e| e.to_string())?;
    let sq = synthetic::ridge(5, 1, 0.1, 4).map_err(|e| e.to_string())?;
    let one = FiniteSumProblem::quadratic(
        QuadraticTerms::scalar(&[0.5, 2.0], &[1.0, -1.0]).map_err(|e| e.to_string())?,
        0.0,
        Regularizer::None,
    )
    .map_err(|e| e.to_string())?;
    let mut terms = 0;
    for p in [&quad, &logi, &sq, &one] {
        for _ in 0..10 {
            let i = rng.below(p.n() as u64) as usize;
            let eta = 0.2 + 3.0 * rng.uniform_f64();
            let z = gaussian(&mut rng, p.d(), 2.0);
            let (phi, grad) = prox_term(p, i, eta, &z).map_err(|e| e.to_string())?;
            let obj = |x: &[f64]| p.eval_term(i, x).unwrap().0 + 0.5 * eta * linalg::dist_sq(x, &z);
            let g = grid_min(p.d(), &z, 10.0, obj);
            worst = worst.max(linalg::dist_sq(&g, &phi).sqrt());
            let exact = p.eval_term(i, &phi).unwrap().1;
            // The returned gradient is f_i'(φ) = η(z − φ).
            moreau = moreau.max(linalg::dist_sq(&exact, &grad).sqrt());
            terms += 1;
        }
    }
    ensure(worst <= 1e-6, || format!("max deviation from grid oracle {worst:e}"))?;
    ensure(moreau <= 1e-12, || format!("Moreau residual {moreau:e}"))?;
    Ok(format!("100 regularizer cases and {terms} term cases, max deviation {worst:.1e}, Moreau residual {moreau:.1e}"))
}

fn c10_catalog() -> Outcome {
    let t = Instant::now();
    let r = run_catalog(1000, 0).map_err(|e| e.to_string())?;
    ensure(r.pass, || format!("catalog failed:\n{r}"))?;
    let ineq = r.instances.first().map_or(0, |i| i.results.len());
    let status = Command::new(env!("CARGO_BIN_EXE_sumopt")).arg("verify").output().map_err(|e| e.to_string())?;
    ensure(status.status.success(), || format!("verify exited with {:?}", status.status.code()))?;
    within(t, 10)?;
    Ok(format!("{ineq} inequalities x {} instances and {} lemmas, verify exit 0", r.instances.len(), r.lemmas.len()))
}

fn c11_worst_case() -> Outcome {
    let n = 30;
    let p = FiniteSumProblem::worst_case(n).map_err(|e| e.to_string())?;
    let mut runs = 0;
    let mut rows = 0;
    for method in Method::ALL {
        for kind in [OrderingKind::Cyclic, OrderingKind::Randomized] {
            let mut m = MethodConfig::new(method);
            if method == Method::Finito {
                // Auto refuses: the instance is not big-data.
                m.step = StepSize::Fixed(2.0);
            }
            let mut cfg = RunConfig::new(m, kind.clone(), 3, 5);
            cfg.checkpoint_every = Some(1);
            let trace = run(&p, &cfg).map_err(|e| format!("{method}: {e}"))?;
            for r in &trace.rows {
                let s = r.suboptimality.ok_or("no suboptimality")?;
                let lb = 0.25 * r.unseen as f64;
                ensure(s >= lb - 1e-12 * lb.max(1.0), || format!("{method} {} step {}: {s} < {lb}", kind.name(), r.step))?;
                rows += 1;
            }
            runs += 1;
        }
    }
    Ok(format!("{runs} runs, {rows} steps checked"))
}

fn c12_reproducible() -> Outcome {
    let exe = env!("CARGO_BIN_EXE_sumopt");
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut outs = Vec::new();
    for (k, seed) in [(0, "4"), (1, "4"), (2, "5")] {
        let path = dir.path().join(format!("t{k}.csv"));
        let st = Command::new(exe)
            .args(["--synthetic", "logistic", "--n", "60", "--d", "5", "--l2", "0.05", "--method", "saga,svrg,finito,sdca"])
            .args(["--ordering", "permuted", "--epochs", "5", "--seeds", "3", "--seed-base", seed, "--bounds", "--no-wall-time"])
            .arg("--out")
            .arg(&path)
            .env("SUMOPT_THREADS", ["1", "4", "2"][k])
            .env("RUST_LOG", "error")
            .status()
            .map_err(|e| e.to_string())?;
        ensure(st.success(), || format!("run {k} exited with {:?}", st.code()))?;
        outs.push(std::fs::read(&path).map_err(|e| e.to_string())?);
    }
    ensure(outs[0] == outs[1], || "identical flags gave different traces".into())?;
    ensure(outs[0] != outs[2], || "different seeds gave identical traces".into())?;
    Ok(format!("{} bytes identical across thread counts", outs[0].len()))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("finito rate", c1_finito_rate),
        ("saga strongly convex and adaptive rates", c2_saga_rates),
        ("saga average iterate without strong convexity", c3_saga_non_sc),
        ("sdca dual rate and duality sandwich", c4_sdca),
        ("primal and dual sdca agree", c5_primal_dual_sdca),
        ("miso under three orderings", c6_miso),
        ("exhaustive expectation identities", c7_exhaustive),
        ("saga constants grid", c8_constants),
        ("prox grid oracle and moreau identity", c9_prox_oracle),
        ("inequality and lemma catalog", c10_catalog),
        ("worst-case instance lower bound", c11_worst_case),
        ("byte-identical traces", c12_reproducible),
    ];
    let results: Vec<(Outcome, Duration)> = std::thread::scope(|s| {
        let handles: Vec<_> = criteria
            .iter()
            .map(|(_, f)| {
                s.spawn(move || {
                    let t = Instant::now();
                    let r = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
                    (r, t.elapsed())
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    let mut failed = 0;
    for (k, ((name, _), (r, dt))) in criteria.iter().zip(&results).enumerate() {
        match r {
            Ok(msg) => println!("criterion {:>2} PASS  {name} ({msg}) [{:.1} s]", k + 1, dt.as_secs_f64()),
            Err(msg) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {msg} [{:.1} s]", k + 1, dt.as_secs_f64());
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
