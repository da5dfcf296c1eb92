use std::fmt::Write as _;
use std::io::{self, Write};
use std::sync::atomic::{AtomicUsize, Ordering as AtomicOrdering};
use std::sync::Mutex;
use std::time::Instant;

use super::{build_solver, Method, MethodConfig, Oracle, Solver, Svrg};
use crate::diagnostics::{self, Quantity, RateBound, ReferenceMode};
use crate::error::{invalid, Error, Result};
use crate::linalg;
use crate::ordering::{Ordering, OrderingKind};
use crate::problem::{FiniteSumProblem, Reference};

/// First line of every trace file.
pub const TRACE_SCHEMA: &str = "# sumopt trace schema 1";

const COLUMNS: [&str; 17] = [
    "method",
    "ordering",
    "seed",
    "step",
    "epoch",
    "grad_evals",
    "wall_time_ns",
    "step_param",
    "f_value",
    "suboptimality",
    "avg_suboptimality",
    "dual_value",
    "quantity",
    "metric",
    "bound",
    "lyapunov",
    "unseen",
];

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub method: MethodConfig,
    pub ordering: OrderingKind,
    pub epochs: u64,
    /// Steps between checkpoints; `None` means one per epoch (`n` steps).
    pub checkpoint_every: Option<u64>,
    /// Seeds the index stream and any solver-internal randomness.
    pub seed: u64,
    /// Starting point; zeros when `None`.
    pub x0: Option<Vec<f64>>,
    /// Track `x̄^k = (1/k) Σ_{t=1..k} x^t`.
    pub average_iterate: bool,
    pub bounds: bool,
    pub lyapunov: bool,
    /// How to get `x*`; `None` leaves the reference columns empty.
    pub reference: Option<ReferenceMode>,
    pub reference_tol: f64,
}

impl RunConfig {
    pub fn new(method: MethodConfig, ordering: OrderingKind, epochs: u64, seed: u64) -> Self {
        RunConfig {
            method,
            ordering,
            epochs,
            checkpoint_every: None,
            seed,
            x0: None,
            average_iterate: false,
            bounds: false,
            lyapunov: false,
            reference: Some(ReferenceMode::Auto),
            reference_tol: diagnostics::DEFAULT_TOL,
        }
    }
}

/// One checkpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub method: Method,
    pub ordering: &'static str,
    pub seed: u64,
    pub step: u64,
    pub epoch: f64,
    pub grad_evals: u64,
    pub wall_time_ns: u64,
    pub step_param: f64,
    pub f_value: f64,
    pub suboptimality: Option<f64>,
    pub avg_suboptimality: Option<f64>,
    pub dual_value: Option<f64>,
    /// Measured value of the quantity the bound controls.
    pub metric: Option<f64>,
    pub bound: Option<f64>,
    pub lyapunov: Option<f64>,
    /// Indices never accessed so far.
    pub unseen: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub rows: Vec<TraceRow>,
    pub quantity: Option<Quantity>,
    pub warnings: Vec<String>,
    pub final_x: Vec<f64>,
    pub reference: Option<Reference>,
}

fn opt(out: &mut String, v: Option<f64>) {
    if let Some(v) = v {
        write!(out, "{v}").unwrap();
    }
}

impl Trace {
    /// Schema comment and column header.
    pub fn write_header<W: Write>(w: &mut W) -> io::Result<()> {
        writeln!(w, "{TRACE_SCHEMA}")?;
        writeln!(w, "{}", COLUMNS.join(","))
    }

    /// Data rows only. With `wall_time = false` the timing column is written as 0.
    pub fn write_rows<W: Write>(&self, w: &mut W, wall_time: bool) -> io::Result<()> {
        let q = self.quantity.map(|q| q.name()).unwrap_or("");
        for r in &self.rows {
            let mut s = String::new();
            write!(
                s,
                "{},{},{},{},{},{},{},{},{},",
                r.method,
                r.ordering,
                r.seed,
                r.step,
                r.epoch,
                r.grad_evals,
                if wall_time { r.wall_time_ns } else { 0 },
                r.step_param,
                r.f_value
            )
            .unwrap();
            opt(&mut s, r.suboptimality);
            s.push(',');
            opt(&mut s, r.avg_suboptimality);
            s.push(',');
            opt(&mut s, r.dual_value);
            s.push(',');
            if r.metric.is_some() {
                s.push_str(q);
            }
            s.push(',');
            opt(&mut s, r.metric);
            s.push(',');
            opt(&mut s, r.bound);
            s.push(',');
            opt(&mut s, r.lyapunov);
            write!(s, ",{}", r.unseen).unwrap();
            writeln!(w, "{s}")?;
        }
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, w: &mut W, wall_time: bool) -> io::Result<()> {
        Self::write_header(w)?;
        self.write_rows(w, wall_time)
    }

    pub fn to_csv_string(&self, wall_time: bool) -> String {
        let mut v = Vec::new();
        self.write_csv(&mut v, wall_time).expect("writing to memory");
        String::from_utf8(v).expect("csv is utf-8")
    }
}

/// Runs one solver for `epochs·n` steps, checkpointing along the way.
///
/// Epoch 0 is the initial state. SVRG counts inner steps; its
/// recalibrations show up in `grad_evals` only.
pub fn run(p: &FiniteSumProblem, cfg: &RunConfig) -> Result<Trace> {
    let n = p.n() as u64;
    let mut warnings = Vec::new();
    let mut warn = |w: String| {
        log::warn!("{w}");
        warnings.push(w);
    };
    if cfg.ordering == OrderingKind::Cyclic && matches!(cfg.method.method, Method::Finito | Method::Sag) {
        warn(format!("{} with cyclic ordering is known to diverge on some problems", cfg.method.method));
    }
    let every = cfg.checkpoint_every.unwrap_or(n);
    if every == 0 {
        return Err(invalid("checkpoint_every", "must be >= 1"));
    }
    let reference = match cfg.reference {
        None => None,
        Some(ReferenceMode::Auto) => Some(diagnostics::reference_minimizer(p, cfg.reference_tol)?),
        Some(mode) => Some(diagnostics::reference_with(p, mode, cfg.reference_tol)?),
    };
    let x0 = cfg.x0.clone().unwrap_or_else(|| vec![0.0; p.d()]);
    let mut mcfg = cfg.method.clone();
    mcfg.seed = cfg.seed;
    mcfg.track_points |= cfg.lyapunov;
    let mut oracle = Oracle::tracking(p);
    let mut solver = build_solver(&mut oracle, &mcfg, &x0)?;
    let mut order = Ordering::new(cfg.ordering.clone(), p.n(), cfg.seed)?;

    let bound: Option<RateBound> = match (&reference, cfg.bounds) {
        (Some(r), true) => match diagnostics::rate_bound(&mcfg, p, &x0, r, solver.dual_value(p)) {
            Ok(b) => {
                if b.conditional {
                    warn(format!("{} bound is conditional on an unproven assumption", mcfg.method));
                }
                if b.quantity == Quantity::AvgSuboptimality && !cfg.average_iterate {
                    warn("average-iterate bound requested without average_iterate; bound column left empty".into());
                    None
                } else {
                    Some(b)
                }
            }
            Err(e) => {
                warn(format!("no rate bound: {e}"));
                None
            }
        },
        (None, true) => {
            warn("bounds need a reference minimizer".into());
            None
        }
        _ => None,
    };
    let mut lyap_ok = cfg.lyapunov;

    let total = cfg.epochs * n;
    let mut avg_sum = vec![0.0; p.d()];
    let mut rows = Vec::new();
    let mut elapsed = 0u64;
    let mut k = 0u64;
    loop {
        let x = solver.iterate();
        let f = p.objective(&x);
        let sub = reference.as_ref().map(|r| f - r.f);
        let avg = (cfg.average_iterate && k > 0).then(|| {
            let xb: Vec<f64> = avg_sum.iter().map(|v| v / k as f64).collect();
            p.objective(&xb)
        });
        let dual = solver.dual_value(p);
        let (metric, bval) = match (&bound, &reference) {
            (Some(b), Some(r)) => {
                let (m, kk) = measure(b.quantity, solver.as_ref(), p, r, &x, sub, avg, dual, k);
                (m, m.map(|_| b.value(kk)))
            }
            _ => (None, None),
        };
        let lyap = if lyap_ok {
            match diagnostics::lyapunov(solver.as_ref(), p, reference.as_ref()) {
                Ok(v) => Some(v.value),
                Err(e) => {
                    warn(format!("no Lyapunov value: {e}"));
                    lyap_ok = false;
                    None
                }
            }
        } else {
            None
        };
        rows.push(TraceRow {
            method: mcfg.method,
            ordering: cfg.ordering.name(),
            seed: cfg.seed,
            step: k,
            epoch: k as f64 / n as f64,
            grad_evals: oracle.evals(),
            wall_time_ns: elapsed,
            step_param: solver.step_param(),
            f_value: f,
            suboptimality: sub,
            avg_suboptimality: avg.map(|a| a - reference.as_ref().map_or(0.0, |r| r.f)).filter(|_| reference.is_some()),
            dual_value: dual,
            metric,
            bound: bval,
            lyapunov: lyap,
            unseen: oracle.unseen().unwrap_or(0),
        });
        if k >= total {
            break;
        }
        let stop = (k + every).min(total);
        let t = Instant::now();
        while k < stop {
            let j = order.next_index();
            solver.step(&mut oracle, j)?;
            k += 1;
            if cfg.average_iterate {
                linalg::axpy(1.0, &solver.iterate(), &mut avg_sum);
            }
        }
        elapsed += t.elapsed().as_nanos() as u64;
        if !f.is_finite() {
            warn(format!("objective became non-finite at step {k}"));
        }
    }
    Ok(Trace { rows, quantity: bound.map(|b| b.quantity), warnings, final_x: solver.iterate(), reference })
}

/// Value of `q` now, and the index at which to evaluate the bound.
#[allow(clippy::too_many_arguments)]
fn measure(
    q: Quantity,
    solver: &dyn Solver,
    p: &FiniteSumProblem,
    r: &Reference,
    x: &[f64],
    sub: Option<f64>,
    avg: Option<f64>,
    dual: Option<f64>,
    k: u64,
) -> (Option<f64>, u64) {
    match q {
        Quantity::Suboptimality => (sub, k),
        Quantity::DistSq => (Some(linalg::dist_sq(x, &r.x)), k),
        Quantity::AvgSuboptimality => (avg.map(|a| a - r.f), k),
        Quantity::DualSuboptimality => (dual.map(|d| r.f - d), k),
        Quantity::SnapshotLyapunov => {
            let s = solver.as_any().downcast_ref::<Svrg>().expect("snapshot quantity is SVRG-only");
            match s.snapshot() {
                None => {
                    // Before the first recalibration the snapshot is x0 = x.
                    let v = snapshot_lyapunov(s, p, r, x);
                    (Some(v), 0)
                }
                Some(xt) => (Some(snapshot_lyapunov(s, p, r, xt)), s.recalibrations() - 1),
            }
        }
    }
}

fn snapshot_lyapunov(s: &Svrg, p: &FiniteSumProblem, r: &Reference, xt: &[f64]) -> f64 {
    let c4 = diagnostics::svrg_c4(p.mu(), s.eta(), s.m());
    linalg::dist_sq(xt, &r.x) + c4 / (2.0 * p.l_max()) * (p.objective(xt) - r.f)
}

/// Runs every config, at most `threads` at a time, and returns results in
/// input order. The reference minimizer is computed once up front.
pub fn run_grid(p: &FiniteSumProblem, cfgs: &[RunConfig], threads: usize) -> Vec<Result<Trace>> {
    if let Some(c) = cfgs.iter().find(|c| c.reference == Some(ReferenceMode::Auto)) {
        if let Err(e) = diagnostics::reference_minimizer(p, c.reference_tol) {
            return cfgs.iter().map(|_| Err(e.clone())).collect();
        }
    }
    let threads = threads.max(1).min(cfgs.len().max(1));
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<Result<Trace>>>> = Mutex::new(vec![None; cfgs.len()]);
    std::thread::scope(|scope| {
        for _ in 0..threads {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, AtomicOrdering::Relaxed);
                if i >= cfgs.len() {
                    break;
                }
                let r = run(p, &cfgs[i]);
                results.lock().unwrap()[i] = Some(r);
            });
        }
    });
    results
        .into_inner()
        .unwrap()
        .into_iter()
        .map(|r| r.unwrap_or_else(|| Err(Error::NotReady("grid cell did not run"))))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::synthetic;
    use crate::solvers::{MethodConfig, StepSize};

    #[test]
    fn zero_epochs_single_checkpoint() {
        let p = synthetic::ridge(10, 3, 0.1, 1).unwrap();
        let cfg = RunConfig::new(MethodConfig::new(Method::Saga), OrderingKind::Randomized, 0, 3);
        let t = run(&p, &cfg).unwrap();
        assert_eq!(t.rows.len(), 1);
        assert_eq!(t.rows[0].step, 0);
        assert_eq!(t.rows[0].f_value, p.objective(&[0.0; 3]));
    }

    #[test]
    fn checkpoint_count_and_monotone_evals() {
        let p = synthetic::ridge(20, 3, 0.1, 1).unwrap();
        let cfg = RunConfig::new(MethodConfig::new(Method::Sag), OrderingKind::Permuted, 7, 3);
        let t = run(&p, &cfg).unwrap();
        assert_eq!(t.rows.len(), 8);
        for w in t.rows.windows(2) {
            assert!(w[1].grad_evals > w[0].grad_evals);
        }
    }

    #[test]
    fn svrg_accounting_three_n() {
        let p = synthetic::ridge(15, 3, 0.1, 1).unwrap();
        let mut m = MethodConfig::new(Method::Svrg);
        m.svrg_m = Some(15);
        let cfg = RunConfig::new(m, OrderingKind::Randomized, 1, 0);
        let t = run(&p, &cfg).unwrap();
        assert_eq!(t.rows.last().unwrap().grad_evals, 45);
    }

    #[test]
    fn cyclic_finito_warns() {
        let p = synthetic::ridge(60, 2, 1.0, 1).unwrap();
        let cfg = RunConfig::new(MethodConfig::new(Method::Finito), OrderingKind::Cyclic, 1, 0);
        let t = run(&p, &cfg).unwrap();
        assert!(t.warnings.iter().any(|w| w.contains("cyclic")));
    }

    #[test]
    fn grid_matches_sequential() {
        let p = synthetic::logistic(30, 3, 0.05, 2).unwrap();
        let cfgs: Vec<RunConfig> = (0..4)
            .map(|s| RunConfig::new(MethodConfig::new(Method::Saga).with_step(StepSize::Auto), OrderingKind::Randomized, 3, s))
            .collect();
        let par = run_grid(&p, &cfgs, 3);
        for (c, r) in cfgs.iter().zip(par) {
            let a = run(&p, c).unwrap().to_csv_string(false);
            assert_eq!(a, r.unwrap().to_csv_string(false));
        }
    }

    #[test]
    fn csv_header_is_versioned() {
        let p = synthetic::ridge(5, 2, 0.1, 1).unwrap();
        let t = run(&p, &RunConfig::new(MethodConfig::new(Method::Sgd), OrderingKind::Cyclic, 1, 0)).unwrap();
        let s = t.to_csv_string(false);
        let mut lines = s.lines();
        assert_eq!(lines.next(), Some(TRACE_SCHEMA));
        assert_eq!(lines.next().unwrap().split(',').count(), COLUMNS.len());
        assert_eq!(lines.next().unwrap().split(',').count(), COLUMNS.len());
    }
}
