//! Command-line harness: builds a problem, runs a (method × step × seed)
//! grid and writes one CSV trace.
//!
//! Exit codes: 0 on success, 2 on a configuration error, 3 when a run fails.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::diagnostics::ReferenceMode;
use crate::error::Error;
use crate::ordering::{weights_from_lipschitz, OrderingKind};
use crate::problem::{load_libsvm, synthetic, FiniteSumProblem, LossKind};
use crate::prox::Regularizer;
use crate::solvers::{run_grid, Method, MethodConfig, RunConfig, SdcaMode, StepSize, Trace, XTilde};
use crate::verify;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

/// Environment variable capping the number of concurrent grid cells.
pub const THREADS_ENV: &str = "SUMOPT_THREADS";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("run failed: {0}")]
    Runtime(Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Runtime(_) => EXIT_RUNTIME,
        }
    }
}

fn config(e: impl std::fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

#[derive(Debug, Parser)]
#[command(name = "sumopt", version, about = "Incremental gradient benchmarks", args_conflicts_with_subcommands = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Option<Command>,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the convexity inequality and lemma catalog numerically.
    Verify {
        /// Random pairs per instance and inputs per lemma.
        #[arg(long, default_value_t = 1000)]
        pairs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SyntheticKind {
    Ridge,
    Logistic,
    Worstcase,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LossArg {
    Logistic,
    Squared,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OrderingArg {
    Cyclic,
    Permuted,
    Random,
    Weighted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum XTildeArg {
    Last,
    Avg,
    Sampled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SdcaModeArg {
    Exact,
    Linesearch,
    Constant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReferenceArg {
    Auto,
    Closedform,
    Longrun,
    None,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// LIBSVM-format data file.
    #[arg(long, conflicts_with = "synthetic")]
    pub data: Option<PathBuf>,
    /// Standardize features of `--data` (densifies rows).
    #[arg(long, requires = "data")]
    pub standardize: bool,
    #[arg(long, value_enum)]
    pub synthetic: Option<SyntheticKind>,
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    #[arg(long, default_value_t = 10)]
    pub d: usize,
    /// Seed of the synthetic data generator.
    #[arg(long, default_value_t = 1)]
    pub data_seed: u64,
    #[arg(long, value_enum)]
    pub loss: Option<LossArg>,
    /// Ridge weight inside every term.
    #[arg(long, visible_alias = "mu", default_value_t = 0.0)]
    pub l2: f64,
    #[arg(long, default_value_t = 0.0)]
    pub l1: f64,
    /// One method or a comma-separated list.
    #[arg(long, value_delimiter = ',', default_value = "saga")]
    pub method: Vec<String>,
    #[arg(long, value_enum, default_value_t = OrderingArg::Random)]
    pub ordering: OrderingArg,
    /// `auto` or a float; a comma-separated list runs a step grid.
    #[arg(long, value_delimiter = ',', default_value = "auto")]
    pub step: Vec<String>,
    #[arg(long)]
    pub svrg_m: Option<usize>,
    #[arg(long, value_enum, default_value_t = XTildeArg::Last)]
    pub svrg_xtilde: XTildeArg,
    #[arg(long, value_enum, default_value_t = SdcaModeArg::Exact)]
    pub sdca_mode: SdcaModeArg,
    #[arg(long, default_value_t = 10)]
    pub epochs: u64,
    #[arg(long, default_value_t = 1)]
    pub seeds: u64,
    #[arg(long, default_value_t = 0)]
    pub seed_base: u64,
    #[arg(long, value_enum, default_value_t = ReferenceArg::Auto)]
    pub reference: ReferenceArg,
    /// Add the theoretical bound and the quantity it controls.
    #[arg(long)]
    pub bounds: bool,
    /// Add the method's Lyapunov value where one is defined.
    #[arg(long)]
    pub lyapunov: bool,
    /// Track the running average of the iterates.
    #[arg(long)]
    pub average_iterate: bool,
    /// Steps between checkpoints (default: one epoch).
    #[arg(long)]
    pub checkpoint_every: Option<u64>,
    /// Output CSV path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write 0 in the wall-time column so traces are byte-reproducible.
    #[arg(long)]
    pub no_wall_time: bool,
}

fn parse_step(s: &str) -> Result<StepSize, CliError> {
    if s == "auto" {
        return Ok(StepSize::Auto);
    }
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() && v > 0.0 => Ok(StepSize::Fixed(v)),
        _ => Err(config(format!("invalid --step `{s}`: expected `auto` or a positive float"))),
    }
}

/// Builds the problem described by the flags.
pub fn build_problem(a: &RunArgs) -> Result<FiniteSumProblem, CliError> {
    if !(a.l1.is_finite() && a.l1 >= 0.0) || !(a.l2.is_finite() && a.l2 >= 0.0) {
        return Err(config("--l1 and --l2 must be finite and >= 0"));
    }
    let loss = a.loss.map(|l| match l {
        LossArg::Logistic => LossKind::Logistic,
        LossArg::Squared => LossKind::Squared,
    });
    let p = match (&a.data, a.synthetic) {
        (Some(path), _) => {
            let data = load_libsvm(path, loss.unwrap_or(LossKind::Logistic), a.standardize)
                .map_err(|e| config(format!("{}: {e}", path.display())))?;
            FiniteSumProblem::linear(data, a.l2, Regularizer::None).map_err(config)?
        }
        (None, Some(kind)) => {
            let implied = match kind {
                SyntheticKind::Ridge => Some(LossKind::Squared),
                SyntheticKind::Logistic => Some(LossKind::Logistic),
                SyntheticKind::Worstcase => None,
            };
            if let (Some(l), Some(i)) = (loss, implied) {
                if l != i {
                    return Err(config(format!("--loss {} conflicts with the synthetic generator", l.name())));
                }
            }
            match kind {
                SyntheticKind::Ridge => synthetic::ridge(a.n, a.d, a.l2, a.data_seed),
                SyntheticKind::Logistic => synthetic::logistic(a.n, a.d, a.l2, a.data_seed),
                SyntheticKind::Worstcase => {
                    if a.l2 > 0.0 {
                        return Err(config("the worst-case instance has a fixed regularization"));
                    }
                    FiniteSumProblem::worst_case(a.n)
                }
            }
            .map_err(config)?
        }
        (None, None) => return Err(config("one of --data or --synthetic is required")),
    };
    if a.l1 > 0.0 {
        p.with_regularizer(Regularizer::L1 { lambda: a.l1 }).map_err(config)
    } else {
        Ok(p)
    }
}

/// Expands the flags into the grid of run configurations, in
/// (method, step, seed) order.
pub fn build_configs(a: &RunArgs, p: &FiniteSumProblem) -> Result<Vec<RunConfig>, CliError> {
    let methods: Vec<Method> = a.method.iter().map(|m| m.parse::<Method>().map_err(config)).collect::<Result<_, _>>()?;
    let steps: Vec<StepSize> = a.step.iter().map(|s| parse_step(s)).collect::<Result<_, _>>()?;
    if a.seeds == 0 {
        return Err(config("--seeds must be >= 1"));
    }
    if a.checkpoint_every == Some(0) {
        return Err(config("--checkpoint-every must be >= 1"));
    }
    if a.bounds && a.reference == ReferenceArg::None {
        return Err(config("--bounds needs a reference minimizer"));
    }
    for m in &methods {
        if !p.regularizer().is_none() && !m.supports_prox() {
            return Err(config(format!("method {m} does not support an l1 regularizer")));
        }
    }
    let ordering = match a.ordering {
        OrderingArg::Cyclic => OrderingKind::Cyclic,
        OrderingArg::Permuted => OrderingKind::Permuted,
        OrderingArg::Random => OrderingKind::Randomized,
        OrderingArg::Weighted => {
            OrderingKind::Weighted(weights_from_lipschitz(p.mu(), p.n(), p.lipschitz()).map_err(config)?)
        }
    };
    let reference = match a.reference {
        ReferenceArg::Auto => Some(ReferenceMode::Auto),
        ReferenceArg::Closedform => Some(ReferenceMode::ClosedForm),
        ReferenceArg::Longrun => Some(ReferenceMode::LongRun),
        ReferenceArg::None => None,
    };
    let mut out = Vec::new();
    for &method in &methods {
        for &step in &steps {
            let mut mc = MethodConfig::new(method).with_step(step);
            mc.svrg_m = a.svrg_m;
            mc.svrg_xtilde = match a.svrg_xtilde {
                XTildeArg::Last => XTilde::Last,
                XTildeArg::Avg => XTilde::Average,
                XTildeArg::Sampled => XTilde::Sampled,
            };
            mc.sdca_mode = match a.sdca_mode {
                SdcaModeArg::Exact => SdcaMode::Exact,
                SdcaModeArg::Linesearch => SdcaMode::LineSearch,
                SdcaModeArg::Constant => SdcaMode::Constant,
            };
            for s in 0..a.seeds {
                let mut rc = RunConfig::new(mc.clone(), ordering.clone(), a.epochs, a.seed_base + s);
                rc.checkpoint_every = a.checkpoint_every;
                rc.bounds = a.bounds;
                rc.lyapunov = a.lyapunov;
                rc.average_iterate = a.average_iterate;
                rc.reference = reference;
                out.push(rc);
            }
        }
    }
    Ok(out)
}

/// `SUMOPT_THREADS`, falling back to the available parallelism.
pub fn thread_count() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&t| t > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
}

/// Runs the grid and writes the combined trace to `w`.
pub fn run_to<W: Write>(a: &RunArgs, w: &mut W) -> Result<Vec<Trace>, CliError> {
    let p = build_problem(a)?;
    let cfgs = build_configs(a, &p)?;
    let traces: Vec<Trace> = run_grid(&p, &cfgs, thread_count())
        .into_iter()
        .map(|r| r.map_err(CliError::Runtime))
        .collect::<Result<_, _>>()?;
    let io_err = |e: io::Error| CliError::Runtime(e.into());
    Trace::write_header(w).map_err(io_err)?;
    for t in &traces {
        t.write_rows(w, !a.no_wall_time).map_err(io_err)?;
    }
    w.flush().map_err(io_err)?;
    Ok(traces)
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Some(Command::Verify { pairs, seed }) => {
            let r = verify::run_catalog(pairs, seed).map_err(config)?;
            println!("{r}");
            if r.pass {
                Ok(())
            } else {
                Err(CliError::Runtime(Error::Hypothesis("verification catalog reported a violation".into())))
            }
        }
        None => {
            let a = cli.run;
            match &a.out {
                Some(path) => {
                    let f = File::create(path).map_err(|e| config(format!("{}: {e}", path.display())))?;
                    run_to(&a, &mut BufWriter::new(f))?;
                }
                None => {
                    run_to(&a, &mut io::stdout().lock())?;
                }
            }
            Ok(())
        }
    }
}

/// Parses `args` (including the program name) and runs. Returns the exit code.
pub fn main_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match dispatch(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("sumopt: {e}");
            e.exit_code()
        }
    }
}
