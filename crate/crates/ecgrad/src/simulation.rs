//! Run orchestration: the synchronous master/worker loop, metric collection
//! on a fixed iteration grid, CSV emission, and multi-run comparison.
//!
//! A run records a row at every `metrics_every`-th iterate plus the final
//! one. Quantities that need the whole history (`mingradsq`, the averaged
//! iterate behind `avg_gap`) are maintained every iteration regardless of the
//! recording grid, so recorded values are exact, not subsampled.

use nalgebra::DVector;

use crate::compressors::CompressorSpec;
use crate::problems::{OracleMode, Problem, Scope};
use crate::schemes::{step, SchemeConfig, SchemeKind, Weighting, WorkerState};
use crate::{Error, Result};

/// Abort threshold for the divergence guard.
const DIVERGENCE_NORM: f64 = 1e12;

/// Everything a single run needs besides the problem itself.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub compressor: CompressorSpec,
    pub scheme: SchemeConfig,
    pub n_workers: usize,
    pub iterations: usize,
    pub oracle: OracleMode,
    /// Starting iterate; zero when absent.
    pub x0: Option<DVector<f64>>,
    pub metrics_every: usize,
}

impl RunConfig {
    pub fn validate(&self, problem: &Problem) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::Config("iterations must be at least 1".into()));
        }
        if self.metrics_every == 0 {
            return Err(Error::Config("metrics_every must be at least 1".into()));
        }
        problem.check_workers(self.n_workers)?;
        self.compressor.validate(problem.dim())?;
        if let Some(x0) = &self.x0 {
            if x0.len() != problem.dim() {
                return Err(Error::DimMismatch { expected: problem.dim(), actual: x0.len() });
            }
            if !x0.iter().all(|v| v.is_finite()) {
                return Err(Error::InvalidInput("x0 has non-finite entries".into()));
            }
        }
        Ok(())
    }
}

/// One recorded iteration. `None` means the metric is undefined for this run
/// (no known optimum, no error memory, not a quadratic Hessian-weighted run)
/// and serializes as an empty CSV field.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub k: usize,
    /// `‖xᵏ − x*‖` when the optimum is known.
    pub dist: Option<f64>,
    /// `f(xᵏ) − f*` when the optimal value is known.
    pub gap: Option<f64>,
    /// `‖∇f(xᵏ)‖²`.
    pub gradsq: f64,
    /// `min_{l ≤ k} ‖∇f(xˡ)‖²` over all iterates, recorded or not.
    pub mingradsq: f64,
    /// `f(x̄ᵏ) − f*` at the running average `x̄ᵏ = (1/(k+1))Σ_{l≤k} xˡ`.
    pub avg_gap: Option<f64>,
    /// Mean over workers of `‖eᵢᵏ‖` (error-compensated runs).
    pub errnorm: Option<f64>,
    /// `‖(xᵏ − x*) − Aᵏ(x⁰ − x*) − γēᵏ‖` (quadratic + Hessian weighting).
    pub accres: Option<f64>,
    /// Total message bits spent to reach `xᵏ`.
    pub bits: u64,
}

/// Column selector for floor/averaging utilities.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Dist,
    Gap,
    GradSq,
    MinGradSq,
    AvgGap,
    ErrNorm,
    AccRes,
}

impl TraceRow {
    pub fn metric(&self, m: Metric) -> Option<f64> {
        match m {
            Metric::Dist => self.dist,
            Metric::Gap => self.gap,
            Metric::GradSq => Some(self.gradsq),
            Metric::MinGradSq => Some(self.mingradsq),
            Metric::AvgGap => self.avg_gap,
            Metric::ErrNorm => self.errnorm,
            Metric::AccRes => self.accres,
        }
    }
}

/// The recorded history of one run.
#[derive(Debug, Clone)]
pub struct RunTrace {
    pub rows: Vec<TraceRow>,
    pub scheme_label: String,
    pub compressor_label: String,
    pub gamma: f64,
}

impl RunTrace {
    /// Extract one column; `None` if the metric is missing in any row.
    pub fn column(&self, m: Metric) -> Option<Vec<f64>> {
        self.rows.iter().map(|r| r.metric(m)).collect()
    }

    pub fn final_row(&self) -> &TraceRow {
        self.rows.last().expect("a trace records at least iteration 0")
    }

    /// Serialize to CSV. Missing metrics become empty fields; floats use
    /// Rust's shortest round-trip formatting so identical runs produce
    /// identical bytes.
    pub fn to_csv(&self) -> String {
        fn opt(v: Option<f64>) -> String {
            v.map(|x| x.to_string()).unwrap_or_default()
        }
        let mut out = String::from("k,dist,gap,gradsq,mingradsq,avg_gap,errnorm,accres,bits\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                r.k,
                opt(r.dist),
                opt(r.gap),
                r.gradsq,
                r.mingradsq,
                opt(r.avg_gap),
                opt(r.errnorm),
                opt(r.accres),
                r.bits,
            ));
        }
        out
    }
}

/// Execute one run. Fully deterministic given the config (the oracle seed
/// lives in [`OracleMode::Stochastic`]). The error memories start at zero;
/// iterates with non-finite entries or norm above 1e12 abort with
/// [`Error::Diverged`].
pub fn run(problem: &Problem, config: &RunConfig) -> Result<RunTrace> {
    config.validate(problem)?;
    let d = problem.dim();
    let mut x = config.x0.clone().unwrap_or_else(|| DVector::zeros(d));

    let needs_bfgs = matches!(
        config.scheme.kind,
        SchemeKind::ErrorCompensated(Weighting::Bfgs)
    );
    let l = if needs_bfgs { Some(problem.constants()?.l) } else { None };
    let mut workers: Vec<WorkerState> = (0..config.n_workers)
        .map(|i| {
            let w = WorkerState::new(d, i as u64);
            match l {
                Some(l) => w.with_bfgs(l),
                None => w,
            }
        })
        .collect();

    let is_ec = matches!(config.scheme.kind, SchemeKind::ErrorCompensated(_));
    let x_star = problem.x_star();
    let f_star = problem.f_star();
    let gamma = config.scheme.gamma;

    // A^k(x⁰ − x*) propagated as v ← v − γHv, for the residual column of
    // quadratic Hessian-weighted runs.
    let mut residual_ref = match (&problem, &config.scheme.kind, &x_star) {
        (
            Problem::Quadratic(_),
            SchemeKind::ErrorCompensated(Weighting::Hessian),
            Some(xs),
        ) => Some(&x - xs),
        _ => None,
    };

    let mut rows = Vec::new();
    let mut mingradsq = f64::INFINITY;
    let mut xbar_sum: DVector<f64> = DVector::zeros(d);
    let mut bits_total: u64 = 0;

    for k in 0..=config.iterations {
        let g = problem.grad(Scope::Full, &x)?;
        let gradsq = g.norm_squared();
        mingradsq = mingradsq.min(gradsq);
        xbar_sum += &x;

        if k % config.metrics_every == 0 || k == config.iterations {
            let dist = x_star.as_ref().map(|xs| (&x - xs).norm());
            let gap = f_star.map(|fs| problem.value(Scope::Full, &x).map(|f| f - fs)).transpose()?;
            let avg_gap = match f_star {
                Some(fs) => {
                    let xbar = &xbar_sum / (k + 1) as f64;
                    Some(problem.value(Scope::Full, &xbar)? - fs)
                }
                None => None,
            };
            let errnorm = is_ec.then(|| {
                workers.iter().map(|w| w.error_memory.norm()).sum::<f64>()
                    / workers.len() as f64
            });
            let accres = match (&residual_ref, &x_star) {
                (Some(v), Some(xs)) => {
                    let mut ebar: DVector<f64> = DVector::zeros(d);
                    for w in &workers {
                        ebar += &w.error_memory;
                    }
                    ebar /= workers.len() as f64;
                    Some((&x - xs - v - ebar * gamma).norm())
                }
                _ => None,
            };
            rows.push(TraceRow {
                k,
                dist,
                gap,
                gradsq,
                mingradsq,
                avg_gap,
                errnorm,
                accres,
                bits: bits_total,
            });
        }
        if k == config.iterations {
            break;
        }

        let report = step(
            &x,
            &mut workers,
            problem,
            &config.compressor,
            &config.scheme,
            &config.oracle,
            k as u64,
        )?;
        bits_total += report.bits;
        x = report.x_next;
        let norm = x.norm();
        if !x.iter().all(|v| v.is_finite()) || norm > DIVERGENCE_NORM {
            return Err(Error::Diverged { iteration: k + 1, norm });
        }
        if let (Some(v), Problem::Quadratic(q)) = (&mut residual_ref, problem) {
            let hv = &q.h * &*v;
            *v -= hv * gamma;
        }
    }

    Ok(RunTrace {
        rows,
        scheme_label: config.scheme.kind.label(),
        compressor_label: config.compressor.label(),
        gamma,
    })
}

/// Mean of a metric over the final `tail_fraction` of values (at least one
/// value; `tail_fraction = 1` is the global mean).
pub fn empirical_floor(values: &[f64], tail_fraction: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::InvalidInput("empirical floor of an empty trace".into()));
    }
    if !(tail_fraction > 0.0 && tail_fraction <= 1.0) {
        return Err(Error::InvalidInput(format!(
            "tail_fraction must be in (0, 1], got {tail_fraction}"
        )));
    }
    let n_tail = ((values.len() as f64 * tail_fraction).ceil() as usize).clamp(1, values.len());
    let tail = &values[values.len() - n_tail..];
    Ok(tail.iter().sum::<f64>() / n_tail as f64)
}

/// One line of a [`Comparison`].
#[derive(Debug, Clone)]
pub struct CompareEntry {
    pub label: String,
    pub trace: RunTrace,
    pub final_dist: Option<f64>,
    pub final_gap: Option<f64>,
    /// Steady-state floor: mean of the last 10% of recorded `dist` values.
    pub floor_dist: Option<f64>,
    pub floor_gap: Option<f64>,
}

/// Result of running several configs against the same problem.
#[derive(Debug, Clone)]
pub struct Comparison {
    pub entries: Vec<CompareEntry>,
}

impl Comparison {
    /// `floor_dist(i) / floor_dist(j)`; `None` if either floor is missing.
    pub fn floor_ratio(&self, i: usize, j: usize) -> Option<f64> {
        Some(self.entries[i].floor_dist? / self.entries[j].floor_dist?)
    }
}

const FLOOR_TAIL_FRACTION: f64 = 0.1;

/// Run each config on the shared problem and summarize final and
/// steady-state (tail-mean) metrics. All configs must use the same seed so
/// stochastic draws are comparable; mismatched seeds are a config error.
pub fn compare(problem: &Problem, configs: &[RunConfig]) -> Result<Comparison> {
    if configs.is_empty() {
        return Err(Error::Config("compare needs at least one config".into()));
    }
    let seed_of = |c: &RunConfig| match &c.oracle {
        OracleMode::Deterministic => None,
        OracleMode::Stochastic(s) => Some(s.seed),
    };
    let first_seed = seed_of(&configs[0]);
    if configs.iter().any(|c| seed_of(c) != first_seed) {
        return Err(Error::Config("compare requires identical seeds across configs".into()));
    }
    let mut entries = Vec::with_capacity(configs.len());
    for config in configs {
        let trace = run(problem, config)?;
        let floor = |m: Metric| -> Result<Option<f64>> {
            match trace.column(m) {
                Some(col) => Ok(Some(empirical_floor(&col, FLOOR_TAIL_FRACTION)?)),
                None => Ok(None),
            }
        };
        let label = format!("{}+{}", trace.scheme_label, trace.compressor_label);
        entries.push(CompareEntry {
            label,
            final_dist: trace.final_row().dist,
            final_gap: trace.final_row().gap,
            floor_dist: floor(Metric::Dist)?,
            floor_gap: floor(Metric::Gap)?,
            trace,
        });
    }
    Ok(Comparison { entries })
}

/// Pointwise mean of one metric across traces recorded on identical
/// iteration grids (expectation estimates for stochastic runs).
pub fn average_metric(traces: &[RunTrace], m: Metric) -> Result<Vec<f64>> {
    if traces.is_empty() {
        return Err(Error::InvalidInput("averaging zero traces".into()));
    }
    let grid: Vec<usize> = traces[0].rows.iter().map(|r| r.k).collect();
    for t in traces {
        let ks: Vec<usize> = t.rows.iter().map(|r| r.k).collect();
        if ks != grid {
            return Err(Error::InvalidInput("traces recorded on different grids".into()));
        }
    }
    let mut means = Vec::with_capacity(grid.len());
    for i in 0..grid.len() {
        let mut acc = 0.0;
        for t in traces {
            acc += t.rows[i].metric(m).ok_or_else(|| {
                Error::InvalidInput(format!("metric {m:?} missing at row {i}"))
            })?;
        }
        means.push(acc / traces.len() as f64);
    }
    Ok(means)
}
