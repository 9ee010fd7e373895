//! One optimization step per algorithm variant: direct compression
//! (`x ← x − γ·mean Q(gᵢ)`) and error compensation, where each worker keeps a
//! memory `eᵢ` of its past compression errors and feeds `gᵢ + Aᵢeᵢ` to the
//! compressor. The weighting `Aᵢ` ranges from plain identity to curvature-
//! aware choices (`I − γHᵢ` via exact, diagonal, or BFGS-approximated
//! Hessians), which is what turns error accumulation into error decay.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::compressors::{compress, payload_bits, CompressorSpec};
use crate::problems::{OracleMode, Problem, QuadraticProblem};
use crate::{Error, Result};

/// Error-compensation weighting `Aᵢᵏ` applied to the error memory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Weighting {
    /// `A = I`: plain error feedback.
    Identity,
    /// `A = αI`, `α ∈ (0,1]`.
    Scaled(f64),
    /// `A = I − γHᵢ(xᵏ)`, applied matrix-free via Hessian-vector products.
    Hessian,
    /// `A = I − γ·diag(Hᵢ(xᵏ))`.
    DiagHessian,
    /// `A = I − γBᵢᵏ` with `Bᵢᵏ` the worker's BFGS approximation.
    Bfgs,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SchemeKind {
    Direct,
    ErrorCompensated(Weighting),
}

impl SchemeKind {
    /// Parse a config string: `direct`, `ec:identity`, `ec:scaled:0.9`,
    /// `ec:hessian`, `ec:diag`, `ec:bfgs`.
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "direct" => return Ok(SchemeKind::Direct),
            "ec:identity" => return Ok(SchemeKind::ErrorCompensated(Weighting::Identity)),
            "ec:hessian" => return Ok(SchemeKind::ErrorCompensated(Weighting::Hessian)),
            "ec:diag" => return Ok(SchemeKind::ErrorCompensated(Weighting::DiagHessian)),
            "ec:bfgs" => return Ok(SchemeKind::ErrorCompensated(Weighting::Bfgs)),
            _ => {}
        }
        if let Some(arg) = s.strip_prefix("ec:scaled:") {
            let alpha: f64 = arg
                .parse()
                .map_err(|_| Error::Config(format!("invalid scaled-weighting alpha `{arg}`")))?;
            if !(alpha > 0.0 && alpha <= 1.0) {
                return Err(Error::Config(format!("alpha must lie in (0,1], got {alpha}")));
            }
            return Ok(SchemeKind::ErrorCompensated(Weighting::Scaled(alpha)));
        }
        Err(Error::Config(format!(
            "unknown scheme `{s}` (expected direct, ec:identity, ec:scaled:A, ec:hessian, ec:diag, ec:bfgs)"
        )))
    }

    pub fn label(&self) -> String {
        match self {
            SchemeKind::Direct => "direct".into(),
            SchemeKind::ErrorCompensated(Weighting::Identity) => "ec:identity".into(),
            SchemeKind::ErrorCompensated(Weighting::Scaled(a)) => format!("ec:scaled:{a}"),
            SchemeKind::ErrorCompensated(Weighting::Hessian) => "ec:hessian".into(),
            SchemeKind::ErrorCompensated(Weighting::DiagHessian) => "ec:diag".into(),
            SchemeKind::ErrorCompensated(Weighting::Bfgs) => "ec:bfgs".into(),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SchemeConfig {
    pub kind: SchemeKind,
    pub gamma: f64,
}

impl SchemeConfig {
    pub fn new(kind: SchemeKind, gamma: f64) -> Result<Self> {
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(Error::Config(format!("step size must be positive, got {gamma}")));
        }
        if let SchemeKind::ErrorCompensated(Weighting::Scaled(a)) = kind {
            if !(a > 0.0 && a <= 1.0) {
                return Err(Error::Config(format!("alpha must lie in (0,1], got {a}")));
            }
        }
        Ok(SchemeConfig { kind, gamma })
    }
}

/// BFGS curvature model `B ≈ ∇²fᵢ`, fed by secant pairs along the iterate
/// path. `B` starts at `L·I` and stays symmetric.
#[derive(Debug, Clone)]
pub struct BfgsState {
    pub b: DMatrix<f64>,
    prev: Option<(DVector<f64>, DVector<f64>)>,
}

impl BfgsState {
    pub fn new(dim: usize, l: f64) -> Self {
        BfgsState { b: DMatrix::identity(dim, dim) * l, prev: None }
    }
}

/// Standard BFGS secant update of `state.b` using the displacement from the
/// previously recorded point to `(x_new, grad_new)`. The first call only
/// records the point; updates with `sᵀy ≤ 1e−10·‖s‖‖y‖` (or non-positive
/// curvature along `s`) are skipped, leaving `B` unchanged.
pub fn bfgs_update(state: &mut BfgsState, x_new: &DVector<f64>, grad_new: &DVector<f64>) {
    if let Some((px, pg)) = &state.prev {
        let s = x_new - px;
        let y = grad_new - pg;
        let sy = s.dot(&y);
        if sy > 1e-10 * s.norm() * y.norm() {
            let bs = &state.b * &s;
            let sbs = s.dot(&bs);
            if sbs > 0.0 {
                state.b -= &bs * bs.transpose() / sbs;
                state.b += &y * y.transpose() / sy;
                // keep B exactly symmetric against fp drift
                state.b = (&state.b + state.b.transpose()) * 0.5;
            }
        }
    }
    state.prev = Some((x_new.clone(), grad_new.clone()));
}

/// Mutable per-worker state threaded through a run.
#[derive(Debug, Clone)]
pub struct WorkerState {
    /// Compression-error memory `eᵢ`, zero at the start of a run.
    pub error_memory: DVector<f64>,
    pub bfgs: Option<BfgsState>,
    /// The identity this worker presents to the oracle: selects its shard and
    /// its RNG stream. Normally the worker's position; aliasing several
    /// workers onto one id makes them share data and batches.
    pub stream_id: u64,
}

impl WorkerState {
    pub fn new(dim: usize, stream_id: u64) -> Self {
        WorkerState { error_memory: DVector::zeros(dim), bfgs: None, stream_id }
    }

    pub fn with_bfgs(mut self, l: f64) -> Self {
        self.bfgs = Some(BfgsState::new(self.error_memory.len(), l));
        self
    }
}

/// What one synchronous round produced.
#[derive(Debug, Clone)]
pub struct StepReport {
    pub x_next: DVector<f64>,
    /// Per-worker compressed messages `qᵢ`, ascending worker order.
    pub payloads: Vec<DVector<f64>>,
    /// Per-worker realized compression errors `‖pᵢ − qᵢ‖`.
    pub error_norms: Vec<f64>,
    /// Gradient error `cᵏ = ∇f(xᵏ) − qᵏ` (single-worker quadratic runs only,
    /// where the exact gradient is what was compressed).
    pub gradient_error: Option<DVector<f64>>,
    /// Total invented payload size of this round's messages.
    pub bits: u64,
}

struct WorkerOutput {
    q: DVector<f64>,
    error_norm: f64,
    bits: u64,
}

fn aggregate(x: &DVector<f64>, gamma: f64, payloads: &[DVector<f64>]) -> DVector<f64> {
    let mut sum = DVector::zeros(x.len());
    for q in payloads {
        sum += q; // fixed ascending worker order: determinism contract
    }
    x - sum * (gamma / payloads.len() as f64)
}

fn quadratic_gradient_error(
    problem: &Problem,
    oracle: &OracleMode,
    n: usize,
    x: &DVector<f64>,
    q: &DVector<f64>,
) -> Option<DVector<f64>> {
    match problem {
        Problem::Quadratic(p) if n == 1 && oracle.is_deterministic() => Some(p.grad(x) - q),
        _ => None,
    }
}

/// Direct compression step: `x ← x − γ·(1/n)Σ Q(gᵢ)`. Worker error memories
/// are not consulted or modified.
pub fn direct_step(
    x: &DVector<f64>,
    workers: &[WorkerState],
    problem: &Problem,
    compressor: &CompressorSpec,
    gamma: f64,
    oracle: &OracleMode,
    iteration: u64,
) -> Result<StepReport> {
    problem.check_workers(workers.len())?;
    let outputs: Vec<WorkerOutput> = workers
        .par_iter()
        .map(|w| -> Result<WorkerOutput> {
            let g = problem.oracle_grad(w.stream_id as usize, x, oracle, iteration)?;
            let r = compress(compressor, &g)?;
            Ok(WorkerOutput { bits: payload_bits(compressor, &g), q: r.output, error_norm: r.error_norm })
        })
        .collect::<Result<_>>()?;
    let payloads: Vec<DVector<f64>> = outputs.iter().map(|o| o.q.clone()).collect();
    let x_next = aggregate(x, gamma, &payloads);
    let gradient_error = quadratic_gradient_error(problem, oracle, workers.len(), x, &payloads[0]);
    Ok(StepReport {
        x_next,
        error_norms: outputs.iter().map(|o| o.error_norm).collect(),
        bits: outputs.iter().map(|o| o.bits).sum(),
        payloads,
        gradient_error,
    })
}

/// Error-compensated step. Per worker: `pᵢ = gᵢ + Aᵢᵏeᵢ`, `qᵢ = Q(pᵢ)`,
/// `eᵢ ← pᵢ − qᵢ`; then `x ← x − γ·(1/n)Σqᵢ`. The BFGS weighting consumes
/// `B` as of the previous iteration and refreshes it after the step from the
/// (point, gradient) pair already in hand.
pub fn ec_step(
    x: &DVector<f64>,
    workers: &mut [WorkerState],
    problem: &Problem,
    compressor: &CompressorSpec,
    scheme: &SchemeConfig,
    oracle: &OracleMode,
    iteration: u64,
) -> Result<StepReport> {
    let SchemeKind::ErrorCompensated(weighting) = scheme.kind else {
        return Err(Error::Config("ec_step requires an error-compensated scheme".into()));
    };
    problem.check_workers(workers.len())?;
    let gamma = scheme.gamma;
    let n = workers.len();
    let outputs: Vec<WorkerOutput> = workers
        .par_iter_mut()
        .map(|w| -> Result<WorkerOutput> {
            let g = problem.oracle_grad(w.stream_id as usize, x, oracle, iteration)?;
            let e = &w.error_memory;
            let worker = w.stream_id as usize;
            let weighted = match weighting {
                Weighting::Identity => e.clone(),
                Weighting::Scaled(alpha) => e * alpha,
                Weighting::Hessian => {
                    e - gamma * problem.oracle_hessian_vec(worker, x, e, oracle, iteration)?
                }
                Weighting::DiagHessian => {
                    let diag = problem.oracle_hessian_diag(worker, x, oracle, iteration)?;
                    e - gamma * diag.component_mul(e)
                }
                Weighting::Bfgs => {
                    let bfgs = w.bfgs.as_ref().ok_or_else(|| {
                        Error::Config("BFGS weighting needs initialized worker BFGS state".into())
                    })?;
                    e - gamma * (&bfgs.b * e)
                }
            };
            let p = &g + weighted;
            let r = compress(compressor, &p)?;
            w.error_memory = &p - &r.output;
            if weighting == Weighting::Bfgs {
                bfgs_update(w.bfgs.as_mut().unwrap(), x, &g);
            }
            Ok(WorkerOutput { bits: payload_bits(compressor, &p), q: r.output, error_norm: r.error_norm })
        })
        .collect::<Result<_>>()?;
    let payloads: Vec<DVector<f64>> = outputs.iter().map(|o| o.q.clone()).collect();
    let x_next = aggregate(x, gamma, &payloads);
    let gradient_error = quadratic_gradient_error(problem, oracle, n, x, &payloads[0]);
    Ok(StepReport {
        x_next,
        error_norms: outputs.iter().map(|o| o.error_norm).collect(),
        bits: outputs.iter().map(|o| o.bits).sum(),
        payloads,
        gradient_error,
    })
}

/// Dispatch one round of the configured scheme.
pub fn step(
    x: &DVector<f64>,
    workers: &mut [WorkerState],
    problem: &Problem,
    compressor: &CompressorSpec,
    scheme: &SchemeConfig,
    oracle: &OracleMode,
    iteration: u64,
) -> Result<StepReport> {
    match scheme.kind {
        SchemeKind::Direct => {
            direct_step(x, workers, problem, compressor, scheme.gamma, oracle, iteration)
        }
        SchemeKind::ErrorCompensated(_) => {
            ec_step(x, workers, problem, compressor, scheme, oracle, iteration)
        }
    }
}

/// Closed-form residual check for error-compensated runs on a quadratic with
/// exact gradients (single worker, or the mean error memory of identical
/// workers). With `A = I − γH`:
///
/// - `Hessian` weighting: returns `rᵏ = (xᵏ − x*) − Aᵏ(x⁰ − x*) − γeᵏ`,
///   which the update rule forces to zero — only the *latest* compression
///   error survives.
/// - `Identity`/`Scaled(α)`: returns the accumulated history term
///   `accᵏ = γ·Σ_{l<k} A^{k−1−l}·B·eˡ` with `B = (1−α)I − γH`, grown by the
///   recursion `acc ← A·acc + γB·eᵏ`; then `xᵏ − x* = Aᵏ(x⁰−x*) + γeᵏ + accᵏ`.
///
/// `xs` and `errors` are the iterate and error-memory traces including
/// iteration 0 (`e⁰ = 0`).
pub fn accumulation_diagnostic(
    problem: &QuadraticProblem,
    gamma: f64,
    weighting: Weighting,
    xs: &[DVector<f64>],
    errors: &[DVector<f64>],
) -> Result<Vec<DVector<f64>>> {
    if xs.len() != errors.len() || xs.is_empty() {
        return Err(Error::InvalidInput(
            "need equal-length, nonempty iterate and error traces".into(),
        ));
    }
    let h = &problem.h;
    let alpha = match weighting {
        Weighting::Hessian => None,
        Weighting::Identity => Some(1.0),
        Weighting::Scaled(a) => Some(a),
        _ => {
            return Err(Error::Config(
                "accumulation diagnostic is defined for hessian, identity, and scaled weightings"
                    .into(),
            ))
        }
    };
    let mut out = Vec::with_capacity(xs.len());
    match alpha {
        None => {
            // propagate v = Aᵏ(x⁰−x*) and compare against the trajectory
            let mut v = &xs[0] - &problem.x_star;
            for (k, xk) in xs.iter().enumerate() {
                if k > 0 {
                    v = &v - gamma * (h * &v);
                }
                out.push(xk - &problem.x_star - &v - gamma * &errors[k]);
            }
        }
        Some(a) => {
            let mut acc = DVector::zeros(xs[0].len());
            for k in 0..xs.len() {
                if k > 0 {
                    let prev = &errors[k - 1];
                    let b_e = prev * (1.0 - a) - gamma * (h * prev);
                    acc = &acc - gamma * (h * &acc) + gamma * b_e;
                }
                out.push(acc.clone());
            }
        }
    }
    Ok(out)
}
