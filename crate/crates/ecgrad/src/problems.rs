//! Objective problems: strongly convex quadratics and empirical-risk
//! minimization over sharded data. Each problem exposes exact gradients and
//! Hessians (full, diagonal, and matrix-free products), smoothness /
//! strong-convexity constants, and a deterministic mini-batch oracle whose
//! draws are reproducible given `(seed, worker, iteration)`.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

/// Evaluate a quantity for the global objective `f = (1/n)Σ fᵢ` or one
/// worker's local `fᵢ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scope {
    Full,
    Worker(usize),
}

/// `f(x) = ½·xᵀHx + bᵀx` with `H ≻ 0`. The gradient is `Hx + b`, so the
/// minimizer solves `Hx* = −b`.
#[derive(Debug, Clone)]
pub struct QuadraticProblem {
    pub h: DMatrix<f64>,
    pub b: DVector<f64>,
    /// Smallest eigenvalue of `H` (strong-convexity constant).
    pub mu: f64,
    /// Largest eigenvalue of `H` (smoothness constant).
    pub l: f64,
    /// Condition number `L/μ`.
    pub kappa: f64,
    pub x_star: DVector<f64>,
}

impl QuadraticProblem {
    /// Build from `H` and `b`, computing eigen-extremes and the minimizer.
    /// `H` must be finite, symmetric to `1e−10` relative, and positive
    /// definite; the solve goes through a Cholesky factorization, never an
    /// explicit inverse.
    pub fn new(h: DMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        let d = h.nrows();
        if h.ncols() != d {
            return Err(Error::InvalidInput(format!(
                "quadratic H must be square, got {}x{}",
                h.nrows(),
                h.ncols()
            )));
        }
        if b.len() != d {
            return Err(Error::DimMismatch { expected: d, actual: b.len() });
        }
        if !(h.iter().all(|x| x.is_finite()) && b.iter().all(|x| x.is_finite())) {
            return Err(Error::InvalidInput("quadratic H/b must be finite".into()));
        }
        let scale = 1.0 + h.amax();
        for i in 0..d {
            for j in (i + 1)..d {
                if (h[(i, j)] - h[(j, i)]).abs() > 1e-10 * scale {
                    return Err(Error::InvalidInput(format!(
                        "H is not symmetric at ({i},{j}): {} vs {}",
                        h[(i, j)],
                        h[(j, i)]
                    )));
                }
            }
        }
        // symmetrize exactly so downstream eigen/factorization sees Hᵀ = H
        let h = (&h + h.transpose()) * 0.5;
        let eig = h.clone().symmetric_eigen().eigenvalues;
        let mu = eig.min();
        let l = eig.max();
        if mu <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "H must be positive definite (λmin = {mu:.3e})"
            )));
        }
        let chol = nalgebra::Cholesky::new(h.clone())
            .ok_or_else(|| Error::Numerical("Cholesky factorization of H failed".into()))?;
        let x_star = chol.solve(&(-&b));
        let residual = (&h * &x_star + &b).norm();
        if residual > 1e-8 * (1.0 + b.norm()) {
            return Err(Error::Numerical(format!(
                "stationarity residual {residual:.3e} too large"
            )));
        }
        Ok(QuadraticProblem { h, b, mu, l, kappa: l / mu, x_star })
    }

    pub fn dim(&self) -> usize {
        self.h.nrows()
    }

    pub fn value(&self, x: &DVector<f64>) -> f64 {
        0.5 * x.dot(&(&self.h * x)) + self.b.dot(x)
    }

    pub fn grad(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.h * x + &self.b
    }
}

/// Per-sample loss `ℓ(t, y)` applied to the margin `t = ⟨z, x⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    /// `½(t − y)²`
    LeastSquares,
    /// `ln(1 + exp(−y·t))`, labels in {−1, +1}
    Logistic,
    /// `r²/(1+r²)` with `r = t − y`: bounded, redescending, nonconvex
    Robust,
}

impl LossKind {
    fn value(self, t: f64, y: f64) -> f64 {
        match self {
            LossKind::LeastSquares => 0.5 * (t - y) * (t - y),
            LossKind::Logistic => {
                // stable ln(1 + e^{-a}) for a = y·t
                let a = y * t;
                (-a).max(0.0) + (-a.abs()).exp().ln_1p()
            }
            LossKind::Robust => {
                let r = t - y;
                r * r / (1.0 + r * r)
            }
        }
    }

    /// dℓ/dt
    fn d1(self, t: f64, y: f64) -> f64 {
        match self {
            LossKind::LeastSquares => t - y,
            LossKind::Logistic => -y * sigmoid(-y * t),
            LossKind::Robust => {
                let r = t - y;
                let q = 1.0 + r * r;
                2.0 * r / (q * q)
            }
        }
    }

    /// d²ℓ/dt²
    fn d2(self, t: f64, y: f64) -> f64 {
        match self {
            LossKind::LeastSquares => 1.0,
            LossKind::Logistic => {
                let p = sigmoid(y * t);
                p * (1.0 - p)
            }
            LossKind::Robust => {
                let r = t - y;
                let q = 1.0 + r * r;
                (2.0 - 6.0 * r * r) / (q * q * q)
            }
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "least-squares" | "ls" => Ok(LossKind::LeastSquares),
            "logistic" => Ok(LossKind::Logistic),
            "robust" => Ok(LossKind::Robust),
            other => Err(Error::Config(format!(
                "unknown loss `{other}` (expected least-squares, logistic, robust)"
            ))),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            LossKind::LeastSquares => "least-squares",
            LossKind::Logistic => "logistic",
            LossKind::Robust => "robust",
        }
    }
}

fn sigmoid(a: f64) -> f64 {
    if a >= 0.0 {
        1.0 / (1.0 + (-a).exp())
    } else {
        let e = a.exp();
        e / (1.0 + e)
    }
}

/// One worker's slice of the data, kept dense with a cached Gram matrix
/// `A = ZᵀZ` (used for least-squares Hessian products and for eigenvalue
/// constants).
#[derive(Debug, Clone)]
pub struct Shard {
    /// m×d, one sample per row.
    pub z: DMatrix<f64>,
    pub y: DVector<f64>,
    gram: DMatrix<f64>,
    sum_z_sq: f64,
}

impl Shard {
    pub fn new(features: &[DVector<f64>], labels: &[f64]) -> Result<Self> {
        if features.is_empty() {
            return Err(Error::InvalidInput("shard must contain at least one sample".into()));
        }
        if features.len() != labels.len() {
            return Err(Error::DimMismatch { expected: features.len(), actual: labels.len() });
        }
        let d = features[0].len();
        for (j, f) in features.iter().enumerate() {
            if f.len() != d {
                return Err(Error::DimMismatch { expected: d, actual: f.len() });
            }
            if !f.iter().all(|v| v.is_finite()) {
                return Err(Error::InvalidInput(format!("sample {j} has a non-finite feature")));
            }
        }
        if !labels.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidInput("labels must be finite".into()));
        }
        let m = features.len();
        let z = DMatrix::from_fn(m, d, |r, c| features[r][c]);
        let gram = z.tr_mul(&z);
        let sum_z_sq = z.iter().map(|v| v * v).sum();
        Ok(Shard { z, y: DVector::from_column_slice(labels), gram, sum_z_sq })
    }

    pub fn len(&self) -> usize {
        self.z.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.z.nrows() == 0
    }

    fn dim(&self) -> usize {
        self.z.ncols()
    }

    fn margin(&self, row: usize, x: &DVector<f64>) -> f64 {
        let mut t = 0.0;
        for c in 0..self.z.ncols() {
            t += self.z[(row, c)] * x[c];
        }
        t
    }
}

/// `fᵢ(x) = (1/m)Σⱼ ℓ(⟨zⱼ, x⟩, yⱼ) + (λ/2)‖x‖²`, one shard per worker;
/// the global objective is the worker mean.
#[derive(Debug, Clone)]
pub struct ErmProblem {
    pub shards: Vec<Shard>,
    pub loss: LossKind,
    pub lambda: f64,
}

impl ErmProblem {
    pub fn new(shards: Vec<Shard>, loss: LossKind, lambda: f64) -> Result<Self> {
        if shards.is_empty() {
            return Err(Error::InvalidInput("need at least one shard".into()));
        }
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(Error::InvalidInput(format!("lambda must be ≥ 0, got {lambda}")));
        }
        let d = shards[0].dim();
        for s in &shards {
            if s.dim() != d {
                return Err(Error::DimMismatch { expected: d, actual: s.dim() });
            }
            if loss == LossKind::Logistic {
                if let Some(bad) = s.y.iter().find(|&&y| y != 1.0 && y != -1.0) {
                    return Err(Error::InvalidInput(format!(
                        "logistic labels must be ±1, got {bad}"
                    )));
                }
            }
        }
        Ok(ErmProblem { shards, loss, lambda })
    }

    pub fn dim(&self) -> usize {
        self.shards[0].dim()
    }

    fn worker_value(&self, i: usize, x: &DVector<f64>) -> f64 {
        let s = &self.shards[i];
        let t = &s.z * x;
        let mean = (0..s.len()).map(|j| self.loss.value(t[j], s.y[j])).sum::<f64>() / s.len() as f64;
        mean + 0.5 * self.lambda * x.norm_squared()
    }

    fn worker_grad(&self, i: usize, x: &DVector<f64>) -> DVector<f64> {
        let s = &self.shards[i];
        let t = &s.z * x;
        let w = DVector::from_fn(s.len(), |j, _| self.loss.d1(t[j], s.y[j]) / s.len() as f64);
        s.z.tr_mul(&w) + self.lambda * x
    }

    fn worker_hessian(&self, i: usize, x: &DVector<f64>) -> DMatrix<f64> {
        let s = &self.shards[i];
        let d = self.dim();
        let mut h = if self.loss == LossKind::LeastSquares {
            &s.gram / s.len() as f64
        } else {
            let t = &s.z * x;
            let mut w = s.z.clone();
            for j in 0..s.len() {
                let c = self.loss.d2(t[j], s.y[j]) / s.len() as f64;
                w.row_mut(j).scale_mut(c);
            }
            let m = s.z.tr_mul(&w);
            (&m + m.transpose()) * 0.5
        };
        for k in 0..d {
            h[(k, k)] += self.lambda;
        }
        h
    }

    fn worker_hessian_vec(&self, i: usize, x: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        let s = &self.shards[i];
        if self.loss == LossKind::LeastSquares {
            // curvature is constant; use the cached Gram matrix
            return &s.gram * v / s.len() as f64 + self.lambda * v;
        }
        let t = &s.z * x;
        let zv = &s.z * v;
        let w = DVector::from_fn(s.len(), |j, _| {
            self.loss.d2(t[j], s.y[j]) * zv[j] / s.len() as f64
        });
        s.z.tr_mul(&w) + self.lambda * v
    }

    fn worker_hessian_diag(&self, i: usize, x: &DVector<f64>) -> DVector<f64> {
        let s = &self.shards[i];
        let m = s.len();
        let t = &s.z * x;
        let w = DVector::from_fn(m, |j, _| self.loss.d2(t[j], s.y[j]) / m as f64);
        let mut out = DVector::from_element(self.dim(), self.lambda);
        for c in 0..self.dim() {
            let mut acc = 0.0;
            for j in 0..m {
                acc += w[j] * s.z[(j, c)] * s.z[(j, c)];
            }
            out[c] += acc;
        }
        out
    }
}

/// Problem constants: `mu` ≤ the strong-convexity modulus, `l` ≥ the
/// smoothness constant of every worker objective, and `kappa = l/mu`
/// (infinite when `mu = 0`). The robust loss additionally reports the
/// experiment constant `l_experiment = (1/m)Σ‖z‖²/(6√3)` — the figure step-size
/// rules reference — alongside the conservative curvature bound
/// `l_curv = 2·λmax((1/m)A) + λ` that actually dominates `|ℓ''| ≤ 2`.
#[derive(Debug, Clone, Copy)]
pub struct ProblemConstants {
    pub mu: f64,
    pub l: f64,
    pub kappa: f64,
    pub l_experiment: Option<f64>,
    pub l_curv: Option<f64>,
}

/// How stochastic oracles draw mini-batches.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HessianCoupling {
    /// Hessian estimates reuse the gradient's batch at the same iteration.
    SameBatch,
    /// Hessian estimates draw their own batch.
    IndependentBatch,
}

/// Mini-batch oracle configuration. Batches are sampled uniformly with
/// replacement; `batch_size == shard size` switches to the exact full-batch
/// quantity (without-replacement override), which keeps full-batch runs
/// bit-identical to the deterministic oracle.
#[derive(Debug, Clone, Copy)]
pub struct StochasticOracleConfig {
    pub batch_size: usize,
    pub hessian_coupling: HessianCoupling,
    pub seed: u64,
}

/// Deterministic (exact) oracle or seeded mini-batch oracle.
#[derive(Debug, Clone, Copy)]
pub enum OracleMode {
    Deterministic,
    Stochastic(StochasticOracleConfig),
}

impl OracleMode {
    pub fn is_deterministic(&self) -> bool {
        matches!(self, OracleMode::Deterministic)
    }
}

/// Disjoint RNG streams: one ChaCha8 key per (seed, worker, iteration,
/// purpose) so any quantity can be re-drawn independently of call order.
#[derive(Debug, Clone, Copy)]
pub(crate) enum StreamPurpose {
    Grad = 0,
    Hess = 1,
    ProbeGrad = 2,
    ProbeHess = 3,
}

pub(crate) fn stream_rng(seed: u64, worker: u64, iteration: u64, purpose: StreamPurpose) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[0..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&worker.to_le_bytes());
    key[16..24].copy_from_slice(&iteration.to_le_bytes());
    key[24] = purpose as u8;
    ChaCha8Rng::from_seed(key)
}

fn batch_indices(rng: &mut ChaCha8Rng, m: usize, b: usize) -> Vec<usize> {
    (0..b).map(|_| rng.gen_range(0..m)).collect()
}

/// Empirical variance estimates for the oracle's gradient (Euclidean) and
/// Hessian (Frobenius, an upper bound on the spectral deviation).
#[derive(Debug, Clone, Copy)]
pub struct Variances {
    pub sigma_sq: f64,
    pub sigma_h_sq: f64,
}

/// A shared objective for the master/worker simulation.
#[derive(Debug, Clone)]
pub enum Problem {
    Quadratic(QuadraticProblem),
    Erm(ErmProblem),
}

impl Problem {
    pub fn dim(&self) -> usize {
        match self {
            Problem::Quadratic(q) => q.dim(),
            Problem::Erm(e) => e.dim(),
        }
    }

    /// Number of workers the problem prescribes; a quadratic is shared by
    /// any number of workers, an ERM problem has one worker per shard.
    pub fn n_shards(&self) -> Option<usize> {
        match self {
            Problem::Quadratic(_) => None,
            Problem::Erm(e) => Some(e.shards.len()),
        }
    }

    pub fn check_workers(&self, n: usize) -> Result<()> {
        if n == 0 {
            return Err(Error::Config("need at least one worker".into()));
        }
        match self.n_shards() {
            Some(s) if s != n => Err(Error::Config(format!(
                "problem has {s} shards but the run asks for {n} workers"
            ))),
            _ => Ok(()),
        }
    }

    fn check_dim(&self, x: &DVector<f64>) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimMismatch { expected: self.dim(), actual: x.len() });
        }
        Ok(())
    }

    fn check_worker_index(&self, i: usize) -> Result<()> {
        if let Some(s) = self.n_shards() {
            if i >= s {
                return Err(Error::InvalidInput(format!(
                    "worker index {i} out of range (have {s} shards)"
                )));
            }
        }
        Ok(())
    }

    pub fn value(&self, scope: Scope, x: &DVector<f64>) -> Result<f64> {
        self.check_dim(x)?;
        match (self, scope) {
            (Problem::Quadratic(q), _) => Ok(q.value(x)),
            (Problem::Erm(e), Scope::Worker(i)) => {
                self.check_worker_index(i)?;
                Ok(e.worker_value(i, x))
            }
            (Problem::Erm(e), Scope::Full) => {
                let n = e.shards.len() as f64;
                Ok((0..e.shards.len()).map(|i| e.worker_value(i, x)).sum::<f64>() / n)
            }
        }
    }

    pub fn grad(&self, scope: Scope, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_dim(x)?;
        match (self, scope) {
            (Problem::Quadratic(q), _) => Ok(q.grad(x)),
            (Problem::Erm(e), Scope::Worker(i)) => {
                self.check_worker_index(i)?;
                Ok(e.worker_grad(i, x))
            }
            (Problem::Erm(e), Scope::Full) => {
                let mut g = DVector::zeros(self.dim());
                for i in 0..e.shards.len() {
                    g += e.worker_grad(i, x);
                }
                Ok(g / e.shards.len() as f64)
            }
        }
    }

    pub fn hessian(&self, scope: Scope, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        self.check_dim(x)?;
        match (self, scope) {
            (Problem::Quadratic(q), _) => Ok(q.h.clone()),
            (Problem::Erm(e), Scope::Worker(i)) => {
                self.check_worker_index(i)?;
                Ok(e.worker_hessian(i, x))
            }
            (Problem::Erm(e), Scope::Full) => {
                let mut h = DMatrix::zeros(self.dim(), self.dim());
                for i in 0..e.shards.len() {
                    h += e.worker_hessian(i, x);
                }
                Ok(h / e.shards.len() as f64)
            }
        }
    }

    /// Matrix-free Hessian-vector product `∇²f(x)·v` — the workhorse for the
    /// Hessian error-weighting, which never needs the full matrix.
    pub fn hessian_vec(&self, scope: Scope, x: &DVector<f64>, v: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_dim(x)?;
        self.check_dim(v)?;
        match (self, scope) {
            (Problem::Quadratic(q), _) => Ok(&q.h * v),
            (Problem::Erm(e), Scope::Worker(i)) => {
                self.check_worker_index(i)?;
                Ok(e.worker_hessian_vec(i, x, v))
            }
            (Problem::Erm(e), Scope::Full) => {
                let mut h = DVector::zeros(self.dim());
                for i in 0..e.shards.len() {
                    h += e.worker_hessian_vec(i, x, v);
                }
                Ok(h / e.shards.len() as f64)
            }
        }
    }

    pub fn hessian_diag(&self, scope: Scope, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_dim(x)?;
        match (self, scope) {
            (Problem::Quadratic(q), _) => Ok(q.h.diagonal()),
            (Problem::Erm(e), Scope::Worker(i)) => {
                self.check_worker_index(i)?;
                Ok(e.worker_hessian_diag(i, x))
            }
            (Problem::Erm(e), Scope::Full) => {
                let mut h = DVector::zeros(self.dim());
                for i in 0..e.shards.len() {
                    h += e.worker_hessian_diag(i, x);
                }
                Ok(h / e.shards.len() as f64)
            }
        }
    }

    pub fn x_star(&self) -> Option<DVector<f64>> {
        match self {
            Problem::Quadratic(q) => Some(q.x_star.clone()),
            Problem::Erm(e) => {
                if e.loss != LossKind::LeastSquares {
                    return None;
                }
                // normal equations of the worker mean:
                // [(1/n)Σ (1/mᵢ)Aᵢ + λI]·x = (1/n)Σ (1/mᵢ)Zᵢᵀyᵢ
                let d = e.dim();
                let n = e.shards.len() as f64;
                let mut m = DMatrix::zeros(d, d);
                let mut c = DVector::zeros(d);
                for s in &e.shards {
                    m += &s.gram / s.len() as f64;
                    c += s.z.tr_mul(&s.y) / s.len() as f64;
                }
                m /= n;
                c /= n;
                for k in 0..d {
                    m[(k, k)] += e.lambda;
                }
                nalgebra::Cholesky::new(m).map(|ch| ch.solve(&c))
            }
        }
    }

    pub fn f_star(&self) -> Option<f64> {
        let xs = self.x_star()?;
        self.value(Scope::Full, &xs).ok()
    }

    /// Smoothness / strong-convexity constants; see [`ProblemConstants`].
    /// For sharded ERM these are the worst case over workers (`l = max Lᵢ`,
    /// `mu = min μᵢ`), which upper-bound the global constants.
    pub fn constants(&self) -> Result<ProblemConstants> {
        match self {
            Problem::Quadratic(q) => Ok(ProblemConstants {
                mu: q.mu,
                l: q.l,
                kappa: q.kappa,
                l_experiment: None,
                l_curv: None,
            }),
            Problem::Erm(e) => {
                let lam = e.lambda;
                let mut mu = f64::INFINITY;
                let mut l = f64::NEG_INFINITY;
                let mut l_experiment = f64::NEG_INFINITY;
                for s in &e.shards {
                    let m = s.len() as f64;
                    let eig = (s.gram.clone() / m).symmetric_eigen().eigenvalues;
                    let (lo, hi) = (eig.min().max(0.0), eig.max());
                    if !hi.is_finite() {
                        return Err(Error::Numerical("eigen solve failed on a shard Gram matrix".into()));
                    }
                    match e.loss {
                        LossKind::LeastSquares => {
                            mu = mu.min(lo + lam);
                            l = l.max(hi + lam);
                        }
                        LossKind::Logistic => {
                            // per-sample curvature p(1−p) ≤ 1/4
                            mu = mu.min(lam);
                            l = l.max(hi / 4.0 + lam);
                        }
                        LossKind::Robust => {
                            // |ℓ''| ≤ 2; nonconvex, so μ = 0
                            mu = 0.0;
                            l = l.max(2.0 * hi + lam);
                            l_experiment = l_experiment.max(s.sum_z_sq / m / (6.0 * 3.0f64.sqrt()));
                        }
                    }
                }
                let kappa = if mu > 0.0 { l / mu } else { f64::INFINITY };
                Ok(ProblemConstants {
                    mu,
                    l,
                    kappa,
                    l_experiment: (e.loss == LossKind::Robust).then_some(l_experiment),
                    l_curv: (e.loss == LossKind::Robust).then_some(l),
                })
            }
        }
    }

    fn batch_for(&self, i: usize, cfg: &StochasticOracleConfig, iteration: u64, purpose: StreamPurpose) -> Result<Option<Vec<usize>>> {
        let Problem::Erm(e) = self else {
            return Ok(None); // a quadratic has no data to subsample
        };
        self.check_worker_index(i)?;
        let m = e.shards[i].len();
        if cfg.batch_size == 0 || cfg.batch_size > m {
            return Err(Error::Config(format!(
                "batch size {} out of range for shard of {m} samples",
                cfg.batch_size
            )));
        }
        if cfg.batch_size == m {
            return Ok(None); // full batch: exact quantity, no sampling
        }
        let mut rng = stream_rng(cfg.seed, i as u64, iteration, purpose);
        Ok(Some(batch_indices(&mut rng, m, cfg.batch_size)))
    }

    fn hess_purpose(cfg: &StochasticOracleConfig) -> StreamPurpose {
        match cfg.hessian_coupling {
            HessianCoupling::SameBatch => StreamPurpose::Grad,
            HessianCoupling::IndependentBatch => StreamPurpose::Hess,
        }
    }

    /// Unbiased mini-batch gradient of worker `i`'s objective.
    pub fn stochastic_grad(
        &self,
        i: usize,
        x: &DVector<f64>,
        cfg: &StochasticOracleConfig,
        iteration: u64,
    ) -> Result<DVector<f64>> {
        self.check_dim(x)?;
        let Some(batch) = self.batch_for(i, cfg, iteration, StreamPurpose::Grad)? else {
            return self.grad(Scope::Worker(i), x);
        };
        let Problem::Erm(e) = self else { unreachable!() };
        let s = &e.shards[i];
        let mut g = DVector::zeros(self.dim());
        for &j in &batch {
            let w = e.loss.d1(s.margin(j, x), s.y[j]) / batch.len() as f64;
            for c in 0..self.dim() {
                g[c] += w * s.z[(j, c)];
            }
        }
        g += e.lambda * x;
        Ok(g)
    }

    /// Unbiased mini-batch Hessian (full matrix form).
    pub fn stochastic_hessian(
        &self,
        i: usize,
        x: &DVector<f64>,
        cfg: &StochasticOracleConfig,
        iteration: u64,
    ) -> Result<DMatrix<f64>> {
        self.check_dim(x)?;
        let Some(batch) = self.batch_for(i, cfg, iteration, Self::hess_purpose(cfg))? else {
            return self.hessian(Scope::Worker(i), x);
        };
        let Problem::Erm(e) = self else { unreachable!() };
        let s = &e.shards[i];
        let d = self.dim();
        let mut h = DMatrix::zeros(d, d);
        for &j in &batch {
            let w = e.loss.d2(s.margin(j, x), s.y[j]) / batch.len() as f64;
            for c in 0..d {
                let zc = w * s.z[(j, c)];
                for r in 0..d {
                    h[(r, c)] += zc * s.z[(j, r)];
                }
            }
        }
        for k in 0..d {
            h[(k, k)] += e.lambda;
        }
        Ok(h)
    }

    /// Mini-batch Hessian-vector product (same batch law as
    /// [`Self::stochastic_hessian`]).
    pub fn stochastic_hessian_vec(
        &self,
        i: usize,
        x: &DVector<f64>,
        v: &DVector<f64>,
        cfg: &StochasticOracleConfig,
        iteration: u64,
    ) -> Result<DVector<f64>> {
        self.check_dim(x)?;
        self.check_dim(v)?;
        let Some(batch) = self.batch_for(i, cfg, iteration, Self::hess_purpose(cfg))? else {
            return self.hessian_vec(Scope::Worker(i), x, v);
        };
        let Problem::Erm(e) = self else { unreachable!() };
        let s = &e.shards[i];
        let mut out = DVector::zeros(self.dim());
        for &j in &batch {
            let zv = s.margin(j, v);
            let w = e.loss.d2(s.margin(j, x), s.y[j]) * zv / batch.len() as f64;
            for c in 0..self.dim() {
                out[c] += w * s.z[(j, c)];
            }
        }
        out += e.lambda * v;
        Ok(out)
    }

    /// Mini-batch Hessian diagonal (same batch law as the full matrix).
    pub fn stochastic_hessian_diag(
        &self,
        i: usize,
        x: &DVector<f64>,
        cfg: &StochasticOracleConfig,
        iteration: u64,
    ) -> Result<DVector<f64>> {
        self.check_dim(x)?;
        let Some(batch) = self.batch_for(i, cfg, iteration, Self::hess_purpose(cfg))? else {
            return self.hessian_diag(Scope::Worker(i), x);
        };
        let Problem::Erm(e) = self else { unreachable!() };
        let s = &e.shards[i];
        let mut out = DVector::from_element(self.dim(), e.lambda);
        for &j in &batch {
            let w = e.loss.d2(s.margin(j, x), s.y[j]) / batch.len() as f64;
            for c in 0..self.dim() {
                out[c] += w * s.z[(j, c)] * s.z[(j, c)];
            }
        }
        Ok(out)
    }

    /// Worker gradient under either oracle mode.
    pub fn oracle_grad(
        &self,
        i: usize,
        x: &DVector<f64>,
        mode: &OracleMode,
        iteration: u64,
    ) -> Result<DVector<f64>> {
        match mode {
            OracleMode::Deterministic => {
                self.check_worker_index(i)?;
                self.grad(Scope::Worker(i), x)
            }
            OracleMode::Stochastic(cfg) => self.stochastic_grad(i, x, cfg, iteration),
        }
    }

    /// Worker Hessian-vector product under either oracle mode.
    pub fn oracle_hessian_vec(
        &self,
        i: usize,
        x: &DVector<f64>,
        v: &DVector<f64>,
        mode: &OracleMode,
        iteration: u64,
    ) -> Result<DVector<f64>> {
        match mode {
            OracleMode::Deterministic => {
                self.check_worker_index(i)?;
                self.hessian_vec(Scope::Worker(i), x, v)
            }
            OracleMode::Stochastic(cfg) => self.stochastic_hessian_vec(i, x, v, cfg, iteration),
        }
    }

    /// Worker Hessian diagonal under either oracle mode.
    pub fn oracle_hessian_diag(
        &self,
        i: usize,
        x: &DVector<f64>,
        mode: &OracleMode,
        iteration: u64,
    ) -> Result<DVector<f64>> {
        match mode {
            OracleMode::Deterministic => {
                self.check_worker_index(i)?;
                self.hessian_diag(Scope::Worker(i), x)
            }
            OracleMode::Stochastic(cfg) => self.stochastic_hessian_diag(i, x, cfg, iteration),
        }
    }

    /// Empirical worst-case (over workers and probe points) oracle variances:
    /// mean of `‖g̃ − ∇fᵢ‖²` and `‖H̃ − ∇²fᵢ‖_F²` over `draws` fresh batches.
    /// The probe streams are disjoint from the streams a run consumes, so
    /// estimating variances never perturbs a simulation.
    pub fn estimate_variances(
        &self,
        mode: &OracleMode,
        probe_points: &[DVector<f64>],
        draws: usize,
    ) -> Result<Variances> {
        if draws < 2 {
            return Err(Error::Config("variance estimation needs draws ≥ 2".into()));
        }
        let OracleMode::Stochastic(cfg) = mode else {
            return Ok(Variances { sigma_sq: 0.0, sigma_h_sq: 0.0 });
        };
        let Problem::Erm(e) = self else {
            return Ok(Variances { sigma_sq: 0.0, sigma_h_sq: 0.0 });
        };
        let mut sigma_sq: f64 = 0.0;
        let mut sigma_h_sq: f64 = 0.0;
        for i in 0..e.shards.len() {
            if cfg.batch_size >= e.shards[i].len() {
                continue; // full batch on this shard: exact
            }
            for (pi, x) in probe_points.iter().enumerate() {
                let g_true = self.grad(Scope::Worker(i), x)?;
                let h_true = self.hessian(Scope::Worker(i), x)?;
                let mut g_acc = 0.0;
                let mut h_acc = 0.0;
                let probe_cfg = StochasticOracleConfig {
                    hessian_coupling: HessianCoupling::IndependentBatch,
                    ..*cfg
                };
                for t in 0..draws {
                    let it = (pi * draws + t) as u64;
                    let m = e.shards[i].len();
                    let mut rng = stream_rng(cfg.seed, i as u64, it, StreamPurpose::ProbeGrad);
                    let batch = batch_indices(&mut rng, m, cfg.batch_size);
                    let g = self.batch_grad(i, x, &batch)?;
                    g_acc += (&g - &g_true).norm_squared();
                    let mut rng = stream_rng(cfg.seed, i as u64, it, StreamPurpose::ProbeHess);
                    let batch = batch_indices(&mut rng, m, probe_cfg.batch_size);
                    let h = self.batch_hessian(i, x, &batch)?;
                    h_acc += (&h - &h_true).norm_squared();
                }
                sigma_sq = sigma_sq.max(g_acc / draws as f64);
                sigma_h_sq = sigma_h_sq.max(h_acc / draws as f64);
            }
        }
        Ok(Variances { sigma_sq, sigma_h_sq })
    }

    fn batch_grad(&self, i: usize, x: &DVector<f64>, batch: &[usize]) -> Result<DVector<f64>> {
        let Problem::Erm(e) = self else { unreachable!() };
        let s = &e.shards[i];
        let mut g = DVector::zeros(self.dim());
        for &j in batch {
            let w = e.loss.d1(s.margin(j, x), s.y[j]) / batch.len() as f64;
            for c in 0..self.dim() {
                g[c] += w * s.z[(j, c)];
            }
        }
        g += e.lambda * x;
        Ok(g)
    }

    fn batch_hessian(&self, i: usize, x: &DVector<f64>, batch: &[usize]) -> Result<DMatrix<f64>> {
        let Problem::Erm(e) = self else { unreachable!() };
        let s = &e.shards[i];
        let d = self.dim();
        let mut h = DMatrix::zeros(d, d);
        for &j in batch {
            let w = e.loss.d2(s.margin(j, x), s.y[j]) / batch.len() as f64;
            for c in 0..d {
                let zc = w * s.z[(j, c)];
                for r in 0..d {
                    h[(r, c)] += zc * s.z[(j, r)];
                }
            }
        }
        for k in 0..d {
            h[(k, k)] += e.lambda;
        }
        Ok(h)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn vec(xs: &[f64]) -> DVector<f64> {
        DVector::from_row_slice(xs)
    }

    fn one_shard_problem(samples: &[&[f64]], labels: &[f64], loss: LossKind, lambda: f64) -> Problem {
        let feats: Vec<DVector<f64>> = samples.iter().map(|s| vec(s)).collect();
        let shard = Shard::new(&feats, labels).unwrap();
        Problem::Erm(ErmProblem::new(vec![shard], loss, lambda).unwrap())
    }

    #[test]
    fn quadratic_identity_hessian() {
        let q = QuadraticProblem::new(DMatrix::identity(2, 2), vec(&[1.0, 0.0])).unwrap();
        assert_eq!(q.grad(&vec(&[0.0, 0.0])).as_slice(), &[1.0, 0.0]);
        assert_eq!(q.x_star.as_slice(), &[-1.0, 0.0]);
        assert_eq!((q.mu, q.l, q.kappa), (1.0, 1.0, 1.0));
    }

    #[test]
    fn quadratic_stationarity_and_constants() {
        let h = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.25]);
        let q = QuadraticProblem::new(h, vec(&[1.0, -0.5])).unwrap();
        assert!(q.grad(&q.x_star).norm() <= 1e-8);
        assert_relative_eq!(q.l, 2.25, max_relative = 1e-12);
        assert_relative_eq!(q.mu, 1.0, max_relative = 1e-12);
        let p = Problem::Quadratic(q);
        // value/grad consistency at a point
        let x = vec(&[0.7, -0.3]);
        let g = p.grad(Scope::Full, &x).unwrap();
        assert_relative_eq!(g[0], 2.0 * 0.7 + 0.5 * -0.3 + 1.0, max_relative = 1e-14);
    }

    #[test]
    fn quadratic_rejects_bad_input() {
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.2, 0.1, 1.0]);
        assert!(QuadraticProblem::new(asym, vec(&[0.0, 0.0])).is_err());
        let indef = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(QuadraticProblem::new(indef, vec(&[0.0, 0.0])).is_err());
    }

    #[test]
    fn robust_gradient_frozen_value() {
        // single sample z=(1,0), y=0, λ=0, at x=(1,0): margin r=1,
        // dℓ/dr = 2r/(1+r²)² = 1/2
        let p = one_shard_problem(&[&[1.0, 0.0]], &[0.0], LossKind::Robust, 0.0);
        let g = p.grad(Scope::Full, &vec(&[1.0, 0.0])).unwrap();
        assert_relative_eq!(g[0], 0.5, max_relative = 1e-14);
        assert_eq!(g[1], 0.0);
    }

    #[test]
    fn logistic_gradient_frozen_value() {
        let p = one_shard_problem(&[&[1.0, 1.0]], &[1.0], LossKind::Logistic, 0.0);
        let g = p.grad(Scope::Full, &vec(&[0.0, 0.0])).unwrap();
        assert_relative_eq!(g[0], -0.5, max_relative = 1e-14);
        assert_relative_eq!(g[1], -0.5, max_relative = 1e-14);
    }

    #[test]
    fn robust_hessian_frozen_value() {
        let p = one_shard_problem(&[&[1.0, 0.0]], &[0.0], LossKind::Robust, 0.0);
        let h = p.hessian(Scope::Full, &vec(&[0.0, 0.0])).unwrap();
        assert_relative_eq!(h[(0, 0)], 2.0, max_relative = 1e-14);
        assert_eq!(h[(0, 1)], 0.0);
        assert_eq!(h[(1, 1)], 0.0);
    }

    #[test]
    fn logistic_hessian_frozen_value() {
        let p = one_shard_problem(&[&[1.0, 0.0]], &[1.0], LossKind::Logistic, 0.1);
        let h = p.hessian(Scope::Full, &vec(&[0.0, 0.0])).unwrap();
        assert_relative_eq!(h[(0, 0)], 0.25 + 0.1, max_relative = 1e-14);
        assert_relative_eq!(h[(1, 1)], 0.1, max_relative = 1e-14);
    }

    fn fd_grad(p: &Problem, x: &DVector<f64>) -> DVector<f64> {
        let h = 1e-5;
        DVector::from_fn(x.len(), |c, _| {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[c] += h;
            xm[c] -= h;
            (p.value(Scope::Full, &xp).unwrap() - p.value(Scope::Full, &xm).unwrap()) / (2.0 * h)
        })
    }

    #[test]
    fn gradients_match_finite_differences() {
        let samples: &[&[f64]] = &[&[0.6, -0.2, 0.1], &[-0.3, 0.8, 0.4], &[0.2, 0.2, -0.9]];
        for loss in [LossKind::LeastSquares, LossKind::Logistic, LossKind::Robust] {
            let labels = if loss == LossKind::Logistic { [1.0, -1.0, 1.0] } else { [0.4, -0.7, 1.2] };
            let p = one_shard_problem(samples, &labels, loss, 0.05);
            let x = vec(&[0.3, -0.6, 0.25]);
            let g = p.grad(Scope::Full, &x).unwrap();
            let fd = fd_grad(&p, &x);
            assert_relative_eq!(g, fd, max_relative = 1e-6);
        }
    }

    #[test]
    fn hessian_matches_finite_differenced_gradient() {
        let samples: &[&[f64]] = &[&[0.6, -0.2], &[-0.3, 0.8], &[0.9, 0.1]];
        for loss in [LossKind::LeastSquares, LossKind::Logistic, LossKind::Robust] {
            let labels = if loss == LossKind::Logistic { [1.0, -1.0, 1.0] } else { [0.4, -0.7, 0.0] };
            let p = one_shard_problem(samples, &labels, loss, 0.05);
            let x = vec(&[0.3, -0.6]);
            let hess = p.hessian(Scope::Full, &x).unwrap();
            let h = 1e-5;
            for c in 0..2 {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[c] += h;
                xm[c] -= h;
                let col = (p.grad(Scope::Full, &xp).unwrap() - p.grad(Scope::Full, &xm).unwrap()) / (2.0 * h);
                for r in 0..2 {
                    assert_relative_eq!(hess[(r, c)], col[r], max_relative = 1e-5, epsilon = 1e-8);
                }
            }
        }
    }

    #[test]
    fn hessian_products_agree_with_full_matrix() {
        let samples: &[&[f64]] = &[&[0.6, -0.2, 0.3], &[-0.3, 0.8, -0.5]];
        for loss in [LossKind::LeastSquares, LossKind::Logistic, LossKind::Robust] {
            let labels = if loss == LossKind::Logistic { [1.0, -1.0] } else { [0.4, -0.7] };
            let p = one_shard_problem(samples, &labels, loss, 0.02);
            let x = vec(&[0.3, -0.6, 0.1]);
            let v = vec(&[1.0, 2.0, -0.5]);
            let h = p.hessian(Scope::Full, &x).unwrap();
            let hv = p.hessian_vec(Scope::Full, &x, &v).unwrap();
            assert_relative_eq!(hv, &h * &v, max_relative = 1e-12);
            let diag = p.hessian_diag(Scope::Full, &x).unwrap();
            assert_relative_eq!(diag, h.diagonal(), max_relative = 1e-12);
        }
    }

    #[test]
    fn worker_mean_equals_full_gradient() {
        let s1 = Shard::new(&[vec(&[1.0, 0.0]), vec(&[0.0, 2.0])], &[1.0, -1.0]).unwrap();
        let s2 = Shard::new(&[vec(&[0.5, 0.5])], &[1.0]).unwrap();
        let p = Problem::Erm(ErmProblem::new(vec![s1, s2], LossKind::Logistic, 0.1).unwrap());
        let x = vec(&[0.4, -0.2]);
        let full = p.grad(Scope::Full, &x).unwrap();
        let mean = (p.grad(Scope::Worker(0), &x).unwrap() + p.grad(Scope::Worker(1), &x).unwrap()) / 2.0;
        assert_relative_eq!(full, mean, max_relative = 1e-12);
    }

    #[test]
    fn erm_constants_frozen_values() {
        // least squares, one sample z=(1,0), m=1, λ=0: Gram extremes (0,1)
        let p = one_shard_problem(&[&[1.0, 0.0]], &[0.0], LossKind::LeastSquares, 0.0);
        let c = p.constants().unwrap();
        assert_eq!((c.mu, c.l), (0.0, 1.0));
        assert!(c.kappa.is_infinite());
        // robust, unit-norm sample: the experiment constant 1/(6√3)
        let p = one_shard_problem(&[&[1.0, 0.0]], &[0.0], LossKind::Robust, 0.0);
        let c = p.constants().unwrap();
        assert_relative_eq!(c.l_experiment.unwrap(), 1.0 / (6.0 * 3.0f64.sqrt()), max_relative = 1e-14);
        assert_relative_eq!(c.l_experiment.unwrap(), 0.09623, max_relative = 1e-4);
        assert_relative_eq!(c.l_curv.unwrap(), 2.0, max_relative = 1e-12);
        // logistic: mu = λ, L = λmax(A/(4m)) + λ
        let p = one_shard_problem(&[&[1.0, 0.0]], &[1.0], LossKind::Logistic, 0.3);
        let c = p.constants().unwrap();
        assert_relative_eq!(c.mu, 0.3, max_relative = 1e-14);
        assert_relative_eq!(c.l, 0.25 + 0.3, max_relative = 1e-12);
    }

    #[test]
    fn erm_least_squares_x_star_is_stationary() {
        let s1 = Shard::new(&[vec(&[1.0, 0.2]), vec(&[-0.4, 1.0])], &[0.5, -0.3]).unwrap();
        let s2 = Shard::new(&[vec(&[0.3, -0.8]), vec(&[1.1, 0.6])], &[0.1, 0.9]).unwrap();
        let p = Problem::Erm(ErmProblem::new(vec![s1, s2], LossKind::LeastSquares, 0.05).unwrap());
        let xs = p.x_star().unwrap();
        assert!(p.grad(Scope::Full, &xs).unwrap().norm() <= 1e-10);
        let f_star = p.f_star().unwrap();
        assert!(p.value(Scope::Full, &vec(&[0.0, 0.0])).unwrap() >= f_star);
    }

    #[test]
    fn logistic_labels_validated() {
        let shard = Shard::new(&[vec(&[1.0])], &[0.5]).unwrap();
        assert!(ErmProblem::new(vec![shard], LossKind::Logistic, 0.0).is_err());
    }

    fn stochastic_fixture() -> (Problem, StochasticOracleConfig) {
        let shard = Shard::new(
            &[vec(&[1.0, 0.0]), vec(&[0.0, 1.0]), vec(&[0.5, -0.5]), vec(&[-0.3, 0.7])],
            &[1.0, -1.0, 0.3, -0.6],
        )
        .unwrap();
        let p = Problem::Erm(ErmProblem::new(vec![shard], LossKind::LeastSquares, 0.1).unwrap());
        let cfg = StochasticOracleConfig {
            batch_size: 2,
            hessian_coupling: HessianCoupling::SameBatch,
            seed: 99,
        };
        (p, cfg)
    }

    #[test]
    fn stochastic_grad_is_deterministic_per_key() {
        let (p, cfg) = stochastic_fixture();
        let x = vec(&[0.2, -0.4]);
        let a = p.stochastic_grad(0, &x, &cfg, 7).unwrap();
        let b = p.stochastic_grad(0, &x, &cfg, 7).unwrap();
        assert_eq!(a, b);
        let c = p.stochastic_grad(0, &x, &cfg, 8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn full_batch_equals_exact_gradient() {
        let (p, mut cfg) = stochastic_fixture();
        cfg.batch_size = 4;
        let x = vec(&[0.2, -0.4]);
        assert_eq!(
            p.stochastic_grad(0, &x, &cfg, 3).unwrap(),
            p.grad(Scope::Worker(0), &x).unwrap()
        );
        assert_eq!(
            p.stochastic_hessian(0, &x, &cfg, 3).unwrap(),
            p.hessian(Scope::Worker(0), &x).unwrap()
        );
    }

    #[test]
    fn batch_size_validation() {
        let (p, mut cfg) = stochastic_fixture();
        cfg.batch_size = 5;
        assert!(p.stochastic_grad(0, &vec(&[0.0, 0.0]), &cfg, 0).is_err());
        cfg.batch_size = 0;
        assert!(p.stochastic_grad(0, &vec(&[0.0, 0.0]), &cfg, 0).is_err());
    }

    #[test]
    fn stochastic_grad_is_unbiased() {
        let (p, cfg) = stochastic_fixture();
        let x = vec(&[0.3, 0.1]);
        let truth = p.grad(Scope::Worker(0), &x).unwrap();
        let draws = 20_000;
        let mut mean = DVector::zeros(2);
        for t in 0..draws {
            mean += p.stochastic_grad(0, &x, &cfg, t).unwrap();
        }
        mean /= draws as f64;
        // loose 4-sigma-ish smoke check; the calibrated 3·SE test lives in
        // the verification suite
        assert!((mean - truth).norm() < 0.05);
    }

    #[test]
    fn same_batch_coupling_reuses_gradient_indices() {
        let (p, cfg) = stochastic_fixture();
        let x = vec(&[0.2, -0.4]);
        // least squares: stochastic Hessian = (1/b)Σ z_jz_jᵀ + λI depends
        // only on the batch, so SameBatch twice at one iteration must agree
        let h1 = p.stochastic_hessian(0, &x, &cfg, 11).unwrap();
        let h2 = p.stochastic_hessian(0, &x, &cfg, 11).unwrap();
        assert_eq!(h1, h2);
        let ind = StochasticOracleConfig {
            hessian_coupling: HessianCoupling::IndependentBatch,
            ..cfg
        };
        // independent coupling draws from a different stream; at this seed
        // and iteration the batches differ
        let h3 = p.stochastic_hessian(0, &x, &ind, 11).unwrap();
        assert_ne!(h1, h3);
        // and the gradient's own stream is what SameBatch replays: verify by
        // reconstructing with the matching product
        let v = vec(&[1.0, 0.5]);
        let hv = p.stochastic_hessian_vec(0, &x, &v, &cfg, 11).unwrap();
        assert_relative_eq!(hv, &h1 * &v, max_relative = 1e-12);
    }

    #[test]
    fn two_sample_bernoulli_variance_closed_form() {
        let shard = Shard::new(&[vec(&[1.0, 0.0]), vec(&[0.0, 2.0])], &[1.0, -1.0]).unwrap();
        let p = Problem::Erm(ErmProblem::new(vec![shard], LossKind::LeastSquares, 0.0).unwrap());
        let cfg = StochasticOracleConfig {
            batch_size: 1,
            hessian_coupling: HessianCoupling::IndependentBatch,
            seed: 5,
        };
        let x = vec(&[0.7, -0.2]);
        // per-sample gradients g₁, g₂: every singleton batch errs by
        // ‖(g₁−g₂)/2‖², so the estimate is exact for any number of draws
        let g1 = p.batch_grad(0, &x, &[0]).unwrap();
        let g2 = p.batch_grad(0, &x, &[1]).unwrap();
        let expected = (g1 - g2).norm_squared() / 4.0;
        let v = p
            .estimate_variances(&OracleMode::Stochastic(cfg), &[x.clone()], 50)
            .unwrap();
        assert_relative_eq!(v.sigma_sq, expected, max_relative = 1e-12);
        assert!(v.sigma_h_sq > 0.0);
    }

    #[test]
    fn variances_zero_for_deterministic_and_full_batch() {
        let (p, mut cfg) = stochastic_fixture();
        let probes = [vec(&[0.0, 0.0]), vec(&[1.0, 1.0])];
        let v = p.estimate_variances(&OracleMode::Deterministic, &probes, 10).unwrap();
        assert_eq!((v.sigma_sq, v.sigma_h_sq), (0.0, 0.0));
        cfg.batch_size = 4;
        let v = p
            .estimate_variances(&OracleMode::Stochastic(cfg), &probes, 10)
            .unwrap();
        assert_eq!((v.sigma_sq, v.sigma_h_sq), (0.0, 0.0));
    }

    #[test]
    fn scope_and_dimension_errors() {
        let (p, cfg) = stochastic_fixture();
        assert!(p.grad(Scope::Worker(3), &vec(&[0.0, 0.0])).is_err());
        assert!(p.grad(Scope::Full, &vec(&[0.0])).is_err());
        assert!(p.stochastic_grad(1, &vec(&[0.0, 0.0]), &cfg, 0).is_err());
        assert!(p.check_workers(2).is_err());
        assert!(p.check_workers(1).is_ok());
        let q = Problem::Quadratic(
            QuadraticProblem::new(DMatrix::identity(2, 2), vec(&[0.0, 0.0])).unwrap(),
        );
        // a quadratic is shared: any positive worker count is fine
        assert!(q.check_workers(7).is_ok());
        assert!(q.check_workers(0).is_err());
    }

    #[test]
    fn hessians_are_symmetric() {
        let samples: &[&[f64]] = &[&[0.6, -0.2, 0.3], &[-0.3, 0.8, -0.5], &[0.1, 0.4, 0.9]];
        for loss in [LossKind::LeastSquares, LossKind::Logistic, LossKind::Robust] {
            let labels = if loss == LossKind::Logistic { [1.0, -1.0, 1.0] } else { [0.4, -0.7, 0.2] };
            let p = one_shard_problem(samples, &labels, loss, 0.05);
            let h = p.hessian(Scope::Full, &vec(&[0.3, -0.6, 0.2])).unwrap();
            assert!((&h - h.transpose()).amax() <= 1e-10);
        }
    }
}
