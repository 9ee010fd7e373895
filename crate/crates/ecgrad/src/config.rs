//! Flat `key = value` experiment configuration. One layer of text (file or
//! embedded preset), one layer of command-line overrides, then full
//! resolution into a problem plus run settings. The resolved configuration
//! echoes back out as the same flat format — with the step size pinned to
//! its numeric value — so any run can be reproduced from its output
//! directory alone.

use std::collections::BTreeMap;
use std::path::PathBuf;

use nalgebra::DVector;

use crate::compressors::CompressorSpec;
use crate::data_io::{
    self, coerce_binary_labels, normalize_samples, normalize_vectors, shard, to_dense,
    ShardPolicy,
};
use crate::problems::{
    ErmProblem, HessianCoupling, LossKind, OracleMode, Problem, Shard, StochasticOracleConfig,
};
use crate::schemes::{SchemeConfig, SchemeKind};
use crate::simulation::RunConfig;
use crate::theory::{validate_step, GammaCheck, StepRule, TheoremId};
use crate::{Error, Result};

/// Key/value pairs from one or more layered sources. Later assignments win.
#[derive(Debug, Clone, Default)]
pub struct RawConfig {
    map: BTreeMap<String, String>,
}

impl RawConfig {
    /// Parse flat `key = value` text. `#` starts a comment, blank lines and
    /// `[section]` headers are ignored (sections exist purely for humans).
    pub fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = lineno + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() || (content.starts_with('[') && content.ends_with(']')) {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(Error::Parse {
                    line,
                    msg: format!("expected `key = value`, got `{content}`"),
                });
            };
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if key.is_empty() {
                return Err(Error::Parse { line, msg: "empty key".into() });
            }
            map.insert(key, value);
        }
        Ok(RawConfig { map })
    }

    /// Override one key (command-line flags layer on top of file values).
    pub fn set(&mut self, key: &str, value: &str) {
        self.map.insert(key.to_string(), value.to_string());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(String::as_str)
    }
}

/// Names of the embedded presets, usable as `--config preset:NAME`.
pub const PRESET_NAMES: [&str; 7] = [
    "quadratic-smoke",
    "scalar-example",
    "thm4",
    "floor-ratio",
    "ls-experiment",
    "robust-experiment",
    "bounds-demo",
];

/// Look up an embedded preset by name.
pub fn preset(name: &str) -> Option<&'static str> {
    match name {
        "quadratic-smoke" => Some(include_str!("../presets/quadratic-smoke.cfg")),
        "scalar-example" => Some(include_str!("../presets/scalar-example.cfg")),
        "thm4" => Some(include_str!("../presets/thm4.cfg")),
        "floor-ratio" => Some(include_str!("../presets/floor-ratio.cfg")),
        "ls-experiment" => Some(include_str!("../presets/ls-experiment.cfg")),
        "robust-experiment" => Some(include_str!("../presets/robust-experiment.cfg")),
        "bounds-demo" => Some(include_str!("../presets/bounds-demo.cfg")),
        _ => None,
    }
}

/// Read configuration text from `preset:NAME` or a file path.
pub fn load_source(source: &str) -> Result<String> {
    if let Some(name) = source.strip_prefix("preset:") {
        return preset(name).map(str::to_string).ok_or_else(|| {
            Error::Config(format!(
                "unknown preset `{name}` (available: {})",
                PRESET_NAMES.join(", ")
            ))
        });
    }
    Ok(std::fs::read_to_string(source)?)
}

/// Which optimization problem to build.
#[derive(Debug, Clone, PartialEq)]
pub enum ProblemSpec {
    QuadKappa { d: usize, kappa: f64, seed: u64 },
    Scalar { mu: f64 },
    SynthLs {
        n_samples: usize,
        d: usize,
        noise: f64,
        seed: u64,
        outlier_fraction: f64,
        outlier_scale: f64,
    },
    Libsvm { path: PathBuf },
}

/// Mini-batch setting: full gradients or sampled batches of a fixed size.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BatchSpec {
    Full,
    Size(usize),
}

impl BatchSpec {
    pub fn parse(s: &str) -> Result<Self> {
        if s == "full" {
            return Ok(BatchSpec::Full);
        }
        let n: usize = s
            .parse()
            .map_err(|_| Error::Config(format!("batch must be `full` or a positive integer, got `{s}`")))?;
        if n == 0 {
            return Err(Error::Config("batch size must be positive".into()));
        }
        Ok(BatchSpec::Size(n))
    }

    pub fn label(&self) -> String {
        match self {
            BatchSpec::Full => "full".into(),
            BatchSpec::Size(n) => n.to_string(),
        }
    }
}

/// Starting iterate: the origin, an explicit vector, or a point offset from
/// the optimum along the slowest eigendirection (quadratics only — the
/// natural start for observing compression floors).
#[derive(Debug, Clone, PartialEq)]
pub enum X0Spec {
    Zero,
    Slow(f64),
    Values(Vec<f64>),
}

impl X0Spec {
    pub fn parse(s: &str) -> Result<Self> {
        if s == "zero" {
            return Ok(X0Spec::Zero);
        }
        if let Some(offset) = s.strip_prefix("slow:") {
            let c: f64 = offset
                .parse()
                .map_err(|_| Error::Config(format!("invalid slow-start offset `{offset}`")))?;
            if !c.is_finite() {
                return Err(Error::Config("slow-start offset must be finite".into()));
            }
            return Ok(X0Spec::Slow(c));
        }
        let values: std::result::Result<Vec<f64>, _> =
            s.split(',').map(|t| t.trim().parse::<f64>()).collect();
        match values {
            Ok(v) if v.iter().all(|x| x.is_finite()) => Ok(X0Spec::Values(v)),
            _ => Err(Error::Config(format!(
                "x0 must be `zero`, `slow:OFFSET`, or comma-separated numbers, got `{s}`"
            ))),
        }
    }

    pub fn label(&self) -> String {
        match self {
            X0Spec::Zero => "zero".into(),
            X0Spec::Slow(c) => format!("slow:{c}"),
            X0Spec::Values(v) => {
                v.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
            }
        }
    }
}

fn parse_coupling(s: &str) -> Result<HessianCoupling> {
    match s {
        "same-batch" => Ok(HessianCoupling::SameBatch),
        "independent-batch" => Ok(HessianCoupling::IndependentBatch),
        other => Err(Error::Config(format!(
            "unknown coupling `{other}` (expected same-batch, independent-batch)"
        ))),
    }
}

fn coupling_label(c: HessianCoupling) -> &'static str {
    match c {
        HessianCoupling::SameBatch => "same-batch",
        HessianCoupling::IndependentBatch => "independent-batch",
    }
}

fn gamma_check_label(c: &GammaCheck) -> String {
    match c {
        GammaCheck::None => "none".into(),
        GammaCheck::Thm4 => "thm4".into(),
        GammaCheck::Thm7b { beta } => format!("thm7b:{beta}"),
    }
}

const KNOWN_KEYS: [&str; 29] = [
    "problem",
    "d",
    "kappa",
    "mu",
    "n_samples",
    "noise",
    "problem_seed",
    "outlier_fraction",
    "outlier_scale",
    "data",
    "loss",
    "lambda",
    "normalize",
    "shard_policy",
    "workers",
    "compressor",
    "scheme",
    "schemes",
    "gamma_rule",
    "gamma_check",
    "iters",
    "batch",
    "coupling",
    "seed",
    "metrics_every",
    "x0",
    "thms",
    "beta",
    "v_inf_cap",
];

/// A fully parsed experiment: problem recipe plus run/bound settings.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub problem: ProblemSpec,
    pub loss: LossKind,
    pub lambda: f64,
    pub normalize: bool,
    pub shard_policy: ShardPolicy,
    pub workers: usize,
    pub compressor: CompressorSpec,
    pub scheme: SchemeKind,
    /// Scheme list for side-by-side comparison; defaults to `[scheme]`.
    pub schemes: Vec<SchemeKind>,
    pub gamma_rule: StepRule,
    pub gamma_check: GammaCheck,
    pub iters: usize,
    pub batch: BatchSpec,
    pub coupling: HessianCoupling,
    pub seed: u64,
    pub metrics_every: usize,
    pub x0: X0Spec,
    /// Bounds to evaluate (the `bounds` subcommand).
    pub thms: Vec<TheoremId>,
    /// Analysis parameter for thm7b.
    pub beta: Option<f64>,
    /// Entrywise magnitude cap used to bound input-dependent compressors.
    pub v_inf_cap: Option<f64>,
}

impl ExperimentConfig {
    pub fn from_raw(raw: &RawConfig) -> Result<Self> {
        for key in raw.map.keys() {
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(Error::Config(format!("unknown config key `{key}`")));
            }
        }
        fn parsed<T: std::str::FromStr>(raw: &RawConfig, key: &str, default: T) -> Result<T> {
            match raw.get(key) {
                None => Ok(default),
                Some(s) => s
                    .parse()
                    .map_err(|_| Error::Config(format!("invalid value `{s}` for `{key}`"))),
            }
        }

        let problem = match raw.get("problem") {
            None => return Err(Error::Config("missing required key `problem`".into())),
            Some("scalar") => ProblemSpec::Scalar { mu: parsed(raw, "mu", 1.0)? },
            Some("quad-kappa") => ProblemSpec::QuadKappa {
                d: parsed(raw, "d", 2)?,
                kappa: match raw.get("kappa") {
                    Some(s) => s
                        .parse()
                        .map_err(|_| Error::Config(format!("invalid value `{s}` for `kappa`")))?,
                    None => return Err(Error::Config("quad-kappa needs `kappa`".into())),
                },
                seed: parsed(raw, "problem_seed", 0)?,
            },
            Some("synth-ls") => ProblemSpec::SynthLs {
                n_samples: parsed(raw, "n_samples", 100)?,
                d: parsed(raw, "d", 10)?,
                noise: parsed(raw, "noise", 0.0)?,
                seed: parsed(raw, "problem_seed", 0)?,
                outlier_fraction: parsed(raw, "outlier_fraction", 0.0)?,
                outlier_scale: parsed(raw, "outlier_scale", 10.0)?,
            },
            Some("libsvm") => ProblemSpec::Libsvm {
                path: PathBuf::from(
                    raw.get("data")
                        .ok_or_else(|| Error::Config("libsvm problems need `data = PATH`".into()))?,
                ),
            },
            Some(other) => {
                return Err(Error::Config(format!(
                    "unknown problem `{other}` (expected scalar, quad-kappa, synth-ls, libsvm)"
                )))
            }
        };

        let scheme = SchemeKind::parse(raw.get("scheme").unwrap_or("direct"))?;
        let schemes = match raw.get("schemes") {
            None => vec![scheme.clone()],
            Some(list) => list
                .split(',')
                .map(|s| SchemeKind::parse(s.trim()))
                .collect::<Result<Vec<_>>>()?,
        };
        let thms = match raw.get("thms") {
            None => Vec::new(),
            Some(list) => list
                .split(',')
                .map(|s| TheoremId::parse(s.trim()))
                .collect::<Result<Vec<_>>>()?,
        };
        let normalize = match raw.get("normalize") {
            None => false,
            Some("true") => true,
            Some("false") => false,
            Some(other) => {
                return Err(Error::Config(format!(
                    "normalize must be true or false, got `{other}`"
                )))
            }
        };

        let config = ExperimentConfig {
            problem,
            loss: LossKind::parse(raw.get("loss").unwrap_or("least-squares"))?,
            lambda: parsed(raw, "lambda", 0.0)?,
            normalize,
            shard_policy: ShardPolicy::parse(raw.get("shard_policy").unwrap_or("contiguous"))?,
            workers: parsed(raw, "workers", 1)?,
            compressor: CompressorSpec::parse(raw.get("compressor").unwrap_or("exact"))?,
            scheme,
            schemes,
            gamma_rule: StepRule::parse(raw.get("gamma_rule").unwrap_or("1/L"))?,
            gamma_check: GammaCheck::parse(raw.get("gamma_check").unwrap_or("none"))?,
            iters: parsed(raw, "iters", 100)?,
            batch: BatchSpec::parse(raw.get("batch").unwrap_or("full"))?,
            coupling: parse_coupling(raw.get("coupling").unwrap_or("same-batch"))?,
            seed: parsed(raw, "seed", 1)?,
            metrics_every: parsed(raw, "metrics_every", 1)?,
            x0: X0Spec::parse(raw.get("x0").unwrap_or("zero"))?,
            thms,
            beta: raw.get("beta").map(|s| s.parse::<f64>()).transpose().map_err(|_| {
                Error::Config(format!("invalid value `{}` for `beta`", raw.get("beta").unwrap()))
            })?,
            v_inf_cap: raw
                .get("v_inf_cap")
                .map(|s| s.parse::<f64>())
                .transpose()
                .map_err(|_| {
                    Error::Config(format!(
                        "invalid value `{}` for `v_inf_cap`",
                        raw.get("v_inf_cap").unwrap()
                    ))
                })?,
        };
        if config.lambda < 0.0 || !config.lambda.is_finite() {
            return Err(Error::Config(format!("lambda must be >= 0, got {}", config.lambda)));
        }
        Ok(config)
    }

    /// Materialize the problem this experiment runs on.
    pub fn build_problem(&self) -> Result<Problem> {
        match &self.problem {
            ProblemSpec::Scalar { mu } => {
                if !(mu.is_finite() && *mu > 0.0) {
                    return Err(Error::Config(format!("scalar problems need mu > 0, got {mu}")));
                }
                let h = nalgebra::DMatrix::from_element(1, 1, *mu);
                Ok(Problem::Quadratic(crate::problems::QuadraticProblem::new(
                    h,
                    DVector::zeros(1),
                )?))
            }
            ProblemSpec::QuadKappa { d, kappa, seed } => {
                Ok(Problem::Quadratic(data_io::synth_quadratic(*d, *kappa, *seed)?))
            }
            ProblemSpec::SynthLs {
                n_samples,
                d,
                noise,
                seed,
                outlier_fraction,
                outlier_scale,
            } => {
                let (mut feats, mut labels, _x_true) =
                    data_io::synth_least_squares(*n_samples, *d, *noise, *seed)?;
                if *outlier_fraction > 0.0 {
                    apply_outliers(&mut labels, *outlier_fraction, *outlier_scale, *seed)?;
                }
                if self.normalize {
                    feats = normalize_vectors(feats);
                }
                if self.loss == LossKind::Logistic {
                    labels = coerce_binary_labels(labels);
                }
                self.erm_from_dense(feats, labels)
            }
            ProblemSpec::Libsvm { path } => {
                let (mut records, dim) = data_io::read_libsvm_file(path, None)?;
                if self.normalize {
                    records = normalize_samples(records);
                }
                let (feats, mut labels) = to_dense(&records, dim)?;
                if self.loss == LossKind::Logistic {
                    labels = coerce_binary_labels(labels);
                }
                self.erm_from_dense(feats, labels)
            }
        }
    }

    fn erm_from_dense(&self, feats: Vec<DVector<f64>>, labels: Vec<f64>) -> Result<Problem> {
        let samples: Vec<(DVector<f64>, f64)> = feats.into_iter().zip(labels).collect();
        let parts = shard(&samples, self.workers, self.shard_policy)?;
        let shards = parts
            .into_iter()
            .map(|part| {
                let (f, y): (Vec<_>, Vec<_>) = part.into_iter().unzip();
                Shard::new(&f, &y)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Problem::Erm(ErmProblem::new(shards, self.loss, self.lambda)?))
    }

    /// The oracle this experiment's runs use.
    pub fn oracle(&self) -> OracleMode {
        match self.batch {
            BatchSpec::Full => OracleMode::Deterministic,
            BatchSpec::Size(batch_size) => OracleMode::Stochastic(StochasticOracleConfig {
                batch_size,
                hessian_coupling: self.coupling,
                seed: self.seed,
            }),
        }
    }

    /// Resolve the starting iterate against a concrete problem.
    pub fn resolve_x0(&self, problem: &Problem) -> Result<Option<DVector<f64>>> {
        match &self.x0 {
            X0Spec::Zero => Ok(None),
            X0Spec::Values(v) => Ok(Some(DVector::from_row_slice(v))),
            X0Spec::Slow(offset) => {
                let Problem::Quadratic(q) = problem else {
                    return Err(Error::Config(
                        "x0 = slow:OFFSET needs a quadratic problem".into(),
                    ));
                };
                let eigen = q.h.clone().symmetric_eigen();
                let mut i_min = 0;
                for (i, val) in eigen.eigenvalues.iter().enumerate() {
                    if *val < eigen.eigenvalues[i_min] {
                        i_min = i;
                    }
                }
                let v_min = eigen.eigenvectors.column(i_min).into_owned();
                let x_star = problem
                    .x_star()
                    .ok_or_else(|| Error::Config("slow start needs a known optimum".into()))?;
                Ok(Some(x_star + v_min * *offset))
            }
        }
    }

    /// Resolve the step size (applying the admissibility check) and package
    /// everything into a [`RunConfig`] for the given scheme.
    pub fn run_config(&self, problem: &Problem, scheme: SchemeKind) -> Result<RunConfig> {
        let constants = problem.constants()?;
        let gamma = validate_step(&self.gamma_rule, &self.gamma_check, &constants)?;
        Ok(RunConfig {
            compressor: self.compressor.clone(),
            scheme: SchemeConfig::new(scheme, gamma)?,
            n_workers: self.workers,
            iterations: self.iters,
            oracle: self.oracle(),
            x0: self.resolve_x0(problem)?,
            metrics_every: self.metrics_every,
        })
    }

    /// Flat-text echo of the resolved configuration. The step-size rule is
    /// written as its numeric value, so re-parsing this text reproduces the
    /// run exactly.
    pub fn echo(&self, resolved_gamma: f64) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: String| out.push_str(&format!("{k} = {v}\n"));
        match &self.problem {
            ProblemSpec::Scalar { mu } => {
                kv("problem", "scalar".into());
                kv("mu", mu.to_string());
            }
            ProblemSpec::QuadKappa { d, kappa, seed } => {
                kv("problem", "quad-kappa".into());
                kv("d", d.to_string());
                kv("kappa", kappa.to_string());
                kv("problem_seed", seed.to_string());
            }
            ProblemSpec::SynthLs { n_samples, d, noise, seed, outlier_fraction, outlier_scale } => {
                kv("problem", "synth-ls".into());
                kv("n_samples", n_samples.to_string());
                kv("d", d.to_string());
                kv("noise", noise.to_string());
                kv("problem_seed", seed.to_string());
                kv("outlier_fraction", outlier_fraction.to_string());
                kv("outlier_scale", outlier_scale.to_string());
            }
            ProblemSpec::Libsvm { path } => {
                kv("problem", "libsvm".into());
                kv("data", path.display().to_string());
            }
        }
        if matches!(self.problem, ProblemSpec::SynthLs { .. } | ProblemSpec::Libsvm { .. }) {
            kv("loss", self.loss.label().into());
            kv("lambda", self.lambda.to_string());
            kv("normalize", self.normalize.to_string());
            kv(
                "shard_policy",
                match self.shard_policy {
                    ShardPolicy::Contiguous => "contiguous".into(),
                    ShardPolicy::RoundRobin => "round-robin".into(),
                },
            );
        }
        kv("workers", self.workers.to_string());
        kv("compressor", self.compressor.label());
        kv("scheme", self.scheme.label());
        if self.schemes.len() > 1 {
            kv(
                "schemes",
                self.schemes.iter().map(SchemeKind::label).collect::<Vec<_>>().join(","),
            );
        }
        kv("gamma_rule", resolved_gamma.to_string());
        kv("gamma_check", gamma_check_label(&self.gamma_check));
        kv("iters", self.iters.to_string());
        kv("batch", self.batch.label());
        if self.batch != BatchSpec::Full {
            kv("coupling", coupling_label(self.coupling).into());
        }
        kv("seed", self.seed.to_string());
        kv("metrics_every", self.metrics_every.to_string());
        kv("x0", self.x0.label());
        if !self.thms.is_empty() {
            kv(
                "thms",
                self.thms.iter().map(|t| t.label()).collect::<Vec<_>>().join(","),
            );
        }
        if let Some(beta) = self.beta {
            kv("beta", beta.to_string());
        }
        if let Some(cap) = self.v_inf_cap {
            kv("v_inf_cap", cap.to_string());
        }
        out
    }
}

/// Corrupt a seeded random subset of labels with large noise, modeling the
/// outliers the robust loss is designed to shrug off.
fn apply_outliers(labels: &mut [f64], fraction: f64, scale: f64, seed: u64) -> Result<()> {
    use rand::{Rng, SeedableRng};
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::Config(format!(
            "outlier_fraction must be in [0, 1], got {fraction}"
        )));
    }
    if !(scale.is_finite() && scale >= 0.0) {
        return Err(Error::Config(format!("outlier_scale must be >= 0, got {scale}")));
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed.wrapping_add(0x0DD1));
    for y in labels.iter_mut() {
        let hit = rng.gen::<f64>() < fraction;
        let bump: f64 = rng.sample(rand_distr::StandardNormal);
        if hit {
            *y += scale * bump;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::Scope;
    use crate::schemes::Weighting;
    use approx::assert_relative_eq;

    #[test]
    fn parses_flat_text_with_sections_and_comments() {
        let raw = RawConfig::parse(
            "# top comment\n[problem]\nproblem = scalar\nmu = 2.0 # inline\n\n[run]\niters = 7\n",
        )
        .unwrap();
        assert_eq!(raw.get("problem"), Some("scalar"));
        assert_eq!(raw.get("mu"), Some("2.0"));
        assert_eq!(raw.get("iters"), Some("7"));
        match RawConfig::parse("a = 1\nbroken line\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn overrides_win_and_unknown_keys_fail() {
        let mut raw = RawConfig::parse("problem = scalar\niters = 7\n").unwrap();
        raw.set("iters", "99");
        let config = ExperimentConfig::from_raw(&raw).unwrap();
        assert_eq!(config.iters, 99);
        raw.set("itres", "3");
        assert!(matches!(ExperimentConfig::from_raw(&raw), Err(Error::Config(_))));
    }

    #[test]
    fn every_preset_parses_and_builds() {
        for name in PRESET_NAMES {
            let text = load_source(&format!("preset:{name}")).unwrap();
            let raw = RawConfig::parse(&text).unwrap();
            let config = ExperimentConfig::from_raw(&raw)
                .unwrap_or_else(|e| panic!("preset {name}: {e}"));
            // skip the heavyweight dataset builds; just resolve the cheap ones
            if matches!(config.problem, ProblemSpec::Scalar { .. }) {
                let problem = config.build_problem().unwrap();
                config.run_config(&problem, config.scheme.clone()).unwrap();
            }
        }
        assert!(load_source("preset:nope").is_err());
    }

    #[test]
    fn scalar_preset_resolves_to_the_reference_setup() {
        let text = load_source("preset:scalar-example").unwrap();
        let config = ExperimentConfig::from_raw(&RawConfig::parse(&text).unwrap()).unwrap();
        let problem = config.build_problem().unwrap();
        assert_eq!(problem.dim(), 1);
        let rc = config.run_config(&problem, config.scheme.clone()).unwrap();
        assert_relative_eq!(rc.scheme.gamma, 0.4);
        assert_eq!(rc.x0.unwrap()[0], 1.7);
        assert!(matches!(rc.oracle, OracleMode::Deterministic));
    }

    #[test]
    fn synth_ls_config_builds_a_sharded_erm_problem() {
        let raw = RawConfig::parse(
            "problem = synth-ls\nn_samples = 30\nd = 4\nnoise = 0.1\nproblem_seed = 3\n\
             loss = least-squares\nlambda = 0.05\nnormalize = true\nworkers = 5\n\
             batch = 2\nseed = 9\n",
        )
        .unwrap();
        let config = ExperimentConfig::from_raw(&raw).unwrap();
        let problem = config.build_problem().unwrap();
        assert_eq!(problem.n_shards(), Some(5));
        assert_eq!(problem.dim(), 4);
        // normalized rows have unit gradient scale: check one worker value is finite
        let v = problem.value(Scope::Worker(0), &DVector::zeros(4)).unwrap();
        assert!(v.is_finite());
        match config.oracle() {
            OracleMode::Stochastic(s) => {
                assert_eq!(s.batch_size, 2);
                assert_eq!(s.seed, 9);
            }
            _ => panic!("expected stochastic oracle"),
        }
    }

    #[test]
    fn slow_start_sits_on_the_smallest_eigendirection() {
        let raw = RawConfig::parse(
            "problem = quad-kappa\nd = 6\nkappa = 25\nproblem_seed = 4\nx0 = slow:1.5\n",
        )
        .unwrap();
        let config = ExperimentConfig::from_raw(&raw).unwrap();
        let problem = config.build_problem().unwrap();
        let x0 = config.resolve_x0(&problem).unwrap().unwrap();
        let x_star = problem.x_star().unwrap();
        let offset = &x0 - &x_star;
        assert_relative_eq!(offset.norm(), 1.5, max_relative = 1e-10);
        // the offset is an eigenvector for the smallest eigenvalue (= 1)
        let Problem::Quadratic(q) = &problem else { unreachable!() };
        let hv = &q.h * &offset;
        assert_relative_eq!((hv - &offset).norm(), 0.0, epsilon = 1e-8);
        // slow starts are quadratic-only
        let raw = RawConfig::parse("problem = synth-ls\nx0 = slow:1.0\n").unwrap();
        let config = ExperimentConfig::from_raw(&raw).unwrap();
        let problem = config.build_problem().unwrap();
        assert!(config.resolve_x0(&problem).is_err());
    }

    #[test]
    fn echo_round_trips_to_an_identical_experiment() {
        let text = load_source("preset:thm4").unwrap();
        let config = ExperimentConfig::from_raw(&RawConfig::parse(&text).unwrap()).unwrap();
        let problem = config.build_problem().unwrap();
        let rc = config.run_config(&problem, config.scheme.clone()).unwrap();
        let echo = config.echo(rc.scheme.gamma);
        let config2 = ExperimentConfig::from_raw(&RawConfig::parse(&echo).unwrap()).unwrap();
        // the echoed gamma_rule is the numeric value and re-resolves identically
        assert_eq!(config2.gamma_rule, StepRule::Fixed(rc.scheme.gamma));
        let problem2 = config2.build_problem().unwrap();
        let rc2 = config2.run_config(&problem2, config2.scheme.clone()).unwrap();
        assert_eq!(rc.scheme.gamma.to_bits(), rc2.scheme.gamma.to_bits());
        let t1 = crate::simulation::run(&problem, &rc).unwrap();
        let t2 = crate::simulation::run(&problem2, &rc2).unwrap();
        assert_eq!(t1.to_csv(), t2.to_csv());
    }

    #[test]
    fn gamma_check_violation_surfaces_as_config_error() {
        let text = load_source("preset:thm4").unwrap();
        let mut raw = RawConfig::parse(&text).unwrap();
        raw.set("gamma_rule", "10/L");
        let config = ExperimentConfig::from_raw(&raw).unwrap();
        let problem = config.build_problem().unwrap();
        match config.run_config(&problem, config.scheme.clone()) {
            Err(Error::Config(msg)) => assert!(msg.contains("thm4"), "message: {msg}"),
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn scheme_lists_and_theorem_lists_parse() {
        let raw = RawConfig::parse(
            "problem = scalar\nschemes = direct, ec:identity, ec:hessian\nthms = thm1, thm5\n",
        )
        .unwrap();
        let config = ExperimentConfig::from_raw(&raw).unwrap();
        assert_eq!(config.schemes.len(), 3);
        assert_eq!(config.schemes[2], SchemeKind::ErrorCompensated(Weighting::Hessian));
        assert_eq!(config.thms, vec![TheoremId::Thm1, TheoremId::Thm5]);
        let raw = RawConfig::parse("problem = scalar\nthms = thm2\n").unwrap();
        assert!(ExperimentConfig::from_raw(&raw).is_err());
    }

    #[test]
    fn outliers_are_seeded_and_bounded() {
        let mut a: Vec<f64> = (0..100).map(|i| i as f64 / 100.0).collect();
        let mut b = a.clone();
        apply_outliers(&mut a, 0.2, 5.0, 7).unwrap();
        apply_outliers(&mut b, 0.2, 5.0, 7).unwrap();
        assert_eq!(a, b);
        let clean: Vec<f64> = (0..100).map(|i| i as f64 / 100.0).collect();
        let changed = a.iter().zip(&clean).filter(|(x, y)| x != y).count();
        assert!(changed > 5 && changed < 40, "changed {changed}");
        assert!(apply_outliers(&mut a, 1.5, 5.0, 7).is_err());
    }
}
