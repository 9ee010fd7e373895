//! Convergence-bound catalog: closed-form upper bounds for every scheme the
//! simulator implements, evaluated as pure functions of problem constants.
//! Numbered `thm1`…`thm7` in the order the verification suites cite them:
//!
//! | bound | setting                                   | metric        | floor |
//! |-------|-------------------------------------------|---------------|-------|
//! | thm1  | quadratic, direct compression             | ‖xᵏ−x*‖      | ε/μ   |
//! | thm3  | distributed deterministic, direct         | ‖xᵏ−x*‖      | ε/μ   |
//! | thm4  | distributed stochastic, direct            | min‖∇f‖², gap | O(ε²) |
//! | thm5  | quadratic, EC with Hessian weighting      | ‖xᵏ−x*‖      | γε    |
//! | thm6  | distributed deterministic, EC-Hessian     | ‖xᵏ−x*‖      | γεC   |
//! | thm7  | distributed stochastic, EC-Hessian        | min‖∇f‖², gap | O(γ²ε²) |
//!
//! The ε/μ → γε floor drop is the whole point of Hessian-weighted error
//! compensation: at γ = 1/L the accuracy gain is exactly the condition
//! number κ.

use crate::problems::ProblemConstants;
use crate::{Error, Result};

/// Everything a bound formula may consume. `eps` is the compressor's
/// worst-case error, `sigma_sq`/`sigma_h_sq` the oracle's gradient/Hessian
/// variances, `beta` a free analysis parameter in (0,1) used by thm7b,
/// `x0_dist = ‖x⁰−x*‖`, `f0_gap = f(x⁰)−f*`, and `k` the horizon (curves
/// cover iterations `0..=k`).
#[derive(Debug, Clone, Copy)]
pub struct BoundInputs {
    pub mu: f64,
    pub l: f64,
    pub kappa: f64,
    pub gamma: f64,
    pub eps: f64,
    pub sigma_sq: f64,
    pub sigma_h_sq: f64,
    pub beta: f64,
    pub x0_dist: f64,
    pub f0_gap: f64,
    pub k: usize,
}

impl BoundInputs {
    /// Start from problem constants with everything else zeroed/defaulted
    /// (β = 1/2); fill the rest with struct-update syntax.
    pub fn from_constants(c: &ProblemConstants) -> Self {
        BoundInputs {
            mu: c.mu,
            l: c.l,
            kappa: c.kappa,
            gamma: 0.0,
            eps: 0.0,
            sigma_sq: 0.0,
            sigma_h_sq: 0.0,
            beta: 0.5,
            x0_dist: 0.0,
            f0_gap: 0.0,
            k: 0,
        }
    }
}

/// A per-iteration bound curve (`values[j]` bounds the metric at iteration
/// `j`) plus its `k → ∞` asymptote.
#[derive(Debug, Clone)]
pub struct BoundCurve {
    pub values: Vec<f64>,
    pub floor: f64,
}

/// The stochastic bounds come in pairs: one curve for `min‖∇f‖²` without
/// convexity, one for the averaged-iterate gap `f(x̄ᵏ)−f*` under strong
/// convexity.
#[derive(Debug, Clone)]
pub struct ConvexPair {
    pub nonconvex: BoundCurve,
    pub strongly_convex: BoundCurve,
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * b.abs().max(1.0)
}

/// Contraction factor for the two supported exact step sizes on a
/// μ-strongly-convex, L-smooth objective: `1 − 1/κ` at `γ = 1/L`,
/// `1 − 2/(κ+1)` at `γ = 2/(μ+L)`.
fn linear_rate(inputs: &BoundInputs) -> Result<f64> {
    let BoundInputs { mu, l, gamma, kappa, .. } = *inputs;
    if mu <= 0.0 {
        return Err(Error::Config("linear-rate bounds need mu > 0".into()));
    }
    if close(gamma, 1.0 / l) {
        Ok(1.0 - 1.0 / kappa)
    } else if close(gamma, 2.0 / (mu + l)) {
        Ok(1.0 - 2.0 / (kappa + 1.0))
    } else {
        Err(Error::Config(format!(
            "gamma = {gamma} is not a supported step size (need 1/L = {} or 2/(mu+L) = {})",
            1.0 / l,
            2.0 / (mu + l)
        )))
    }
}

fn geometric_curve(rho: f64, x0_dist: f64, floor: f64, k: usize) -> BoundCurve {
    let values = (0..=k).map(|j| rho.powi(j as i32) * x0_dist + floor).collect();
    BoundCurve { values, floor }
}

/// Direct compression on a quadratic: `‖xᵏ−x*‖ ≤ ρᵏ‖x⁰−x*‖ + ε/μ` at
/// `γ ∈ {1/L, 2/(μ+L)}`. The floor ε/μ is tight (see
/// [`example3_trajectory`]).
pub fn thm1_bound(inputs: &BoundInputs) -> Result<BoundCurve> {
    let rho = linear_rate(inputs)?;
    Ok(geometric_curve(rho, inputs.x0_dist, inputs.eps / inputs.mu, inputs.k))
}

/// Distributed deterministic direct compression (strongly convex, L-smooth
/// workers): same ε/μ floor at `γ = 2/(μ+L)` with `ρ = 1 − 2/(κ+1)`.
pub fn thm3_bound(inputs: &BoundInputs) -> Result<BoundCurve> {
    if !close(inputs.gamma, 2.0 / (inputs.mu + inputs.l)) {
        return Err(Error::Config(format!(
            "thm3 requires gamma = 2/(mu+L) = {}, got {}",
            2.0 / (inputs.mu + inputs.l),
            inputs.gamma
        )));
    }
    thm1_bound(inputs)
}

fn thm4_gamma_check(l: f64, gamma: f64) -> Result<f64> {
    if !(gamma > 0.0 && gamma < 1.0 / (3.0 * l)) {
        return Err(Error::Config(format!(
            "thm4 requires 0 < gamma < 1/(3L) = {}, got {gamma}",
            1.0 / (3.0 * l)
        )));
    }
    Ok(1.0 - 3.0 * l * gamma)
}

/// Nonconvex half of thm4: bound on `min_{l≤k} ‖∇f(xˡ)‖²` at `γ < 1/(3L)`.
pub fn thm4_nonconvex(inputs: &BoundInputs) -> Result<BoundCurve> {
    let BoundInputs { l, gamma, eps, sigma_sq, f0_gap, k, .. } = *inputs;
    let denom = thm4_gamma_check(l, gamma)?;
    let floor = 3.0 * l * gamma * sigma_sq / denom + (1.0 + 3.0 * l * gamma) / denom * eps * eps;
    let values =
        (0..=k).map(|j| (2.0 / gamma) / denom * f0_gap / (j + 1) as f64 + floor).collect();
    Ok(BoundCurve { values, floor })
}

/// Strongly convex half of thm4: bound on `f(x̄ᵏ) − f*`.
pub fn thm4_strongly_convex(inputs: &BoundInputs) -> Result<BoundCurve> {
    let BoundInputs { mu, l, gamma, eps, sigma_sq, x0_dist, k, .. } = *inputs;
    let denom = thm4_gamma_check(l, gamma)?;
    if mu <= 0.0 {
        return Err(Error::Config("the strongly-convex part of thm4 needs mu > 0".into()));
    }
    let floor = 3.0 * gamma * sigma_sq / denom + 0.5 * (1.0 / mu + 3.0 * gamma) / denom * eps * eps;
    let values = (0..=k)
        .map(|j| (1.0 / (2.0 * gamma)) / denom * x0_dist * x0_dist / (j + 1) as f64 + floor)
        .collect();
    Ok(BoundCurve { values, floor })
}

/// Distributed stochastic direct compression at `γ < 1/(3L)`: O(1/k) decay
/// to a floor that cannot drop below ε² no matter how small γ gets —
/// compare thm7.
pub fn thm4_bounds(inputs: &BoundInputs) -> Result<ConvexPair> {
    Ok(ConvexPair {
        nonconvex: thm4_nonconvex(inputs)?,
        strongly_convex: thm4_strongly_convex(inputs)?,
    })
}

/// Hessian-weighted error compensation on a quadratic:
/// `‖xᵏ−x*‖ ≤ ρᵏ‖x⁰−x*‖ + γε`. Against thm1 the floor improves by the
/// factor `1/(γμ)` — exactly κ at `γ = 1/L`.
pub fn thm5_bound(inputs: &BoundInputs) -> Result<BoundCurve> {
    let rho = linear_rate(inputs)?;
    Ok(geometric_curve(rho, inputs.x0_dist, inputs.gamma * inputs.eps, inputs.k))
}

/// Distributed deterministic EC with Hessian weighting at `γ = 2/(μ+L)`:
/// `ρᵏ‖x⁰−x*‖ + γεC` with `C = 1 + γL(κ+1)`.
pub fn thm6_bound(inputs: &BoundInputs) -> Result<BoundCurve> {
    let BoundInputs { mu, l, gamma, kappa, eps, x0_dist, k, .. } = *inputs;
    if mu <= 0.0 {
        return Err(Error::Config("thm6 needs mu > 0".into()));
    }
    if !close(gamma, 2.0 / (mu + l)) {
        return Err(Error::Config(format!(
            "thm6 requires gamma = 2/(mu+L) = {}, got {gamma}",
            2.0 / (mu + l)
        )));
    }
    let rho = 1.0 - 2.0 / (kappa + 1.0);
    let c = 1.0 + gamma * l * (kappa + 1.0);
    Ok(geometric_curve(rho, x0_dist, gamma * eps * c, k))
}

/// Distributed stochastic EC with (stochastic) Hessian weighting. Unlike
/// thm4, the compression floor scales as γ²ε², so a fixed-resolution
/// compressor can reach arbitrary accuracy by shrinking γ:
///
/// - nonconvex, `γ < 1/(3L)`: floor `α₂γ²ε²/(1−3Lγ)` with
///   `α₂ = L² + (2+6Lγ)(σ_H²+L²)`;
/// - strongly convex, `γ < (1−β)/(3L)`: floor `½α₁γ²ε²/(1−β−3Lγ)` with
///   `α₁ = μ + L/β + (4/μ+6γ)(σ_H²+L²)`.
pub fn thm7_bounds(inputs: &BoundInputs) -> Result<ConvexPair> {
    Ok(ConvexPair {
        nonconvex: thm7_nonconvex(inputs)?,
        strongly_convex: thm7_strongly_convex(inputs)?,
    })
}

/// Nonconvex half of thm7 (does not consume `beta`): bound on
/// `min_{l≤k} ‖∇f(xˡ)‖²` at `γ < 1/(3L)`.
pub fn thm7_nonconvex(inputs: &BoundInputs) -> Result<BoundCurve> {
    let BoundInputs { l, gamma, eps, sigma_sq, sigma_h_sq, f0_gap, k, .. } = *inputs;
    if !(gamma > 0.0 && gamma < 1.0 / (3.0 * l)) {
        return Err(Error::Config(format!(
            "thm7a requires 0 < gamma < 1/(3L) = {}, got {gamma}",
            1.0 / (3.0 * l)
        )));
    }
    let denom = 1.0 - 3.0 * l * gamma;
    let alpha2 = l * l + (2.0 + 6.0 * l * gamma) * (sigma_h_sq + l * l);
    let floor = 3.0 * l * gamma * sigma_sq / denom + alpha2 * gamma * gamma * eps * eps / denom;
    let values =
        (0..=k).map(|j| (2.0 / gamma) / denom * f0_gap / (j + 1) as f64 + floor).collect();
    Ok(BoundCurve { values, floor })
}

/// Strongly convex half of thm7: bound on `f(x̄ᵏ) − f*` at
/// `γ < (1−β)/(3L)`, `β ∈ (0,1)`.
pub fn thm7_strongly_convex(inputs: &BoundInputs) -> Result<BoundCurve> {
    let BoundInputs { mu, l, gamma, eps, sigma_sq, sigma_h_sq, beta, x0_dist, k, .. } = *inputs;
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::Config(format!("thm7b needs beta in (0,1), got {beta}")));
    }
    if mu <= 0.0 {
        return Err(Error::Config("thm7b needs mu > 0".into()));
    }
    if !(gamma > 0.0 && gamma < (1.0 - beta) / (3.0 * l)) {
        return Err(Error::Config(format!(
            "thm7b requires 0 < gamma < (1-beta)/(3L) = {}, got {gamma}",
            (1.0 - beta) / (3.0 * l)
        )));
    }
    let denom = 1.0 - beta - 3.0 * l * gamma;
    let alpha1 = mu + l / beta + (4.0 / mu + 6.0 * gamma) * (sigma_h_sq + l * l);
    let floor =
        1.5 * gamma * sigma_sq / denom + 0.5 * alpha1 * gamma * gamma * eps * eps / denom;
    let values = (0..=k)
        .map(|j| (1.0 / (2.0 * gamma)) / denom * x0_dist * x0_dist / (j + 1) as f64 + floor)
        .collect();
    Ok(BoundCurve { values, floor })
}

/// Exact worst-case trajectory of directly compressed gradient descent on
/// the scalar objective `f(x) = (μ/2)x²` with the ε-ball compressor:
/// `|x^{k+1}| = (1−μγ)|x^k| + γε`, which collapses to
/// `(1−μγ)^k(|x⁰|−ε/μ) + ε/μ`. The distance can never drop below ε/μ, and
/// the objective gap never below ε²/(2μ) — the floors of thm1 are attained.
#[derive(Debug, Clone)]
pub struct Example3 {
    /// `|x^j − x*|` for `j = 0..=k`.
    pub values: Vec<f64>,
    pub dist_floor: f64,
    pub gap_floor: f64,
}

pub fn example3_trajectory(mu: f64, gamma: f64, eps: f64, x0_abs: f64, k: usize) -> Result<Example3> {
    if !(mu > 0.0 && eps > 0.0) {
        return Err(Error::Config(format!("need mu > 0 and eps > 0, got mu={mu}, eps={eps}")));
    }
    if !(gamma > 0.0 && gamma <= 1.0 / mu) {
        return Err(Error::Config(format!(
            "need gamma in (0, 1/mu] = (0, {}], got {gamma}",
            1.0 / mu
        )));
    }
    if x0_abs <= eps {
        return Err(Error::Config(format!(
            "the worst-case trace starts outside the dead zone: need |x0| > eps, got {x0_abs} <= {eps}"
        )));
    }
    let mut values = Vec::with_capacity(k + 1);
    let mut v = x0_abs;
    values.push(v);
    for _ in 0..k {
        v = (1.0 - mu * gamma) * v + gamma * eps;
        values.push(v);
    }
    Ok(Example3 { values, dist_floor: eps / mu, gap_floor: eps * eps / (2.0 * mu) })
}

/// Step-size rules resolvable from problem constants. Config strings:
/// `1/L`, `2/(mu+L)`, `<num>/L` (e.g. `0.25/L`), `ls-experiment` (= 0.1/L,
/// the least-squares experiment setting), `robust-experiment`
/// (= 1/(60√3·l_experiment), the robust-regression experiment setting), or a
/// bare positive number.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepRule {
    OneOverL,
    TwoOverMuPlusL,
    /// `num/L`
    ScaledL(f64),
    RobustExperiment,
    Fixed(f64),
}

impl StepRule {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "1/L" => return Ok(StepRule::OneOverL),
            "2/(mu+L)" => return Ok(StepRule::TwoOverMuPlusL),
            "ls-experiment" => return Ok(StepRule::ScaledL(0.1)),
            "robust-experiment" => return Ok(StepRule::RobustExperiment),
            _ => {}
        }
        if let Some(num) = s.strip_suffix("/L") {
            let a: f64 = num
                .parse()
                .map_err(|_| Error::Config(format!("invalid step-size numerator `{num}`")))?;
            if !(a.is_finite() && a > 0.0) {
                return Err(Error::Config(format!("step-size numerator must be positive, got {a}")));
            }
            return Ok(StepRule::ScaledL(a));
        }
        let g: f64 = s
            .parse()
            .map_err(|_| Error::Config(format!("unknown step-size rule `{s}`")))?;
        if !(g.is_finite() && g > 0.0) {
            return Err(Error::Config(format!("step size must be positive, got {g}")));
        }
        Ok(StepRule::Fixed(g))
    }

    pub fn label(&self) -> String {
        match self {
            StepRule::OneOverL => "1/L".into(),
            StepRule::TwoOverMuPlusL => "2/(mu+L)".into(),
            StepRule::ScaledL(a) => format!("{a}/L"),
            StepRule::RobustExperiment => "robust-experiment".into(),
            StepRule::Fixed(g) => format!("{g}"),
        }
    }

    /// Resolve to a concrete γ for the given constants.
    pub fn resolve(&self, c: &ProblemConstants) -> Result<f64> {
        let gamma = match self {
            StepRule::OneOverL => 1.0 / c.l,
            StepRule::TwoOverMuPlusL => 2.0 / (c.mu + c.l),
            StepRule::ScaledL(a) => a / c.l,
            StepRule::RobustExperiment => {
                let le = c.l_experiment.ok_or_else(|| {
                    Error::Config(
                        "the robust-experiment step rule needs the robust loss's experiment constant"
                            .into(),
                    )
                })?;
                1.0 / (60.0 * 3.0f64.sqrt() * le)
            }
            StepRule::Fixed(g) => *g,
        };
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(Error::Config(format!("resolved step size {gamma} is not positive")));
        }
        Ok(gamma)
    }
}

/// Optional admissibility gate applied to a resolved γ, matching the
/// stochastic bounds' hypotheses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GammaCheck {
    None,
    /// `γ < 1/(3L)`
    Thm4,
    /// `γ < (1−β)/(3L)` with `β ∈ (0,1)`
    Thm7b { beta: f64 },
}

impl GammaCheck {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "none" => return Ok(GammaCheck::None),
            "thm4" => return Ok(GammaCheck::Thm4),
            _ => {}
        }
        if let Some(arg) = s.strip_prefix("thm7b:") {
            let beta: f64 = arg
                .parse()
                .map_err(|_| Error::Config(format!("invalid beta `{arg}`")))?;
            return Ok(GammaCheck::Thm7b { beta });
        }
        Err(Error::Config(format!(
            "unknown step-size check `{s}` (expected none, thm4, thm7b:BETA)"
        )))
    }

    pub fn validate(&self, gamma: f64, c: &ProblemConstants) -> Result<()> {
        match self {
            GammaCheck::None => Ok(()),
            GammaCheck::Thm4 => {
                let cap = 1.0 / (3.0 * c.l);
                if gamma < cap {
                    Ok(())
                } else {
                    Err(Error::Config(format!(
                        "step-size rule violated: thm4 needs gamma < 1/(3L) = {cap}, got {gamma}"
                    )))
                }
            }
            GammaCheck::Thm7b { beta } => {
                if !(*beta > 0.0 && *beta < 1.0) {
                    return Err(Error::Config(format!("beta must lie in (0,1), got {beta}")));
                }
                let cap = (1.0 - beta) / (3.0 * c.l);
                if gamma < cap {
                    Ok(())
                } else {
                    Err(Error::Config(format!(
                        "step-size rule violated: thm7b needs gamma < (1-beta)/(3L) = {cap}, got {gamma}"
                    )))
                }
            }
        }
    }
}

/// Resolve a step rule and assert an admissibility check in one go.
pub fn validate_step(rule: &StepRule, check: &GammaCheck, c: &ProblemConstants) -> Result<f64> {
    let gamma = rule.resolve(c)?;
    check.validate(gamma, c)?;
    Ok(gamma)
}

/// Bound identifiers as they appear in configs and on the command line.
/// `thm4` covers both of its regimes at once; thm7 is split because only its
/// strongly-convex half consumes `beta`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TheoremId {
    Thm1,
    Thm3,
    Thm4,
    Thm5,
    Thm6,
    Thm7a,
    Thm7b,
}

impl TheoremId {
    pub const ALL: [TheoremId; 7] = [
        TheoremId::Thm1,
        TheoremId::Thm3,
        TheoremId::Thm4,
        TheoremId::Thm5,
        TheoremId::Thm6,
        TheoremId::Thm7a,
        TheoremId::Thm7b,
    ];

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "thm1" => Ok(TheoremId::Thm1),
            "thm3" => Ok(TheoremId::Thm3),
            "thm4" => Ok(TheoremId::Thm4),
            "thm5" => Ok(TheoremId::Thm5),
            "thm6" => Ok(TheoremId::Thm6),
            "thm7a" => Ok(TheoremId::Thm7a),
            "thm7b" => Ok(TheoremId::Thm7b),
            other => Err(Error::Config(format!(
                "unknown bound `{other}` (expected thm1, thm3, thm4, thm5, thm6, thm7a, thm7b)"
            ))),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            TheoremId::Thm1 => "thm1",
            TheoremId::Thm3 => "thm3",
            TheoremId::Thm4 => "thm4",
            TheoremId::Thm5 => "thm5",
            TheoremId::Thm6 => "thm6",
            TheoremId::Thm7a => "thm7a",
            TheoremId::Thm7b => "thm7b",
        }
    }
}

/// Evaluate one bound as named curves ready for CSV emission.
pub fn theorem_curves(
    id: TheoremId,
    inputs: &BoundInputs,
) -> Result<Vec<(&'static str, BoundCurve)>> {
    match id {
        TheoremId::Thm1 => Ok(vec![("bound", thm1_bound(inputs)?)]),
        TheoremId::Thm3 => Ok(vec![("bound", thm3_bound(inputs)?)]),
        TheoremId::Thm4 => {
            let pair = thm4_bounds(inputs)?;
            Ok(vec![("nonconvex", pair.nonconvex), ("strongly_convex", pair.strongly_convex)])
        }
        TheoremId::Thm5 => Ok(vec![("bound", thm5_bound(inputs)?)]),
        TheoremId::Thm6 => Ok(vec![("bound", thm6_bound(inputs)?)]),
        TheoremId::Thm7a => Ok(vec![("bound", thm7_nonconvex(inputs)?)]),
        TheoremId::Thm7b => Ok(vec![("bound", thm7_strongly_convex(inputs)?)]),
    }
}
