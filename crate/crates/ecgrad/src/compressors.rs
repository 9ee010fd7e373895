//! ε-compressors: deterministic maps `Q` whose worst-case error `‖Q(v) − v‖`
//! is bounded, either a priori (rounding, eps-ball, exact) or given a cap on
//! `‖v‖∞` (top-K, scaled sign). Compressors are pure functions; every call
//! reports its realized error so invariants can be checked downstream.

use nalgebra::DVector;

use crate::{Error, Result};

/// Which compressor to apply, with its parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum CompressorSpec {
    /// Identity map — a 0-compressor. Useful as the exact baseline.
    Exact,
    /// Round each coordinate to the nearest point of the grid `delta·Z`,
    /// halves away from zero: `sign(vᵢ)·Δ·⌊|vᵢ|/Δ + 1/2⌋`.
    Rounding { delta: f64 },
    /// Transmit signs only, rescaled by `‖v‖₁/d` so magnitude information
    /// survives; `sign(0) = +1`.
    ScaledSign,
    /// Keep the `k` largest-magnitude coordinates (ties to the lower index),
    /// zero the rest.
    TopK { k: usize },
    /// Shrink radially by `eps`: the worst map still admissible at that error
    /// level. In 1-D this is exactly `Q(z) = z − ε·z/|z|` for `z ≠ 0` and
    /// `Q(0) = ε` (sign flips allowed); in higher dimensions the shrink is
    /// clamped at the origin and `Q(0) = ε·u₁`.
    EpsBall { eps: f64 },
}

impl CompressorSpec {
    /// Parse a config string: `exact`, `rounding:0.5`, `sign`, `topk:8`,
    /// `epsball:0.25`.
    pub fn parse(s: &str) -> Result<Self> {
        let mut parts = s.splitn(2, ':');
        let head = parts.next().unwrap_or("");
        let arg = parts.next();
        let need = |what: &str| -> Result<f64> {
            let a = arg.ok_or_else(|| {
                Error::Config(format!("compressor `{head}` needs an argument, e.g. `{head}:{what}`"))
            })?;
            a.parse::<f64>()
                .map_err(|_| Error::Config(format!("invalid {head} argument `{a}`")))
        };
        let spec = match head {
            "exact" => CompressorSpec::Exact,
            "sign" => CompressorSpec::ScaledSign,
            "rounding" => CompressorSpec::Rounding { delta: need("0.5")? },
            "epsball" => CompressorSpec::EpsBall { eps: need("0.25")? },
            "topk" => {
                let a = arg.ok_or_else(|| {
                    Error::Config("compressor `topk` needs an argument, e.g. `topk:8`".into())
                })?;
                let k = a
                    .parse::<usize>()
                    .map_err(|_| Error::Config(format!("invalid topk argument `{a}`")))?;
                CompressorSpec::TopK { k }
            }
            other => {
                return Err(Error::Config(format!(
                    "unknown compressor `{other}` (expected exact, rounding:D, sign, topk:K, epsball:E)"
                )))
            }
        };
        spec.validate_params()?;
        Ok(spec)
    }

    /// Canonical config string; `parse(label())` round-trips.
    pub fn label(&self) -> String {
        match self {
            CompressorSpec::Exact => "exact".into(),
            CompressorSpec::Rounding { delta } => format!("rounding:{delta}"),
            CompressorSpec::ScaledSign => "sign".into(),
            CompressorSpec::TopK { k } => format!("topk:{k}"),
            CompressorSpec::EpsBall { eps } => format!("epsball:{eps}"),
        }
    }

    /// Parameter sanity independent of the input dimension.
    pub fn validate_params(&self) -> Result<()> {
        match self {
            CompressorSpec::Rounding { delta } if !(delta.is_finite() && *delta > 0.0) => Err(
                Error::Config(format!("rounding delta must be positive and finite, got {delta}")),
            ),
            CompressorSpec::EpsBall { eps } if !(eps.is_finite() && *eps > 0.0) => Err(
                Error::Config(format!("epsball eps must be positive and finite, got {eps}")),
            ),
            CompressorSpec::TopK { k } if *k == 0 => {
                Err(Error::Config("topk k must be at least 1".into()))
            }
            _ => Ok(()),
        }
    }

    /// Parameter sanity for a concrete input dimension.
    pub fn validate(&self, dim: usize) -> Result<()> {
        self.validate_params()?;
        if let CompressorSpec::TopK { k } = self {
            if *k > dim {
                return Err(Error::Config(format!(
                    "topk k = {k} exceeds the input dimension {dim}"
                )));
            }
        }
        Ok(())
    }
}

/// Output of one compressor application.
#[derive(Debug, Clone)]
pub struct CompressionResult {
    pub output: DVector<f64>,
    /// Realized Euclidean error `‖output − input‖`.
    pub error_norm: f64,
}

/// Apply the compressor. Rejects non-finite inputs and parameter/dimension
/// mismatches; never panics on valid input.
pub fn compress(spec: &CompressorSpec, v: &DVector<f64>) -> Result<CompressionResult> {
    if !v.iter().all(|x| x.is_finite()) {
        return Err(Error::InvalidInput(
            "compressor input contains a non-finite entry".into(),
        ));
    }
    spec.validate(v.len())?;
    let output = match spec {
        CompressorSpec::Exact => v.clone(),
        CompressorSpec::Rounding { delta } => v.map(|x| {
            let m = (x.abs() / delta + 0.5).floor();
            if m == 0.0 {
                0.0
            } else {
                x.signum() * delta * m
            }
        }),
        CompressorSpec::ScaledSign => {
            let scale = v.iter().map(|x| x.abs()).sum::<f64>() / v.len() as f64;
            v.map(|x| if x < 0.0 { -scale } else { scale })
        }
        CompressorSpec::TopK { k } => {
            let mut order: Vec<usize> = (0..v.len()).collect();
            order.sort_by(|&a, &b| {
                v[b].abs()
                    .partial_cmp(&v[a].abs())
                    .expect("finite entries compare")
                    .then(a.cmp(&b))
            });
            let mut out = DVector::zeros(v.len());
            for &i in &order[..*k] {
                out[i] = v[i];
            }
            out
        }
        CompressorSpec::EpsBall { eps } => {
            if v.len() == 1 {
                let z = v[0];
                if z == 0.0 {
                    DVector::from_element(1, *eps)
                } else {
                    DVector::from_element(1, z - eps * z.signum())
                }
            } else {
                let n = v.norm();
                if n == 0.0 {
                    let mut u = DVector::zeros(v.len());
                    u[0] = *eps;
                    u
                } else if n > *eps {
                    v * ((n - eps) / n)
                } else {
                    DVector::zeros(v.len())
                }
            }
        }
    };
    let error_norm = (&output - v).norm();
    Ok(CompressionResult { output, error_norm })
}

/// Worst-case error bound `ε` such that `‖Q(v) − v‖ ≤ ε` for every admissible
/// input of dimension `dim`. Returns `None` ("unbounded") for top-K and
/// scaled-sign unless a cap on `‖v‖∞` is supplied:
///
/// - `Rounding`: `√dim·Δ/2` (each coordinate moves at most Δ/2).
/// - `EpsBall`: `ε` by construction; `Exact`: 0.
/// - `TopK` with cap c: the `dim − k` dropped entries are each ≤ c, so
///   `√(dim−k)·c`.
/// - `ScaledSign` with cap c: the error `‖v‖² − ‖v‖₁²/d` is convex in the
///   magnitudes, so its max over the box sits at a vertex with m entries
///   equal to c, worth `c²·m(d−m)/d`, maximized at m = ⌊d/2⌋.
pub fn eps_bound(spec: &CompressorSpec, dim: usize, v_inf_cap: Option<f64>) -> Option<f64> {
    match spec {
        CompressorSpec::Exact => Some(0.0),
        CompressorSpec::Rounding { delta } => Some((dim as f64).sqrt() * delta / 2.0),
        CompressorSpec::EpsBall { eps } => Some(*eps),
        CompressorSpec::TopK { k } => {
            v_inf_cap.map(|c| ((dim.saturating_sub(*k)) as f64).sqrt() * c)
        }
        CompressorSpec::ScaledSign => v_inf_cap.map(|c| {
            let m = (dim / 2) as f64;
            let m_hi = dim.div_ceil(2) as f64;
            c * (m * m_hi / dim as f64).sqrt()
        }),
    }
}

/// The rounding quantizer's worst case quoted in *squared*-norm form,
/// `d·Δ²/4` — i.e. `eps_bound(...)²`. Kept as a separate accessor; bound
/// checks always use the unsquared [`eps_bound`].
pub fn rounding_worst_case_sq_norm(delta: f64, dim: usize) -> f64 {
    dim as f64 * delta * delta / 4.0
}

fn ceil_log2(n: u64) -> u64 {
    if n <= 1 {
        0
    } else {
        64 - u64::from((n - 1).leading_zeros())
    }
}

/// Invented payload-size accounting for trace reporting (no actual bitstream
/// is produced): rounding costs `1 + ⌈log₂(1+⌊‖v‖∞/Δ⌋)⌉` bits per coordinate,
/// scaled sign `d + 64`, top-K `K·(64 + ⌈log₂ d⌉)`, exact and eps-ball a full
/// `64·d`.
pub fn payload_bits(spec: &CompressorSpec, v: &DVector<f64>) -> u64 {
    let d = v.len() as u64;
    match spec {
        CompressorSpec::Exact | CompressorSpec::EpsBall { .. } => 64 * d,
        CompressorSpec::ScaledSign => d + 64,
        CompressorSpec::TopK { k } => (*k as u64) * (64 + ceil_log2(d)),
        CompressorSpec::Rounding { delta } => {
            let q = (v.amax() / delta).floor();
            let levels = if q >= u64::MAX as f64 { u64::MAX } else { q as u64 };
            d * (1 + ceil_log2(levels.saturating_add(1)))
        }
    }
}
