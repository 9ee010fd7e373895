//! Dataset plumbing: LIBSVM text parsing/serialization, per-sample
//! normalization, deterministic worker sharding, and seeded synthetic
//! generators (controlled-condition-number quadratics, least-squares data).

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::problems::QuadraticProblem;
use crate::{Error, Result};

/// One `label idx:val idx:val …` line; indices are 1-based and strictly
/// increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct LibsvmRecord {
    pub label: f64,
    pub features: Vec<(usize, f64)>,
}

impl LibsvmRecord {
    fn norm(&self) -> f64 {
        self.features.iter().map(|(_, v)| v * v).sum::<f64>().sqrt()
    }
}

/// Parse LIBSVM text. `#` starts a comment anywhere on a line; blank lines
/// are skipped. Returns the records and the inferred dimension
/// `max(dim_hint, largest index seen)`. Malformed tokens, non-increasing
/// indices, and non-finite values fail with the 1-based line number.
pub fn parse_libsvm(text: &str, dim_hint: Option<usize>) -> Result<(Vec<LibsvmRecord>, usize)> {
    let mut records = Vec::new();
    let mut dim = dim_hint.unwrap_or(0);
    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut tokens = content.split_whitespace();
        let label_tok = tokens.next().expect("non-empty line has a first token");
        let label: f64 = label_tok.parse().map_err(|_| Error::Parse {
            line,
            msg: format!("invalid label `{label_tok}`"),
        })?;
        if !label.is_finite() {
            return Err(Error::Parse { line, msg: format!("non-finite label `{label_tok}`") });
        }
        let mut features = Vec::new();
        let mut prev_idx = 0usize;
        for tok in tokens {
            let Some((idx_s, val_s)) = tok.split_once(':') else {
                return Err(Error::Parse {
                    line,
                    msg: format!("expected `index:value`, got `{tok}`"),
                });
            };
            let idx: usize = idx_s.parse().map_err(|_| Error::Parse {
                line,
                msg: format!("invalid feature index `{idx_s}`"),
            })?;
            if idx == 0 {
                return Err(Error::Parse { line, msg: "feature indices are 1-based".into() });
            }
            if idx <= prev_idx {
                return Err(Error::Parse {
                    line,
                    msg: format!("non-increasing feature index {idx} after {prev_idx}"),
                });
            }
            let val: f64 = val_s.parse().map_err(|_| Error::Parse {
                line,
                msg: format!("invalid feature value `{val_s}`"),
            })?;
            if !val.is_finite() {
                return Err(Error::Parse {
                    line,
                    msg: format!("non-finite feature value `{val_s}`"),
                })?;
            }
            prev_idx = idx;
            features.push((idx, val));
        }
        dim = dim.max(prev_idx);
        records.push(LibsvmRecord { label, features });
    }
    Ok((records, dim))
}

/// Inverse of [`parse_libsvm`]: one line per record. Values are printed with
/// Rust's shortest round-trip float formatting, so parse∘serialize is exact.
pub fn serialize_libsvm(records: &[LibsvmRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&format!("{}", r.label));
        for (i, v) in &r.features {
            out.push_str(&format!(" {i}:{v}"));
        }
        out.push('\n');
    }
    out
}

pub fn read_libsvm_file(path: &std::path::Path, dim_hint: Option<usize>) -> Result<(Vec<LibsvmRecord>, usize)> {
    let text = std::fs::read_to_string(path)?;
    parse_libsvm(&text, dim_hint)
}

pub fn write_libsvm_file(path: &std::path::Path, records: &[LibsvmRecord]) -> Result<()> {
    std::fs::write(path, serialize_libsvm(records))?;
    Ok(())
}

/// Divide every feature vector by its Euclidean norm; zero vectors pass
/// through unchanged.
pub fn normalize_samples(mut records: Vec<LibsvmRecord>) -> Vec<LibsvmRecord> {
    for r in &mut records {
        let n = r.norm();
        if n > 0.0 {
            for (_, v) in &mut r.features {
                *v /= n;
            }
        }
    }
    records
}

/// Dense counterpart of [`normalize_samples`].
pub fn normalize_vectors(mut samples: Vec<DVector<f64>>) -> Vec<DVector<f64>> {
    for s in &mut samples {
        let n = s.norm();
        if n > 0.0 {
            *s /= n;
        }
    }
    samples
}

/// Map labels onto {−1, +1}: anything positive becomes +1, the rest −1
/// (binary LIBSVM files use either {−1,+1} or {0,1}).
pub fn coerce_binary_labels(mut labels: Vec<f64>) -> Vec<f64> {
    for y in &mut labels {
        *y = if *y > 0.0 { 1.0 } else { -1.0 };
    }
    labels
}

/// Densify sparse records into `(features, labels)` at dimension `dim`.
pub fn to_dense(records: &[LibsvmRecord], dim: usize) -> Result<(Vec<DVector<f64>>, Vec<f64>)> {
    let mut feats = Vec::with_capacity(records.len());
    let mut labels = Vec::with_capacity(records.len());
    for r in records {
        let mut v = DVector::zeros(dim);
        for &(i, x) in &r.features {
            if i > dim {
                return Err(Error::InvalidInput(format!(
                    "feature index {i} exceeds dimension {dim}"
                )));
            }
            v[i - 1] = x;
        }
        feats.push(v);
        labels.push(r.label);
    }
    Ok((feats, labels))
}

/// How records are split among workers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShardPolicy {
    /// Consecutive blocks; the first `len % n` shards get one extra record.
    Contiguous,
    /// Record `i` goes to shard `i % n`.
    RoundRobin,
}

impl ShardPolicy {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "contiguous" => Ok(ShardPolicy::Contiguous),
            "round-robin" => Ok(ShardPolicy::RoundRobin),
            other => Err(Error::Config(format!(
                "unknown shard policy `{other}` (expected contiguous, round-robin)"
            ))),
        }
    }
}

/// Deterministically partition `items` into `n` shards whose sizes differ by
/// at most one.
pub fn shard<T: Clone>(items: &[T], n: usize, policy: ShardPolicy) -> Result<Vec<Vec<T>>> {
    if n == 0 {
        return Err(Error::Config("need at least one shard".into()));
    }
    if n > items.len() {
        return Err(Error::Config(format!(
            "cannot split {} records into {n} non-empty shards",
            items.len()
        )));
    }
    let mut shards = vec![Vec::new(); n];
    match policy {
        ShardPolicy::RoundRobin => {
            for (i, item) in items.iter().enumerate() {
                shards[i % n].push(item.clone());
            }
        }
        ShardPolicy::Contiguous => {
            let base = items.len() / n;
            let extra = items.len() % n;
            let mut start = 0;
            for (s, shard) in shards.iter_mut().enumerate() {
                let size = base + usize::from(s < extra);
                shard.extend_from_slice(&items[start..start + size]);
                start += size;
            }
        }
    }
    Ok(shards)
}

/// Seeded synthetic inputs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SyntheticSpec {
    /// `H = QΛQᵀ` with a random orthogonal `Q` and log-spaced eigenvalues in
    /// `[1, kappa]`; `b` standard normal.
    QuadraticKappa { d: usize, kappa: f64, seed: u64 },
    /// Standard-normal features, `y = ⟨z, x_true⟩ + noise·N(0,1)` with a
    /// standard-normal `x_true`.
    LeastSquares { n_samples: usize, d: usize, noise: f64, seed: u64 },
}

fn normal_vector(rng: &mut ChaCha8Rng, d: usize) -> DVector<f64> {
    DVector::from_fn(d, |_, _| rng.sample(StandardNormal))
}

/// Generate a quadratic with eigenvalue extremes exactly (1, kappa) up to
/// factorization accuracy.
pub fn synth_quadratic(d: usize, kappa: f64, seed: u64) -> Result<QuadraticProblem> {
    if d == 0 {
        return Err(Error::Config("dimension must be at least 1".into()));
    }
    if !(kappa.is_finite() && kappa >= 1.0) {
        return Err(Error::Config(format!("condition number must be >= 1, got {kappa}")));
    }
    if d == 1 && kappa != 1.0 {
        return Err(Error::Config("a 1-D quadratic cannot have kappa > 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
    let q = g.qr().q();
    let lambda = DVector::from_fn(d, |i, _| {
        if d == 1 {
            1.0
        } else {
            kappa.powf(i as f64 / (d - 1) as f64)
        }
    });
    let mut h = &q * DMatrix::from_diagonal(&lambda) * q.transpose();
    h = (&h + h.transpose()) * 0.5;
    let b = normal_vector(&mut rng, d);
    QuadraticProblem::new(h, b)
}

/// Generate least-squares data; returns `(features, labels, x_true)`.
pub fn synth_least_squares(
    n_samples: usize,
    d: usize,
    noise: f64,
    seed: u64,
) -> Result<(Vec<DVector<f64>>, Vec<f64>, DVector<f64>)> {
    if n_samples == 0 || d == 0 {
        return Err(Error::Config("need n_samples >= 1 and d >= 1".into()));
    }
    if !(noise.is_finite() && noise >= 0.0) {
        return Err(Error::Config(format!("noise must be >= 0, got {noise}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x_true = normal_vector(&mut rng, d);
    let mut feats = Vec::with_capacity(n_samples);
    let mut labels = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        let z = normal_vector(&mut rng, d);
        let eps: f64 = rng.sample(StandardNormal);
        labels.push(z.dot(&x_true) + noise * eps);
        feats.push(z);
    }
    Ok((feats, labels, x_true))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn parses_basic_lines() {
        let (recs, dim) = parse_libsvm("+1 1:0.5 3:-2\n", None).unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].label, 1.0);
        assert_eq!(recs[0].features, vec![(1, 0.5), (3, -2.0)]);
        assert_eq!(dim, 3);
        // label-only line
        let (recs, dim) = parse_libsvm("-1\n", None).unwrap();
        assert_eq!(recs[0].label, -1.0);
        assert!(recs[0].features.is_empty());
        assert_eq!(dim, 0);
    }

    #[test]
    fn comments_blanks_and_hints() {
        let text = "# header comment\n\n+1 1:2 2:3  # trailing comment\n   \n-1 1:1e-3\n";
        let (recs, dim) = parse_libsvm(text, Some(7)).unwrap();
        assert_eq!(recs.len(), 2);
        assert_eq!(dim, 7);
        assert_eq!(recs[0].features, vec![(1, 2.0), (2, 3.0)]);
        assert_eq!(recs[1].features, vec![(1, 1e-3)]);
        // hint smaller than the data: the data wins
        let (_, dim) = parse_libsvm("+1 4:1\n", Some(2)).unwrap();
        assert_eq!(dim, 4);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let cases: &[(&str, usize, &str)] = &[
            ("1 2:1 1:1\n", 1, "non-increasing"),
            ("+1 1:0.5\n1 3:1 3:2\n", 2, "non-increasing"),
            ("1 1-0.5\n", 1, "index:value"),
            ("abc 1:1\n", 1, "label"),
            ("1 1:abc\n", 1, "value"),
            ("1 0:1\n", 1, "1-based"),
            ("# ok\n1 1:inf\n", 2, "non-finite"),
            ("1 1:nan\n", 1, "non-finite"),
        ];
        for (text, line, needle) in cases {
            match parse_libsvm(text, None) {
                Err(Error::Parse { line: l, msg }) => {
                    assert_eq!(l, *line, "wrong line for {text:?}");
                    assert!(msg.contains(needle), "message `{msg}` should mention {needle}");
                }
                other => panic!("expected parse error for {text:?}, got {other:?}"),
            }
        }
    }

    #[test]
    fn serialize_round_trips_exactly() {
        let text = "1 1:0.1 5:-2.5e17\n-0.5 2:1e-300\n3\n";
        let (recs, dim) = parse_libsvm(text, None).unwrap();
        let (again, dim2) = parse_libsvm(&serialize_libsvm(&recs), Some(dim)).unwrap();
        assert_eq!(recs, again);
        assert_eq!(dim, dim2);
    }

    #[test]
    fn normalization() {
        let (recs, _) = parse_libsvm("1 1:3 2:4\n1 1:1\n1\n", None).unwrap();
        let recs = normalize_samples(recs);
        assert_relative_eq!(recs[0].features[0].1, 0.6, max_relative = 1e-15);
        assert_relative_eq!(recs[0].features[1].1, 0.8, max_relative = 1e-15);
        assert_eq!(recs[1].features[0].1, 1.0);
        assert!(recs[2].features.is_empty()); // zero vector untouched
        let dense = normalize_vectors(vec![
            DVector::from_row_slice(&[3.0, 4.0]),
            DVector::from_row_slice(&[0.0, 0.0]),
        ]);
        assert_relative_eq!(dense[0][0], 0.6, max_relative = 1e-15);
        assert_eq!(dense[1][0], 0.0);
    }

    #[test]
    fn label_coercion() {
        assert_eq!(coerce_binary_labels(vec![0.0, 0.5, -3.0, 1.0]), vec![-1.0, 1.0, -1.0, 1.0]);
    }

    #[test]
    fn sharding_policies() {
        let items: Vec<i32> = (0..6).collect();
        let s = shard(&items, 3, ShardPolicy::Contiguous).unwrap();
        assert_eq!(s, vec![vec![0, 1], vec![2, 3], vec![4, 5]]);
        let s = shard(&items, 3, ShardPolicy::RoundRobin).unwrap();
        assert_eq!(s, vec![vec![0, 3], vec![1, 4], vec![2, 5]]);
        // uneven split: sizes differ by at most one, first shards get extras
        let items: Vec<i32> = (0..7).collect();
        let s = shard(&items, 3, ShardPolicy::Contiguous).unwrap();
        assert_eq!(s.iter().map(Vec::len).collect::<Vec<_>>(), vec![3, 2, 2]);
        let s = shard(&items, 3, ShardPolicy::RoundRobin).unwrap();
        assert_eq!(s.iter().map(Vec::len).collect::<Vec<_>>(), vec![3, 2, 2]);
        // partition property: union in order-preserving fashion
        let mut flat: Vec<i32> = s.into_iter().flatten().collect();
        flat.sort();
        assert_eq!(flat, items);
        // identity and failure cases
        assert_eq!(shard(&items, 1, ShardPolicy::Contiguous).unwrap(), vec![items.clone()]);
        assert!(shard(&items, 8, ShardPolicy::Contiguous).is_err());
        assert!(shard(&items, 0, ShardPolicy::RoundRobin).is_err());
    }

    #[test]
    fn synthetic_quadratic_eigen_extremes() {
        let q = synth_quadratic(12, 100.0, 7).unwrap();
        assert_relative_eq!(q.mu, 1.0, max_relative = 1e-8);
        assert_relative_eq!(q.l, 100.0, max_relative = 1e-8);
        // κ = 1 collapses to the identity up to orthogonal similarity
        let q = synth_quadratic(2, 1.0, 3).unwrap();
        assert_relative_eq!(q.mu, 1.0, max_relative = 1e-10);
        assert_relative_eq!(q.l, 1.0, max_relative = 1e-10);
        // determinism
        let a = synth_quadratic(5, 10.0, 11).unwrap();
        let b = synth_quadratic(5, 10.0, 11).unwrap();
        assert_eq!(a.h, b.h);
        assert_eq!(a.b, b.b);
        let c = synth_quadratic(5, 10.0, 12).unwrap();
        assert_ne!(a.h, c.h);
        // bad inputs
        assert!(synth_quadratic(1, 2.0, 0).is_err());
        assert!(synth_quadratic(3, 0.5, 0).is_err());
    }

    #[test]
    fn synthetic_least_squares_shapes_and_noise() {
        let (z, y, x_true) = synth_least_squares(20, 4, 0.0, 5).unwrap();
        assert_eq!((z.len(), y.len(), x_true.len()), (20, 20, 4));
        for (zi, yi) in z.iter().zip(&y) {
            assert_relative_eq!(zi.dot(&x_true), *yi, max_relative = 1e-12);
        }
        let (z2, ..) = synth_least_squares(20, 4, 0.0, 5).unwrap();
        assert_eq!(z, z2);
        let (_, y_noisy, _) = synth_least_squares(20, 4, 0.5, 5).unwrap();
        assert_ne!(y, y_noisy);
    }

    #[test]
    fn dense_conversion_checks_dimension() {
        let (recs, dim) = parse_libsvm("1 2:5\n-1 1:1\n", None).unwrap();
        let (feats, labels) = to_dense(&recs, dim).unwrap();
        assert_eq!(feats[0].as_slice(), &[0.0, 5.0]);
        assert_eq!(labels, vec![1.0, -1.0]);
        assert!(to_dense(&recs, 1).is_err());
    }
}
