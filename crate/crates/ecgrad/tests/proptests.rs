//! Property tests for the contracts that hold on *all* inputs, not just the
//! frozen examples in the unit tests: compressor error bounds, sharding
//! partitions, serialization round-trips, oracle consistency, and run
//! determinism.

use nalgebra::DVector;
use proptest::prelude::*;

use ecgrad::compressors::{compress, eps_bound, CompressorSpec};
use ecgrad::config::{ExperimentConfig, RawConfig};
use ecgrad::data_io::{parse_libsvm, serialize_libsvm, shard, LibsvmRecord, ShardPolicy};
use ecgrad::problems::Scope;
use ecgrad::simulation::run;
use ecgrad::schemes::SchemeKind;

const CAP: f64 = 100.0;

fn vec_strategy(max_dim: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-CAP..CAP, 1..=max_dim)
}

fn compressor_strategy() -> impl Strategy<Value = CompressorSpec> {
    prop_oneof![
        Just(CompressorSpec::Exact),
        (0.01f64..5.0).prop_map(|delta| CompressorSpec::Rounding { delta }),
        Just(CompressorSpec::ScaledSign),
        (1usize..=10).prop_map(|k| CompressorSpec::TopK { k }),
        (0.01f64..5.0).prop_map(|eps| CompressorSpec::EpsBall { eps }),
    ]
}

proptest! {
    /// The defining ε-compressor property: ‖Q(v)−v‖ never exceeds the
    /// advertised worst case (entrywise cap supplied for the compressors
    /// whose bound needs one).
    #[test]
    fn compression_error_is_bounded(spec in compressor_strategy(), v in vec_strategy(20)) {
        let dim = v.len();
        let spec = match spec {
            // keep k within this vector's dimension
            CompressorSpec::TopK { k } => CompressorSpec::TopK { k: k.min(dim) },
            other => other,
        };
        let v = DVector::from_vec(v);
        let eps = eps_bound(&spec, dim, Some(CAP)).expect("cap given, bound exists");
        let r = compress(&spec, &v).unwrap();
        prop_assert!(r.error_norm <= eps + 1e-9 * (1.0 + eps));
        prop_assert!(((&v - &r.output).norm() - r.error_norm).abs() <= 1e-12 * (1.0 + eps));
    }

    /// Compression is a pure function: same input, same bytes.
    #[test]
    fn compression_is_deterministic(spec in compressor_strategy(), v in vec_strategy(20)) {
        let spec = match spec {
            CompressorSpec::TopK { k } => CompressorSpec::TopK { k: k.min(v.len()) },
            other => other,
        };
        let v = DVector::from_vec(v);
        let a = compress(&spec, &v).unwrap();
        let b = compress(&spec, &v).unwrap();
        let bits = |x: &DVector<f64>| x.iter().map(|f| f.to_bits()).collect::<Vec<_>>();
        prop_assert_eq!(bits(&a.output), bits(&b.output));
    }

    /// Rounding leaves every coordinate on the grid Δ·Z, within Δ/2 of its
    /// input.
    #[test]
    fn rounding_lands_on_the_grid(delta in 0.01f64..5.0, v in vec_strategy(20)) {
        let v = DVector::from_vec(v);
        let q = compress(&CompressorSpec::Rounding { delta }, &v).unwrap().output;
        for (x, y) in v.iter().zip(q.iter()) {
            let steps = y / delta;
            prop_assert!((steps - steps.round()).abs() <= 1e-9 * (1.0 + steps.abs()));
            prop_assert!((x - y).abs() <= delta / 2.0 + 1e-12 * delta);
        }
    }

    /// Top-K keeps exactly the K largest magnitudes (ties to the lower
    /// index) and copies them unchanged.
    #[test]
    fn topk_keeps_the_largest(k in 1usize..=10, v in vec_strategy(20)) {
        let k = k.min(v.len());
        let v = DVector::from_vec(v);
        let q = compress(&CompressorSpec::TopK { k }, &v).unwrap().output;
        let kept: Vec<usize> = (0..v.len()).filter(|&i| q[i] != 0.0).collect();
        prop_assert!(kept.len() <= k);
        for &i in &kept {
            prop_assert_eq!(q[i].to_bits(), v[i].to_bits());
        }
        // no dropped coordinate strictly dominates a kept one; equal
        // magnitudes resolve to the lower index
        let dropped: Vec<usize> = (0..v.len()).filter(|i| !kept.contains(i)).collect();
        if kept.len() == k {
            for &i in &kept {
                for &j in &dropped {
                    prop_assert!(
                        v[j].abs() < v[i].abs() || (v[j].abs() == v[i].abs() && i < j),
                        "dropped |v[{}]| = {} dominates kept |v[{}]| = {}",
                        j, v[j].abs(), i, v[i].abs()
                    );
                }
            }
        }
    }

    /// The ε-ball compressor shrinks radially by exactly ε outside the ball
    /// and clamps to the origin inside it (d > 1).
    #[test]
    fn epsball_shrinks_or_clamps(eps in 0.01f64..5.0, v in vec_strategy(20)) {
        prop_assume!(v.len() > 1);
        let v = DVector::from_vec(v);
        let r = compress(&CompressorSpec::EpsBall { eps }, &v).unwrap();
        let n = v.norm();
        if n > eps {
            prop_assert!((r.output.norm() - (n - eps)).abs() <= 1e-9 * (1.0 + n));
            prop_assert!((r.error_norm - eps).abs() <= 1e-9 * (1.0 + eps));
        } else if n > 0.0 {
            prop_assert!(r.output.iter().all(|x| *x == 0.0));
            prop_assert!((r.error_norm - n).abs() <= 1e-12 * (1.0 + n));
        }
    }

    /// Sharding is a partition: sizes differ by at most one and
    /// concatenating the shards recovers every input item exactly once.
    #[test]
    fn shard_is_a_partition(items in prop::collection::vec(any::<u32>(), 1..60), n in 1usize..=8,
                            round_robin in any::<bool>()) {
        prop_assume!(n <= items.len());
        let policy = if round_robin { ShardPolicy::RoundRobin } else { ShardPolicy::Contiguous };
        let shards = shard(&items, n, policy).unwrap();
        prop_assert_eq!(shards.len(), n);
        let sizes: Vec<usize> = shards.iter().map(Vec::len).collect();
        prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        let mut recovered: Vec<u32> = shards.concat();
        let mut expected = items.clone();
        recovered.sort_unstable();
        expected.sort_unstable();
        prop_assert_eq!(recovered, expected);
    }

    /// parse ∘ serialize is the identity on records.
    #[test]
    fn libsvm_round_trip(rows in prop::collection::vec(
        (-1000.0f64..1000.0, prop::collection::vec(prop::option::of(-1000.0f64..1000.0), 0..8)),
        0..12,
    )) {
        let records: Vec<LibsvmRecord> = rows
            .into_iter()
            .map(|(label, slots)| LibsvmRecord {
                label,
                features: slots
                    .into_iter()
                    .enumerate()
                    .filter_map(|(i, v)| v.map(|x| (i + 1, x)))
                    .collect(),
            })
            .collect();
        let text = serialize_libsvm(&records);
        let (parsed, _) = parse_libsvm(&text, None).unwrap();
        prop_assert_eq!(parsed, records);
    }
}

fn small_erm() -> ecgrad::problems::Problem {
    let cfg = RawConfig::parse(
        "problem = synth-ls\nn_samples = 24\nd = 3\nnoise = 0.3\nproblem_seed = 77\n\
         loss = least-squares\nlambda = 0.1\nworkers = 3\n",
    )
    .unwrap();
    ExperimentConfig::from_raw(&cfg).unwrap().build_problem().unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// The full objective is the mean of the worker objectives, gradients
    /// included.
    #[test]
    fn full_scope_is_the_worker_mean(x in prop::collection::vec(-5.0f64..5.0, 3)) {
        let problem = small_erm();
        let x = DVector::from_vec(x);
        let mut mean_val = 0.0;
        let mut mean_grad = DVector::zeros(3);
        for i in 0..3 {
            mean_val += problem.value(Scope::Worker(i), &x).unwrap() / 3.0;
            mean_grad += problem.grad(Scope::Worker(i), &x).unwrap() / 3.0;
        }
        let val = problem.value(Scope::Full, &x).unwrap();
        let grad = problem.grad(Scope::Full, &x).unwrap();
        prop_assert!((val - mean_val).abs() <= 1e-10 * (1.0 + val.abs()));
        prop_assert!((&grad - mean_grad).norm() <= 1e-10 * (1.0 + grad.norm()));
    }

    /// Hessian-vector products agree with the materialized Hessian.
    #[test]
    fn hessian_vec_matches_matrix(x in prop::collection::vec(-5.0f64..5.0, 3),
                                  v in prop::collection::vec(-5.0f64..5.0, 3)) {
        let problem = small_erm();
        let x = DVector::from_vec(x);
        let v = DVector::from_vec(v);
        let hv = problem.hessian_vec(Scope::Full, &x, &v).unwrap();
        let h = problem.hessian(Scope::Full, &x).unwrap();
        prop_assert!((&h * &v - &hv).norm() <= 1e-10 * (1.0 + hv.norm()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    /// Whole runs are deterministic: re-running any configuration produces
    /// byte-identical CSV, stochastic oracles included.
    #[test]
    fn runs_are_reproducible(seed in 1u64..1000, batch in 1usize..=8,
                             ec in any::<bool>(), delta in 0.05f64..2.0) {
        let cfg = RawConfig::parse(&format!(
            "problem = synth-ls\nn_samples = 24\nd = 3\nnoise = 0.3\nproblem_seed = 77\n\
             lambda = 0.1\nworkers = 3\ncompressor = rounding:{delta}\n\
             gamma_rule = 0.2/L\niters = 25\nbatch = {batch}\nseed = {seed}\n"
        )).unwrap();
        let config = ExperimentConfig::from_raw(&cfg).unwrap();
        let problem = config.build_problem().unwrap();
        let kind = if ec {
            SchemeKind::ErrorCompensated(ecgrad::schemes::Weighting::Hessian)
        } else {
            SchemeKind::Direct
        };
        let rc = config.run_config(&problem, kind).unwrap();
        let a = run(&problem, &rc).unwrap();
        let b = run(&problem, &rc).unwrap();
        prop_assert_eq!(a.to_csv(), b.to_csv());
        // the payload accounting never decreases along the run
        prop_assert!(a.rows.windows(2).all(|w| w[0].bits <= w[1].bits));
    }
}
