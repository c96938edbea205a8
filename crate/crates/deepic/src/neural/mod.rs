//! Learned codes for the interference channel: the three-branch CNN
//! encoder with power normalization, the iterative two-block decoder,
//! the interleaved variant, and the CNN/RNN/feedforward comparison
//! autoencoders.

mod arch;
pub mod checkpoint;
mod layers;
mod model;
mod stats;

use thiserror::Error;

pub use arch::{ArchConfig, NormMode, VariantKind};
pub use layers::{BranchStat, Bindings};
pub use model::{
    build_variant, perturbation_response, perturbation_response_at, AutoencoderModel,
    EncodeResult, FrozenStats, PerturbationResponse, StatsMode, User, PERTURBATION_TAU,
};
pub use stats::StatsEma;

#[derive(Debug, Error)]
pub enum NeuralError {
    #[error(transparent)]
    Graph(#[from] crate::ndgrad::GraphError),
    #[error("shape contract violated: {0}")]
    Shape(String),
    #[error("batch mode needs at least 2 examples, got {0}")]
    BatchTooSmall(usize),
    #[error("model has no frozen statistics; train or set them first")]
    NoFrozenStats,
    #[error("interleaved variant has no interleaver")]
    NoInterleaver,
    #[error("parameter {0} is not part of this model")]
    MissingParam(String),
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interleaver::Interleaver;
    use crate::ndgrad::{Graph, Tensor};

    fn random_bits(j: usize, k: usize, seed: u64) -> Tensor {
        let mut rng = crate::channel::SeededRng::new(seed, "bits");
        Tensor::new(
            vec![j, k],
            (0..j * k).map(|_| rng.next_bit() as f64).collect(),
        )
        .unwrap()
    }

    fn with_unit_frozen(mut model: AutoencoderModel) -> AutoencoderModel {
        let stat = || BranchStat {
            mean: vec![0.0],
            std: vec![1.0],
        };
        model.frozen = Some(FrozenStats {
            user1: vec![stat(), stat(), stat()],
            user2: vec![stat(), stat(), stat()],
        });
        model
    }

    #[test]
    fn same_seed_builds_identical_models() {
        let arch = ArchConfig::tiny(12);
        for kind in [
            VariantKind::Deepic,
            VariantKind::DeepicInterleaved,
            VariantKind::CnnAe,
            VariantKind::RnnAe,
            VariantKind::FfAe,
        ] {
            let a = build_variant(kind, &arch, 77).unwrap();
            let b = build_variant(kind, &arch, 77).unwrap();
            assert_eq!(a.params, b.params, "{kind:?}");
            let c = build_variant(kind, &arch, 78).unwrap();
            assert_ne!(a.params, c.params, "{kind:?}");
        }
    }

    #[test]
    fn deepic_param_count_matches_closed_form() {
        let arch = ArchConfig::tiny(12);
        let model = build_variant(VariantKind::Deepic, &arch, 1).unwrap();
        let (c, w, f, cd, wd) = (
            arch.enc_channels,
            arch.enc_kernel,
            arch.feature_size,
            arch.dec_channels,
            arch.dec_kernel,
        );
        // Per user: three encoder branches, two decoder blocks, one head.
        let enc_branch = (c * w + c) + (arch.enc_layers - 1) * (c * c * w + c) + (c + 1);
        let dec_block = (cd * (2 + f) * wd + cd)
            + (arch.dec_layers - 2) * (cd * cd * wd + cd)
            + (f * cd * wd + f);
        let head = f + 1;
        let per_user = 3 * enc_branch + 2 * dec_block + head;
        assert_eq!(model.param_count(), 2 * per_user);
    }

    #[test]
    fn every_variant_satisfies_rate_one_third() {
        for kind in [
            VariantKind::Deepic,
            VariantKind::DeepicInterleaved,
            VariantKind::CnnAe,
            VariantKind::RnnAe,
            VariantKind::FfAe,
        ] {
            let k = 10;
            let model = with_unit_frozen(build_variant(kind, &ArchConfig::tiny(k), 3).unwrap());
            let bits = random_bits(2, k, 5);
            let cw = model.encode_frozen(User::One, &bits).unwrap();
            assert_eq!(cw.len(), 2 * 3 * k, "{kind:?}");
        }
    }

    #[test]
    fn batch_normalization_hits_zero_mean_unit_variance() {
        let arch = ArchConfig::tiny(16);
        let model = build_variant(VariantKind::Deepic, &arch, 9).unwrap();
        let bits = random_bits(32, 16, 6);
        let mut g = Graph::new();
        let bind = model.bind(&mut g, false).unwrap();
        let out = model
            .encode_graph(&mut g, &bind, User::One, &bits, StatsMode::Batch)
            .unwrap();
        let data = g.value(out.codeword).data();
        let k = 16;
        for branch in 0..3 {
            let mut vals = Vec::new();
            for row in 0..32 {
                let start = row * 3 * k + branch * k;
                vals.extend_from_slice(&data[start..start + k]);
            }
            let n = vals.len() as f64;
            let mean = vals.iter().sum::<f64>() / n;
            let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            assert!(mean.abs() < 1e-6, "branch {branch} mean {mean}");
            assert!((var - 1.0).abs() < 1e-5, "branch {branch} var {var}");
        }
    }

    #[test]
    fn hand_batch_normalizes_to_plus_minus_one() {
        // Branch pre-norm values {1, 3} give mean 2, std 1 -> {-1, +1}.
        let mut g = Graph::new();
        let x = g
            .input(Tensor::new(vec![2, 1, 1], vec![1.0, 3.0]).unwrap())
            .unwrap();
        let (out, stat) = super::layers::normalize_batch(&mut g, x, false, 1e-6).unwrap();
        assert_eq!(g.value(out).data(), &[-1.0, 1.0]);
        assert_eq!(stat.mean, vec![2.0]);
        assert_eq!(stat.std, vec![1.0]);
    }

    #[test]
    fn batch_mode_rejects_singletons() {
        let model = build_variant(VariantKind::Deepic, &ArchConfig::tiny(8), 1).unwrap();
        let bits = random_bits(1, 8, 7);
        let mut g = Graph::new();
        let bind = model.bind(&mut g, false).unwrap();
        let err = model
            .encode_graph(&mut g, &bind, User::One, &bits, StatsMode::Batch)
            .unwrap_err();
        assert!(matches!(err, NeuralError::BatchTooSmall(1)));
    }

    #[test]
    fn frozen_mode_is_deterministic_and_batch_size_independent() {
        let arch = ArchConfig::tiny(10);
        let model = with_unit_frozen(build_variant(VariantKind::Deepic, &arch, 4).unwrap());
        let bits = random_bits(5, 10, 8);
        let a = model.encode_frozen(User::One, &bits).unwrap();
        let b = model.encode_frozen(User::One, &bits).unwrap();
        assert_eq!(a, b);
        // Each row encoded alone matches its slice of the batch.
        for row in 0..5 {
            let single = Tensor::new(
                vec![1, 10],
                bits.data()[row * 10..(row + 1) * 10].to_vec(),
            )
            .unwrap();
            let solo = model.encode_frozen(User::One, &single).unwrap();
            let batch_row = &a[row * 30..(row + 1) * 30];
            for (x, y) in solo.iter().zip(batch_row) {
                assert!((x - y).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn decoder_posteriors_live_strictly_inside_unit_interval() {
        for kind in [
            VariantKind::Deepic,
            VariantKind::CnnAe,
            VariantKind::RnnAe,
            VariantKind::FfAe,
        ] {
            let k = 8;
            let model = with_unit_frozen(build_variant(kind, &ArchConfig::tiny(k), 5).unwrap());
            let mut rng = crate::channel::SeededRng::new(10, "rx");
            let rx: Vec<f64> = (0..2 * 3 * k).map(|_| rng.uniform(-3.0, 3.0)).collect();
            let post = model.decode_frozen(User::One, &rx, 2, k).unwrap();
            assert_eq!(post.len(), 2 * k, "{kind:?}");
            for p in post {
                assert!(p > 0.0 && p < 1.0, "{kind:?}: posterior {p}");
            }
        }
    }

    #[test]
    fn single_iteration_decoder_runs_one_pass() {
        let mut arch = ArchConfig::tiny(8);
        arch.dec_iterations = 1;
        let model = with_unit_frozen(build_variant(VariantKind::Deepic, &arch, 2).unwrap());
        let rx = vec![0.1; 24];
        let post = model.decode_frozen(User::One, &rx, 1, 8).unwrap();
        assert_eq!(post.len(), 8);
    }

    #[test]
    fn identity_interleaver_matches_plain_paths_exactly() {
        let arch = ArchConfig::tiny(10);
        let plain = with_unit_frozen(build_variant(VariantKind::Deepic, &arch, 6).unwrap());
        let mut interleaved = plain.clone();
        interleaved.kind = VariantKind::DeepicInterleaved;
        // Same weights: parameter names coincide across the two kinds.
        interleaved.interleaver = Some(Interleaver::identity(10));

        let bits = random_bits(3, 10, 11);
        let a = plain.encode_frozen(User::One, &bits).unwrap();
        let b = interleaved.encode_frozen(User::One, &bits).unwrap();
        assert_eq!(a, b);

        let mut rng = crate::channel::SeededRng::new(12, "rx2");
        let rx: Vec<f64> = (0..3 * 30).map(|_| rng.uniform(-2.0, 2.0)).collect();
        let pa = plain.decode_frozen(User::One, &rx, 3, 10).unwrap();
        let pb = interleaved.decode_frozen(User::One, &rx, 3, 10).unwrap();
        assert_eq!(pa, pb);
    }

    #[test]
    fn interleaved_branch3_consumes_permuted_bits() {
        let arch = ArchConfig::tiny(10);
        let plain = with_unit_frozen(build_variant(VariantKind::Deepic, &arch, 6).unwrap());
        let mut shuffled = plain.clone();
        shuffled.kind = VariantKind::DeepicInterleaved;
        shuffled.interleaver = Some(Interleaver::random(10, 99));

        let bits = random_bits(2, 10, 13);
        let a = plain.encode_frozen(User::One, &bits).unwrap();
        let b = shuffled.encode_frozen(User::One, &bits).unwrap();
        // Branches 1 and 2 agree; branch 3 differs for a non-identity
        // permutation of non-constant input.
        let k = 10;
        for row in 0..2 {
            let (ra, rb) = (&a[row * 30..(row + 1) * 30], &b[row * 30..(row + 1) * 30]);
            assert_eq!(ra[..2 * k], rb[..2 * k]);
        }
        assert_ne!(a, b);

        // A constant block is invariant under any permutation.
        let ones = Tensor::new(vec![2, 10], vec![1.0; 20]).unwrap();
        let ca = plain.encode_frozen(User::One, &ones).unwrap();
        let cb = shuffled.encode_frozen(User::One, &ones).unwrap();
        assert_eq!(ca, cb);
    }

    #[test]
    fn convolutional_encoders_shift_with_their_input() {
        let k = 24;
        let arch = ArchConfig::tiny(k);
        let model = with_unit_frozen(build_variant(VariantKind::Deepic, &arch, 14).unwrap());
        let radius = arch.encoder_receptive_field() / 2;

        let mut rng = crate::channel::SeededRng::new(15, "shift");
        let pattern: Vec<f64> = (0..8).map(|_| rng.next_bit() as f64).collect();
        let place = |at: usize| {
            let mut bits = vec![0.0; k];
            bits[at..at + 8].copy_from_slice(&pattern);
            Tensor::new(vec![1, k], bits).unwrap()
        };
        let a = model.encode_frozen(User::One, &place(4)).unwrap();
        let b = model.encode_frozen(User::One, &place(5)).unwrap();
        // Interior positions of the shifted encoding match the original.
        for branch in 0..3 {
            for pos in (radius + 6)..(k - radius - 2) {
                let va = a[branch * k + pos];
                let vb = b[branch * k + pos + 1];
                assert!(
                    (va - vb).abs() < 1e-9,
                    "branch {branch} pos {pos}: {va} vs {vb}"
                );
            }
        }
    }

    #[test]
    fn checkpoint_roundtrip_is_value_exact() {
        let arch = ArchConfig::tiny(9);
        let mut model = build_variant(VariantKind::DeepicInterleaved, &arch, 21).unwrap();
        model.frozen = Some(FrozenStats {
            user1: vec![
                BranchStat {
                    mean: vec![0.125],
                    std: vec![1.5],
                };
                3
            ],
            user2: vec![
                BranchStat {
                    mean: vec![-0.25],
                    std: vec![0.75],
                };
                3
            ],
        });
        let json = checkpoint::to_json(&model);
        let back = checkpoint::from_json(&json).unwrap();
        assert_eq!(back.params, model.params);
        assert_eq!(back.frozen, model.frozen);
        assert_eq!(back.interleaver, model.interleaver);
        assert_eq!(back.kind, model.kind);
        // Byte determinism of the serialized form.
        assert_eq!(json, checkpoint::to_json(&back));
    }

    #[test]
    fn checkpoint_rejects_unknown_version_and_garbage() {
        let arch = ArchConfig::tiny(4);
        let model = build_variant(VariantKind::Deepic, &arch, 1).unwrap();
        let json = checkpoint::to_json(&model).replace("\"format_version\": 1", "\"format_version\": 99");
        assert!(checkpoint::from_json(&json).is_err());
        assert!(checkpoint::from_json("{ not json").is_err());
    }

    #[test]
    fn perturbation_single_tap_encoder_has_support_one() {
        // Hand-built linear encoder: delta kernels, no bias, unit stats.
        let k = 11;
        let mut arch = ArchConfig::tiny(k);
        arch.enc_layers = 1;
        arch.enc_kernel = 3;
        let mut model = build_variant(VariantKind::Deepic, &arch, 0).unwrap();
        for user in User::BOTH {
            let p = user.prefix();
            for branch in 1..=3 {
                for (name, value) in model.params.iter_mut() {
                    if !name.starts_with(&format!("{p}.enc.b{branch}.")) {
                        continue;
                    }
                    for v in value.data_mut() {
                        *v = 0.0;
                    }
                    if name.ends_with("conv0.w") {
                        // Centered delta on every input channel.
                        let w = value.shape()[2];
                        for co in 0..value.shape()[0] {
                            let base = co * value.shape()[1] * w;
                            value.data_mut()[base + w / 2] = 1.0;
                        }
                    }
                    if name.ends_with("conv1.w") {
                        // 1-wide projection summing the channels.
                        for v in value.data_mut() {
                            *v = 1.0;
                        }
                    }
                }
            }
        }
        let model = with_unit_frozen(model);
        let resp = perturbation_response(&model, k).unwrap();
        assert_eq!(resp.branch_support, [1, 1, 1]);
        assert_eq!(resp.branch_peak, [k / 2, k / 2, k / 2]);

        // Support is shift-invariant in the interior.
        let at = perturbation_response_at(&model, k, k / 2 + 1, PERTURBATION_TAU).unwrap();
        assert_eq!(at.branch_support, [1, 1, 1]);
    }

    #[test]
    fn perturbation_support_shift_invariant_for_random_cnn() {
        let k = 32;
        let arch = ArchConfig::tiny(k);
        let model = with_unit_frozen(build_variant(VariantKind::Deepic, &arch, 33).unwrap());
        let a = perturbation_response_at(&model, k, k / 2, PERTURBATION_TAU).unwrap();
        let b = perturbation_response_at(&model, k, k / 2 + 1, PERTURBATION_TAU).unwrap();
        assert_eq!(a.branch_support, b.branch_support);
    }

    #[test]
    fn perturbation_rejects_tiny_blocks() {
        let model = with_unit_frozen(
            build_variant(VariantKind::Deepic, &ArchConfig::tiny(8), 1).unwrap(),
        );
        assert!(perturbation_response(&model, 2).is_err());
    }

    #[test]
    fn decode_streams_validates_lengths() {
        let model = with_unit_frozen(
            build_variant(VariantKind::Deepic, &ArchConfig::tiny(8), 1).unwrap(),
        );
        let err = model
            .decode_streams(User::One, &[0.0; 8], &[0.0; 8], &[0.0; 7])
            .unwrap_err();
        assert!(matches!(err, NeuralError::Shape(_)));
    }
}
