//! Longer-running Monte-Carlo consistency checks.

use deepic::classic::{TinScheme, TurboCode};
use deepic::evalbench::schemes::{NeuralScheme, TinAdapter};
use deepic::evalbench::{estimate_ber, StoppingRule};
use deepic::neural::{build_variant, ArchConfig, BranchStat, FrozenStats, VariantKind};

/// Symmetric channel and i.i.d. messages: the two users' error rates
/// agree within their joint block-level confidence interval over one
/// million bits per user.
#[test]
fn tin_users_are_statistically_symmetric() {
    let k = 100;
    let scheme = TinAdapter(TinScheme::new(TurboCode::new(k, 5).unwrap()));
    let stop = StoppingRule {
        min_errors: u64::MAX,
        max_blocks: 10_000,
    };
    let p = estimate_ber(&scheme, 0.8, 1.0, &stop, 2024).unwrap();
    assert_eq!(p.blocks * k as u64, 1_000_000);
    let gap = (p.ber_user1 - p.ber_user2).abs();
    let joint = 1.96 * (p.cluster_se_u1 + p.cluster_se_u2);
    assert!(
        gap <= joint,
        "user BERs {} vs {} differ beyond the joint CI {joint}",
        p.ber_user1,
        p.ber_user2
    );
    // Both users saw plenty of errors for the comparison to mean much.
    assert!(p.bit_errors_u1 > 1000 && p.bit_errors_u2 > 1000);
}

/// An untrained decoder carries no information: over ten thousand
/// random blocks its BER sits at one half within +/- 0.02.
///
/// A single random initialization carries a small fixed decision bias
/// (the head mixes activations with nonzero means), so the claim is
/// distributional: the budget is spread over several independent
/// initializations and the average tested.
#[test]
fn untrained_decoder_is_uninformative() {
    let arch = ArchConfig {
        block_len: 16,
        enc_channels: 6,
        dec_channels: 6,
        feature_size: 3,
        dec_iterations: 2,
        ..ArchConfig::default()
    };
    let stat = || BranchStat {
        mean: vec![0.0],
        std: vec![1.0],
    };
    let seeds = [97u64, 98, 99, 100, 101, 102, 103, 104];
    let blocks_each = 1250u64;
    let mut total_err = 0u64;
    let mut total_bits = 0u64;
    for seed in seeds {
        let mut model = build_variant(VariantKind::Deepic, &arch, seed).unwrap();
        model.frozen = Some(FrozenStats {
            user1: vec![stat(), stat(), stat()],
            user2: vec![stat(), stat(), stat()],
        });
        let scheme = NeuralScheme::new(&model);
        let stop = StoppingRule {
            min_errors: u64::MAX,
            max_blocks: blocks_each,
        };
        let p = estimate_ber(&scheme, 0.8, 4.0, &stop, seed).unwrap();
        total_err += p.bit_errors_u1 + p.bit_errors_u2;
        total_bits += 2 * p.blocks * 16;
    }
    let blocks: u64 = seeds.len() as u64 * blocks_each;
    assert_eq!(blocks, 10_000);
    let ber = total_err as f64 / total_bits as f64;
    assert!(
        (ber - 0.5).abs() < 0.02,
        "untrained BER {ber} strays from chance"
    );
}
