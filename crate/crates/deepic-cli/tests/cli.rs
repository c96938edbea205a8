//! End-to-end tests of the command-line interface: artifact layout,
//! exit codes, and byte-level reproducibility.

use std::path::Path;
use std::process::{Command, Output};

use deepic::neural::{checkpoint, ArchConfig, BranchStat, FrozenStats, VariantKind};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_deepic"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn smoke_config(dir: &Path, seed: u64) -> std::path::PathBuf {
    let path = dir.join("run.json");
    let config = serde_json::json!({
        "seed": seed,
        "channel": { "h": [0.8], "snr_db": [0.0, 3.0] },
        "code": {
            "k": 8,
            "variant": "deepic",
            "arch": {
                "block_len": 8,
                "enc_channels": 4,
                "dec_channels": 4,
                "feature_size": 2,
                "dec_iterations": 1
            }
        },
        "training": {
            "epochs": 1,
            "batch_size": 8,
            "enc_steps": 2,
            "dec_steps": 2,
            "learning_rate": 0.001,
            "validation": { "snr_db": 3.0, "blocks": 4 }
        },
        "eval": { "min_errors": 5, "max_blocks": 20 }
    });
    std::fs::write(&path, serde_json::to_string_pretty(&config).unwrap()).unwrap();
    path
}

#[test]
fn train_writes_artifacts_and_reproduces() {
    let tmp = tempfile::tempdir().unwrap();
    let config = smoke_config(tmp.path(), 11);
    let out1 = tmp.path().join("a");
    let status = run(&[
        "train",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out1.to_str().unwrap(),
    ]);
    assert!(
        status.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&status.stderr)
    );
    for artifact in [
        "checkpoint.json",
        "checkpoint_last.json",
        "trainlog.csv",
        "manifest.json",
        "resolved_config.json",
    ] {
        assert!(out1.join(artifact).exists(), "{artifact} missing");
    }

    // Identical config and seed give identical checkpoint bytes.
    let out2 = tmp.path().join("b");
    let status = run(&[
        "train",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out2.to_str().unwrap(),
    ]);
    assert!(status.status.success());
    let a = std::fs::read(out1.join("checkpoint.json")).unwrap();
    let b = std::fs::read(out2.join("checkpoint.json")).unwrap();
    assert_eq!(a, b);
    let la = std::fs::read(out1.join("trainlog.csv")).unwrap();
    let lb = std::fs::read(out2.join("trainlog.csv")).unwrap();
    assert_eq!(la, lb);

    // The resolved-config echo reproduces the run byte for byte.
    let out3 = tmp.path().join("c");
    let status = run(&[
        "train",
        "--config",
        out1.join("resolved_config.json").to_str().unwrap(),
        "--out",
        out3.to_str().unwrap(),
    ]);
    assert!(status.status.success());
    let c = std::fs::read(out3.join("checkpoint.json")).unwrap();
    assert_eq!(a, c);
}

#[test]
fn unknown_config_key_exits_2_and_names_it() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("bad.json");
    let config = serde_json::json!({
        "seed": 1,
        "channel": { "h": [0.8], "snr_db": [0.0] },
        "code": { "k": 8 },
        "training": { "learning_rte": 0.001 }
    });
    std::fs::write(&path, config.to_string()).unwrap();
    let out = run(&["train", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("learning_rte"), "stderr: {stderr}");
}

#[test]
fn eval_oracle_writes_zero_ber_and_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let config = smoke_config(tmp.path(), 3);
    let out1 = tmp.path().join("e1");
    let status = run(&[
        "eval",
        "--config",
        config.to_str().unwrap(),
        "--oracle",
        "--out",
        out1.to_str().unwrap(),
    ]);
    assert!(status.status.success());
    let csv = std::fs::read_to_string(out1.join("ber.csv")).unwrap();
    let points = deepic::evalbench::from_csv(&csv).unwrap();
    assert!(!points.is_empty());
    for p in &points {
        assert_eq!(p.ber_avg, 0.0);
        assert_eq!(p.bler, 0.0);
    }

    let out2 = tmp.path().join("e2");
    run(&[
        "eval",
        "--config",
        config.to_str().unwrap(),
        "--oracle",
        "--out",
        out2.to_str().unwrap(),
    ]);
    assert_eq!(
        std::fs::read(out1.join("ber.csv")).unwrap(),
        std::fs::read(out2.join("ber.csv")).unwrap()
    );
}

#[test]
fn env_var_supplies_default_output_root() {
    let tmp = tempfile::tempdir().unwrap();
    let config = smoke_config(tmp.path(), 5);
    let root = tmp.path().join("envroot");
    let status = bin()
        .args(["baseline", "--scheme", "uncoded", "--config", config.to_str().unwrap()])
        .env("DEEPIC_OUT", &root)
        .output()
        .unwrap();
    assert!(
        status.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&status.stderr)
    );
    assert!(root.join("ber_uncoded.csv").exists());
}

#[test]
fn corrupted_checkpoint_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let config = smoke_config(tmp.path(), 3);
    let ck = tmp.path().join("broken.json");
    std::fs::write(&ck, "{ definitely not a checkpoint").unwrap();
    let out = run(&[
        "eval",
        "--config",
        config.to_str().unwrap(),
        "--checkpoint",
        ck.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn eval_on_trained_checkpoint_works() {
    let tmp = tempfile::tempdir().unwrap();
    let config = smoke_config(tmp.path(), 17);
    let out = tmp.path().join("t");
    assert!(run(&[
        "train",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ])
    .status
    .success());
    let eval_out = tmp.path().join("ev");
    let status = run(&[
        "eval",
        "--config",
        config.to_str().unwrap(),
        "--checkpoint",
        out.join("checkpoint.json").to_str().unwrap(),
        "--out",
        eval_out.to_str().unwrap(),
    ]);
    assert!(
        status.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&status.stderr)
    );
    let csv = std::fs::read_to_string(eval_out.join("ber.csv")).unwrap();
    assert!(csv.starts_with(deepic::evalbench::BER_CSV_HEADER));
}

#[test]
fn checkpoint_variant_mismatch_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let config = smoke_config(tmp.path(), 17);
    let out = tmp.path().join("t");
    assert!(run(&[
        "train",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ])
    .status
    .success());
    // Same checkpoint, config now asking for a different family.
    let text = std::fs::read_to_string(&config).unwrap();
    let swapped = text.replace("\"variant\": \"deepic\"", "\"variant\": \"rnn_ae\"");
    std::fs::write(&config, swapped).unwrap();
    let bad = run(&[
        "eval",
        "--config",
        config.to_str().unwrap(),
        "--checkpoint",
        out.join("checkpoint.json").to_str().unwrap(),
    ]);
    assert_eq!(bad.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&bad.stderr);
    assert!(stderr.contains("rnn_ae"), "stderr: {stderr}");
}

#[test]
fn baseline_uncoded_runs_and_unknown_scheme_fails() {
    let tmp = tempfile::tempdir().unwrap();
    let config = smoke_config(tmp.path(), 5);
    let out = tmp.path().join("base");
    let status = run(&[
        "baseline",
        "--scheme",
        "uncoded",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(status.status.success());
    assert!(out.join("ber_uncoded.csv").exists());

    let bad = run(&[
        "baseline",
        "--scheme",
        "nonsense",
        "--config",
        config.to_str().unwrap(),
    ]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn numeric_blowup_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("hot.json");
    let config = serde_json::json!({
        "seed": 1,
        "channel": { "h": [0.8], "snr_db": [0.0] },
        "code": {
            "k": 8,
            "arch": { "block_len": 8, "enc_channels": 4, "dec_channels": 4,
                       "feature_size": 2, "dec_iterations": 1 }
        },
        "training": {
            "epochs": 1, "batch_size": 8, "enc_steps": 6, "dec_steps": 2,
            "learning_rate": 1e100, "clip_norm": null,
            "validation": { "snr_db": 3.0, "blocks": 2 }
        },
        "eval": { "min_errors": 2, "max_blocks": 4 }
    });
    std::fs::write(&path, config.to_string()).unwrap();
    let out = run(&[
        "train",
        "--config",
        path.to_str().unwrap(),
        "--out",
        tmp.path().join("hot").to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(3),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn single_tap_checkpoint(dir: &Path) -> std::path::PathBuf {
    let k = 9;
    let mut arch = ArchConfig::tiny(k);
    arch.enc_layers = 1;
    arch.enc_kernel = 3;
    let mut model = deepic::neural::build_variant(VariantKind::Deepic, &arch, 0).unwrap();
    for (name, value) in model.params.iter_mut() {
        if !name.contains(".enc.") {
            continue;
        }
        for v in value.data_mut() {
            *v = 0.0;
        }
        if name.ends_with("conv0.w") {
            let w = value.shape()[2];
            let c_in = value.shape()[1];
            for co in 0..value.shape()[0] {
                value.data_mut()[co * c_in * w + w / 2] = 1.0;
            }
        }
        if name.ends_with("conv1.w") {
            for v in value.data_mut() {
                *v = 1.0;
            }
        }
    }
    let stat = || BranchStat {
        mean: vec![0.0],
        std: vec![1.0],
    };
    model.frozen = Some(FrozenStats {
        user1: vec![stat(), stat(), stat()],
        user2: vec![stat(), stat(), stat()],
    });
    let path = dir.join("single_tap.json");
    checkpoint::save(&model, &path).unwrap();
    path
}

#[test]
fn perturb_reports_single_tap_support() {
    let tmp = tempfile::tempdir().unwrap();
    let ck = single_tap_checkpoint(tmp.path());
    let out = tmp.path().join("pert");
    let status = run(&[
        "perturb",
        "--checkpoint",
        ck.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(
        status.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&status.stderr)
    );
    let csv = std::fs::read_to_string(out.join("perturbation.csv")).unwrap();
    // Header plus 3K rows.
    assert_eq!(csv.lines().count(), 1 + 3 * 9);
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("perturbation_summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary["response"]["branch_support"], serde_json::json!([1, 1, 1]));
}

#[test]
fn blocklength_eval_mode_emits_k_column() {
    let tmp = tempfile::tempdir().unwrap();
    let ck = single_tap_checkpoint(tmp.path());
    let path = tmp.path().join("bl.json");
    let config = serde_json::json!({
        "seed": 2,
        "channel": { "h": [0.8], "snr_db": [2.0] },
        "code": { "k": 9, "arch": { "block_len": 9, "enc_layers": 1, "enc_kernel": 3,
                   "enc_channels": 6, "dec_channels": 8, "feature_size": 3,
                   "dec_iterations": 2 } },
        "eval": { "min_errors": 3, "max_blocks": 6 },
        "blocklength": { "lengths": [9, 12], "mode": "eval" }
    });
    std::fs::write(&path, config.to_string()).unwrap();
    let out = tmp.path().join("bl");
    let status = run(&[
        "blocklength",
        "--config",
        path.to_str().unwrap(),
        "--checkpoint",
        ck.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(
        status.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&status.stderr)
    );
    let rows =
        deepic::evalbench::from_csv(&std::fs::read_to_string(out.join("blocklength.csv")).unwrap())
            .unwrap();
    let ks: Vec<usize> = rows.iter().map(|r| r.k).collect();
    assert_eq!(ks, vec![9, 12]);
}

#[test]
fn plot_renders_svg_and_validates_columns() {
    let tmp = tempfile::tempdir().unwrap();
    let config = smoke_config(tmp.path(), 5);
    let out = tmp.path().join("base");
    assert!(run(&[
        "baseline",
        "--scheme",
        "uncoded",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ])
    .status
    .success());

    let svg_path = tmp.path().join("fig.svg");
    let spec = serde_json::json!({
        "inputs": [out.join("ber_uncoded.csv")],
        "group_by": ["scheme"],
        "output": svg_path,
        "title": "uncoded reference"
    });
    let spec_path = tmp.path().join("plot.json");
    std::fs::write(&spec_path, spec.to_string()).unwrap();
    let status = run(&["plot", "--spec", spec_path.to_str().unwrap()]);
    assert!(
        status.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&status.stderr)
    );
    let svg = std::fs::read_to_string(&svg_path).unwrap();
    assert!(svg.contains("<polyline"));
    assert!(svg.contains("uncoded"));

    // Unknown column exits 2.
    let bad_spec = serde_json::json!({
        "inputs": [out.join("ber_uncoded.csv")],
        "group_by": ["not_a_column"],
        "output": tmp.path().join("bad.svg")
    });
    std::fs::write(&spec_path, bad_spec.to_string()).unwrap();
    let bad = run(&["plot", "--spec", spec_path.to_str().unwrap()]);
    assert_eq!(bad.status.code(), Some(2));

    // Header-only CSV still renders a valid SVG.
    let empty_csv = tmp.path().join("empty.csv");
    std::fs::write(&empty_csv, format!("{}\n", deepic::evalbench::BER_CSV_HEADER)).unwrap();
    let empty_spec = serde_json::json!({
        "inputs": [empty_csv],
        "output": tmp.path().join("empty.svg")
    });
    std::fs::write(&spec_path, empty_spec.to_string()).unwrap();
    assert!(run(&["plot", "--spec", spec_path.to_str().unwrap()])
        .status
        .success());
    let svg = std::fs::read_to_string(tmp.path().join("empty.svg")).unwrap();
    assert!(svg.contains("</svg>"));
    assert!(!svg.contains("<polyline"));
}
