//! Implementations of the CLI verbs.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde_json::json;

use deepic::evalbench::{
    self, blocklength_eval, perturbation_csv, perturbation_report, perturbation_summary_json,
    schemes::{
        ConvP2pScheme, NeuralScheme, OracleScheme, TdAdapter, TinAdapter, TurboP2pScheme,
        UncodedBpsk,
    },
    sweep, SweepSpec,
};
use deepic::neural::{checkpoint, AutoencoderModel};
use deepic::plot::{group_series, render_svg, PlotConfig};
use deepic::trainer::{train_observed, TrainOutcome};

use crate::config::{BlocklengthMode, PlotSpecFile, RunConfig};
use crate::CliError;

/// Schemes selectable by `deepic baseline`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum BaselineScheme {
    Tin,
    Td,
    TurboP2p,
    ConvP2p,
    Uncoded,
}

pub struct OutputDir {
    root: PathBuf,
}

impl OutputDir {
    /// Resolution order: `--out` flag, config `output_dir`, the
    /// `DEEPIC_OUT` environment variable, then `./deepic-out`.
    pub fn resolve(flag: Option<&Path>, config: Option<&Path>) -> Result<Self, CliError> {
        let root = flag
            .map(Path::to_path_buf)
            .or_else(|| config.map(Path::to_path_buf))
            .or_else(|| std::env::var_os("DEEPIC_OUT").map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("deepic-out"));
        std::fs::create_dir_all(&root)
            .map_err(|e| CliError::Config(format!("cannot create {}: {e}", root.display())))?;
        Ok(Self { root })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn write(&self, name: &str, contents: &str) -> Result<PathBuf, CliError> {
        let path = self.path(name);
        std::fs::write(&path, contents)
            .map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))?;
        Ok(path)
    }
}

fn now_unix() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn version_hash() -> String {
    let version = env!("CARGO_PKG_VERSION");
    format!("{:016x}", deepic::channel::derive_seed(0, &["version", version]))
}

/// Writes `manifest.json`. Wall-clock timestamps live only here, so
/// every other artifact stays byte-reproducible.
fn write_manifest(
    out: &OutputDir,
    command: &str,
    config: &RunConfig,
    started: u64,
    extra: serde_json::Value,
) -> Result<(), CliError> {
    let manifest = json!({
        "command": command,
        "version": env!("CARGO_PKG_VERSION"),
        "version_hash": version_hash(),
        "started_unix": started,
        "finished_unix": now_unix(),
        "config": serde_json::from_str::<serde_json::Value>(&config.resolved_json())
            .expect("resolved config is valid JSON"),
        "summary": extra,
    });
    out.write(
        "manifest.json",
        &serde_json::to_string_pretty(&manifest).expect("manifest serialization"),
    )?;
    Ok(())
}

fn load_checkpoint(path: &Path) -> Result<AutoencoderModel, CliError> {
    checkpoint::load(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

pub fn cmd_train(config: &RunConfig, out: &OutputDir) -> Result<(), CliError> {
    let started = now_unix();
    let train_config = config.train_config();
    out.write("resolved_config.json", &config.resolved_json())?;

    let last_path = out.path("checkpoint_last.json");
    let mut observer = |epoch: usize, model: &AutoencoderModel, val: (f64, f64)| {
        if let Err(e) = checkpoint::save(model, &last_path) {
            log::warn!("epoch {epoch}: could not write checkpoint: {e}");
        }
        log::info!(
            "epoch {epoch}: validation BER u1 {:.5} u2 {:.5}",
            val.0,
            val.1
        );
    };
    let TrainOutcome {
        best,
        last,
        history,
        best_val,
        aborted,
    } = train_observed(&train_config, &mut observer).map_err(CliError::from_train)?;

    out.write("checkpoint.json", &checkpoint::to_json(&best))?;
    out.write("checkpoint_last.json", &checkpoint::to_json(&last))?;
    out.write("trainlog.csv", &history.to_csv())?;

    let first_mean = history.epoch_mean_loss(1);
    let last_mean = history.epoch_mean_loss(train_config.epochs);
    write_manifest(
        out,
        "train",
        config,
        started,
        json!({
            "steps": history.records.len(),
            "wall_clock_secs": history.wall_clock_secs,
            "first_epoch_mean_loss": first_mean,
            "last_epoch_mean_loss": last_mean,
            "best_val": best_val.map(|(epoch, ber)| json!({"epoch": epoch, "ber_avg": ber})),
            "aborted": aborted,
            "artifacts": ["checkpoint.json", "checkpoint_last.json", "trainlog.csv", "resolved_config.json"],
        }),
    )?;

    if let Some(reason) = aborted {
        return Err(CliError::Numeric(format!(
            "training aborted: {reason}; last good checkpoint written"
        )));
    }
    Ok(())
}

fn sweep_spec(config: &RunConfig) -> SweepSpec {
    SweepSpec {
        h: config.channel.h.clone(),
        snr_db: config.channel.snr_db.clone(),
        stop: config.eval,
        seed: config.seed,
    }
}

pub fn cmd_eval(
    config: &RunConfig,
    checkpoint_path: &Path,
    oracle: bool,
    out: &OutputDir,
) -> Result<(), CliError> {
    let started = now_unix();
    out.write("resolved_config.json", &config.resolved_json())?;
    let spec = sweep_spec(config);
    let points = if oracle {
        let scheme = OracleScheme::new(config.code.k);
        sweep(&scheme, &spec).map_err(CliError::from_eval)?
    } else {
        let model = load_checkpoint(checkpoint_path)?;
        if model.kind != config.code.variant {
            return Err(CliError::Config(format!(
                "checkpoint holds a {} model but the config asks for {}",
                model.kind.as_str(),
                config.code.variant.as_str()
            )));
        }
        let scheme = NeuralScheme::with_block_len(&model, config.code.k);
        sweep(&scheme, &spec).map_err(CliError::from_eval)?
    };
    out.write("ber.csv", &evalbench::to_csv(&points))?;
    write_manifest(out, "eval", config, started, json!({"points": points.len()}))?;
    Ok(())
}

pub fn cmd_baseline(
    config: &RunConfig,
    scheme: BaselineScheme,
    out: &OutputDir,
) -> Result<(), CliError> {
    let started = now_unix();
    out.write("resolved_config.json", &config.resolved_json())?;
    let spec = sweep_spec(config);
    let k = config.code.k;
    let (name, points) = match scheme {
        BaselineScheme::Tin => {
            let s = TinAdapter(deepic::classic::TinScheme::new(config.turbo_code(k)?));
            ("tin", sweep(&s, &spec).map_err(CliError::from_eval)?)
        }
        BaselineScheme::Td => {
            let code = config.turbo_code(k)?;
            let s = TdAdapter(
                deepic::classic::TdScheme::new(code, config.code.turbo.td_power)
                    .map_err(|e| CliError::Config(e.to_string()))?,
            );
            ("td", sweep(&s, &spec).map_err(CliError::from_eval)?)
        }
        BaselineScheme::TurboP2p => {
            let s = TurboP2pScheme {
                code: config.turbo_code(k)?,
            };
            ("turbo_p2p", sweep(&s, &spec).map_err(CliError::from_eval)?)
        }
        BaselineScheme::ConvP2p => {
            let s = ConvP2pScheme::standard(k).map_err(CliError::from_eval)?;
            ("conv_p2p", sweep(&s, &spec).map_err(CliError::from_eval)?)
        }
        BaselineScheme::Uncoded => {
            let s = UncodedBpsk { k };
            ("uncoded", sweep(&s, &spec).map_err(CliError::from_eval)?)
        }
    };
    out.write(&format!("ber_{name}.csv"), &evalbench::to_csv(&points))?;
    write_manifest(
        out,
        "baseline",
        config,
        started,
        json!({"scheme": name, "points": points.len()}),
    )?;
    Ok(())
}

pub fn cmd_perturb(
    checkpoint_path: &Path,
    k: Option<usize>,
    out: &OutputDir,
) -> Result<(), CliError> {
    let model = load_checkpoint(checkpoint_path)?;
    let k = k.unwrap_or(model.arch.block_len);
    let report = perturbation_report(&model, k).map_err(CliError::from_eval)?;
    out.write("perturbation.csv", &perturbation_csv(&report))?;
    out.write("perturbation_summary.json", &perturbation_summary_json(&report))?;
    Ok(())
}

pub fn cmd_blocklength(
    config: &RunConfig,
    checkpoint_path: Option<&Path>,
    out: &OutputDir,
) -> Result<(), CliError> {
    let started = now_unix();
    out.write("resolved_config.json", &config.resolved_json())?;
    let spec = sweep_spec(config);
    let lengths = config.blocklength.lengths.clone();
    let mut rows = Vec::new();
    match (config.blocklength.mode, checkpoint_path) {
        (BlocklengthMode::Eval, Some(path)) => {
            let model = load_checkpoint(path)?;
            rows = blocklength_eval(&model, &lengths, &spec).map_err(CliError::from_eval)?;
        }
        (BlocklengthMode::Eval, None) => {
            return Err(CliError::Config(
                "blocklength eval mode needs --checkpoint".into(),
            ));
        }
        (BlocklengthMode::Train, _) => {
            for &k in &lengths {
                let mut train_config = config.train_config();
                train_config.arch.block_len = k;
                train_config.seed = deepic::channel::derive_seed(config.seed, &[&format!("bl{k}")]);
                let outcome =
                    train_observed(&train_config, &mut |_, _, _| {}).map_err(CliError::from_train)?;
                if let Some(reason) = outcome.aborted {
                    return Err(CliError::Numeric(format!(
                        "training at K = {k} aborted: {reason}"
                    )));
                }
                out.write(
                    &format!("checkpoint_k{k}.json"),
                    &checkpoint::to_json(&outcome.best),
                )?;
                let scheme = NeuralScheme::new(&outcome.best);
                rows.extend(sweep(&scheme, &spec).map_err(CliError::from_eval)?);
            }
        }
    }
    out.write("blocklength.csv", &evalbench::to_csv(&rows))?;
    write_manifest(
        out,
        "blocklength",
        config,
        started,
        json!({"lengths": lengths, "points": rows.len()}),
    )?;
    Ok(())
}

pub fn cmd_plot(spec: &PlotSpecFile) -> Result<(), CliError> {
    let mut points = Vec::new();
    for input in &spec.inputs {
        let text = std::fs::read_to_string(input)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", input.display())))?;
        points.extend(evalbench::from_csv(&text).map_err(CliError::from_eval)?);
    }
    let series = group_series(&points, &spec.group_by, &spec.x, &spec.y)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let svg = render_svg(
        &series,
        &PlotConfig {
            title: spec.title.clone(),
            x_label: spec.x_label.clone(),
            y_label: spec.y_label.clone(),
            log_y: spec.log_y,
            ..PlotConfig::default()
        },
    );
    if let Some(parent) = spec.output.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| {
                CliError::Config(format!("cannot create {}: {e}", parent.display()))
            })?;
        }
    }
    std::fs::write(&spec.output, svg)
        .map_err(|e| CliError::Config(format!("cannot write {}: {e}", spec.output.display())))?;
    Ok(())
}

