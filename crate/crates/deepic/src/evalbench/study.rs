//! Block-length generalization and single-bit perturbation studies.

use std::fmt::Write as _;

use serde::Serialize;

use crate::neural::{perturbation_response, AutoencoderModel, PerturbationResponse, VariantKind};

use super::ber::BerPoint;
use super::schemes::NeuralScheme;
use super::sweep::{sweep, SweepSpec};
use super::EvalError;

/// Evaluates one length-agnostic model at several block lengths,
/// emitting rows keyed by the `K` column of the shared schema.
///
/// Dense and interleaved variants are tied to their training length and
/// are rejected; lengths below the encoder receptive field are too.
pub fn blocklength_eval(
    model: &AutoencoderModel,
    lengths: &[usize],
    spec: &SweepSpec,
) -> Result<Vec<BerPoint>, EvalError> {
    if matches!(
        model.kind,
        VariantKind::FfAe | VariantKind::DeepicInterleaved
    ) {
        return Err(EvalError::Config(format!(
            "variant {} is tied to one block length; train per length instead",
            model.kind.as_str()
        )));
    }
    let min_len = model.arch.encoder_receptive_field();
    let mut rows = Vec::new();
    for &k in lengths {
        if k < min_len {
            return Err(EvalError::Config(format!(
                "block length {k} is below the encoder receptive field {min_len}"
            )));
        }
        let scheme = NeuralScheme::with_block_len(model, k);
        rows.extend(sweep(&scheme, spec)?);
    }
    Ok(rows)
}

/// Perturbation study artifacts: the raw delta table and a summary.
#[derive(Clone, Debug, Serialize)]
pub struct PerturbationReport {
    pub response: PerturbationResponse,
    pub variant: String,
    /// Branches whose support is non-empty; a three-branch encoder shows
    /// up to three separated activity regions, one per branch.
    pub active_branches: usize,
}

pub fn perturbation_report(
    model: &AutoencoderModel,
    k: usize,
) -> Result<PerturbationReport, EvalError> {
    let response = perturbation_response(model, k)?;
    let active_branches = response.branch_support.iter().filter(|&&s| s > 0).count();
    Ok(PerturbationReport {
        response,
        variant: model.kind.as_str().to_string(),
        active_branches,
    })
}

pub const PERTURBATION_CSV_HEADER: &str = "position,branch,delta";

/// One row per codeword position: `position,branch,delta` with branch
/// in 1..=3 and position in 0..K, `3K` rows total.
pub fn perturbation_csv(report: &PerturbationReport) -> String {
    let k = report.response.block_len;
    let mut out = String::new();
    out.push_str(PERTURBATION_CSV_HEADER);
    out.push('\n');
    for branch in 0..3 {
        for pos in 0..k {
            let _ = writeln!(
                out,
                "{pos},{},{}",
                branch + 1,
                report.response.delta[branch * k + pos]
            );
        }
    }
    out
}

pub fn perturbation_summary_json(report: &PerturbationReport) -> String {
    serde_json::to_string_pretty(report).expect("report serialization cannot fail")
}
