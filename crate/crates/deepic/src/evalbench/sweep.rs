//! SNR sweeps and the shared BER CSV schema.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::ber::{estimate_ber, point_seed, BerPoint, StoppingRule};
use super::{EvalError, Scheme};

/// Exact column set of every BER table this crate emits.
pub const BER_CSV_HEADER: &str = "scheme,variant,h,snr_db,K,ber_user1,ber_user2,ber_avg,bler,blocks,bit_errors_u1,bit_errors_u2,ci95,seed";

/// Grid of operating points for one scheme.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    /// Interference gains to evaluate.
    pub h: Vec<f64>,
    /// Strictly increasing SNR grid in decibels.
    pub snr_db: Vec<f64>,
    #[serde(default)]
    pub stop: StoppingRule,
    pub seed: u64,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<(), EvalError> {
        if self.h.is_empty() {
            return Err(EvalError::Config("sweep needs at least one h value".into()));
        }
        if self.snr_db.windows(2).any(|w| w[1] <= w[0]) {
            return Err(EvalError::Config(
                "SNR grid must be strictly increasing".into(),
            ));
        }
        self.stop.validate()
    }
}

/// Evaluates every grid point independently with a derived per-point
/// seed. Identical spec and seed reproduce identical results.
pub fn sweep(scheme: &dyn Scheme, spec: &SweepSpec) -> Result<Vec<BerPoint>, EvalError> {
    spec.validate()?;
    let mut points = Vec::with_capacity(spec.h.len() * spec.snr_db.len());
    for &h in &spec.h {
        for &snr in &spec.snr_db {
            let seed = point_seed(
                spec.seed,
                &scheme.scheme_id(),
                h,
                snr,
                scheme.message_len(),
            );
            points.push(estimate_ber(scheme, h, snr, &spec.stop, seed)?);
        }
    }
    Ok(points)
}

/// Renders points in the shared schema; deterministic bytes for
/// deterministic inputs.
pub fn to_csv(points: &[BerPoint]) -> String {
    let mut out = String::new();
    out.push_str(BER_CSV_HEADER);
    out.push('\n');
    for p in points {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            p.scheme,
            p.variant,
            p.h,
            p.snr_db,
            p.k,
            p.ber_user1,
            p.ber_user2,
            p.ber_avg,
            p.bler,
            p.blocks,
            p.bit_errors_u1,
            p.bit_errors_u2,
            p.ci95,
            p.seed
        );
    }
    out
}

/// Parses a table produced by [`to_csv`].
pub fn from_csv(text: &str) -> Result<Vec<BerPoint>, EvalError> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| EvalError::Config("empty CSV".into()))?;
    if header.trim() != BER_CSV_HEADER {
        return Err(EvalError::Config(format!(
            "unexpected CSV header: {header}"
        )));
    }
    let mut points = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 14 {
            return Err(EvalError::Config(format!(
                "line {}: expected 14 fields, got {}",
                lineno + 2,
                f.len()
            )));
        }
        let parse = |s: &str| -> Result<f64, EvalError> {
            s.parse()
                .map_err(|_| EvalError::Config(format!("line {}: bad number {s}", lineno + 2)))
        };
        let parse_u = |s: &str| -> Result<u64, EvalError> {
            s.parse()
                .map_err(|_| EvalError::Config(format!("line {}: bad integer {s}", lineno + 2)))
        };
        points.push(BerPoint {
            scheme: f[0].to_string(),
            variant: f[1].to_string(),
            h: parse(f[2])?,
            snr_db: parse(f[3])?,
            k: parse_u(f[4])? as usize,
            ber_user1: parse(f[5])?,
            ber_user2: parse(f[6])?,
            ber_avg: parse(f[7])?,
            bler: parse(f[8])?,
            blocks: parse_u(f[9])?,
            bit_errors_u1: parse_u(f[10])?,
            bit_errors_u2: parse_u(f[11])?,
            ci95: parse(f[12])?,
            seed: parse_u(f[13])?,
            cluster_se_avg: 0.0,
            cluster_se_u1: 0.0,
            cluster_se_u2: 0.0,
        });
    }
    Ok(points)
}
