//! Static SVG rendering of BER curves. No raster dependencies: output
//! is deterministic text, diffable in tests.

use std::fmt::Write as _;

use thiserror::Error;

use crate::evalbench::BerPoint;

#[derive(Debug, Error)]
pub enum PlotError {
    #[error("unknown column {0}")]
    UnknownColumn(String),
    #[error("column {0} is not numeric")]
    NotNumeric(String),
}

/// One labeled curve.
#[derive(Clone, Debug)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Clone, Debug)]
pub struct PlotConfig {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_y: bool,
    pub width: u32,
    pub height: u32,
}

impl Default for PlotConfig {
    fn default() -> Self {
        Self {
            title: String::new(),
            x_label: "SNR (dB)".into(),
            y_label: "BER".into(),
            log_y: true,
            width: 640,
            height: 440,
        }
    }
}

/// Numeric value of a named CSV column of one point.
pub fn numeric_column(p: &BerPoint, name: &str) -> Result<f64, PlotError> {
    Ok(match name {
        "h" => p.h,
        "snr_db" => p.snr_db,
        "K" => p.k as f64,
        "ber_user1" => p.ber_user1,
        "ber_user2" => p.ber_user2,
        "ber_avg" => p.ber_avg,
        "bler" => p.bler,
        "blocks" => p.blocks as f64,
        "bit_errors_u1" => p.bit_errors_u1 as f64,
        "bit_errors_u2" => p.bit_errors_u2 as f64,
        "ci95" => p.ci95,
        "seed" => p.seed as f64,
        "scheme" | "variant" => return Err(PlotError::NotNumeric(name.into())),
        _ => return Err(PlotError::UnknownColumn(name.into())),
    })
}

/// Textual value of a named column, used for grouping keys.
pub fn text_column(p: &BerPoint, name: &str) -> Result<String, PlotError> {
    Ok(match name {
        "scheme" => p.scheme.clone(),
        "variant" => p.variant.clone(),
        _ => {
            let v = numeric_column(p, name)?;
            format!("{v}")
        }
    })
}

/// Splits rows into one series per distinct combination of the grouping
/// columns, sorted by x within each series.
pub fn group_series(
    points: &[BerPoint],
    group_by: &[String],
    x: &str,
    y: &str,
) -> Result<Vec<Series>, PlotError> {
    let mut order: Vec<String> = Vec::new();
    let mut buckets: std::collections::BTreeMap<String, Vec<(f64, f64)>> = Default::default();
    for p in points {
        let key = if group_by.is_empty() {
            "all".to_string()
        } else {
            group_by
                .iter()
                .map(|c| text_column(p, c))
                .collect::<Result<Vec<_>, _>>()?
                .join("/")
        };
        if !buckets.contains_key(&key) {
            order.push(key.clone());
        }
        buckets
            .entry(key)
            .or_default()
            .push((numeric_column(p, x)?, numeric_column(p, y)?));
    }
    Ok(order
        .into_iter()
        .map(|label| {
            let mut points = buckets.remove(&label).unwrap_or_default();
            points.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            Series { label, points }
        })
        .collect())
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f",
];

/// Renders the curves with axes, tick labels, and a legend. Log-scale
/// y drops non-positive values (a zero error count has no log position).
pub fn render_svg(series: &[Series], cfg: &PlotConfig) -> String {
    let (w, h) = (cfg.width as f64, cfg.height as f64);
    let (ml, mr, mt, mb) = (70.0, 20.0, 42.0, 50.0);
    let (pw, ph) = (w - ml - mr, h - mt - mb);

    let visible: Vec<(usize, Vec<(f64, f64)>)> = series
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let pts = s
                .points
                .iter()
                .copied()
                .filter(|&(_, y)| !cfg.log_y || y > 0.0)
                .collect();
            (i, pts)
        })
        .collect();

    let mut xs: Vec<f64> = Vec::new();
    let mut ys: Vec<f64> = Vec::new();
    for (_, pts) in &visible {
        for &(x, y) in pts {
            xs.push(x);
            ys.push(if cfg.log_y { y.log10() } else { y });
        }
    }
    let (x0, x1) = span(&xs, 0.0, 1.0);
    let (y0, y1) = if cfg.log_y {
        let (a, b) = span(&ys, -5.0, 0.0);
        (a.floor(), b.ceil().max(a.floor() + 1.0))
    } else {
        span(&ys, 0.0, 1.0)
    };

    let px = |x: f64| ml + (x - x0) / (x1 - x0) * pw;
    let py = |y: f64| mt + (y1 - y) / (y1 - y0) * ph;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {} {}\" font-family=\"sans-serif\" font-size=\"12\">",
        cfg.width, cfg.height
    );
    let _ = writeln!(
        svg,
        "<rect x=\"0\" y=\"0\" width=\"{}\" height=\"{}\" fill=\"white\"/>",
        cfg.width, cfg.height
    );
    if !cfg.title.is_empty() {
        let _ = writeln!(
            svg,
            "<text x=\"{}\" y=\"20\" text-anchor=\"middle\" font-size=\"15\">{}</text>",
            w / 2.0,
            escape(&cfg.title)
        );
    }

    // Frame.
    let _ = writeln!(
        svg,
        "<line x1=\"{ml}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>",
        mt + ph,
        ml + pw,
        mt + ph
    );
    let _ = writeln!(
        svg,
        "<line x1=\"{ml}\" y1=\"{mt}\" x2=\"{ml}\" y2=\"{}\" stroke=\"black\"/>",
        mt + ph
    );

    // X ticks.
    for t in linear_ticks(x0, x1) {
        let x = px(t);
        let _ = writeln!(
            svg,
            "<line x1=\"{x}\" y1=\"{}\" x2=\"{x}\" y2=\"{}\" stroke=\"black\"/>",
            mt + ph,
            mt + ph + 5.0
        );
        let _ = writeln!(
            svg,
            "<text x=\"{x}\" y=\"{}\" text-anchor=\"middle\">{}</text>",
            mt + ph + 18.0,
            trim_num(t)
        );
    }
    // Y ticks.
    let yticks: Vec<f64> = if cfg.log_y {
        (y0 as i64..=y1 as i64).map(|e| e as f64).collect()
    } else {
        linear_ticks(y0, y1)
    };
    for t in yticks {
        let y = py(t);
        let _ = writeln!(
            svg,
            "<line x1=\"{}\" y1=\"{y}\" x2=\"{ml}\" y2=\"{y}\" stroke=\"black\"/>",
            ml - 5.0
        );
        let label = if cfg.log_y {
            format!("1e{}", t as i64)
        } else {
            trim_num(t)
        };
        let _ = writeln!(
            svg,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{label}</text>",
            ml - 8.0,
            y + 4.0
        );
        let _ = writeln!(
            svg,
            "<line x1=\"{ml}\" y1=\"{y}\" x2=\"{}\" y2=\"{y}\" stroke=\"#dddddd\"/>",
            ml + pw
        );
    }

    // Axis labels.
    let _ = writeln!(
        svg,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>",
        ml + pw / 2.0,
        h - 12.0,
        escape(&cfg.x_label)
    );
    let _ = writeln!(
        svg,
        "<text x=\"16\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {})\">{}</text>",
        mt + ph / 2.0,
        mt + ph / 2.0,
        escape(&cfg.y_label)
    );

    // Curves.
    for (i, pts) in &visible {
        if pts.is_empty() {
            continue;
        }
        let color = PALETTE[i % PALETTE.len()];
        let path: Vec<String> = pts
            .iter()
            .map(|&(x, y)| {
                let yy = if cfg.log_y { y.log10() } else { y };
                format!("{:.2},{:.2}", px(x), py(yy))
            })
            .collect();
        let _ = writeln!(
            svg,
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>",
            path.join(" ")
        );
        for &(x, y) in pts {
            let yy = if cfg.log_y { y.log10() } else { y };
            let _ = writeln!(
                svg,
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"2.5\" fill=\"{color}\"/>",
                px(x),
                py(yy)
            );
        }
    }

    // Legend.
    for (idx, s) in series.iter().enumerate() {
        let color = PALETTE[idx % PALETTE.len()];
        let y = mt + 8.0 + idx as f64 * 16.0;
        let x = ml + pw - 150.0;
        let _ = writeln!(
            svg,
            "<line x1=\"{x}\" y1=\"{y}\" x2=\"{}\" y2=\"{y}\" stroke=\"{color}\" stroke-width=\"2\"/>",
            x + 22.0
        );
        let _ = writeln!(
            svg,
            "<text x=\"{}\" y=\"{}\" font-size=\"11\">{}</text>",
            x + 27.0,
            y + 4.0,
            escape(&s.label)
        );
    }

    svg.push_str("</svg>\n");
    svg
}

fn span(values: &[f64], fallback_lo: f64, fallback_hi: f64) -> (f64, f64) {
    if values.is_empty() {
        return (fallback_lo, fallback_hi);
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if lo == hi {
        lo -= 0.5;
        hi += 0.5;
    }
    (lo, hi)
}

fn linear_ticks(lo: f64, hi: f64) -> Vec<f64> {
    let raw = (hi - lo) / 6.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|&s| s >= raw)
        .unwrap_or(mag * 10.0);
    let mut t = (lo / step).ceil() * step;
    let mut out = Vec::new();
    while t <= hi + 1e-9 * step {
        out.push(t);
        t += step;
    }
    out
}

fn trim_num(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s.is_empty() || s == "-" {
        "0".into()
    } else {
        s.to_string()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
