//! Byte-stable CSV, JSON and SVG output.
//!
//! JSON objects are written with sorted keys and every float as `{:.16e}`
//! (17 significant digits), which round-trips exactly through the parser.

use std::fmt::Write as _;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

use super::sweep::RateReport;
use crate::error::{LabError, Result};

pub const RATE_CSV_HEADER: &str = "m,seed,achieved_hinge_risk,misclass_error,mc_half_width,flags";

pub fn fmt_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        "nan".to_string()
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_float).unwrap_or_default()
}

/// `m,seed,achieved_hinge_risk,misclass_error,mc_half_width,flags`; flags
/// are joined by `;`, missing values are empty.
pub fn rate_csv(report: &RateReport) -> String {
    let mut out = String::from(RATE_CSV_HEADER);
    out.push('\n');
    for r in &report.records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.m,
            r.seed,
            opt(r.achieved_hinge_risk),
            opt(r.misclass_error),
            opt(r.mc_half_width),
            r.flags.join(";")
        );
    }
    out
}

/// Canonical JSON text of any serializable value.
pub fn to_canonical_json<T: Serialize>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value)?;
    let mut out = String::new();
    write_value(&v, 0, &mut out);
    out.push('\n');
    Ok(out)
}

fn write_value(v: &Value, indent: usize, out: &mut String) {
    let pad = |n: usize| "  ".repeat(n);
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if n.is_f64() {
                out.push_str(&fmt_float(n.as_f64().unwrap_or(f64::NAN)));
            } else {
                out.push_str(&n.to_string());
            }
        }
        Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            out.push_str("[\n");
            for (i, item) in items.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                write_value(item, indent + 1, out);
                out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push_str("{\n");
            for (i, k) in keys.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                out.push_str(&Value::String((*k).clone()).to_string());
                out.push_str(": ");
                write_value(&map[*k], indent + 1, out);
                out.push_str(if i + 1 < keys.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push('}');
        }
    }
}

pub fn rate_json(report: &RateReport) -> Result<String> {
    to_canonical_json(report)
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| LabError::io(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| LabError::io(path, e))
}

pub fn load_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| LabError::Parse(format!("{}: {e}", path.display())))
}

pub fn load_rate_report(path: &Path) -> Result<RateReport> {
    load_json(path)
}

/// Log–log chart of per-m median errors with reference slopes through the
/// first median.
pub fn rate_svg(report: &RateReport) -> String {
    let (w, h, pad) = (640.0, 420.0, 56.0);
    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\" font-family=\"sans-serif\" font-size=\"12\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    );
    let pts: Vec<(f64, f64)> = report
        .medians
        .iter()
        .map(|r| ((r.m as f64).ln(), r.median_error.ln()))
        .collect();
    if pts.len() < 2 {
        s.push_str("<text x=\"20\" y=\"40\">not enough points</text>\n</svg>\n");
        return s;
    }
    let (x0, x1) = (pts[0].0, pts[pts.len() - 1].0);
    let refs = [
        ("lower", -report.reference.lower_exp, "#c44"),
        ("upper", -report.reference.upper_exp, "#48c"),
    ];
    let mut ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
    for (_, slope, _) in refs {
        ys.push(pts[0].1 + slope * (x1 - x0));
    }
    let (y0, y1) = ys
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &y| (a.min(y), b.max(y)));
    let (y0, y1) = if y1 > y0 { (y0, y1) } else { (y0 - 1.0, y1 + 1.0) };
    let sx = |x: f64| pad + (x - x0) / (x1 - x0) * (w - 2.0 * pad);
    let sy = |y: f64| h - pad - (y - y0) / (y1 - y0) * (h - 2.0 * pad);
    let _ = writeln!(
        s,
        "<line x1=\"{pad}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n<line x1=\"{pad}\" y1=\"{pad}\" x2=\"{pad}\" y2=\"{}\" stroke=\"black\"/>",
        h - pad,
        w - pad,
        h - pad,
        h - pad
    );
    for (name, slope, colour) in refs {
        let _ = writeln!(
            s,
            "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"{colour}\" stroke-dasharray=\"6 4\"/><text x=\"{:.2}\" y=\"{:.2}\" fill=\"{colour}\">{name} {slope:.3}</text>",
            sx(x0),
            sy(pts[0].1),
            sx(x1),
            sy(pts[0].1 + slope * (x1 - x0)),
            sx(x1) - 90.0,
            sy(pts[0].1 + slope * (x1 - x0)) - 6.0
        );
    }
    let path: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
    let _ = writeln!(
        s,
        "<polyline points=\"{}\" fill=\"none\" stroke=\"black\" stroke-width=\"2\"/>",
        path.join(" ")
    );
    for (r, &(x, y)) in report.medians.iter().zip(&pts) {
        let _ = writeln!(
            s,
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\"/><text x=\"{:.2}\" y=\"{}\" text-anchor=\"middle\">{}</text>",
            sx(x),
            sy(y),
            sx(x),
            h - pad + 16.0,
            r.m
        );
    }
    let slope = report.slope.map(|v| format!("{v:.3}")).unwrap_or_else(|| "n/a".into());
    let _ = writeln!(
        s,
        "<text x=\"{pad}\" y=\"24\">median misclassification error vs m (log-log), slope {slope}</text>"
    );
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::{report_from_records, ExperimentConfig, RateRecord};

    fn report(records: Vec<RateRecord>) -> RateReport {
        report_from_records(&ExperimentConfig::rate_sweep(), records).unwrap()
    }

    fn rec(m: usize, seed: u64, e: f64) -> RateRecord {
        RateRecord {
            m,
            seed,
            achieved_hinge_risk: Some(e / 3.0),
            misclass_error: Some(e),
            mc_half_width: Some(0.1 * e),
            flags: vec![],
            error: None,
        }
    }

    #[test]
    fn empty_report_is_header_only() {
        assert_eq!(rate_csv(&report(vec![])), format!("{RATE_CSV_HEADER}\n"));
    }

    #[test]
    fn json_round_trip_is_exact() {
        let mut records = Vec::new();
        for (i, m) in [64, 128, 256].into_iter().enumerate() {
            for s in 0..3 {
                records.push(rec(m, s, 0.1 / (i as f64 + 1.0) + 1e-3 * s as f64 + 1.0 / 3.0 * 1e-7));
            }
        }
        records[0].flags.push("floored".into());
        let r = report(records);
        let text = rate_json(&r).unwrap();
        let back: RateReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back, r);
        assert_eq!(rate_json(&back).unwrap(), text);
        assert_eq!(rate_csv(&back), rate_csv(&r));
        assert!(text.find("\"aggregation\"").unwrap() < text.find("\"config\"").unwrap());
    }

    #[test]
    fn svg_is_well_formed() {
        let r = report(
            (0..9)
                .map(|k| rec([64, 128, 256][k / 3], k as u64, 0.2 / (1 + k / 3) as f64))
                .collect(),
        );
        let svg = rate_svg(&r);
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("polyline"));
    }
}
