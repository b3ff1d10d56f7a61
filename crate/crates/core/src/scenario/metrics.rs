//! Metrics records and their CSV / JSONL serialization.
//!
//! CSV columns, in order:
//!
//! ```text
//! scenario,env,step,time,stability_error,pos_drift,ang_drift,iterations,
//! residual,contacts,kinetic_energy,momentum_x,momentum_y,momentum_z,slip,
//! retained,label,value
//! ```
//!
//! followed by `steps_per_sec` when timing is requested. Absent values are
//! empty cells (CSV) or `null` (JSONL). Reals are written with 17
//! significant digits; non-finite reals become `NaN`/`inf`/`-inf` in CSV
//! and `null` in JSONL. Timing is wall-clock and therefore left out by
//! default so that files are byte-reproducible.

use std::fmt::Write as _;
use std::io::Write;

use crate::linalg::{Quat, Vec3};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MetricsFormat {
    Csv,
    Jsonl,
}

impl std::str::FromStr for MetricsFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(MetricsFormat::Csv),
            "jsonl" => Ok(MetricsFormat::Jsonl),
            _ => Err(format!("unknown format {s:?}, expected csv or jsonl")),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct MetricsRecord {
    pub scenario: String,
    pub env: usize,
    pub step: u64,
    pub time: f64,
    pub stability_error: Option<f64>,
    pub pos_drift: Option<f64>,
    pub ang_drift: Option<f64>,
    pub iterations: Option<u64>,
    pub residual: Option<f64>,
    pub contacts: Option<u64>,
    pub kinetic_energy: Option<f64>,
    pub momentum: Option<Vec3>,
    pub slip: Option<f64>,
    pub retained: Option<bool>,
    pub label: Option<String>,
    pub value: Option<f64>,
    pub steps_per_sec: Option<f64>,
}

pub const COLUMNS: [&str; 18] = [
    "scenario",
    "env",
    "step",
    "time",
    "stability_error",
    "pos_drift",
    "ang_drift",
    "iterations",
    "residual",
    "contacts",
    "kinetic_energy",
    "momentum_x",
    "momentum_y",
    "momentum_z",
    "slip",
    "retained",
    "label",
    "value",
];

enum Cell<'a> {
    Str(&'a str),
    Int(Option<u64>),
    Real(Option<f64>),
    Bool(Option<bool>),
}

fn cells(r: &MetricsRecord, timing: bool) -> Vec<(&'static str, Cell<'_>)> {
    let m = r.momentum.map(|m| m.to_array());
    let mut v = vec![
        ("scenario", Cell::Str(&r.scenario)),
        ("env", Cell::Int(Some(r.env as u64))),
        ("step", Cell::Int(Some(r.step))),
        ("time", Cell::Real(Some(r.time))),
        ("stability_error", Cell::Real(r.stability_error)),
        ("pos_drift", Cell::Real(r.pos_drift)),
        ("ang_drift", Cell::Real(r.ang_drift)),
        ("iterations", Cell::Int(r.iterations)),
        ("residual", Cell::Real(r.residual)),
        ("contacts", Cell::Int(r.contacts)),
        ("kinetic_energy", Cell::Real(r.kinetic_energy)),
        ("momentum_x", Cell::Real(m.map(|m| m[0]))),
        ("momentum_y", Cell::Real(m.map(|m| m[1]))),
        ("momentum_z", Cell::Real(m.map(|m| m[2]))),
        ("slip", Cell::Real(r.slip)),
        ("retained", Cell::Bool(r.retained)),
        ("label", Cell::Str(r.label.as_deref().unwrap_or(""))),
        ("value", Cell::Real(r.value)),
    ];
    if timing {
        v.push(("steps_per_sec", Cell::Real(r.steps_per_sec)));
    }
    v
}

fn real(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_cell(c: &Cell<'_>, out: &mut String) {
    match c {
        Cell::Str(s) if s.contains([',', '"', '\n']) => {
            let _ = write!(out, "\"{}\"", s.replace('"', "\"\""));
        }
        Cell::Str(s) => out.push_str(s),
        Cell::Int(Some(i)) => {
            let _ = write!(out, "{i}");
        }
        Cell::Real(Some(x)) if x.is_nan() => out.push_str("NaN"),
        Cell::Real(Some(x)) if x.is_infinite() => out.push_str(if *x > 0.0 { "inf" } else { "-inf" }),
        Cell::Real(Some(x)) => out.push_str(&real(*x)),
        Cell::Bool(Some(b)) => out.push_str(if *b { "true" } else { "false" }),
        _ => {}
    }
}

fn json_str(s: &str, out: &mut String) {
    out.push('"');
    for ch in s.chars() {
        match ch {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            c if (c as u32) < 0x20 => {
                let _ = write!(out, "\\u{:04x}", c as u32);
            }
            c => out.push(c),
        }
    }
    out.push('"');
}

fn json_cell(c: &Cell<'_>, out: &mut String) {
    match c {
        Cell::Str(s) => json_str(s, out),
        Cell::Int(Some(i)) => {
            let _ = write!(out, "{i}");
        }
        Cell::Real(Some(x)) if x.is_finite() => out.push_str(&real(*x)),
        Cell::Bool(Some(b)) => out.push_str(if *b { "true" } else { "false" }),
        _ => out.push_str("null"),
    }
}

/// Writes records as CSV (with a header row) or JSONL. With `timing` a
/// `steps_per_sec` column is appended.
pub fn write_metrics<W: Write>(records: &[MetricsRecord], format: MetricsFormat, timing: bool, mut w: W) -> std::io::Result<()> {
    let mut out = String::new();
    match format {
        MetricsFormat::Csv => {
            out.push_str(&COLUMNS.join(","));
            if timing {
                out.push_str(",steps_per_sec");
            }
            out.push('\n');
            for r in records {
                for (i, (_, c)) in cells(r, timing).iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    csv_cell(c, &mut out);
                }
                out.push('\n');
            }
        }
        MetricsFormat::Jsonl => {
            for r in records {
                out.push('{');
                for (i, (k, c)) in cells(r, timing).iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    json_str(k, &mut out);
                    out.push(':');
                    json_cell(c, &mut out);
                }
                out.push_str("}\n");
            }
        }
    }
    w.write_all(out.as_bytes())
}

/// Mean positional drift, mean geodesic orientation drift and their
/// combination `√(Δp² + Δθ²)` between two pose lists.
pub fn drift(poses: &[(Vec3, Quat)], reference: &[(Vec3, Quat)]) -> (f64, f64, f64) {
    assert_eq!(poses.len(), reference.len(), "pose lists cover different bodies");
    if poses.is_empty() {
        return (0.0, 0.0, 0.0);
    }
    let n = poses.len() as f64;
    let dp = poses.iter().zip(reference).map(|(a, b)| (a.0 - b.0).norm()).sum::<f64>() / n;
    let dth = poses.iter().zip(reference).map(|(a, b)| a.1.angle_to(b.1)).sum::<f64>() / n;
    ((dp * dp + dth * dth).sqrt(), dp, dth)
}

pub fn stability_error(poses: &[(Vec3, Quat)], reference: &[(Vec3, Quat)]) -> f64 {
    drift(poses, reference).0
}
