//! Output tables. CSV columns are fixed; JSON output is one object per line
//! with the same keys.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::Path;

use anyhow::{Context, Result};
use clap::ValueEnum;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Column order of the ratio report.
pub const RATIO_COLUMNS: [&str; 9] = [
    "q",
    "bc",
    "ratio_bootstrap",
    "ratio_closed_form",
    "ratio_lattice_per_L",
    "ratio_extrapolated_deg2",
    "ratio_extrapolated_deg3",
    "crossing_residual",
    "flag",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioRow {
    pub q: f64,
    pub bc: &'static str,
    pub ratio_bootstrap: Option<f64>,
    /// Wired only: −sin(πβ²)/cos(π/(2β²)).
    pub ratio_closed_form: Option<f64>,
    #[serde(rename = "ratio_lattice_per_L")]
    pub ratio_lattice_per_l: BTreeMap<usize, f64>,
    pub ratio_extrapolated_deg2: Option<f64>,
    pub ratio_extrapolated_deg3: Option<f64>,
    pub crossing_residual: Option<f64>,
    /// Semicolon-separated flags; empty when nothing to report.
    pub flag: String,
}

/// 15 significant digits, fixed layout.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.14e}")
    } else {
        x.to_string()
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

impl RatioRow {
    fn csv(&self) -> String {
        let lattice: Vec<String> = self.ratio_lattice_per_l.iter().map(|(l, v)| format!("{l}:{}", num(*v))).collect();
        [
            num(self.q),
            self.bc.to_string(),
            opt(self.ratio_bootstrap),
            opt(self.ratio_closed_form),
            lattice.join(";"),
            opt(self.ratio_extrapolated_deg2),
            opt(self.ratio_extrapolated_deg3),
            opt(self.crossing_residual),
            self.flag.clone(),
        ]
        .join(",")
    }
}

fn sink(out: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(io::BufWriter::new(fs::File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(io::stdout().lock()),
    })
}

pub fn write_ratio(rows: &[RatioRow], format: Format, out: Option<&Path>) -> Result<()> {
    let mut w = sink(out)?;
    match format {
        Format::Csv => {
            writeln!(w, "{}", RATIO_COLUMNS.join(","))?;
            for r in rows {
                writeln!(w, "{}", r.csv())?;
            }
        }
        Format::Json => {
            for r in rows {
                writeln!(w, "{}", serde_json::to_string(r)?)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Generic numeric table.
pub fn write_table(header: &[&str], rows: &[Vec<f64>], format: Format, out: Option<&Path>) -> Result<()> {
    let mut w = sink(out)?;
    match format {
        Format::Csv => {
            writeln!(w, "{}", header.join(","))?;
            for r in rows {
                writeln!(w, "{}", r.iter().map(|&x| num(x)).collect::<Vec<_>>().join(","))?;
            }
        }
        Format::Json => {
            for r in rows {
                let obj: serde_json::Map<String, serde_json::Value> =
                    header.iter().zip(r).map(|(k, v)| (k.to_string(), serde_json::json!(v))).collect();
                writeln!(w, "{}", serde_json::Value::Object(obj))?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Structured record on standard error.
pub fn diagnostic(level: &str, message: &str) {
    eprintln!("{}", serde_json::json!({ "level": level, "message": message }));
}
