use crate::error::{invalid, Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

/// One instantiated inequality lhs ≤ rhs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundRow {
    /// Perturbation magnitude (or mixture weight, instance index) of the row.
    pub t: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub pass: bool,
    /// Auxiliary constants (Lipschitz constants, certified C, W1 values, slack).
    pub constants: BTreeMap<String, f64>,
    /// Which inequality and instance the row belongs to.
    pub label: String,
}

/// Additive tolerance 1e−7 (1 + |rhs|).
pub fn default_tolerance(rhs: f64) -> f64 {
    1e-7 * (1.0 + rhs.abs())
}

impl BoundRow {
    /// Row with pass = lhs ≤ rhs + 1e−7 (1 + |rhs|) + slack.
    pub fn new(label: impl Into<String>, t: f64, lhs: f64, rhs: f64, slack: f64) -> Self {
        let ratio = if rhs > 0.0 {
            lhs / rhs
        } else if lhs <= 0.0 {
            0.0
        } else {
            f64::MAX
        };
        let pass = lhs.is_finite() && !rhs.is_nan() && lhs <= rhs + default_tolerance(rhs) + slack;
        let mut constants = BTreeMap::new();
        if slack != 0.0 {
            constants.insert("slack".to_string(), slack);
        }
        BoundRow { t, lhs, rhs, ratio, pass, constants, label: label.into() }
    }

    /// Row with pass = lhs ≤ rhs exactly, for checks whose rhs is already a tolerance.
    pub fn strict(label: impl Into<String>, t: f64, lhs: f64, rhs: f64) -> Self {
        let mut row = Self::new(label, t, lhs, rhs, 0.0);
        row.pass = lhs.is_finite() && lhs <= rhs;
        row
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.constants.insert(key.to_string(), value);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportSummary {
    pub pass_count: usize,
    pub total: usize,
    pub worst_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Report {
    pub rows: Vec<BoundRow>,
    pub summary: ReportSummary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Csv,
    Json,
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            _ => Err(Error::InvalidParameter(format!("unknown report format '{s}' (expected csv or json)"))),
        }
    }
}

pub fn summarize(rows: &[BoundRow]) -> ReportSummary {
    ReportSummary {
        pass_count: rows.iter().filter(|r| r.pass).count(),
        total: rows.len(),
        worst_ratio: rows.iter().map(|r| r.ratio).fold(0.0, f64::max),
    }
}

/// Formats with 12 significant digits.
pub fn sig12(x: f64) -> String {
    if x == 0.0 {
        return "0.0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let e = x.abs().log10().floor() as i32;
    if (-5..12).contains(&e) {
        format!("{:.*}", (11 - e).max(0) as usize, x)
    } else {
        format!("{x:.11e}")
    }
}

fn check_finite(rows: &[BoundRow]) -> Result<()> {
    for r in rows {
        let vals = [r.t, r.lhs, r.rhs, r.ratio].into_iter().chain(r.constants.values().copied());
        if vals.into_iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!("non-finite value in report row '{}'", r.label)));
        }
    }
    Ok(())
}

/// CSV text: header, one line per row, then a summary comment line.
pub fn render_csv(rows: &[BoundRow]) -> Result<String> {
    if rows.is_empty() {
        return invalid("cannot emit an empty report");
    }
    check_finite(rows)?;
    let keys: BTreeSet<&String> = rows.iter().flat_map(|r| r.constants.keys()).collect();
    let mut out = String::from("t,lhs,rhs,ratio,pass");
    for k in &keys {
        out.push(',');
        out.push_str(k);
    }
    out.push_str(",label\n");
    for r in rows {
        write!(out, "{},{},{},{},{}", sig12(r.t), sig12(r.lhs), sig12(r.rhs), sig12(r.ratio), r.pass).unwrap();
        for k in &keys {
            out.push(',');
            if let Some(v) = r.constants.get(*k) {
                out.push_str(&sig12(*v));
            }
        }
        writeln!(out, ",{}", r.label.replace(',', ";")).unwrap();
    }
    let s = summarize(rows);
    writeln!(out, "# summary pass_count={} total={} worst_ratio={}", s.pass_count, s.total, sig12(s.worst_ratio))
        .unwrap();
    Ok(out)
}

pub fn render_json(rows: &[BoundRow]) -> Result<String> {
    if rows.is_empty() {
        return invalid("cannot emit an empty report");
    }
    check_finite(rows)?;
    let report = Report { rows: rows.to_vec(), summary: summarize(rows) };
    Ok(serde_json::to_string_pretty(&report)? + "\n")
}

/// Writes the report; the file ends with the summary.
pub fn emit_report(rows: &[BoundRow], path: &Path, format: ReportFormat) -> Result<()> {
    let text = match format {
        ReportFormat::Csv => render_csv(rows)?,
        ReportFormat::Json => render_json(rows)?,
    };
    std::fs::write(path, text)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

pub fn parse_json_report(text: &str) -> Result<Report> {
    Ok(serde_json::from_str(text)?)
}
