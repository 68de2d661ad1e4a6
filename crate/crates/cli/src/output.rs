//! CSV and JSON emission. Floats carry 9 significant digits everywhere so
//! identical runs produce identical bytes.

use std::path::Path;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use entrograph::growth::{format_significant, GrowthClass};
use serde_json::{json, Value};

use crate::error::CliError;

pub const DIGITS: usize = 9;

pub fn sig(x: f64) -> String {
    format_significant(x, DIGITS)
}

/// `x` rounded to 9 significant digits; `null` when not finite.
pub fn num(x: f64) -> Value {
    sig(x).parse::<f64>().ok().filter(|v| v.is_finite()).map_or(Value::Null, Value::from)
}

/// `sig` with a trailing `.0` on whole numbers, for terminal output.
pub fn text_num(x: f64) -> String {
    let s = sig(x);
    if s.chars().all(|c| c.is_ascii_digit() || c == '-') {
        format!("{s}.0")
    } else {
        s
    }
}

pub fn class_json(c: &GrowthClass) -> Value {
    json!({
        "label": c.label.to_string(),
        "degree": num(c.degree),
        "rate": num(c.rate),
        "residual": num(c.fit_residual),
    })
}

/// The part of every report excluded from byte comparisons.
pub fn timing_json(elapsed: Duration) -> Value {
    let ts = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    json!({ "timestamp": ts, "wall_time_s": num(elapsed.as_secs_f64()) })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Csv {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Csv {
    pub fn new(header: &[&'static str]) -> Csv {
        Csv {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.join(","));
            out.push('\n');
        }
        out
    }
}

pub fn render_json(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
    s.push('\n');
    s
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        reason: e.to_string(),
    })
}

/// Writes both outputs at the end of a run; the JSON report goes to stdout
/// when no path is given.
pub fn emit(csv: Option<(&Path, &Csv)>, json_path: Option<&Path>, report: &Value) -> Result<(), CliError> {
    if let Some((p, c)) = csv {
        write(p, &c.render())?;
    }
    match json_path {
        Some(p) => write(p, &render_json(report)),
        None => {
            print!("{}", render_json(report));
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers() {
        assert_eq!(sig(1.0 / 3.0), "0.333333333");
        assert_eq!(num(2.0), json!(2.0));
        assert_eq!(num(f64::NAN), Value::Null);
        assert_eq!(text_num(2.0), "2.0");
        assert_eq!(text_num(0.5), "0.5");
        assert_eq!(text_num(1e300), "1e+300");
    }

    #[test]
    fn csv_layout() {
        let mut c = Csv::new(&["n", "c"]);
        c.push(vec!["1".into(), "2".into()]);
        assert_eq!(c.render(), "n,c\n1,2\n");
        assert_eq!(Csv::new(&["a"]).render(), "a\n");
    }
}
