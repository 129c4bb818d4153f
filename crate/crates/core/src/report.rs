//! CSV emission shared by the CLI commands and figure runners.
//!
//! Every file starts with `#` comment lines naming units and the scenario
//! digest, then one header row; fields are comma-separated with LF endings.
//! Numbers use fixed formats so identical inputs give identical bytes.

use std::fmt::Write as _;
use std::path::Path;

use crate::capacity::{ScenarioSweep, SweepAxis};
use crate::error::{domain, Error, Result};
use crate::scenario::scenario_digest;

/// Parses `"a:b:step"` (dB) into the inclusive grid `a, a+step, …, ≤ b`.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').map(str::trim).collect();
    let [a, b, step] = parts.as_slice() else {
        return domain(format!("grid must be `start:stop:step`, got `{spec}`"));
    };
    let parse = |s: &str| -> Result<f64> {
        s.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| Error::Domain(format!("bad grid number `{s}`")))
    };
    let (a, b, step) = (parse(a)?, parse(b)?, parse(step)?);
    if !(step > 0.0) || b < a {
        return domain("grid needs step > 0 and stop ≥ start");
    }
    let n = ((b - a) / step + 1e-9).floor() as usize;
    if n > 100_000 {
        return domain("grid has more than 100000 points");
    }
    Ok((0..=n).map(|i| a + step * i as f64).collect())
}

/// Formats a value, writing non-finite values as `NaN`/`inf` consistently.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.9}")
    } else if x.is_nan() {
        "NaN".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// Single CSV field; warnings may contain anything, so quote when needed.
pub fn field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\"").replace('\n', " "))
    } else {
        s.to_string()
    }
}

pub fn sweep_csv(sweep: &ScenarioSweep, title: &str) -> String {
    let digest = scenario_digest(&sweep.scenario);
    let axis = match sweep.axis {
        SweepAxis::Snr => "SNR",
        SweepAxis::Sir => "SIR",
    };
    let mut s = String::new();
    let _ = writeln!(s, "# {title}");
    let _ = writeln!(s, "# axis_db: {axis} in dB; capacities in bits/s/Hz; scenario_digest {digest}");
    s.push_str("axis_db,c_mu_bits,c_gauss_bits,c_su_ref_bits,warnings,scenario_digest\n");
    for p in &sweep.points {
        let mut notes = p.warnings.join("; ");
        if let Some(e) = &p.error {
            notes = if notes.is_empty() { format!("error: {e}") } else { format!("error: {e}; {notes}") };
        }
        let _ = writeln!(
            s,
            "{},{},{},{},{},{digest}",
            num(p.axis_db),
            num(p.c_mu_bits),
            num(p.c_gauss_bits),
            num(p.c_su_ref_bits),
            field(&notes)
        );
    }
    s
}

/// Small table writer: header comments, a header row and rows of fields.
pub struct Table {
    text: String,
}

impl Table {
    pub fn new(comments: &[&str], columns: &[&str]) -> Self {
        let mut text = String::new();
        for c in comments {
            let _ = writeln!(text, "# {c}");
        }
        text.push_str(&columns.join(","));
        text.push('\n');
        Self { text }
    }

    pub fn row(&mut self, fields: &[String]) {
        self.text.push_str(&fields.join(","));
        self.text.push('\n');
    }

    pub fn finish(self) -> String {
        self.text
    }
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    }
    std::fs::write(path, contents).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}
