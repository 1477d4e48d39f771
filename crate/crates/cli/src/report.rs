use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

/// One computed quantity with where it was attained.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRecord {
    pub quantity: String,
    pub value: f64,
    /// Maximizer data, e.g. `delta`/`omega` for Kreiss constants or `t` for
    /// the transient peak.
    pub maximizer: BTreeMap<String, serde_json::Value>,
    pub tolerance: f64,
    pub seconds: f64,
}

impl ReportRecord {
    pub fn new(quantity: impl Into<String>, value: f64, tolerance: f64, seconds: f64) -> Self {
        Self {
            quantity: quantity.into(),
            value,
            maximizer: BTreeMap::new(),
            tolerance,
            seconds,
        }
    }

    pub fn at(mut self, key: &str, value: impl Into<serde_json::Value>) -> Self {
        self.maximizer.insert(key.into(), value.into());
        self
    }
}

/// Left-aligned text columns separated by two spaces.
pub fn table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for r in rows {
        for (w, cell) in widths.iter_mut().zip(r) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut out = String::new();
    let mut line = |cells: Vec<&str>| {
        let mut s = String::new();
        for (i, (c, w)) in cells.iter().zip(&widths).enumerate() {
            if i + 1 == cells.len() {
                s.push_str(c);
            } else {
                let pad = w - c.chars().count();
                let _ = write!(s, "{c}{}  ", " ".repeat(pad));
            }
        }
        out.push_str(s.trim_end());
        out.push('\n');
    };
    line(header.to_vec());
    for r in rows {
        line(r.iter().map(String::as_str).collect());
    }
    out
}

pub fn csv(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for r in rows {
        out.push_str(&r.join(","));
        out.push('\n');
    }
    out
}

fn maximizer_text(m: &BTreeMap<String, serde_json::Value>) -> String {
    m.iter()
        .map(|(k, v)| match v.as_f64() {
            Some(x) => format!("{k}={}", num(x)),
            None => format!("{k}={v}"),
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// Six significant digits, switching to exponent form outside `[1e-3, 1e6)`.
pub fn num(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let a = x.abs();
    if (1e-3..1e6).contains(&a) {
        let digits = (5 - a.log10().floor() as i32).max(0) as usize;
        format!("{x:.digits$}")
    } else {
        format!("{x:.5e}")
    }
}

pub fn records_table(records: &[ReportRecord]) -> String {
    let rows: Vec<Vec<String>> = records
        .iter()
        .map(|r| {
            vec![
                r.quantity.clone(),
                num(r.value),
                if r.tolerance > 0.0 { format!("{:.0e}", r.tolerance) } else { "-".into() },
                format!("{:.3}", r.seconds),
                maximizer_text(&r.maximizer),
            ]
        })
        .collect();
    table(&["quantity", "value", "tol", "seconds", "attained at"], &rows)
}
