//! Numeric tables and the CSV dialect used for every data file.
//!
//! Comma separated, `.` decimal, one header row, LF line endings. Optional
//! metadata lines `# key=value` precede the header. Values are written in
//! shortest round-trip form so a file read back reproduces the exact bits.

use std::fmt::Write as _;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub metadata: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self { metadata: Vec::new(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn with_meta(mut self, key: &str, value: impl ToString) -> Self {
        self.metadata.push((key.to_string(), value.to_string()));
        self
    }

    pub fn push(&mut self, row: Vec<f64>) {
        assert_eq!(row.len(), self.columns.len(), "row width does not match the header");
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.metadata.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.metadata {
            let _ = writeln!(out, "# {k}={v}");
        }
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            for (i, x) in row.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&format_value(*x));
            }
            out.push('\n');
        }
        out
    }

    pub fn parse_csv(text: &str) -> Result<Self, String> {
        let mut table = Table::default();
        let mut header = false;
        for (lineno, line) in text.lines().enumerate() {
            if line.is_empty() {
                continue;
            }
            if !header {
                if let Some(meta) = line.strip_prefix("# ") {
                    let (k, v) = meta.split_once('=').ok_or_else(|| format!("line {}: bad metadata", lineno + 1))?;
                    table.metadata.push((k.to_string(), v.to_string()));
                    continue;
                }
                table.columns = line.split(',').map(str::to_string).collect();
                header = true;
                continue;
            }
            let row = line
                .split(',')
                .map(|f| parse_value(f).ok_or_else(|| format!("line {}: bad number `{f}`", lineno + 1)))
                .collect::<Result<Vec<_>, _>>()?;
            if row.len() != table.columns.len() {
                return Err(format!("line {}: {} fields, header has {}", lineno + 1, row.len(), table.columns.len()));
            }
            table.rows.push(row);
        }
        if !header {
            return Err("missing header row".into());
        }
        Ok(table)
    }
}

/// Plain decimal in the usual range, exponent form for very small or very
/// large magnitudes. Both are shortest round-trip.
pub fn format_value(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let a = x.abs();
    if a == 0.0 || (1e-4..1e15).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

fn parse_value(s: &str) -> Option<f64> {
    match s {
        "nan" => Some(f64::NAN),
        "inf" => Some(f64::INFINITY),
        "-inf" => Some(f64::NEG_INFINITY),
        _ => s.parse().ok(),
    }
}
