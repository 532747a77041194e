//! Table and CSV rendering shared by all subcommands.

use std::fmt::Write as _;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Table,
    Csv,
}

/// Columnar result holder; every command reduces to one of these.
#[derive(Debug, Clone)]
pub struct Table {
    columns: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: Vec<S>) -> Self {
        Table { columns: columns.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    /// Two-column key/value table.
    pub fn metrics() -> Self {
        Table::new(vec!["metric", "value"])
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn metric(&mut self, name: &str, value: f64, digits: usize) {
        self.push(vec![name.to_string(), fmt_sig(value, digits)]);
    }

    pub fn metric_int(&mut self, name: &str, value: impl Into<u64>) {
        self.push(vec![name.to_string(), value.into().to_string()]);
    }

    pub fn metric_text(&mut self, name: &str, value: impl Into<String>) {
        self.push(vec![name.to_string(), value.into()]);
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => {
                let mut out = String::new();
                let _ = writeln!(out, "{}", self.columns.join(","));
                for row in &self.rows {
                    let _ = writeln!(out, "{}", row.join(","));
                }
                out
            }
            Format::Table => {
                let mut widths: Vec<usize> =
                    self.columns.iter().map(|c| c.len()).collect();
                for row in &self.rows {
                    for (w, cell) in widths.iter_mut().zip(row) {
                        *w = (*w).max(cell.len());
                    }
                }
                let mut out = String::new();
                let header: Vec<String> = self
                    .columns
                    .iter()
                    .zip(&widths)
                    .map(|(c, w)| format!("{c:<w$}"))
                    .collect();
                let _ = writeln!(out, "{}", header.join("  ").trim_end());
                let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
                let _ = writeln!(out, "{}", rule.join("  "));
                for row in &self.rows {
                    let cells: Vec<String> = row
                        .iter()
                        .zip(&widths)
                        .map(|(c, w)| format!("{c:<w$}"))
                        .collect();
                    let _ = writeln!(out, "{}", cells.join("  ").trim_end());
                }
                out
            }
        }
    }
}

/// Formats to the given number of significant digits, preferring plain
/// decimal notation in a readable magnitude range.
pub fn fmt_sig(value: f64, digits: usize) -> String {
    if value == 0.0 {
        return "0".to_string();
    }
    if !value.is_finite() {
        return value.to_string();
    }
    let digits = digits.max(1);
    let magnitude = value.abs().log10().floor() as i32;
    if magnitude >= -4 && (magnitude as i64) < digits as i64 {
        let decimals = (digits as i32 - 1 - magnitude).max(0) as usize;
        let s = format!("{value:.decimals$}");
        trim_zeros(s)
    } else {
        let s = format!("{value:.*e}", digits - 1);
        // tidy the mantissa: 1.2300000e-5 -> 1.23e-5
        if let Some((mantissa, exp)) = s.split_once('e') {
            format!("{}e{}", trim_zeros(mantissa.to_string()), exp)
        } else {
            s
        }
    }
}

fn trim_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    let trimmed = s.trim_end_matches('0').trim_end_matches('.');
    trimmed.to_string()
}
