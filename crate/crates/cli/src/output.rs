use std::fmt::Write as _;
use std::io::Write as _;
use std::path::PathBuf;

use clap::{Args, ValueEnum};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Markdown,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Output format; each command has its own default.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Write to this file instead of standard output.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Decimal places in markdown output.
    #[arg(long, default_value_t = 4)]
    pub precision: usize,
}

impl OutputArgs {
    pub fn format_or(&self, default: Format) -> Format {
        self.format.unwrap_or(default)
    }

    pub fn emit(&self, text: &str) -> std::io::Result<()> {
        match &self.out {
            Some(path) => std::fs::write(path, text),
            None => {
                let mut stdout = std::io::stdout().lock();
                stdout.write_all(text.as_bytes())?;
                stdout.flush()
            }
        }
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

/// Values below this fraction render as `~0%` in markdown.
pub const APPROX_ZERO: f64 = 5e-5;

pub fn percent(fraction: f64, precision: usize) -> String {
    if fraction < APPROX_ZERO {
        "~0%".into()
    } else {
        format!("{:.precision$}%", 100.0 * fraction)
    }
}

/// `0.02` as `2%`, `0.125` as `12.5%`.
fn alpha_label(alpha: f64) -> String {
    let s = format!("{:.4}", 100.0 * alpha);
    let s = s.trim_end_matches('0').trim_end_matches('.');
    format!("{s}%")
}

/// Probabilities indexed by attacker share (rows) and confirmation count
/// (columns). `None` marks a cell that could not be computed.
#[derive(Debug, Clone, Serialize)]
pub struct Grid {
    pub quantity: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_len: Option<u32>,
    pub alphas: Vec<f64>,
    pub confs: Vec<u32>,
    /// Raw fractions, `values[row][column]`.
    pub values: Vec<Vec<Option<f64>>>,
}

impl Grid {
    pub fn render(&self, format: Format, precision: usize) -> String {
        let mut out = String::new();
        match format {
            Format::Json => return to_json(self),
            Format::Markdown => {
                let head: Vec<String> = self.confs.iter().map(u32::to_string).collect();
                let _ = writeln!(out, "| alpha \\ conf | {} |", head.join(" | "));
                let _ = writeln!(out, "|{}|", vec!["---"; head.len() + 1].join("|"));
                for (alpha, row) in self.alphas.iter().zip(&self.values) {
                    let cells: Vec<String> = row
                        .iter()
                        .map(|v| v.map(|x| percent(x, precision)).unwrap_or_default())
                        .collect();
                    let _ = writeln!(out, "| {} | {} |", alpha_label(*alpha), cells.join(" | "));
                }
            }
            Format::Csv => {
                let head: Vec<String> = self.confs.iter().map(|c| format!("conf_{c}")).collect();
                let _ = writeln!(out, "alpha,{}", head.join(","));
                for (alpha, row) in self.alphas.iter().zip(&self.values) {
                    let cells: Vec<String> = row
                        .iter()
                        .map(|v| v.map(|x| (100.0 * x).to_string()).unwrap_or_default())
                        .collect();
                    let _ = writeln!(out, "{alpha},{}", cells.join(","));
                }
            }
        }
        out
    }
}

/// Two-column markdown table of `(field, value)` rows.
pub fn key_values(rows: &[(&str, String)]) -> String {
    let mut out = String::from("| field | value |\n|---|---|\n");
    for (k, v) in rows {
        let _ = writeln!(out, "| {k} | {v} |");
    }
    out
}

/// Header line and a single CSV row.
pub fn csv_record(rows: &[(&str, String)]) -> String {
    let head: Vec<&str> = rows.iter().map(|r| r.0).collect();
    let vals: Vec<&str> = rows.iter().map(|r| r.1.as_str()).collect();
    format!("{}\n{}\n", head.join(","), vals.join(","))
}
