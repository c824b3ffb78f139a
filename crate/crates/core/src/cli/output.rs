//! CSV emission with a `#` preamble.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::config::{RunConfig, END_OF_CONFIG};
use super::CliError;

/// Scientific notation with 13 significant digits and a signed two-digit
/// exponent, e.g. `9.030000000000e+00`. Non-finite values print as `nan`,
/// `inf` or `-inf`.
pub fn sci(x: f64) -> String {
    sci_digits(x, 12)
}

/// Like [`sci`] with 17 significant digits, enough to read back the same
/// `f64`; used for config values in the preamble.
pub fn sci_exact(x: f64) -> String {
    sci_digits(x, 16)
}

fn sci_digits(x: f64, decimals: usize) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let s = format!("{x:.decimals$e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.abs())
}

/// One output table.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub file_name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    /// `key = value` facts about this table, written after the config block.
    pub notes: Vec<(String, String)>,
}

impl Table {
    pub fn new(file_name: impl Into<String>, columns: &[&str]) -> Self {
        Self {
            file_name: file_name.into(),
            columns: columns.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn note(&mut self, key: &str, value: impl Into<String>) {
        self.notes.push((key.into(), value.into()));
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }

    pub fn render(&self, command: &str, cfg: &RunConfig) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# magblock {command}");
        for line in cfg.to_text().lines() {
            let _ = writeln!(out, "# {line}");
        }
        let _ = writeln!(out, "# {END_OF_CONFIG}");
        for (k, v) in &self.notes {
            let _ = writeln!(out, "# {k}: {v}");
        }
        let _ = writeln!(out, "{}", self.columns.join(","));
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|&x| sci(x)).collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }
}

/// Gnuplot stub plotting the second column against the first for each table.
fn plot_script(tables: &[Table]) -> String {
    let mut out = String::from("# gnuplot -p plot.gp\nset datafile separator ','\nset datafile commentschars '#'\n");
    out.push_str("set key autotitle columnhead\nset logscale y\n");
    for t in tables {
        let _ = writeln!(
            out,
            "set xlabel '{}'\nset ylabel '{}'\nplot '{}' using 1:2 with lines\npause -1",
            t.columns[0], t.columns[1], t.file_name
        );
    }
    out
}

/// Writes every table plus `plot.gp` under `cfg.output`; returns the paths.
pub fn write_tables(command: &str, cfg: &RunConfig, tables: &[Table]) -> Result<Vec<PathBuf>, CliError> {
    let dir: &Path = &cfg.output;
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let mut written = Vec::new();
    for t in tables {
        let path = dir.join(&t.file_name);
        fs::write(&path, t.render(command, cfg)).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        written.push(path);
    }
    let path = dir.join("plot.gp");
    fs::write(&path, plot_script(tables)).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Ok(written)
}
