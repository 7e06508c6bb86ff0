//! Column tables written as CSV with `#` header lines.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(usize),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(v) if v.is_nan() => "nan".into(),
            Cell::Num(v) => format!("{v:e}"),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
            Cell::Text(s) => s.clone(),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}
impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v)
    }
}
impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.into())
    }
}
impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

/// Named columns of equal length plus free-form notes for the header.
#[derive(Debug, Clone)]
pub struct ResultTable {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    pub notes: Vec<String>,
}

impl ResultTable {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self { name: name.into(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new(), notes: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width of table {}", self.name);
        self.rows.push(row);
    }

    pub fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }

    pub fn column(&self, name: &str) -> Option<Vec<&Cell>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| &r[i]).collect())
    }

    /// Full CSV text; the provenance lines precede the notes.
    pub fn to_csv(&self, provenance: &[String]) -> String {
        let mut s = String::new();
        for p in provenance.iter().chain(&self.notes) {
            let _ = writeln!(s, "# {p}");
        }
        let _ = writeln!(s, "# table: {}", self.name);
        let _ = writeln!(s, "{}", self.columns.join(","));
        for r in &self.rows {
            let line: Vec<String> = r.iter().map(Cell::render).collect();
            let _ = writeln!(s, "{}", line.join(","));
        }
        s
    }

    pub fn file_name(&self, prefix: &str) -> PathBuf {
        PathBuf::from(format!("{prefix}_{}.csv", self.name))
    }

    /// Writes `{prefix}_{name}.csv`, creating parent directories.
    pub fn write(&self, prefix: &str, provenance: &[String]) -> Result<PathBuf, CliError> {
        let path = self.file_name(prefix);
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::write(&path, self.to_csv(provenance))?;
        Ok(path)
    }
}

/// Rows of a CSV file as written by [`ResultTable::write`], headers skipped.
pub fn read_body(path: &Path) -> std::io::Result<Vec<Vec<String>>> {
    let text = std::fs::read_to_string(path)?;
    Ok(text.lines().filter(|l| !l.starts_with('#')).map(|l| l.split(',').map(str::to_string).collect()).collect())
}
