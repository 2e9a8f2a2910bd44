//! Artifact bundles: `summary.kv`, one CSV per table, the resolved config and
//! a SHA-256 manifest.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

pub const SUMMARY_FILE: &str = "summary.kv";
pub const CONFIG_FILE: &str = "config.toml";
pub const MANIFEST_FILE: &str = "manifest.sha256";
pub const CHECKS_TABLE: &str = "checks";

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("CSV error in {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl Cell {
    /// Floats carry 17 significant digits.
    pub fn render(&self) -> String {
        match self {
            Cell::Num(v) => format_float(*v),
            Cell::Int(v) => v.to_string(),
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
        Cell::Int(v as i64)
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

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Text(if v { "true" } else { "false" }.into())
    }
}

pub fn format_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    /// Written as `# key = value` lines above the header.
    pub meta: Vec<(String, String)>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self {
            name: name.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            ..Self::default()
        }
    }

    pub fn meta(mut self, key: &str, value: impl ToString) -> Self {
        self.meta.push((key.into(), value.to_string()));
        self
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len(), "row width for table {}", self.name);
        self.rows.push(row);
    }

    pub fn file_name(&self) -> String {
        format!("{}.csv", self.name)
    }
}

/// One scenario assertion.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    /// Human-readable acceptance rule, e.g. `<= 1e-6`.
    pub rule: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn at_most(name: &str, value: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            value,
            rule: format!("<= {bound:e}"),
            passed: value <= bound,
            detail: String::new(),
        }
    }

    pub fn at_least(name: &str, value: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            value,
            rule: format!(">= {bound:e}"),
            passed: value >= bound,
            detail: String::new(),
        }
    }

    pub fn positive(name: &str, value: f64) -> Self {
        Self {
            name: name.into(),
            value,
            rule: "> 0".into(),
            passed: value > 0.0,
            detail: String::new(),
        }
    }

    pub fn holds(name: &str, passed: bool) -> Self {
        Self {
            name: name.into(),
            value: if passed { 1.0 } else { 0.0 },
            rule: "true".into(),
            passed,
            detail: String::new(),
        }
    }

    /// A pipeline that stopped with an error.
    pub fn error(name: &str, message: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            value: f64::NAN,
            rule: "completes".into(),
            passed: false,
            detail: message.into(),
        }
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = detail.into();
        self
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Report {
    pub command: String,
    pub summary: Vec<(String, String)>,
    pub tables: Vec<Table>,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.into(),
            ..Self::default()
        }
    }

    pub fn kv(&mut self, key: &str, value: impl ToString) {
        self.summary.push((key.into(), value.to_string()));
    }

    pub fn num(&mut self, key: &str, value: f64) {
        self.kv(key, format_float(value));
    }

    pub fn check(&mut self, check: Check) {
        self.checks.push(check);
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    fn checks_table(&self) -> Table {
        let mut t = Table::new(CHECKS_TABLE, &["name", "value", "rule", "passed", "detail"]);
        for c in &self.checks {
            t.push(vec![
                c.name.as_str().into(),
                c.value.into(),
                c.rule.as_str().into(),
                c.passed.into(),
                c.detail.as_str().into(),
            ]);
        }
        t
    }

    pub fn summary_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "command = {}", self.command);
        let _ = writeln!(out, "status = {}", if self.passed() { "pass" } else { "fail" });
        let _ = writeln!(out, "checks_total = {}", self.checks.len());
        let _ = writeln!(out, "checks_failed = {}", self.failures().count());
        for (k, v) in &self.summary {
            let _ = writeln!(out, "{k} = {}", v.replace('\n', " "));
        }
        out
    }
}

/// Writes the bundle into `dir` (created if needed) and returns the written
/// paths, manifest last.
pub fn emit_report(report: &Report, config_text: Option<&str>, dir: &Path) -> Result<Vec<PathBuf>, ReportError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| ReportError::Io { path, source }
    };
    fs::create_dir_all(dir).map_err(io(dir))?;
    let mut written: Vec<(String, Vec<u8>)> = Vec::new();
    written.push((SUMMARY_FILE.into(), report.summary_text().into_bytes()));
    if let Some(text) = config_text {
        written.push((CONFIG_FILE.into(), text.as_bytes().to_vec()));
    }
    let checks = (!report.checks.is_empty()).then(|| report.checks_table());
    for table in report.tables.iter().chain(checks.as_ref()) {
        let path = dir.join(table.file_name());
        let bytes = render_csv(table).map_err(|source| ReportError::Csv { path, source })?;
        written.push((table.file_name(), bytes));
    }
    let mut paths = Vec::with_capacity(written.len() + 1);
    for (name, bytes) in &written {
        let path = dir.join(name);
        fs::write(&path, bytes).map_err(io(&path))?;
        paths.push(path);
    }
    let manifest = render_manifest(&written);
    let path = dir.join(MANIFEST_FILE);
    fs::write(&path, manifest).map_err(io(&path))?;
    paths.push(path);
    Ok(paths)
}

/// `sha256sum`-style lines sorted by file name.
fn render_manifest(files: &[(String, Vec<u8>)]) -> String {
    let mut entries: Vec<(&str, String)> = files
        .iter()
        .map(|(name, bytes)| (name.as_str(), hex::encode(Sha256::digest(bytes))))
        .collect();
    entries.sort();
    entries.iter().map(|(name, hash)| format!("{hash}  {name}\n")).collect()
}

pub fn render_csv(table: &Table) -> Result<Vec<u8>, csv::Error> {
    let mut out = Vec::new();
    out.extend_from_slice(format!("# table = {}\n", table.name).as_bytes());
    for (k, v) in &table.meta {
        out.extend_from_slice(format!("# {k} = {}\n", v.replace('\n', " ")).as_bytes());
    }
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(&table.columns)?;
    for row in &table.rows {
        writer.write_record(row.iter().map(Cell::render))?;
    }
    writer.into_inner().map_err(|e| csv::Error::from(e.into_error()))
}

/// Metadata pairs, header and raw cells of a CSV file.
pub type ParsedCsv = (Vec<(String, String)>, Vec<String>, Vec<Vec<String>>);

/// Reads a CSV written by [`render_csv`].
pub fn parse_csv(text: &str) -> Result<ParsedCsv, csv::Error> {
    let meta = text
        .lines()
        .take_while(|l| l.starts_with('#'))
        .filter_map(|l| l.trim_start_matches('#').split_once('='))
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .collect();
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let header = reader.headers()?.iter().map(String::from).collect();
    let rows = reader
        .records()
        .map(|r| r.map(|rec| rec.iter().map(String::from).collect()))
        .collect::<Result<_, _>>()?;
    Ok((meta, header, rows))
}
