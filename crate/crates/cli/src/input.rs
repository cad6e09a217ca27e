//! Delimited text inputs: a feature matrix plus per-sample column files.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};

/// A parsed delimited file with its header and line-numbered records.
pub struct Table {
    pub path: PathBuf,
    pub header: Vec<String>,
    pub records: Vec<(u64, Vec<String>)>,
}

/// Tab if the first non-empty line contains one, otherwise comma.
fn detect_delimiter(text: &str) -> u8 {
    let first = text.lines().find(|l| !l.trim().is_empty() && !l.starts_with('#')).unwrap_or("");
    if first.contains('\t') {
        b'\t'
    } else {
        b','
    }
}

pub fn read_table(path: &Path) -> Result<Table> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(detect_delimiter(&text))
        .has_headers(false)
        .comment(Some(b'#'))
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut header = None;
    let mut records = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            anyhow!("{}:{line}: {e}", path.display())
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        let fields: Vec<String> = rec.iter().map(|f| f.trim().to_string()).collect();
        if fields.iter().all(|f| f.is_empty()) {
            continue;
        }
        if header.is_none() {
            header = Some(fields);
            continue;
        }
        let width = header.as_ref().map_or(0, Vec::len);
        if fields.len() != width {
            bail!("{}:{line}: expected {width} fields, found {}", path.display(), fields.len());
        }
        records.push((line, fields));
    }
    let header = header.ok_or_else(|| anyhow!("{}: file has no header row", path.display()))?;
    Ok(Table { path: path.to_path_buf(), header, records })
}

fn parse_number(table: &Table, line: u64, column: usize, field: &str) -> Result<f64> {
    let v: f64 = field.parse().map_err(|_| {
        anyhow!("{}:{line}: column '{}': cannot parse '{field}' as a number", table.path.display(), table.header[column])
    })?;
    if !v.is_finite() {
        bail!("{}:{line}: column '{}': value '{field}' is not finite", table.path.display(), table.header[column]);
    }
    Ok(v)
}

/// Features in rows, samples in columns; the header names the samples.
pub struct MatrixInput {
    pub samples: Vec<String>,
    pub feature_ids: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

pub fn read_matrix(path: &Path) -> Result<MatrixInput> {
    let table = read_table(path)?;
    if table.header.len() < 2 {
        bail!("{}: header must name the feature column and at least one sample", path.display());
    }
    let samples: Vec<String> = table.header[1..].to_vec();
    let mut seen = HashSet::new();
    if let Some(dup) = samples.iter().find(|s| !seen.insert(s.as_str())) {
        bail!("{}: sample id '{dup}' appears more than once in the header", path.display());
    }
    let mut ids = HashSet::new();
    let mut feature_ids = Vec::with_capacity(table.records.len());
    let mut rows = Vec::with_capacity(table.records.len());
    for (line, fields) in &table.records {
        if !ids.insert(fields[0].clone()) {
            bail!("{}:{line}: duplicate feature id '{}'", path.display(), fields[0]);
        }
        let row = fields[1..]
            .iter()
            .enumerate()
            .map(|(j, f)| parse_number(&table, *line, j + 1, f))
            .collect::<Result<Vec<_>>>()?;
        feature_ids.push(fields[0].clone());
        rows.push(row);
    }
    if rows.is_empty() {
        bail!("{}: no feature rows", path.display());
    }
    Ok(MatrixInput { samples, feature_ids, rows })
}

/// Per-sample values arranged in the order of `samples`.
pub struct Columns {
    pub names: Vec<String>,
    /// `values[j]` holds the fields of sample `samples[j]`.
    pub values: Vec<Vec<String>>,
    table: Table,
    lines: Vec<u64>,
}

/// Reads a file keyed by sample id and aligns it to `samples`.
pub fn read_columns(path: &Path, samples: &[String], matrix_path: &Path) -> Result<Columns> {
    let table = read_table(path)?;
    if table.header.len() < 2 {
        bail!("{}: expected a sample id column and at least one value column", path.display());
    }
    let mut by_id: HashMap<&str, (u64, &Vec<String>)> = HashMap::new();
    for (line, fields) in &table.records {
        if let Some((first, _)) = by_id.insert(fields[0].as_str(), (*line, fields)) {
            bail!("{}:{line}: sample '{}' already given on line {first}", path.display(), fields[0]);
        }
    }
    let wanted: HashSet<&str> = samples.iter().map(String::as_str).collect();
    if let Some((id, (line, _))) = by_id.iter().filter(|(id, _)| !wanted.contains(*id)).min_by_key(|(_, (l, _))| *l) {
        bail!("{}:{line}: sample '{id}' is not in {}", path.display(), matrix_path.display());
    }
    let missing: Vec<&String> = samples.iter().filter(|s| !by_id.contains_key(s.as_str())).collect();
    if let Some(first) = missing.first() {
        bail!(
            "{}: no entry for {} sample(s) of {}, starting with '{first}'",
            path.display(),
            missing.len(),
            matrix_path.display()
        );
    }
    let mut values = Vec::with_capacity(samples.len());
    let mut lines = Vec::with_capacity(samples.len());
    for s in samples {
        let (line, fields) = by_id[s.as_str()];
        values.push(fields[1..].to_vec());
        lines.push(line);
    }
    let names = table.header[1..].to_vec();
    Ok(Columns { names, values, table, lines })
}

impl Columns {
    /// Column `c` parsed as numbers, in sample order.
    pub fn numeric(&self, c: usize) -> Result<Vec<f64>> {
        self.values.iter().zip(&self.lines).map(|(v, &line)| parse_number(&self.table, line, c + 1, &v[c])).collect()
    }

    pub fn single_numeric(&self) -> Result<Vec<f64>> {
        if self.names.len() != 1 {
            bail!("{}: expected exactly one value column, found {}", self.table.path.display(), self.names.len());
        }
        self.numeric(0)
    }

    pub fn single_text(&self) -> Result<Vec<String>> {
        if self.names.len() != 1 {
            bail!("{}: expected exactly one value column, found {}", self.table.path.display(), self.names.len());
        }
        Ok(self.values.iter().map(|v| v[0].clone()).collect())
    }
}
