//! CSV dataset loading.
//!
//! The first row must be a header. The sensitive attribute is one column,
//! given by name or zero-based index, optionally compared against a number
//! (`Orientation<4`) to produce a binary attribute. Labels are assigned in
//! order of first appearance.

use std::collections::HashMap;
use std::fs::File;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use rfpca_core::data::{degenerate_columns, Dataset};
use rfpca_core::linalg::Matrix;

use crate::error::{AppError, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum ColumnRef {
    Name(String),
    Index(usize),
}

impl ColumnRef {
    fn resolve(&self, header: &[String]) -> Result<usize> {
        match self {
            ColumnRef::Name(name) => header
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| AppError::validation(format!("column '{name}' not found in header"))),
            ColumnRef::Index(i) if *i < header.len() => Ok(*i),
            ColumnRef::Index(i) => Err(AppError::validation(format!(
                "column index {i} out of range (file has {} columns)",
                header.len()
            ))),
        }
    }

    fn parse(s: &str, header: &[String]) -> ColumnRef {
        let s = s.trim();
        if header.iter().any(|h| h == s) {
            return ColumnRef::Name(s.to_string());
        }
        match s.parse::<usize>() {
            Ok(i) => ColumnRef::Index(i),
            Err(_) => ColumnRef::Name(s.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Comparison {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
}

impl Comparison {
    fn apply(self, x: f64, y: f64) -> bool {
        match self {
            Comparison::Lt => x < y,
            Comparison::Le => x <= y,
            Comparison::Gt => x > y,
            Comparison::Ge => x >= y,
            Comparison::Eq => x == y,
        }
    }
}

/// Attribute column, raw or thresholded.
#[derive(Debug, Clone, PartialEq)]
pub struct AttrSpec {
    pub column: String,
    pub threshold: Option<(Comparison, f64)>,
}

impl FromStr for AttrSpec {
    type Err = AppError;

    fn from_str(s: &str) -> Result<Self> {
        const OPS: [(&str, Comparison); 5] = [
            ("<=", Comparison::Le),
            (">=", Comparison::Ge),
            ("==", Comparison::Eq),
            ("<", Comparison::Lt),
            (">", Comparison::Gt),
        ];
        for (token, op) in OPS {
            if let Some((col, value)) = s.split_once(token) {
                let value: f64 = value
                    .trim()
                    .parse()
                    .map_err(|_| AppError::validation(format!("bad threshold in attribute '{s}'")))?;
                return Ok(AttrSpec {
                    column: col.trim().to_string(),
                    threshold: Some((op, value)),
                });
            }
        }
        if s.trim().is_empty() {
            return Err(AppError::validation("empty attribute column"));
        }
        Ok(AttrSpec {
            column: s.trim().to_string(),
            threshold: None,
        })
    }
}

#[derive(Debug, Clone)]
pub struct LoadOptions {
    pub attr: AttrSpec,
    /// Feature columns; all columns but the attribute when empty.
    pub features: Vec<String>,
    pub delimiter: u8,
    pub drop_degenerate: bool,
}

impl LoadOptions {
    pub fn new(attr: AttrSpec) -> Self {
        Self {
            attr,
            features: Vec::new(),
            delimiter: b',',
            drop_degenerate: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LoadedData {
    pub dataset: Dataset,
    pub feature_names: Vec<String>,
    /// Raw attribute value of each group, by label.
    pub group_values: Vec<String>,
    pub dropped: Vec<String>,
}

pub fn load_csv(path: &Path, opts: &LoadOptions) -> Result<LoadedData> {
    let file = File::open(path).map_err(|source| AppError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    read_csv(file, opts)
}

pub fn read_csv<R: Read>(reader: R, opts: &LoadOptions) -> Result<LoadedData> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(opts.delimiter)
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header.is_empty() || header.iter().all(String::is_empty) {
        return Err(AppError::validation("empty file"));
    }
    let attr_col = ColumnRef::parse(&opts.attr.column, &header).resolve(&header)?;
    let feature_cols: Vec<usize> = if opts.features.is_empty() {
        (0..header.len()).filter(|&c| c != attr_col).collect()
    } else {
        opts.features
            .iter()
            .map(|f| ColumnRef::parse(f, &header).resolve(&header))
            .collect::<Result<_>>()?
    };
    if feature_cols.is_empty() {
        return Err(AppError::validation("no feature columns"));
    }

    let mut values = Vec::new();
    let mut labels = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();
    let mut group_values = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        let line = record.position().map_or(row as u64 + 2, |p| p.line());
        let cell = |c: usize| record.get(c).unwrap_or("");
        for &c in &feature_cols {
            let raw = cell(c);
            let v: f64 = raw.parse().map_err(|_| {
                AppError::validation(format!(
                    "row {} (line {line}), column '{}': {} is not a number",
                    row + 1,
                    header[c],
                    if raw.is_empty() { "blank cell".to_string() } else { format!("'{raw}'") }
                ))
            })?;
            values.push(v);
        }
        let raw = cell(attr_col);
        if raw.is_empty() {
            return Err(AppError::validation(format!(
                "row {} (line {line}), column '{}': blank attribute",
                row + 1,
                header[attr_col]
            )));
        }
        let key = match opts.attr.threshold {
            None => raw.to_string(),
            Some((op, t)) => {
                let x: f64 = raw.parse().map_err(|_| {
                    AppError::validation(format!(
                        "row {} (line {line}), column '{}': '{raw}' is not a number",
                        row + 1,
                        header[attr_col]
                    ))
                })?;
                op.apply(x, t).to_string()
            }
        };
        let next = seen.len();
        let label = *seen.entry(key.clone()).or_insert_with(|| {
            group_values.push(key);
            next
        });
        labels.push(label);
    }
    let n = labels.len();
    if n == 0 {
        return Err(AppError::validation("file has a header but no rows"));
    }
    if group_values.len() < 2 {
        return Err(AppError::validation(format!(
            "attribute '{}' takes a single value; at least two groups are required",
            opts.attr.column
        )));
    }
    let mut x = Matrix::from_row_slice(n, feature_cols.len(), &values);
    let mut feature_names: Vec<String> = feature_cols.iter().map(|&c| header[c].clone()).collect();
    let mut dropped = Vec::new();
    if opts.drop_degenerate {
        let bad = degenerate_columns(&x);
        if !bad.is_empty() {
            dropped = bad.iter().map(|&c| feature_names[c].clone()).collect();
            log::warn!("dropping columns with degenerate spread: {}", dropped.join(", "));
            let keep: Vec<usize> = (0..x.ncols()).filter(|c| !bad.contains(c)).collect();
            if keep.is_empty() {
                return Err(AppError::validation("every feature column was dropped as degenerate"));
            }
            x = x.select_columns(&keep);
            feature_names = keep.iter().map(|&c| feature_names[c].clone()).collect();
        }
    }
    let dataset = Dataset::new(x, labels)?;
    Ok(LoadedData {
        dataset,
        feature_names,
        group_values,
        dropped,
    })
}
