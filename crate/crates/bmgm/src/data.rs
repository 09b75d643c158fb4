//! CSV input/output for mixed datasets.
//!
//! Files are comma-separated UTF-8 with a header row. A cell spelling "NA"
//! (any capitalization) is missing. Continuous cells are decimal numbers,
//! count cells non-negative integers, and categorical cells arbitrary labels
//! that the reader maps to level codes `0..K-1` in order of first appearance.
//! [`write_dataset`] restores the original labels, so a write/read cycle
//! reproduces the dataset exactly, including the missing mask.

use std::collections::HashMap;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::output::write_atomic;
use crate::types::{MixedDataset, NodeType};

/// Column type as declared by the caller.
///
/// Unlike [`NodeType`], a categorical declaration carries no level count: the
/// levels are whatever distinct labels the file contains.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeclaredType {
    Continuous,
    Count,
    ZeroInflatedCount,
    Categorical,
}

/// Parses a comma- or whitespace-separated list of column-type tokens.
///
/// Accepted tokens (case-insensitive): `continuous`/`cont`, `count`, `zip`,
/// `categorical`/`cat`.
pub fn parse_type_tokens(list: &str) -> Result<Vec<DeclaredType>> {
    let mut out = Vec::new();
    for token in list.split(|c: char| c == ',' || c.is_whitespace()) {
        if token.is_empty() {
            continue;
        }
        out.push(match token.to_ascii_lowercase().as_str() {
            "continuous" | "cont" => DeclaredType::Continuous,
            "count" => DeclaredType::Count,
            "zip" => DeclaredType::ZeroInflatedCount,
            "categorical" | "cat" => DeclaredType::Categorical,
            other => {
                return Err(Error::input(format!(
                    "unknown column type '{other}' (expected continuous, count, zip, or categorical)"
                )))
            }
        });
    }
    if out.is_empty() {
        return Err(Error::input("column type list is empty"));
    }
    Ok(out)
}

fn is_na(field: &str) -> bool {
    field.eq_ignore_ascii_case("na")
}

/// Reads a CSV file into a typed, validated dataset.
///
/// `declared` must list one type per file column, in file order. Parse and
/// domain errors name the offending 0-based data row and the column header.
pub fn read_dataset(path: impl AsRef<Path>, declared: &[DeclaredType]) -> Result<MixedDataset> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::input(format!("cannot read {}: {e}", path.display())))?;
    let names: Vec<String> = reader
        .headers()
        .map_err(|e| Error::input(format!("{}: bad header row: {e}", path.display())))?
        .iter()
        .map(str::to_string)
        .collect();
    let p = names.len();
    if p != declared.len() {
        return Err(Error::input(format!(
            "{}: file has {p} columns but {} types were declared",
            path.display(),
            declared.len()
        )));
    }

    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); p];
    let mut masks: Vec<Vec<bool>> = vec![Vec::new(); p];
    let mut labels: Vec<Vec<String>> = vec![Vec::new(); p];
    let mut label_codes: Vec<HashMap<String, usize>> = vec![HashMap::new(); p];
    for (row, record) in reader.records().enumerate() {
        let record =
            record.map_err(|e| Error::input(format!("{}: row {row}: {e}", path.display())))?;
        if record.len() != p {
            return Err(Error::input(format!(
                "{}: row {row} has {} fields, expected {p}",
                path.display(),
                record.len()
            )));
        }
        for (s, field) in record.iter().enumerate() {
            let missing = is_na(field);
            masks[s].push(missing);
            if missing {
                columns[s].push(f64::NAN);
                continue;
            }
            let at = |what: &str| {
                Error::input(format!(
                    "{}: row {row}, column {s} ({}): {what}",
                    path.display(),
                    names[s]
                ))
            };
            let value = match declared[s] {
                DeclaredType::Continuous => field
                    .parse::<f64>()
                    .map_err(|_| at(&format!("cannot parse '{field}' as a number")))?,
                DeclaredType::Count | DeclaredType::ZeroInflatedCount => {
                    let x = field
                        .parse::<f64>()
                        .map_err(|_| at(&format!("cannot parse '{field}' as a count")))?;
                    if !x.is_finite() || x < 0.0 || x.fract() != 0.0 {
                        return Err(at(&format!("'{field}' is not a non-negative integer")));
                    }
                    x
                }
                DeclaredType::Categorical => {
                    let next = labels[s].len();
                    let code = *label_codes[s].entry(field.to_string()).or_insert(next);
                    if code == next {
                        labels[s].push(field.to_string());
                    }
                    code as f64
                }
            };
            columns[s].push(value);
        }
    }
    let n = masks.first().map_or(0, Vec::len);
    if n == 0 {
        return Err(Error::input(format!(
            "{}: no data rows below the header",
            path.display()
        )));
    }

    let mut types = Vec::with_capacity(p);
    let mut cat_labels = Vec::with_capacity(p);
    for s in 0..p {
        let (ty, lab) = match declared[s] {
            DeclaredType::Continuous => (NodeType::Continuous, None),
            DeclaredType::Count => (NodeType::Count, None),
            DeclaredType::ZeroInflatedCount => (NodeType::ZeroInflatedCount, None),
            DeclaredType::Categorical => {
                let k = labels[s].len();
                if k < 2 {
                    return Err(Error::input(format!(
                        "{}: column {s} ({}): categorical columns need at least 2 observed levels, found {k}",
                        path.display(),
                        names[s]
                    )));
                }
                (NodeType::Categorical(k), Some(std::mem::take(&mut labels[s])))
            }
        };
        types.push(ty);
        cat_labels.push(lab);
    }

    let values = DMatrix::from_fn(n, p, |i, s| columns[s][i]);
    let missing = masks.concat();
    MixedDataset::new(names, types, values, missing, cat_labels)
}

/// Formats one observed cell for CSV output.
fn format_cell(ds: &MixedDataset, i: usize, s: usize) -> String {
    match (ds.types()[s], ds.value(i, s)) {
        (_, None) => "NA".to_string(),
        (NodeType::Categorical(_), Some(x)) => match ds.cat_labels(s) {
            Some(labels) => labels[x as usize].clone(),
            None => format!("{}", x as u64),
        },
        (NodeType::Count | NodeType::ZeroInflatedCount, Some(x)) => format!("{}", x as u64),
        (NodeType::Continuous, Some(x)) => format!("{x}"),
    }
}

/// Writes a dataset in the format [`read_dataset`] accepts: header row, NA
/// for missing cells, original categorical labels. The write is atomic.
pub fn write_dataset(ds: &MixedDataset, path: impl AsRef<Path>) -> Result<()> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    let io_err = |e: csv::Error| Error::input(format!("cannot encode dataset: {e}"));
    writer.write_record(ds.names()).map_err(io_err)?;
    for i in 0..ds.n() {
        let row: Vec<String> = (0..ds.p()).map(|s| format_cell(ds, i, s)).collect();
        writer.write_record(&row).map_err(io_err)?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| Error::input(format!("cannot encode dataset: {e}")))?;
    write_atomic(path.as_ref(), &bytes)
}

/// The declared types a dataset's node types correspond to (used when a tool
/// re-reads its own output).
pub fn declared_types(types: &[NodeType]) -> Vec<DeclaredType> {
    types
        .iter()
        .map(|ty| match ty {
            NodeType::Continuous => DeclaredType::Continuous,
            NodeType::Count => DeclaredType::Count,
            NodeType::ZeroInflatedCount => DeclaredType::ZeroInflatedCount,
            NodeType::Categorical(_) => DeclaredType::Categorical,
        })
        .collect()
}

/// Canonical token for a declared type, as accepted by [`parse_type_tokens`].
pub fn type_token(ty: DeclaredType) -> &'static str {
    match ty {
        DeclaredType::Continuous => "continuous",
        DeclaredType::Count => "count",
        DeclaredType::ZeroInflatedCount => "zip",
        DeclaredType::Categorical => "categorical",
    }
}
