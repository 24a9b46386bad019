use std::collections::HashMap;
use std::fs::File;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Dataset, FeatureMatrix};
use crate::{Error, Result};

/// What to do with a column whose cells are not all numeric.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CategoricalPolicy {
    #[default]
    Reject,
    /// Integer codes `0..k-1` in order of first appearance.
    Ordinal,
    /// One indicator column per level, named `column=level`, in order of first appearance.
    OneHot,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MissingPolicy {
    #[default]
    Reject,
    MedianImpute,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CsvOptions {
    #[serde(default)]
    pub categorical: CategoricalPolicy,
    #[serde(default)]
    pub missing: MissingPolicy,
}

const MISSING_TOKENS: [&str; 5] = ["", "na", "n/a", "nan", "?"];

fn is_missing(cell: &str) -> bool {
    MISSING_TOKENS.contains(&cell.to_ascii_lowercase().as_str())
}

fn parse_label(cell: &str) -> Option<u8> {
    match cell.to_ascii_lowercase().as_str() {
        "true" | "yes" => Some(1),
        "false" | "no" => Some(0),
        other => match other.parse::<f64>() {
            Ok(v) if v == 0.0 || v == 1.0 => Some(v as u8),
            _ => None,
        },
    }
}

pub fn load_csv(path: &Path, label_column: &str, options: &CsvOptions) -> Result<Dataset> {
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut d = parse_csv(file, label_column, options)?;
    d.provenance = format!("csv({})", path.display());
    Ok(d)
}

/// Parses comma-separated UTF-8 text with a header row.
///
/// Row numbers in errors are 1-based data rows (the header is not counted).
pub fn parse_csv<R: Read>(reader: R, label_column: &str, options: &CsvOptions) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let label_idx = headers
        .iter()
        .position(|h| h == label_column)
        .ok_or_else(|| Error::MissingLabelColumn(label_column.to_string()))?;

    let mut records = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        if rec.len() != headers.len() {
            return Err(Error::Cell {
                row: records.len() + 1,
                column: label_column.to_string(),
                message: format!("expected {} fields, found {}", headers.len(), rec.len()),
            });
        }
        records.push(rec.iter().map(str::to_string).collect::<Vec<_>>());
    }
    if records.is_empty() {
        return Err(Error::EmptyDataset);
    }

    let labels = records
        .iter()
        .enumerate()
        .map(|(i, r)| {
            parse_label(&r[label_idx]).ok_or_else(|| Error::LabelNotBinary {
                row: i + 1,
                value: r[label_idx].clone(),
            })
        })
        .collect::<Result<Vec<u8>>>()?;

    let mut names = Vec::new();
    let mut columns: Vec<Vec<Option<f64>>> = Vec::new();
    for (c, header) in headers.iter().enumerate() {
        if c == label_idx {
            continue;
        }
        let cells: Vec<&str> = records.iter().map(|r| r[c].as_str()).collect();
        let numeric: Vec<Option<Option<f64>>> = cells
            .iter()
            .map(|s| {
                if is_missing(s) {
                    Some(None)
                } else {
                    s.parse::<f64>().ok().filter(|v| v.is_finite()).map(Some)
                }
            })
            .collect();
        if let Some(bad) = numeric.iter().position(Option::is_none) {
            match options.categorical {
                CategoricalPolicy::Reject => {
                    return Err(Error::Cell {
                        row: bad + 1,
                        column: header.clone(),
                        message: format!("cannot parse `{}` as a number", cells[bad]),
                    })
                }
                CategoricalPolicy::Ordinal => {
                    let levels = levels(&cells);
                    names.push(header.clone());
                    columns.push(
                        cells
                            .iter()
                            .map(|s| (!is_missing(s)).then(|| levels[*s] as f64))
                            .collect(),
                    );
                }
                CategoricalPolicy::OneHot => {
                    let levels = levels(&cells);
                    let mut ordered: Vec<(&str, usize)> =
                        levels.iter().map(|(k, v)| (*k, *v)).collect();
                    ordered.sort_by_key(|&(_, code)| code);
                    for (level, _) in ordered {
                        names.push(format!("{header}={level}"));
                        columns.push(
                            cells
                                .iter()
                                .map(|s| {
                                    if is_missing(s) {
                                        Some(0.0)
                                    } else {
                                        Some(f64::from(u8::from(*s == level)))
                                    }
                                })
                                .collect(),
                        );
                    }
                }
            }
        } else {
            names.push(header.clone());
            columns.push(numeric.into_iter().map(Option::unwrap).collect());
        }
    }

    let n = records.len();
    let mut dense = Vec::with_capacity(columns.len());
    for (name, col) in names.iter().zip(columns) {
        if let Some(row) = col.iter().position(Option::is_none) {
            if options.missing == MissingPolicy::Reject {
                return Err(Error::Cell {
                    row: row + 1,
                    column: name.clone(),
                    message: "missing value".into(),
                });
            }
            let mut present: Vec<f64> = col.iter().flatten().copied().collect();
            if present.is_empty() {
                return Err(Error::Cell {
                    row: 1,
                    column: name.clone(),
                    message: "every value is missing".into(),
                });
            }
            let fill = median(&mut present);
            dense.push(
                col.into_iter()
                    .map(|v| v.unwrap_or(fill))
                    .collect::<Vec<f64>>(),
            );
        } else {
            dense.push(col.into_iter().map(Option::unwrap).collect());
        }
    }

    let p = dense.len();
    let mut data = Vec::with_capacity(n * p);
    for r in 0..n {
        data.extend(dense.iter().map(|col| col[r]));
    }
    Dataset::new(FeatureMatrix::new(n, p, data)?, labels, names, "csv")
}

fn levels<'a>(cells: &[&'a str]) -> HashMap<&'a str, usize> {
    let mut map = HashMap::new();
    for &s in cells {
        if !is_missing(s) {
            let next = map.len();
            map.entry(s).or_insert(next);
        }
    }
    map
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_unstable_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}
