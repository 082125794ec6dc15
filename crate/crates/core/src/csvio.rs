//! Small helpers around the `csv` crate shared by the file formats.

use std::fs;
use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};

/// Numeric rows of a headed CSV file, each tagged with its 1-based line number.
pub(crate) struct NumericRows {
    pub rows: Vec<(u64, Vec<f64>)>,
}

pub(crate) fn read_numeric<R: Read>(
    reader: R,
    source: &str,
    header: &[&str],
) -> Result<NumericRows> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .has_headers(true)
        .from_reader(reader);

    let found = rdr.headers().map_err(|e| parse_err(source, &e))?.clone();
    let found: Vec<&str> = found.iter().collect();
    if found != header {
        return Err(Error::Parse {
            path: source.to_string(),
            line: 1,
            message: format!(
                "expected header `{}`, found `{}`",
                header.join(","),
                found.join(",")
            ),
        });
    }

    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| parse_err(source, &e))?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let values = record
            .iter()
            .map(|field| {
                field.parse::<f64>().map_err(|_| Error::Parse {
                    path: source.to_string(),
                    line,
                    message: format!("not a number: `{field}`"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        if values.len() != header.len() {
            return Err(Error::Parse {
                path: source.to_string(),
                line,
                message: format!("expected {} fields, found {}", header.len(), values.len()),
            });
        }
        rows.push((line, values));
    }
    Ok(NumericRows { rows })
}

pub(crate) fn read_numeric_path(path: &Path, header: &[&str]) -> Result<NumericRows> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_numeric(file, &path.display().to_string(), header)
}

fn parse_err(source: &str, e: &csv::Error) -> Error {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    Error::Parse {
        path: source.to_string(),
        line,
        message: e.to_string(),
    }
}

/// Formats a float so that it parses back to the identical value.
pub fn fmt_f64(v: f64) -> String {
    if v == 0.0 {
        "0".to_string()
    } else {
        format!("{v:e}")
    }
}
