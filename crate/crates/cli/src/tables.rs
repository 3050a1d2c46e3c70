//! CSV inputs: plain numeric matrices, `model,score` tables, and label ids.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use emms_core::Matrix;

use crate::error::IoError;

const SCORE_HEADER: &str = "model,score";

fn read_text(path: &Path) -> Result<String, IoError> {
    fs::read_to_string(path).map_err(|e| IoError::io(path, e))
}

fn reader(text: &str, has_headers: bool) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .has_headers(has_headers)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes())
}

fn csv_error(file: &str, e: csv::Error) -> IoError {
    IoError::Csv {
        file: file.to_string(),
        reason: e.to_string(),
    }
}

fn parse_finite(field: &str) -> Option<f64> {
    field.parse::<f64>().ok().filter(|v| v.is_finite())
}

pub fn read_csv_matrix(path: impl AsRef<Path>) -> Result<Matrix, IoError> {
    let path = path.as_ref();
    parse_csv_matrix(&read_text(path)?, &path.display().to_string())
}

/// Parses headerless comma-separated rows of equal length.
pub fn parse_csv_matrix(text: &str, file: &str) -> Result<Matrix, IoError> {
    let mut cols = None;
    let mut data = Vec::new();
    let mut rows = 0;
    for record in reader(text, false).records() {
        let record = record.map_err(|e| csv_error(file, e))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.iter().all(str::is_empty) {
            continue;
        }
        match cols {
            None => cols = Some(record.len()),
            Some(c) if c != record.len() => {
                return Err(IoError::RaggedRows {
                    file: file.to_string(),
                    line,
                })
            }
            Some(_) => {}
        }
        for (col, field) in record.iter().enumerate() {
            let v = parse_finite(field).ok_or_else(|| IoError::UnparsableFloat {
                file: file.to_string(),
                line,
                col: col + 1,
            })?;
            data.push(v);
        }
        rows += 1;
    }
    Matrix::new(rows, cols.unwrap_or(0), data).map_err(|e| IoError::Matrix {
        file: file.to_string(),
        source: e,
    })
}

pub fn read_score_table(path: impl AsRef<Path>) -> Result<Vec<(String, f64)>, IoError> {
    let path = path.as_ref();
    parse_score_table(&read_text(path)?, &path.display().to_string())
}

/// Parses a `model,score` table with unique ids and finite scores.
pub fn parse_score_table(text: &str, file: &str) -> Result<Vec<(String, f64)>, IoError> {
    let mut rdr = reader(text, true);
    let headers = rdr.headers().map_err(|e| csv_error(file, e))?.clone();
    let header_ok = headers.len() == 2
        && headers[0].eq_ignore_ascii_case("model")
        && headers[1].eq_ignore_ascii_case("score");
    if !header_ok {
        return Err(IoError::MissingHeader {
            file: file.to_string(),
            expected: SCORE_HEADER,
        });
    }
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| csv_error(file, e))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.iter().all(str::is_empty) {
            continue;
        }
        if record.len() != 2 {
            return Err(IoError::RaggedRows {
                file: file.to_string(),
                line,
            });
        }
        let id = record[0].to_string();
        let score = parse_finite(&record[1]).ok_or_else(|| IoError::UnparsableFloat {
            file: file.to_string(),
            line,
            col: 2,
        })?;
        if !seen.insert(id.clone()) {
            return Err(IoError::DuplicateModel {
                file: file.to_string(),
                id,
            });
        }
        out.push((id, score));
    }
    Ok(out)
}

/// One non-negative integer class id per line.
pub fn read_labels(path: impl AsRef<Path>) -> Result<Vec<usize>, IoError> {
    let path = path.as_ref();
    let file = path.display().to_string();
    let text = read_text(path)?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let id = line
            .parse::<usize>()
            .map_err(|_| IoError::UnparsableLabel {
                file: file.clone(),
                line: i as u64 + 1,
            })?;
        out.push(id);
    }
    Ok(out)
}

/// Renders a `model,score` table.
pub fn format_score_table(rows: &[(String, f64)]) -> String {
    let mut out = String::from(SCORE_HEADER);
    out.push('\n');
    for (id, score) in rows {
        out.push_str(&format!("{id},{score}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_rows() {
        let m = parse_csv_matrix("1,2\n3,4", "m.csv").unwrap();
        assert_eq!(m, Matrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]).unwrap());
        let m = parse_csv_matrix(" 1.5 , -2e3\n\n0,0\n", "m.csv").unwrap();
        assert_eq!(m.shape(), (2, 2));
        assert_eq!(m.get(0, 1), -2000.0);
    }

    #[test]
    fn matrix_errors() {
        assert!(matches!(
            parse_csv_matrix("1,2\n3\n", "m.csv"),
            Err(IoError::RaggedRows { line: 2, .. })
        ));
        assert!(matches!(
            parse_csv_matrix("1,2\n3,x\n", "m.csv"),
            Err(IoError::UnparsableFloat {
                line: 2,
                col: 2,
                ..
            })
        ));
        assert!(matches!(
            parse_csv_matrix("1,inf\n", "m.csv"),
            Err(IoError::UnparsableFloat {
                line: 1,
                col: 2,
                ..
            })
        ));
    }

    #[test]
    fn score_tables() {
        let gt = parse_score_table("model,score\na,0.9\nb,0.8", "g.csv").unwrap();
        assert_eq!(gt, vec![("a".to_string(), 0.9), ("b".to_string(), 0.8)]);
        assert!(matches!(
            parse_score_table("model,score\na,0.9\na,0.8\n", "g.csv"),
            Err(IoError::DuplicateModel { ref id, .. }) if id == "a"
        ));
        assert!(matches!(
            parse_score_table("name,value\na,1\n", "g.csv"),
            Err(IoError::MissingHeader { .. })
        ));
        assert!(matches!(
            parse_score_table("model,score\na,nan\n", "g.csv"),
            Err(IoError::UnparsableFloat {
                line: 2,
                col: 2,
                ..
            })
        ));
        let rendered = format_score_table(&gt);
        assert_eq!(parse_score_table(&rendered, "r.csv").unwrap(), gt);
    }
}
