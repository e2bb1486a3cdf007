//! Plain-text matrices: one row per line (or per `;` in inline literals),
//! entries separated by whitespace or commas, `#` starts a comment.

use std::path::Path;

use critfuse_core::lindyn::CrossCorrelation;

use crate::error::{LabError, Result};

pub fn parse_matrix(text: &str) -> Result<CrossCorrelation> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.split(['\n', ';']).enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|t| !t.is_empty())
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|_| LabError::config(format!("matrix row {}: `{t}` is not a number", lineno + 1)))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(LabError::config("matrix has no rows"));
    }
    let cols = rows[0].len();
    if let Some(bad) = rows.iter().position(|r| r.len() != cols) {
        return Err(LabError::config(format!(
            "matrix row {} has {} entries, expected {cols}",
            bad + 1,
            rows[bad].len()
        )));
    }
    CrossCorrelation::from_rows(&rows).map_err(|e| LabError::config(format!("matrix: {e}")))
}

pub fn read_matrix(path: &Path) -> Result<CrossCorrelation> {
    let text = std::fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
    parse_matrix(&text).map_err(|e| match e {
        LabError::Config(m) => LabError::config(format!("{}: {m}", path.display())),
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_files_and_literals() {
        let m = parse_matrix("# sigma\n1 0 2\n0, 1, 0  # trailing\n").unwrap();
        assert_eq!(m.matrix().shape(), (2, 3));
        assert_eq!(m.matrix()[(0, 2)], 2.0);
        let inline = parse_matrix("1 0 2; 0 1 0").unwrap();
        assert_eq!(inline, m);
    }

    #[test]
    fn rejects_ragged_and_garbage() {
        assert!(parse_matrix("1 2\n3").is_err());
        assert!(parse_matrix("1 x").is_err());
        assert!(parse_matrix("# nothing").is_err());
        assert!(parse_matrix("1 nan").is_err());
    }
}
