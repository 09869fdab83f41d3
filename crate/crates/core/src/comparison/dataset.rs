//! Plain-text dataset readers.

use crate::error::{Error, Result};

/// One point per line; coordinates separated by whitespace or commas.
/// Blank lines and lines starting with `#` are skipped.
pub fn parse_vectors(text: &str) -> Result<Vec<Vec<f64>>> {
    let mut rows = Vec::new();
    let mut dim = None;
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = parse_row(line, i + 1)?;
        match dim {
            None => dim = Some(row.len()),
            Some(d) if d != row.len() => {
                return Err(Error::Parse { line: i + 1, msg: format!("expected {d} coordinates, found {}", row.len()) })
            }
            _ => {}
        }
        rows.push(row);
    }
    Ok(rows)
}

/// One string per line, taken verbatim (trailing `\r` removed).
pub fn parse_strings(text: &str) -> Vec<String> {
    text.lines().map(|l| l.trim_end_matches('\r').to_string()).collect()
}

/// Square numeric grid, one row per line.
pub fn parse_matrix(text: &str) -> Result<(usize, Vec<f64>)> {
    let rows = parse_vectors(text)?;
    let n = rows.len();
    if let Some(r) = rows.first() {
        if r.len() != n {
            return Err(Error::Parse { line: 1, msg: format!("matrix has {n} rows but {} columns", r.len()) });
        }
    }
    Ok((n, rows.into_iter().flatten().collect()))
}

pub fn parse_row(line: &str, lineno: usize) -> Result<Vec<f64>> {
    line.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().map_err(|e| Error::Parse { line: lineno, msg: format!("bad number {t:?}: {e}") }))
        .collect()
}

pub fn format_vectors(rows: &[Vec<f64>]) -> String {
    let mut out = String::new();
    for r in rows {
        let cells: Vec<String> = r.iter().map(|x| format!("{x:?}")).collect();
        out.push_str(&cells.join(" "));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mixed_separators() {
        let rows = parse_vectors("1, 2\n\n# c\n3 4\n5,6\n").unwrap();
        assert_eq!(rows, vec![vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]]);
    }

    #[test]
    fn reports_line_numbers() {
        match parse_vectors("1 2\n3 x\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        match parse_vectors("1 2\n3\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn round_trip_text() {
        let rows = vec![vec![0.1, 1e-300], vec![-3.5, 2.0 / 3.0]];
        assert_eq!(parse_vectors(&format_vectors(&rows)).unwrap(), rows);
    }

    #[test]
    fn matrix_shape() {
        assert_eq!(parse_matrix("0 1\n1 0\n").unwrap(), (2, vec![0.0, 1.0, 1.0, 0.0]));
        assert!(parse_matrix("0 1 2\n1 0 2\n").is_err());
    }
}
