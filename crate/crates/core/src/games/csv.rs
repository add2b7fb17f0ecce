use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{GameError, Result};
use crate::game::PayoffMatrix;

/// Reads a dense zero-sum payoff matrix from a CSV file. With
/// `antisymmetrize` the result is `(M - M^T) / 2`.
pub fn load_meta_game(path: impl AsRef<Path>, antisymmetrize: bool) -> Result<PayoffMatrix> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| GameError::io(path, e))?;
    parse_payoff_csv(&text, antisymmetrize)
}

/// Parses comma-separated rows. A first line whose first cell is not a
/// number is treated as a header and skipped. Line numbers in errors are
/// 1-based and count the header.
pub fn parse_payoff_csv(text: &str, antisymmetrize: bool) -> Result<PayoffMatrix> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut first = true;
    for (k, raw) in text.split('\n').enumerate() {
        let line_no = k + 1;
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if std::mem::take(&mut first) && cells[0].parse::<f64>().is_err() {
            // header
            continue;
        }
        let mut row = Vec::with_capacity(cells.len());
        for (c, cell) in cells.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| GameError::Parse {
                line: line_no,
                message: format!("column {} is not a number: {cell:?}", c + 1),
            })?;
            if !v.is_finite() {
                return Err(GameError::Parse {
                    line: line_no,
                    message: format!("column {} is not finite", c + 1),
                });
            }
            row.push(v);
        }
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(GameError::Parse {
                    line: line_no,
                    message: format!("row has {} cells, expected {}", row.len(), first.len()),
                });
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(GameError::Parse {
            line: 0,
            message: "no data rows".into(),
        });
    }
    let m = DMatrix::from_fn(rows.len(), rows[0].len(), |i, j| rows[i][j]);
    let m = if antisymmetrize {
        if !m.is_square() {
            return Err(GameError::Shape(format!(
                "cannot antisymmetrize a {}x{} matrix",
                m.nrows(),
                m.ncols()
            )));
        }
        (&m - m.transpose()) * 0.5
    } else {
        m
    };
    PayoffMatrix::zero_sum(m)
}

/// Writes player one's payoffs, one row per line, using the shortest
/// representation that round-trips.
pub fn write_payoff_csv(g: &PayoffMatrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    crate::atomic::write_atomic(path, payoff_csv_string(g).as_bytes())
}

pub(crate) fn payoff_csv_string(g: &PayoffMatrix) -> String {
    let mut out = String::new();
    for i in 0..g.rows() {
        for j in 0..g.cols() {
            if j > 0 {
                out.push(',');
            }
            let _ = write!(out, "{}", g.get(i, j));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::make_rps;

    #[test]
    fn rps_round_trip() {
        let text = "0,-1,1\n1,0,-1\n-1,1,0\n";
        assert_eq!(parse_payoff_csv(text, false).unwrap(), make_rps());
        assert_eq!(parse_payoff_csv(&payoff_csv_string(&make_rps()), false).unwrap(), make_rps());
    }

    #[test]
    fn header_and_crlf_are_accepted() {
        let text = "rock,paper,scissors\r\n0,-1,1\r\n1,0,-1\r\n-1,1,0\r\n";
        assert_eq!(parse_payoff_csv(text, false).unwrap(), make_rps());
    }

    #[test]
    fn ragged_rows_fail_with_line_number() {
        match parse_payoff_csv("1,2,3\n4,5\n", false) {
            Err(GameError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn non_numeric_cell_fails() {
        match parse_payoff_csv("1,2\n3,abc\n", false) {
            Err(GameError::Parse { line, message }) => {
                assert_eq!(line, 2);
                assert!(message.contains("column 2"));
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(parse_payoff_csv("1,2,\n3,4,\n", false).is_err());
        assert!(parse_payoff_csv("", false).is_err());
    }

    #[test]
    fn antisymmetrize_symmetric_gives_zero() {
        let g = parse_payoff_csv("1,2,3\n2,5,6\n3,6,9\n", true).unwrap();
        assert!(g.values().iter().all(|v| *v == 0.0));
        let g = parse_payoff_csv("0.3,2,-1\n0.5,1,4\n7,-2,1\n", true).unwrap();
        assert!(g.is_antisymmetric(1e-12));
        assert!(parse_payoff_csv("1,2\n", true).is_err());
    }
}
