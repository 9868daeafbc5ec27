//! Plain-text formats.
//!
//! Matrix files: the first non-comment line is `rows,cols`, followed by `rows` lines of
//! `cols` comma-separated decimals. Labeled files: one `label,v1,...,vN` line per sample.
//! In both, blank lines and lines starting with `#` are skipped.

use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn parse_f64(tok: &str, line: usize) -> Result<f64> {
    let v: f64 = tok.trim().parse().map_err(|_| Error::Parse {
        line,
        msg: format!("'{}' is not a number", tok.trim()),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            line,
            msg: format!("non-finite value '{}'", tok.trim()),
        });
    }
    Ok(v)
}

fn parse_usize(tok: &str, line: usize, what: &str) -> Result<usize> {
    tok.trim().parse().map_err(|_| Error::Parse {
        line,
        msg: format!("bad {what} '{}'", tok.trim()),
    })
}

pub fn parse_matrix(text: &str) -> Result<DMatrix<f64>> {
    let mut lines = content_lines(text);
    let (hline, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        msg: "missing 'rows,cols' header".into(),
    })?;
    let dims: Vec<&str> = header.split(',').collect();
    if dims.len() != 2 {
        return Err(Error::Parse {
            line: hline,
            msg: "header must be 'rows,cols'".into(),
        });
    }
    let rows = parse_usize(dims[0], hline, "row count")?;
    let cols = parse_usize(dims[1], hline, "column count")?;
    let mut data = Vec::with_capacity(rows * cols);
    let mut seen = 0;
    for (ln, l) in lines {
        if seen == rows {
            return Err(Error::Parse {
                line: ln,
                msg: format!("more than the declared {rows} rows"),
            });
        }
        let start = data.len();
        for tok in l.split(',') {
            data.push(parse_f64(tok, ln)?);
        }
        if data.len() - start != cols {
            return Err(Error::Parse {
                line: ln,
                msg: format!("expected {cols} values, found {}", data.len() - start),
            });
        }
        seen += 1;
    }
    if seen != rows {
        return Err(Error::Parse {
            line: text.lines().count().max(1),
            msg: format!("declared {rows} rows, found {seen}"),
        });
    }
    Ok(DMatrix::from_row_slice(rows, cols, &data))
}

pub fn format_matrix(m: &DMatrix<f64>) -> String {
    let mut s = format!("{},{}\n", m.nrows(), m.ncols());
    for row in m.row_iter() {
        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    s
}

pub fn parse_labeled(text: &str) -> Result<Vec<(usize, Vec<f64>)>> {
    let mut out: Vec<(usize, Vec<f64>)> = Vec::new();
    for (ln, l) in content_lines(text) {
        let mut toks = l.split(',');
        let label = parse_usize(toks.next().unwrap_or(""), ln, "label")?;
        let v = toks.map(|t| parse_f64(t, ln)).collect::<Result<Vec<_>>>()?;
        if v.is_empty() {
            return Err(Error::Parse {
                line: ln,
                msg: "row has a label but no values".into(),
            });
        }
        if let Some((_, first)) = out.first() {
            if first.len() != v.len() {
                return Err(Error::Parse {
                    line: ln,
                    msg: format!("expected {} values, found {}", first.len(), v.len()),
                });
            }
        }
        out.push((label, v));
    }
    if out.is_empty() {
        return Err(Error::Parse {
            line: 1,
            msg: "no data rows".into(),
        });
    }
    Ok(out)
}

pub fn format_labeled(rows: &[(usize, Vec<f64>)]) -> String {
    let mut s = String::new();
    for (label, v) in rows {
        s.push_str(&label.to_string());
        for x in v {
            s.push(',');
            s.push_str(&x.to_string());
        }
        s.push('\n');
    }
    s
}

pub fn read_matrix(path: impl AsRef<Path>) -> Result<DMatrix<f64>> {
    parse_matrix(&std::fs::read_to_string(path)?)
}

pub fn read_labeled(path: impl AsRef<Path>) -> Result<Vec<(usize, Vec<f64>)>> {
    parse_labeled(&std::fs::read_to_string(path)?)
}
