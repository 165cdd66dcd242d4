//! Matrix Market coordinate format (real, general or symmetric).

use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use super::CsrMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Symmetry {
    General,
    Symmetric,
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

fn parse_header(line: &str, lineno: usize) -> Result<Symmetry> {
    let toks: Vec<String> = line
        .split_whitespace()
        .map(str::to_ascii_lowercase)
        .collect();
    if toks.len() != 5 || toks[0] != "%%matrixmarket" {
        return Err(parse_err(
            lineno,
            "expected '%%MatrixMarket matrix coordinate real <symmetry>'",
        ));
    }
    if toks[1] != "matrix" {
        return Err(parse_err(
            lineno,
            format!("unsupported object '{}'", toks[1]),
        ));
    }
    if toks[2] != "coordinate" {
        return Err(parse_err(
            lineno,
            format!("unsupported format '{}'", toks[2]),
        ));
    }
    if toks[3] != "real" {
        return Err(parse_err(
            lineno,
            format!("unsupported field '{}'", toks[3]),
        ));
    }
    match toks[4].as_str() {
        "general" => Ok(Symmetry::General),
        "symmetric" => Ok(Symmetry::Symmetric),
        other => Err(parse_err(lineno, format!("unsupported symmetry '{other}'"))),
    }
}

fn parse_index(tok: Option<&str>, bound: usize, lineno: usize, what: &str) -> Result<usize> {
    let tok = tok.ok_or_else(|| parse_err(lineno, format!("missing {what} index")))?;
    let idx: usize = tok
        .parse()
        .map_err(|_| parse_err(lineno, format!("bad {what} index '{tok}'")))?;
    if idx == 0 || idx > bound {
        return Err(parse_err(
            lineno,
            format!("{what} index {idx} outside 1..={bound}"),
        ));
    }
    Ok(idx - 1)
}

/// Reads a coordinate-format Matrix Market stream into CSR.
///
/// Indices are converted to 0-based, duplicate entries are summed and
/// symmetric storage is expanded to general.
pub fn read_matrix_market<R: Read>(source: R) -> Result<CsrMatrix> {
    let reader = BufReader::new(source);
    let mut lines = reader.lines().enumerate().map(|(i, l)| (i + 1, l));

    let (lineno, header) = lines.next().ok_or_else(|| parse_err(1, "empty input"))?;
    let symmetry = parse_header(&header?, lineno)?;

    let mut size: Option<(usize, usize, usize)> = None;
    let mut trips: Vec<(usize, usize, f64)> = Vec::new();
    let mut seen = 0usize;
    let mut last_line = lineno;

    for (lineno, line) in lines {
        let line = line?;
        last_line = lineno;
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        let mut toks = t.split_whitespace();
        match size {
            None => {
                let mut dim = |what: &str| -> Result<usize> {
                    let tok = toks
                        .next()
                        .ok_or_else(|| parse_err(lineno, format!("missing {what} in size line")))?;
                    tok.parse()
                        .map_err(|_| parse_err(lineno, format!("bad {what} '{tok}'")))
                };
                let (m, n, nnz) = (dim("rows")?, dim("cols")?, dim("nnz")?);
                if symmetry == Symmetry::Symmetric && m != n {
                    return Err(parse_err(lineno, "symmetric matrix must be square"));
                }
                let cap = if symmetry == Symmetry::Symmetric {
                    2 * nnz
                } else {
                    nnz
                };
                trips.reserve(cap.min(1 << 26));
                size = Some((m, n, nnz));
            }
            Some((m, n, nnz)) => {
                if seen == nnz {
                    return Err(parse_err(lineno, format!("more than {nnz} entries")));
                }
                let i = parse_index(toks.next(), m, lineno, "row")?;
                let j = parse_index(toks.next(), n, lineno, "column")?;
                let tok = toks
                    .next()
                    .ok_or_else(|| parse_err(lineno, "missing value"))?;
                let v: f64 = tok
                    .parse()
                    .map_err(|_| parse_err(lineno, format!("bad value '{tok}'")))?;
                if toks.next().is_some() {
                    return Err(parse_err(lineno, "trailing tokens (complex field?)"));
                }
                trips.push((i, j, v));
                if symmetry == Symmetry::Symmetric && i != j {
                    trips.push((j, i, v));
                }
                seen += 1;
            }
        }
    }

    let (m, n, nnz) = size.ok_or_else(|| parse_err(last_line, "missing size line"))?;
    if seen != nnz {
        return Err(parse_err(
            last_line,
            format!("expected {nnz} entries, found {seen}"),
        ));
    }
    CsrMatrix::from_triplets(m, n, &trips)
}

pub fn read_matrix_market_file(path: impl AsRef<Path>) -> Result<CsrMatrix> {
    read_matrix_market(File::open(path)?)
}

/// Writes `a` as a general real coordinate file. Values use the shortest
/// round-trip representation, so reading back gives identical bits.
pub fn write_matrix_market<W: Write>(a: &CsrMatrix, mut out: W) -> Result<()> {
    writeln!(out, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(out, "{} {} {}", a.nrows(), a.ncols(), a.nnz())?;
    for i in 0..a.nrows() {
        let (cols, vals) = a.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            writeln!(out, "{} {} {:e}", i + 1, j + 1, v)?;
        }
    }
    Ok(())
}
