//! Matrix Market coordinate IO and plain-text vector IO.
//!
//! Coverage is deliberately narrow: `matrix coordinate real` with `general` or
//! `symmetric` symmetry, as published by NIST. Symmetric files are expanded to
//! full storage on read and collapsed to the lower triangle on write. Values
//! are written in scientific notation with 17 significant digits, which
//! round-trips `f64` exactly.
//!
//! Vectors travel as plain text, one value per line; the reader also accepts
//! the Matrix Market `array` variant for a single column.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::sparse::{SparseMatrix, Symmetry, Vector};

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// Reads a Matrix Market coordinate file into full-storage CSR.
pub fn read_matrix_market(path: impl AsRef<Path>) -> Result<SparseMatrix> {
    let file = File::open(path)?;
    parse_matrix_market(BufReader::new(file))
}

/// Parses Matrix Market coordinate data from any buffered reader.
pub fn parse_matrix_market(reader: impl BufRead) -> Result<SparseMatrix> {
    let mut lines = reader.lines().enumerate();

    let (_, header) = lines
        .next()
        .ok_or_else(|| parse_err(1, "empty file"))?
        .1
        .map(|s| (0, s))
        .map_err(Error::Io)?;
    let tokens: Vec<String> = header.split_whitespace().map(str::to_lowercase).collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" {
        return Err(parse_err(1, format!("malformed header: {header:?}")));
    }
    if tokens[1] != "matrix" || tokens[2] != "coordinate" {
        return Err(parse_err(
            1,
            format!("unsupported object/format: {} {}", tokens[1], tokens[2]),
        ));
    }
    if tokens[3] != "real" {
        return Err(parse_err(1, format!("unsupported field: {}", tokens[3])));
    }
    let symmetry = match tokens[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        other => return Err(parse_err(1, format!("unsupported symmetry: {other}"))),
    };

    let mut size: Option<(usize, usize, usize)> = None;
    let mut triplets: Vec<(usize, usize, f64)> = Vec::new();
    let mut seen = 0usize;
    for (idx, line) in lines {
        let lineno = idx + 1;
        let line = line.map_err(Error::Io)?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        match size {
            None => {
                if fields.len() != 3 {
                    return Err(parse_err(lineno, "size line must hold rows cols nnz"));
                }
                let dims: Vec<usize> = fields
                    .iter()
                    .map(|f| {
                        f.parse::<usize>()
                            .map_err(|_| parse_err(lineno, format!("bad size token {f:?}")))
                    })
                    .collect::<Result<_>>()?;
                size = Some((dims[0], dims[1], dims[2]));
                triplets.reserve(dims[2]);
            }
            Some((n_rows, n_cols, nnz)) => {
                if seen == nnz {
                    return Err(parse_err(lineno, "more entries than declared"));
                }
                if fields.len() != 3 {
                    return Err(parse_err(lineno, "entry line must hold row col value"));
                }
                let i: usize = fields[0]
                    .parse()
                    .map_err(|_| parse_err(lineno, format!("bad row index {:?}", fields[0])))?;
                let j: usize = fields[1]
                    .parse()
                    .map_err(|_| parse_err(lineno, format!("bad col index {:?}", fields[1])))?;
                let v: f64 = fields[2]
                    .parse()
                    .map_err(|_| parse_err(lineno, format!("bad value {:?}", fields[2])))?;
                if i < 1 || i > n_rows || j < 1 || j > n_cols {
                    return Err(parse_err(
                        lineno,
                        format!("index ({i}, {j}) outside {n_rows}x{n_cols}"),
                    ));
                }
                triplets.push((i - 1, j - 1, v));
                if symmetry == Symmetry::Symmetric && i != j {
                    triplets.push((j - 1, i - 1, v));
                }
                seen += 1;
            }
        }
    }
    let (n_rows, n_cols, nnz) = size.ok_or_else(|| parse_err(1, "missing size line"))?;
    if seen != nnz {
        return Err(parse_err(0, format!("declared {nnz} entries, found {seen}")));
    }
    SparseMatrix::from_triplets(n_rows, n_cols, &triplets, symmetry)
}

/// Writes a matrix in Matrix Market coordinate format. Symmetric matrices are
/// emitted as their lower triangle under the `symmetric` qualifier.
pub fn write_matrix_market(a: &SparseMatrix, path: impl AsRef<Path>) -> Result<()> {
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    emit_matrix_market(a, &mut w)?;
    w.flush()?;
    Ok(())
}

/// Serializes Matrix Market coordinate data to any writer.
pub fn emit_matrix_market(a: &SparseMatrix, w: &mut impl Write) -> Result<()> {
    let symmetric = a.symmetry() == Symmetry::Symmetric;
    let qualifier = if symmetric { "symmetric" } else { "general" };
    writeln!(w, "%%MatrixMarket matrix coordinate real {qualifier}")?;
    let mut count = 0usize;
    for i in 0..a.n_rows() {
        let (cols, _) = a.row(i);
        count += cols
            .iter()
            .filter(|&&j| !symmetric || j <= i)
            .count();
    }
    writeln!(w, "{} {} {}", a.n_rows(), a.n_cols(), count)?;
    for i in 0..a.n_rows() {
        let (cols, vals) = a.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            if symmetric && j > i {
                continue;
            }
            writeln!(w, "{} {} {:.16e}", i + 1, j + 1, v)?;
        }
    }
    Ok(())
}

/// Reads a vector from plain text (one value per line, `%` comments allowed)
/// or from a Matrix Market `array real general` single column.
pub fn read_vector(path: impl AsRef<Path>) -> Result<Vector> {
    let file = File::open(path)?;
    parse_vector(BufReader::new(file))
}

/// Parses vector data from any buffered reader.
pub fn parse_vector(reader: impl BufRead) -> Result<Vector> {
    let mut values = Vec::new();
    let mut header_dims: Option<usize> = None;
    let mut is_array = false;
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(Error::Io)?;
        let trimmed = line.trim();
        if lineno == 1 && trimmed.to_lowercase().starts_with("%%matrixmarket") {
            let tokens: Vec<String> =
                trimmed.split_whitespace().map(str::to_lowercase).collect();
            if tokens.len() != 5
                || tokens[1] != "matrix"
                || tokens[2] != "array"
                || tokens[3] != "real"
                || tokens[4] != "general"
            {
                return Err(parse_err(
                    lineno,
                    format!("unsupported vector header: {trimmed:?}"),
                ));
            }
            is_array = true;
            continue;
        }
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        if is_array && header_dims.is_none() {
            let fields: Vec<&str> = trimmed.split_whitespace().collect();
            if fields.len() != 2 {
                return Err(parse_err(lineno, "array size line must hold rows cols"));
            }
            let rows: usize = fields[0]
                .parse()
                .map_err(|_| parse_err(lineno, format!("bad size token {:?}", fields[0])))?;
            let cols: usize = fields[1]
                .parse()
                .map_err(|_| parse_err(lineno, format!("bad size token {:?}", fields[1])))?;
            if cols != 1 {
                return Err(parse_err(lineno, format!("expected 1 column, found {cols}")));
            }
            header_dims = Some(rows);
            continue;
        }
        for field in trimmed.split_whitespace() {
            let v: f64 = field
                .parse()
                .map_err(|_| parse_err(lineno, format!("bad value {field:?}")))?;
            values.push(v);
        }
    }
    if let Some(rows) = header_dims {
        if values.len() != rows {
            return Err(parse_err(
                0,
                format!("declared {rows} values, found {}", values.len()),
            ));
        }
    }
    Ok(values)
}

/// Writes a vector as plain text, one value per line, 17 significant digits.
pub fn write_vector(x: &[f64], path: impl AsRef<Path>) -> Result<()> {
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    for v in x {
        writeln!(w, "{v:.16e}")?;
    }
    w.flush()?;
    Ok(())
}
