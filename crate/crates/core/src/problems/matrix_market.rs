use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::ops::{CsrOperator, LinearOperator, Structure};

#[derive(Clone, Copy, PartialEq)]
enum Layout {
    Coordinate,
    Array,
}

#[derive(Clone, Copy, PartialEq)]
enum Symmetry {
    General,
    Symmetric,
    Skew,
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

/// Reads a square real MatrixMarket matrix (coordinate or array layout;
/// general, symmetric or skew-symmetric storage) into CSR form.
///
/// Symmetric files are tagged [`Structure::SymmetricIndefinite`] since the
/// format does not record definiteness; skew files are tagged
/// [`Structure::SkewLike`].
pub fn read_matrix_market<R: BufRead>(reader: R) -> Result<CsrOperator> {
    let mut lines = reader.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, header) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
    let header = header.map_err(|e| parse_err(1, e.to_string()))?;
    let tokens: Vec<String> = header.split_whitespace().map(|t| t.to_ascii_lowercase()).collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" {
        return Err(parse_err(1, "expected `%%MatrixMarket matrix <layout> <field> <symmetry>`"));
    }
    let layout = match tokens[2].as_str() {
        "coordinate" => Layout::Coordinate,
        "array" => Layout::Array,
        other => return Err(parse_err(1, format!("unknown layout `{other}`"))),
    };
    let pattern = match tokens[3].as_str() {
        "real" | "integer" | "double" => false,
        "pattern" if layout == Layout::Coordinate => true,
        other => return Err(Error::UnsupportedField(other.to_string())),
    };
    let symmetry = match tokens[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        "skew-symmetric" => Symmetry::Skew,
        other => return Err(Error::UnsupportedField(other.to_string())),
    };

    let mut body = lines.filter_map(|(n, l)| match l {
        Ok(text) if text.trim().is_empty() || text.trim_start().starts_with('%') => None,
        Ok(text) => Some(Ok((n, text))),
        Err(e) => Some(Err(parse_err(n, e.to_string()))),
    });
    let (size_line, size_text) = body.next().ok_or_else(|| parse_err(2, "missing size line"))??;
    let sizes: Vec<usize> = size_text
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| parse_err(size_line, format!("bad size `{t}`"))))
        .collect::<Result<_>>()?;
    let expected_sizes = if layout == Layout::Coordinate { 3 } else { 2 };
    if sizes.len() != expected_sizes {
        return Err(parse_err(size_line, format!("expected {expected_sizes} size fields")));
    }
    let (rows, cols) = (sizes[0], sizes[1]);
    if rows != cols {
        return Err(Error::DimensionMismatch {
            expected: rows,
            got: cols,
        });
    }
    let n = rows;
    let mut triplets = Vec::new();
    let mut push = |i: usize, j: usize, v: f64| {
        triplets.push((i, j, v));
        if i != j {
            match symmetry {
                Symmetry::General => {}
                Symmetry::Symmetric => triplets.push((j, i, v)),
                Symmetry::Skew => triplets.push((j, i, -v)),
            }
        }
    };

    match layout {
        Layout::Coordinate => {
            let nnz = sizes[2];
            for k in 0..nnz {
                let (line, text) = body
                    .next()
                    .ok_or_else(|| parse_err(size_line + k + 1, format!("expected {nnz} entries, found {k}")))??;
                let fields: Vec<&str> = text.split_whitespace().collect();
                let want = if pattern { 2 } else { 3 };
                if fields.len() != want {
                    return Err(parse_err(line, format!("expected {want} fields")));
                }
                let index = |t: &str| -> Result<usize> {
                    let v: usize = t.parse().map_err(|_| parse_err(line, format!("bad index `{t}`")))?;
                    if v == 0 || v > n {
                        return Err(parse_err(line, format!("index {v} outside 1..={n}")));
                    }
                    Ok(v - 1)
                };
                let (i, j) = (index(fields[0])?, index(fields[1])?);
                let v = if pattern {
                    1.0
                } else {
                    fields[2]
                        .parse::<f64>()
                        .map_err(|_| parse_err(line, format!("bad value `{}`", fields[2])))?
                };
                if symmetry != Symmetry::General && j > i {
                    return Err(parse_err(line, "symmetric storage expects the lower triangle"));
                }
                push(i, j, v);
            }
        }
        Layout::Array => {
            // Column-major; symmetric storage lists the lower triangle only.
            for j in 0..n {
                let start = match symmetry {
                    Symmetry::General => 0,
                    Symmetry::Symmetric => j,
                    Symmetry::Skew => j + 1,
                };
                for i in start..n {
                    let (line, text) = body.next().ok_or_else(|| parse_err(size_line, "array data ended early"))??;
                    let v: f64 = text
                        .trim()
                        .parse()
                        .map_err(|_| parse_err(line, format!("bad value `{}`", text.trim())))?;
                    if v != 0.0 {
                        push(i, j, v);
                    }
                }
            }
        }
    }
    if let Some(extra) = body.next() {
        let (line, _) = extra?;
        return Err(parse_err(line, "unexpected trailing data"));
    }
    let structure = match symmetry {
        Symmetry::General => Structure::General,
        Symmetry::Symmetric => Structure::SymmetricIndefinite,
        Symmetry::Skew => Structure::SkewLike,
    };
    CsrOperator::from_triplets(n, &triplets, structure)
}

pub fn load_matrix_market(path: impl AsRef<Path>) -> Result<CsrOperator> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_matrix_market(BufReader::new(file))
}

/// Writes the nonzeros of `op` as `coordinate real general`, one-based.
pub fn write_matrix_market(path: impl AsRef<Path>, op: &dyn LinearOperator) -> Result<()> {
    let path = path.as_ref();
    let dense = op
        .to_dense()
        .ok_or_else(|| Error::InvalidConfig("operator has no dense form to export".into()))?;
    let n = dense.nrows();
    let mut entries = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let v = dense[(i, j)];
            if v != 0.0 {
                entries.push((i, j, v));
            }
        }
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    writeln!(w, "%%MatrixMarket matrix coordinate real general").map_err(io)?;
    writeln!(w, "{n} {n} {}", entries.len()).map_err(io)?;
    for (i, j, v) in entries {
        writeln!(w, "{} {} {v:e}", i + 1, j + 1).map_err(io)?;
    }
    w.flush().map_err(io)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ops::{Matrix, Vector};

    fn read(text: &str) -> Result<CsrOperator> {
        read_matrix_market(text.as_bytes())
    }

    #[test]
    fn identity_file() {
        let op = read("%%MatrixMarket matrix coordinate real general\n% c\n2 2 2\n1 1 1.0\n2 2 1.0\n").unwrap();
        let e1 = Vector::from_vec(vec![1.0, 0.0]);
        assert_eq!(op.apply(&e1), e1);
    }

    #[test]
    fn symmetric_storage_expands() {
        let op = read("%%MatrixMarket matrix coordinate real symmetric\n3 3 4\n1 1 2\n2 1 -1\n3 2 5\n3 3 1\n").unwrap();
        let dense = op.to_dense().unwrap();
        let expected = Matrix::from_row_slice(3, 3, &[2.0, -1.0, 0.0, -1.0, 0.0, 5.0, 0.0, 5.0, 1.0]);
        assert_eq!(dense, expected);
        assert_eq!(op.structure(), Structure::SymmetricIndefinite);
    }

    #[test]
    fn array_layout() {
        let op = read("%%MatrixMarket matrix array real general\n2 2\n1\n3\n2\n4\n").unwrap();
        assert_eq!(op.to_dense().unwrap(), Matrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]));
    }

    #[test]
    fn skew_storage_negates() {
        let op = read("%%MatrixMarket matrix coordinate real skew-symmetric\n2 2 1\n2 1 3\n").unwrap();
        assert_eq!(op.to_dense().unwrap(), Matrix::from_row_slice(2, 2, &[0.0, -3.0, 3.0, 0.0]));
    }

    #[test]
    fn errors_carry_context() {
        assert!(matches!(read("%%MatrixMarket tensor\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(
            read("%%MatrixMarket matrix coordinate complex general\n1 1 1\n1 1 1 0\n"),
            Err(Error::UnsupportedField(f)) if f == "complex"
        ));
        assert!(matches!(
            read("%%MatrixMarket matrix coordinate real general\n2 2 1\n1 x 1.0\n"),
            Err(Error::Parse { line: 3, .. })
        ));
        assert!(matches!(
            read("%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1.0\n"),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn write_then_read_roundtrip() {
        let m = Matrix::from_row_slice(3, 3, &[1.5, 0.0, -2.0, 0.0, 3.25, 0.0, 1e-7, 0.0, 4.0]);
        let op = crate::ops::DenseOperator::general(m.clone()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.mtx");
        write_matrix_market(&path, &op).unwrap();
        let back = load_matrix_market(&path).unwrap();
        assert_eq!(back.to_dense().unwrap(), m);
        assert!(matches!(load_matrix_market(dir.path().join("missing.mtx")), Err(Error::Io { .. })));
    }
}
