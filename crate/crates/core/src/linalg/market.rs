//! Matrix Market coordinate format (1-based indices).

use std::io::{BufRead, Write};

use super::SparseMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MarketSymmetry {
    General,
    /// Only the lower triangle is stored; reading mirrors it.
    Symmetric,
}

pub fn read_matrix_market<R: BufRead>(reader: R) -> Result<SparseMatrix> {
    let mut lines = reader.lines().enumerate();

    let (_, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        msg: "empty input".into(),
    })?;
    let header = header?;
    let fields: Vec<String> = header.split_whitespace().map(|s| s.to_ascii_lowercase()).collect();
    if fields.len() < 5 || fields[0] != "%%matrixmarket" || fields[1] != "matrix" {
        return Err(Error::Parse {
            line: 1,
            msg: format!("bad header `{header}`"),
        });
    }
    if fields[2] != "coordinate" {
        return Err(Error::Parse {
            line: 1,
            msg: "only coordinate format is supported".into(),
        });
    }
    if fields[3] != "real" && fields[3] != "integer" {
        return Err(Error::Parse {
            line: 1,
            msg: format!("unsupported field type `{}`", fields[3]),
        });
    }
    let symmetry = match fields[4].as_str() {
        "general" => MarketSymmetry::General,
        "symmetric" => MarketSymmetry::Symmetric,
        other => {
            return Err(Error::Parse {
                line: 1,
                msg: format!("unsupported symmetry `{other}`"),
            })
        }
    };

    let mut size: Option<(usize, usize, usize)> = None;
    let mut triplets = Vec::new();
    for (idx, line) in lines {
        let line = line?;
        let lineno = idx + 1;
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        let parts: Vec<&str> = t.split_whitespace().collect();
        let bad = |msg: &str| Error::Parse {
            line: lineno,
            msg: format!("{msg}: `{t}`"),
        };
        match size {
            None => {
                if parts.len() != 3 {
                    return Err(bad("expected `rows cols nnz`"));
                }
                let p: Vec<usize> = parts
                    .iter()
                    .map(|s| s.parse().map_err(|_| bad("bad size line")))
                    .collect::<Result<_>>()?;
                size = Some((p[0], p[1], p[2]));
                triplets.reserve(p[2]);
            }
            Some((m, n, _)) => {
                if parts.len() != 3 {
                    return Err(bad("expected `row col value`"));
                }
                let r: usize = parts[0].parse().map_err(|_| bad("bad row index"))?;
                let c: usize = parts[1].parse().map_err(|_| bad("bad column index"))?;
                let v: f64 = parts[2].parse().map_err(|_| bad("bad value"))?;
                if r == 0 || c == 0 || r > m || c > n {
                    return Err(bad("index out of range"));
                }
                triplets.push((r - 1, c - 1, v));
                if symmetry == MarketSymmetry::Symmetric && r != c {
                    triplets.push((c - 1, r - 1, v));
                }
            }
        }
    }
    let (m, n, nnz) = size.ok_or(Error::Parse {
        line: 0,
        msg: "missing size line".into(),
    })?;
    let stored = match symmetry {
        MarketSymmetry::General => triplets.len(),
        MarketSymmetry::Symmetric => triplets.iter().filter(|t| t.0 >= t.1).count(),
    };
    if stored != nnz {
        return Err(Error::Parse {
            line: 0,
            msg: format!("header declares {nnz} entries, found {stored}"),
        });
    }
    SparseMatrix::from_triplets(m, n, triplets)
}

pub fn write_matrix_market<W: Write>(
    a: &SparseMatrix,
    symmetry: MarketSymmetry,
    mut w: W,
) -> Result<()> {
    let entries: Vec<(usize, usize, f64)> = match symmetry {
        MarketSymmetry::General => a.col_triplets().collect(),
        MarketSymmetry::Symmetric => a.col_triplets().filter(|t| t.0 >= t.1).collect(),
    };
    let tag = match symmetry {
        MarketSymmetry::General => "general",
        MarketSymmetry::Symmetric => "symmetric",
    };
    writeln!(w, "%%MatrixMarket matrix coordinate real {tag}")?;
    writeln!(w, "{} {} {}", a.nrows(), a.ncols(), entries.len())?;
    for (r, c, v) in entries {
        writeln!(w, "{} {} {:?}", r + 1, c + 1, v)?;
    }
    Ok(())
}
