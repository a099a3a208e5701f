use std::io::{BufRead, Write};

use super::IterRecord;
use crate::error::{Error, Result};
use crate::tracker::UpdateStats;

pub const CSV_HEADER: &str = "k,objective,coord,step,resid_inf,elapsed_ns,touched_rows,touched_grads,heap_ops";

/// Writes a trace; floats use Rust's shortest round-trip formatting and the
/// initial row has `coord = -1`.
pub fn write_csv<W: Write>(records: &[IterRecord], mut w: W) -> Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in records {
        let coord = r.coord.map_or(-1, |c| c as i64);
        writeln!(
            w,
            "{},{:?},{},{:?},{:?},{},{},{},{}",
            r.k,
            r.objective,
            coord,
            r.step,
            r.resid_inf,
            r.elapsed_ns,
            r.stats.touched_rows,
            r.stats.touched_grads,
            r.stats.heap_ops
        )?;
    }
    Ok(())
}

pub fn read_csv<R: BufRead>(r: R) -> Result<Vec<IterRecord>> {
    let mut lines = r.lines();
    let header = lines.next().transpose()?.unwrap_or_default();
    if header.trim() != CSV_HEADER {
        return Err(Error::Parse {
            line: 1,
            msg: format!("expected header `{CSV_HEADER}`"),
        });
    }
    let mut out = Vec::new();
    for (no, line) in lines.enumerate() {
        let line = line?;
        let lineno = no + 2;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |msg: String| Error::Parse { line: lineno, msg };
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 9 {
            return Err(bad(format!("expected 9 fields, found {}", f.len())));
        }
        let int = |s: &str| s.parse::<u64>().map_err(|e| bad(format!("`{s}`: {e}")));
        let real = |s: &str| s.parse::<f64>().map_err(|e| bad(format!("`{s}`: {e}")));
        let coord: i64 = f[2].parse().map_err(|e| bad(format!("`{}`: {e}", f[2])))?;
        out.push(IterRecord {
            k: int(f[0])? as usize,
            objective: real(f[1])?,
            coord: if coord < 0 { None } else { Some(coord as usize) },
            step: real(f[3])?,
            resid_inf: real(f[4])?,
            elapsed_ns: int(f[5])?,
            stats: UpdateStats {
                touched_rows: int(f[6])? as usize,
                touched_grads: int(f[7])? as usize,
                heap_ops: int(f[8])? as usize,
            },
        });
    }
    Ok(out)
}
