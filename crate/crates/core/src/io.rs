//! Text formats for point sets, distance matrices and coresets.
//!
//! Point files hold one point per line with whitespace- or comma-separated
//! coordinates; the line number is the point index. Distance-matrix files
//! start with `n` followed by `n` rows of `n` distances. Coreset files hold
//! one `index weight` pair per line.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::metric::{Geometry, PointSet, ProxySet, WeightFn};

fn fields(line: &str) -> impl Iterator<Item = &str> {
    line.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|f| !f.is_empty())
}

fn parse_reals(line: &str, lineno: usize) -> Result<Vec<f64>> {
    fields(line)
        .map(|f| {
            f.parse::<f64>().map_err(|e| Error::Parse {
                line: lineno,
                msg: format!("{f:?}: {e}"),
            })
        })
        .collect()
}

/// Parses a point file. Blank lines are not allowed inside the data since
/// line numbers are point indices; trailing blank lines are ignored.
pub fn parse_points(text: &str) -> Result<PointSet> {
    let lines: Vec<&str> = text.trim_end().lines().collect();
    let mut rows = Vec::with_capacity(lines.len());
    for (i, line) in lines.iter().enumerate() {
        let row = parse_reals(line, i + 1)?;
        if row.is_empty() {
            return Err(Error::Parse {
                line: i + 1,
                msg: "empty line".into(),
            });
        }
        rows.push(row);
    }
    PointSet::from_rows(&rows)
}

pub fn parse_matrix(text: &str) -> Result<PointSet> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, head) = lines.next().ok_or(Error::Parse {
        line: 1,
        msg: "missing point count".into(),
    })?;
    let n: usize = head.trim().parse().map_err(|e| Error::Parse {
        line: 1,
        msg: format!("point count: {e}"),
    })?;
    let mut dmat = Vec::with_capacity(n * n);
    let mut rows = 0;
    for (i, line) in lines {
        let row = parse_reals(line, i + 1)?;
        if row.len() != n {
            return Err(Error::Parse {
                line: i + 1,
                msg: format!("expected {n} entries, found {}", row.len()),
            });
        }
        dmat.extend(row);
        rows += 1;
    }
    if rows != n {
        return Err(Error::Parse {
            line: rows + 2,
            msg: format!("expected {n} rows, found {rows}"),
        });
    }
    PointSet::from_matrix(n, dmat)
}

pub fn read_points(path: impl AsRef<Path>) -> Result<PointSet> {
    parse_points(&fs::read_to_string(path)?)
}

pub fn read_matrix(path: impl AsRef<Path>) -> Result<PointSet> {
    parse_matrix(&fs::read_to_string(path)?)
}

/// Writes `ps` in the format it was built from.
pub fn write_point_set(path: impl AsRef<Path>, ps: &PointSet) -> Result<()> {
    let mut out = std::io::BufWriter::new(fs::File::create(path)?);
    match ps.geometry() {
        Geometry::Euclidean { dim, coords } => {
            for row in coords.chunks(*dim) {
                let line: Vec<String> = row.iter().map(f64::to_string).collect();
                writeln!(out, "{}", line.join(" "))?;
            }
        }
        Geometry::Matrix { dmat } => {
            let n = ps.len();
            writeln!(out, "{n}")?;
            for row in dmat.chunks(n) {
                let line: Vec<String> = row.iter().map(f64::to_string).collect();
                writeln!(out, "{}", line.join(" "))?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

pub fn write_coreset(path: impl AsRef<Path>, cs: &ProxySet) -> Result<()> {
    let mut out = std::io::BufWriter::new(fs::File::create(path)?);
    for (q, w) in cs.weights.iter() {
        writeln!(out, "{q} {w}")?;
    }
    out.flush()?;
    Ok(())
}

pub fn parse_coreset(text: &str) -> Result<WeightFn> {
    let mut w = WeightFn::new();
    for (i, line) in text.lines().enumerate() {
        let f: Vec<&str> = fields(line).collect();
        if f.is_empty() {
            continue;
        }
        let bad = |msg: String| Error::Parse { line: i + 1, msg };
        if f.len() != 2 {
            return Err(bad(format!("expected `index weight`, found {} fields", f.len())));
        }
        let q = f[0].parse().map_err(|e| bad(format!("index: {e}")))?;
        let wq = f[1].parse().map_err(|e| bad(format!("weight: {e}")))?;
        w.set(q, wq);
    }
    Ok(w)
}

pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}
