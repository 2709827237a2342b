//! CSV ingestion and emission. Floats are written with `Display`, which is
//! the shortest string that parses back to the same `f64`.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::cost::CostMatrix;
use crate::error::{Error, Result};
use crate::grid::{DiscreteMeasure, Grid, GridFunction};
use crate::subdiff::SubdifferentialMap;
use crate::transform::TransformResult;

/// Lowercase hex SHA-256.
pub fn content_hash(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Relative tolerance on grid steps read from files.
pub const UNIFORM_STEP_RTOL: f64 = 1e-9;

struct Row {
    line: u64,
    fields: Vec<String>,
}

fn rows<R: Read>(reader: R) -> Result<Vec<Row>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Csv {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.iter().all(str::is_empty) {
            continue;
        }
        out.push(Row {
            line,
            fields: rec.iter().map(str::to_string).collect(),
        });
    }
    Ok(out)
}

fn csv_err(line: u64, message: impl Into<String>) -> Error {
    Error::Csv {
        line,
        message: message.into(),
    }
}

fn number(line: u64, s: &str) -> Result<f64> {
    let v: f64 = s.parse().map_err(|_| csv_err(line, format!("not a number: {s:?}")))?;
    if v.is_nan() {
        return Err(csv_err(line, "NaN is not allowed"));
    }
    Ok(v)
}

fn finite(line: u64, s: &str) -> Result<f64> {
    let v = number(line, s)?;
    if !v.is_finite() {
        return Err(csv_err(line, format!("coordinate must be finite, got {s:?}")));
    }
    Ok(v)
}

/// Checks that `xs` is strictly increasing with equal steps and returns the
/// grid through its endpoints.
fn uniform_grid(xs: &[f64], lines: &[u64]) -> Result<Grid> {
    if xs.len() < 2 {
        return Err(Error::TooFewPoints(xs.len()));
    }
    let n = xs.len();
    let h = xs[1] - xs[0];
    for k in 1..n {
        let step = xs[k] - xs[k - 1];
        if step <= 0.0 {
            return Err(csv_err(lines[k], format!("x must be strictly increasing ({} after {})", xs[k], xs[k - 1])));
        }
        if (step - h).abs() > UNIFORM_STEP_RTOL * h {
            return Err(csv_err(lines[k], format!("non-uniform step {step} (expected {h})")));
        }
    }
    Grid::uniform(xs[0], xs[n - 1], n)
}

/// Drops a leading header row, detected by a non-numeric first field.
fn skip_header(mut rows: Vec<Row>) -> Vec<Row> {
    if rows.first().is_some_and(|r| r.fields[0].parse::<f64>().is_err()) {
        rows.remove(0);
    }
    rows
}

/// Reads two columns `x, f(x)`. A header row is optional and `inf` stands
/// for `+inf`.
pub fn read_function_csv<R: Read>(reader: R) -> Result<GridFunction> {
    let rows = skip_header(rows(reader)?);
    let mut xs = Vec::with_capacity(rows.len());
    let mut vs = Vec::with_capacity(rows.len());
    let mut lines = Vec::with_capacity(rows.len());
    for r in &rows {
        if r.fields.len() != 2 {
            return Err(csv_err(r.line, format!("expected 2 fields, got {}", r.fields.len())));
        }
        xs.push(finite(r.line, &r.fields[0])?);
        let v = number(r.line, &r.fields[1])?;
        if v == f64::NEG_INFINITY {
            return Err(csv_err(r.line, "-inf is not allowed"));
        }
        vs.push(v);
        lines.push(r.line);
    }
    let grid = uniform_grid(&xs, &lines)?;
    GridFunction::new(grid, vs)
}

pub fn read_function_file(path: &Path) -> Result<GridFunction> {
    read_function_csv(File::open(path)?)
}

/// Reads a cost matrix: the first row holds the `y` grid after one ignored
/// corner cell, and each later row is `x, c(x, y_1), .., c(x, y_m)`.
pub fn read_cost_csv<R: Read>(reader: R, label: &str) -> Result<CostMatrix> {
    let rows = rows(reader)?;
    let (head, body) = rows.split_first().ok_or_else(|| csv_err(1, "empty cost file"))?;
    let m = head.fields.len() - 1;
    let ys = head.fields[1..]
        .iter()
        .map(|s| finite(head.line, s))
        .collect::<Result<Vec<_>>>()?;
    let grid_j = uniform_grid(&ys, &vec![head.line; m]).map_err(|e| match e {
        Error::Csv { message, .. } => csv_err(head.line, format!("y grid: {message}")),
        e => e,
    })?;
    let mut xs = Vec::with_capacity(body.len());
    let mut lines = Vec::with_capacity(body.len());
    let mut entries = Vec::with_capacity(body.len() * m);
    for r in body {
        if r.fields.len() != m + 1 {
            return Err(csv_err(r.line, format!("expected {} fields, got {}", m + 1, r.fields.len())));
        }
        xs.push(finite(r.line, &r.fields[0])?);
        for s in &r.fields[1..] {
            entries.push(finite(r.line, s)?);
        }
        lines.push(r.line);
    }
    let grid_i = uniform_grid(&xs, &lines)?;
    CostMatrix::from_entries(label, grid_i, grid_j, entries)
}

pub fn read_cost_file(path: &Path) -> Result<CostMatrix> {
    read_cost_csv(File::open(path)?, &path.display().to_string())
}

/// Reads atoms `x, p`, header optional.
pub fn read_measure_csv<R: Read>(reader: R) -> Result<DiscreteMeasure> {
    let rows = skip_header(rows(reader)?);
    let mut atoms = Vec::with_capacity(rows.len());
    for r in &rows {
        if r.fields.len() != 2 {
            return Err(csv_err(r.line, format!("expected 2 fields, got {}", r.fields.len())));
        }
        atoms.push((finite(r.line, &r.fields[0])?, finite(r.line, &r.fields[1])?));
    }
    DiscreteMeasure::new(atoms)
}

/// Parses `x:p,x:p,..`.
pub fn parse_measure(s: &str) -> Result<DiscreteMeasure> {
    let atoms = s
        .split(',')
        .map(|a| {
            let (x, p) = a
                .split_once(':')
                .ok_or_else(|| Error::Parse(format!("atom {a:?} is not of the form x:p")))?;
            let num = |t: &str| t.trim().parse::<f64>().map_err(|e| Error::Parse(format!("atom {a:?}: {e}")));
            Ok((num(x)?, num(p)?))
        })
        .collect::<Result<Vec<_>>>()?;
    DiscreteMeasure::new(atoms)
}

pub fn write_function_csv<W: Write>(mut w: W, f: &GridFunction) -> Result<()> {
    writeln!(w, "x,value")?;
    for (x, v) in f.grid().points().iter().zip(f.values()) {
        writeln!(w, "{x},{v}")?;
    }
    Ok(())
}

/// Columns `point, value, argmax_point`; `source` is the grid the maximum
/// ranges over.
pub fn write_transform_csv<W: Write>(mut w: W, t: &TransformResult, source: &Grid) -> Result<()> {
    writeln!(w, "point,value,argmax_point")?;
    for (k, (p, v)) in t.values.grid().points().iter().zip(t.values.values()).enumerate() {
        writeln!(w, "{p},{v},{}", source.point(t.argmax[k]))?;
    }
    Ok(())
}

/// Sparse triples `x_index, y_index, slack`.
pub fn write_subdiff_csv<W: Write>(mut w: W, map: &SubdifferentialMap) -> Result<()> {
    writeln!(w, "x_index,y_index,slack")?;
    for (i, j, s) in map.triples() {
        writeln!(w, "{i},{j},{s}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::CostSpec;
    use crate::subdiff::subdifferential_map;
    use crate::transform::c_transform;

    #[test]
    fn hash_of_empty_input() {
        assert_eq!(content_hash(b""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    }

    #[test]
    fn function_roundtrip() {
        let g = Grid::uniform(-1.0, 1.0, 17).unwrap();
        let f = GridFunction::sample(g, |x| (3.0 * x).sin() / 7.0).unwrap();
        let mut buf = Vec::new();
        write_function_csv(&mut buf, &f).unwrap();
        let back = read_function_csv(&buf[..]).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn function_inf_and_no_header() {
        let f = read_function_csv("0,inf\n0.5,1\n1,2\n".as_bytes()).unwrap();
        assert_eq!(f.values(), &[f64::INFINITY, 1.0, 2.0]);
    }

    #[test]
    fn function_errors_carry_line_numbers() {
        let line = |s: &str| match read_function_csv(s.as_bytes()) {
            Err(Error::Csv { line, .. }) => line,
            other => panic!("{other:?}"),
        };
        assert_eq!(line("x,f\n0,1\n1,abc\n"), 3);
        assert_eq!(line("0,1\n1,2\n1.5,3\n"), 3);
        assert_eq!(line("0,1\n1,2\n0.5,3\n"), 3);
        assert_eq!(line("0,1\n1,2,3\n"), 2);
        assert_eq!(line("0,1\n1,-inf\n"), 2);
        assert_eq!(line("0,1\n1,nan\n"), 2);
    }

    #[test]
    fn uniform_within_tolerance() {
        assert!(read_function_csv("0,0\n0.1,0\n0.2000000000000001,0\n".as_bytes()).is_ok());
        assert!(read_function_csv("0,0\n0.1,0\n0.2000001,0\n".as_bytes()).is_err());
    }

    #[test]
    fn cost_roundtrip_and_errors() {
        let gi = Grid::uniform(0.0, 1.0, 3).unwrap();
        let gj = Grid::uniform(-1.0, 1.0, 5).unwrap();
        let c = CostMatrix::tabulate(&CostSpec::Bilinear, gi, gj).unwrap();
        let mut s = String::from("x\\y");
        for y in gj.points() {
            s += &format!(",{y}");
        }
        s.push('\n');
        for i in 0..3 {
            s += &gi.point(i).to_string();
            for v in c.row(i) {
                s += &format!(",{v}");
            }
            s.push('\n');
        }
        let back = read_cost_csv(s.as_bytes(), "t").unwrap();
        assert_eq!(back.entries(), c.entries());
        assert_eq!(back.grid_j(), c.grid_j());
        assert!(matches!(
            read_cost_csv(",0,1\n0,1\n".as_bytes(), "t"),
            Err(Error::Csv { line: 2, .. })
        ));
    }

    #[test]
    fn measures() {
        let mu = parse_measure("0:0.5, 1:0.5").unwrap();
        assert_eq!(mu.barycenter(), 0.5);
        assert!(parse_measure("0;1").is_err());
        let mu = read_measure_csv("x,p\n0,0.25\n1,0.75\n".as_bytes()).unwrap();
        assert_eq!(mu.barycenter(), 0.75);
    }

    #[test]
    fn transform_and_triples() {
        let g = Grid::uniform(-1.0, 1.0, 5).unwrap();
        let c = CostMatrix::tabulate(&CostSpec::Bilinear, g, g).unwrap();
        let f = GridFunction::sample(g, |_| 0.0).unwrap();
        let mut buf = Vec::new();
        write_transform_csv(&mut buf, &c_transform(&f, &c).unwrap(), &g).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next(), Some("point,value,argmax_point"));
        assert_eq!(text.lines().nth(1), Some("-1,1,-1"));
        let mut buf = Vec::new();
        write_subdiff_csv(&mut buf, &subdifferential_map(&f, &c, 1e-9).unwrap()).unwrap();
        assert!(String::from_utf8(buf).unwrap().contains("2,2,0\n"));
    }
}
