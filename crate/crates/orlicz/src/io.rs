//! Field CSVs, JSON reports and atomic writes.

use std::io::Write;
use std::path::Path;

use orlicz_core::function_spaces::{ScalarField, TriangulatedDomain};
use serde::Serialize;

use crate::RunError;

/// Writes through a temporary file in the target directory and renames it
/// into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), RunError> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(|e| RunError::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| RunError::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| RunError::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| RunError::io(path, e))?;
    tmp.persist(path).map_err(|e| RunError::io(path, e.error))?;
    Ok(())
}

/// Full precision scientific notation, `-1.2345678901234567e-3`.
pub fn sci(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".into()
    } else {
        format!("{v:.16e}")
    }
}

/// Pretty JSON with every float in full precision scientific notation.
pub fn to_json<T: Serialize>(value: &T) -> Result<Vec<u8>, RunError> {
    let v = serde_json::to_value(value)?;
    let mut out = Vec::new();
    write_pretty(&v, &mut out, 0);
    out.push(b'\n');
    Ok(out)
}

fn write_pretty(v: &serde_json::Value, out: &mut Vec<u8>, indent: usize) {
    use serde_json::Value;
    let pad = |out: &mut Vec<u8>, n: usize| out.extend(std::iter::repeat(b' ').take(2 * n));
    match v {
        Value::Number(n) if n.is_f64() => out.extend(sci(n.as_f64().unwrap()).bytes()),
        Value::Array(items) if !items.is_empty() => {
            out.extend(b"[\n");
            for (i, item) in items.iter().enumerate() {
                pad(out, indent + 1);
                write_pretty(item, out, indent + 1);
                out.extend(if i + 1 < items.len() { &b",\n"[..] } else { &b"\n"[..] });
            }
            pad(out, indent);
            out.push(b']');
        }
        Value::Object(map) if !map.is_empty() => {
            out.extend(b"{\n");
            for (i, (k, item)) in map.iter().enumerate() {
                pad(out, indent + 1);
                out.extend(serde_json::to_string(k).unwrap().bytes());
                out.extend(b": ");
                write_pretty(item, out, indent + 1);
                out.extend(if i + 1 < map.len() { &b",\n"[..] } else { &b"\n"[..] });
            }
            pad(out, indent);
            out.push(b'}');
        }
        other => out.extend(serde_json::to_string(other).unwrap().bytes()),
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), RunError> {
    write_atomic(path, &to_json(value)?)
}

/// `# key=value` lines, then `x,y,u` with one row per vertex in index order.
pub fn field_csv(domain: &TriangulatedDomain, u: &ScalarField, comments: &[(&str, String)]) -> Result<Vec<u8>, RunError> {
    let mut out = Vec::new();
    for (k, v) in comments {
        writeln!(out, "# {k}={v}").expect("writing to memory");
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["x", "y", "u"])?;
    for (x, v) in domain.vertices().iter().zip(&u.values) {
        w.write_record([sci(x[0]), sci(x[1]), sci(*v)])?;
    }
    w.into_inner().map_err(|e| RunError::Config(e.to_string()))
}

/// A field read back from CSV, with its comment lines.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldFile {
    pub points: Vec<[f64; 2]>,
    pub values: Vec<f64>,
    pub comments: Vec<(String, String)>,
}

impl FieldFile {
    pub fn comment(&self, key: &str) -> Option<&str> {
        self.comments.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    /// The values as a field on `domain`, whose vertices must match the rows.
    pub fn on(&self, domain: &TriangulatedDomain) -> Result<ScalarField, RunError> {
        if self.points.len() != domain.num_vertices() {
            return Err(RunError::Config(format!(
                "field has {} rows, mesh has {} vertices",
                self.points.len(),
                domain.num_vertices()
            )));
        }
        let tol = 1e-9 * domain.h();
        for (i, (a, b)) in self.points.iter().zip(domain.vertices()).enumerate() {
            if (a[0] - b[0]).abs() > tol || (a[1] - b[1]).abs() > tol {
                return Err(RunError::Config(format!("row {i} is at {a:?}, vertex {i} at {b:?}")));
            }
        }
        Ok(ScalarField::new(domain, self.values.clone())?)
    }
}

pub fn read_field_csv(path: &Path) -> Result<FieldFile, RunError> {
    let text = std::fs::read_to_string(path).map_err(|e| RunError::io(path, e))?;
    parse_field_csv(&text).map_err(|e| match e {
        RunError::Config(m) => RunError::Config(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn parse_field_csv(text: &str) -> Result<FieldFile, RunError> {
    let comments = comment_lines(text);
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let header = r.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != ["x", "y", "u"] {
        return Err(RunError::Config(format!("expected header x,y,u, got {header:?}")));
    }
    let mut points = Vec::new();
    let mut values = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let num = |i: usize| -> Result<f64, RunError> {
            let s = rec.get(i).unwrap_or("");
            parse_ext(s).ok_or_else(|| RunError::Config(format!("bad number {s:?}")))
        };
        points.push([num(0)?, num(1)?]);
        values.push(num(2)?);
    }
    Ok(FieldFile {
        points,
        values,
        comments,
    })
}

pub fn comment_lines(text: &str) -> Vec<(String, String)> {
    text.lines()
        .filter_map(|l| l.strip_prefix('#'))
        .filter_map(|l| l.trim().split_once('='))
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .collect()
}

pub fn parse_ext(s: &str) -> Option<f64> {
    match s.trim() {
        "inf" | "+inf" => Some(f64::INFINITY),
        t => t.parse().ok(),
    }
}
