//! CSV formats. Every file may start with `# key: value` comment lines.
//!
//! | artifact       | columns                                  |
//! |----------------|------------------------------------------|
//! | dissimilarity  | header of node ids, then the n×n matrix  |
//! | embedding      | `id,b1..bd,label`                        |
//! | transform      | `l1..ld`, one row of `L` per line        |
//! | trace          | `iteration,value,step`                   |
//! | assignment     | `index,id,cluster`                       |
//! | path           | `b1..bd,s1..sD`                          |
//! | report         | `metric,mean,std,v1..vN`                 |

use std::fmt::Write as _;
use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::eval::EvalReport;
use crate::graph::Dissimilarity;
use crate::metric_learning::LinearTransform;
use crate::optimize::TraceRow;

/// Ordered `# key: value` lines.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Header(pub Vec<(String, String)>);

impl Header {
    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.0.push((key.to_string(), value.to_string()));
        self
    }

    /// Appends the comment lines to `out`.
    pub fn render(&self, out: &mut String) {
        for (k, v) in &self.0 {
            let _ = writeln!(out, "# {k}: {v}");
        }
    }
}

fn join(values: impl IntoIterator<Item = String>) -> String {
    values.into_iter().collect::<Vec<_>>().join(",")
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|source| Error::Io { path: parent.to_path_buf(), source })?;
    }
    std::fs::write(path, contents).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

fn reader(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    let file = std::fs::File::open(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(file))
}

fn records(path: &Path) -> Result<Vec<(usize, Vec<String>)>> {
    let mut rdr = reader(path)?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Parse {
            path: path.display().to_string(),
            line: e.position().map_or(0, |p| p.line() as usize),
            msg: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        out.push((line, rec.iter().map(str::to_string).collect()));
    }
    Ok(out)
}

fn number(path: &Path, line: usize, cell: &str) -> Result<f64> {
    cell.parse::<f64>().map_err(|_| Error::Parse {
        path: path.display().to_string(),
        line,
        msg: format!("`{cell}` is not a number"),
    })
}

pub fn format_dissimilarity(header: &Header, d: &Dissimilarity) -> String {
    let mut out = String::new();
    header.render(&mut out);
    let _ = writeln!(out, "{}", d.ids.join(","));
    for row in d.matrix().rows() {
        let _ = writeln!(out, "{}", join(row.iter().map(f64::to_string)));
    }
    out
}

pub fn read_dissimilarity(path: &Path) -> Result<Dissimilarity> {
    let rows = records(path)?;
    let parse_err = |line: usize, msg: String| Error::Parse { path: path.display().to_string(), line, msg };
    let Some(((_, ids), body)) = rows.split_first() else {
        return Err(parse_err(1, "empty dissimilarity file".into()));
    };
    let n = ids.len();
    if body.len() != n {
        return Err(parse_err(body.last().map_or(1, |r| r.0), format!("expected {n} matrix rows, found {}", body.len())));
    }
    let mut m = Array2::zeros((n, n));
    for (i, (line, cells)) in body.iter().enumerate() {
        if cells.len() != n {
            return Err(parse_err(*line, format!("expected {n} columns, found {}", cells.len())));
        }
        for (j, c) in cells.iter().enumerate() {
            m[[i, j]] = number(path, *line, c)?;
        }
    }
    Dissimilarity::new(ids.clone(), m)
}

/// Labelled base points with string ids.
#[derive(Clone, Debug, PartialEq)]
pub struct PointTable {
    pub ids: Vec<String>,
    pub points: Vec<Vec<f64>>,
    pub labels: Vec<String>,
}

pub fn format_points(header: &Header, table: &PointTable) -> String {
    let d = table.points.first().map_or(0, Vec::len);
    let mut out = String::new();
    header.render(&mut out);
    let _ = writeln!(out, "id,{},label", join((1..=d).map(|k| format!("b{k}"))));
    for ((id, p), label) in table.ids.iter().zip(&table.points).zip(&table.labels) {
        let _ = writeln!(out, "{id},{},{label}", join(p.iter().map(f64::to_string)));
    }
    out
}

pub fn read_points(path: &Path) -> Result<PointTable> {
    let rows = records(path)?;
    let mut table = PointTable { ids: vec![], points: vec![], labels: vec![] };
    let mut width = None;
    for (line, cells) in rows.into_iter().skip(1) {
        if cells.len() < 3 || width.is_some_and(|w| w != cells.len()) {
            return Err(Error::Parse {
                path: path.display().to_string(),
                line,
                msg: "rows must be `id,b1..bd,label` with a fixed width".into(),
            });
        }
        width = Some(cells.len());
        let coords = cells[1..cells.len() - 1].iter().map(|c| number(path, line, c)).collect::<Result<Vec<f64>>>()?;
        table.ids.push(cells[0].clone());
        table.points.push(coords);
        table.labels.push(cells[cells.len() - 1].clone());
    }
    if table.ids.is_empty() {
        return Err(Error::Parse { path: path.display().to_string(), line: 1, msg: "no points".into() });
    }
    Ok(table)
}

pub fn format_transform(header: &Header, l: &LinearTransform) -> String {
    let mut out = String::new();
    header.render(&mut out);
    let _ = writeln!(out, "{}", join((1..=l.dim()).map(|k| format!("l{k}"))));
    for row in l.matrix().rows() {
        let _ = writeln!(out, "{}", join(row.iter().map(f64::to_string)));
    }
    out
}

pub fn read_transform(path: &Path) -> Result<LinearTransform> {
    let rows = records(path)?;
    let body: Vec<&(usize, Vec<String>)> = rows.iter().skip(1).collect();
    let d = body.len();
    let mut flat = Vec::with_capacity(d * d);
    for (line, cells) in body {
        if cells.len() != d {
            return Err(Error::Parse { path: path.display().to_string(), line: *line, msg: format!("expected {d} columns") });
        }
        for c in cells {
            flat.push(number(path, *line, c)?);
        }
    }
    LinearTransform::from_flat(d, &flat)
}

pub fn format_trace(header: &Header, trace: &[TraceRow]) -> String {
    let mut out = String::new();
    header.render(&mut out);
    out.push_str("iteration,value,step\n");
    for r in trace {
        let _ = writeln!(out, "{},{},{}", r.iteration, r.value, r.step);
    }
    out
}

pub fn format_assignment(header: &Header, ids: &[String], clusters: &[usize]) -> String {
    let mut out = String::new();
    header.render(&mut out);
    out.push_str("index,id,cluster\n");
    for (i, (id, c)) in ids.iter().zip(clusters).enumerate() {
        let _ = writeln!(out, "{i},{id},{c}");
    }
    out
}

pub fn format_path(header: &Header, rows: &[Vec<f64>], base_dim: usize) -> String {
    let mut out = String::new();
    header.render(&mut out);
    let width = rows.first().map_or(base_dim, Vec::len);
    let names = (1..=base_dim).map(|k| format!("b{k}")).chain((1..=width - base_dim).map(|k| format!("s{k}")));
    let _ = writeln!(out, "{}", join(names));
    for r in rows {
        let _ = writeln!(out, "{}", join(r.iter().map(f64::to_string)));
    }
    out
}

pub fn format_reports(header: &Header, reports: &[EvalReport]) -> String {
    let mut out = String::new();
    header.render(&mut out);
    let n = reports.iter().map(|r| r.values.len()).max().unwrap_or(0);
    let meta_keys: std::collections::BTreeSet<&String> = reports.iter().flat_map(|r| r.metadata.keys()).collect();
    let _ = writeln!(
        out,
        "metric,{}mean,std,{}",
        meta_keys.iter().map(|k| format!("{k},")).collect::<String>(),
        join((1..=n).map(|k| format!("v{k}")))
    );
    for r in reports {
        let meta: String = meta_keys.iter().map(|k| format!("{},", r.metadata.get(*k).map_or("", |v| v))).collect();
        let _ = writeln!(out, "{},{meta}{},{},{}", r.metric, r.mean, r.std, join(r.values.iter().map(f64::to_string)));
    }
    out
}
