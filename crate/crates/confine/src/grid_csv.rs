//! Solution grids as CSV: one row per node with coordinates, components and
//! optional extra columns.

use std::io::{Read, Write};

use confine_core::solver::{GridSpec, SolutionGrid};

use crate::json::fmt_f64;
use crate::Error;

/// Extra per-node column written after the solution components.
#[derive(Debug, Clone)]
pub struct Column {
    pub name: String,
    pub values: Vec<f64>,
}

pub fn write<W: Write>(out: W, sol: &SolutionGrid, extra: &[Column]) -> Result<(), Error> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = match sol.grid.dim {
        1 => vec!["x".into()],
        _ => vec!["x".into(), "y".into()],
    };
    header.extend((1..=sol.m).map(|k| format!("u{k}")));
    header.extend(extra.iter().map(|c| c.name.clone()));
    w.write_record(&header).map_err(csv_err)?;
    for (node, u) in sol.nodes().enumerate() {
        let mut row: Vec<String> = sol.grid.coords(node).into_iter().map(fmt_f64).collect();
        row.extend(u.iter().copied().map(fmt_f64));
        row.extend(extra.iter().map(|c| fmt_f64(c.values[node])));
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::Io {
        path: "<csv>".into(),
        source: e,
    })
}

pub fn to_string(sol: &SolutionGrid, extra: &[Column]) -> String {
    let mut buf = Vec::new();
    write(&mut buf, sol, extra).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("CSV output is UTF-8")
}

/// Reads a grid written by [`write`]. The grid is inferred from the
/// coordinate columns; columns other than `x`, `y` and `u1..um` are ignored.
pub fn read<R: Read>(input: R) -> Result<SolutionGrid, Error> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers().map_err(csv_err)?.clone();
    let pos = |name: &str| header.iter().position(|h| h == name);
    let xi = pos("x").ok_or_else(|| Error::Format("missing column `x`".into()))?;
    let yi = pos("y");
    let ui: Vec<usize> = (1..).map_while(|k| pos(&format!("u{k}"))).collect();
    if ui.is_empty() {
        return Err(Error::Format("missing column `u1`".into()));
    }
    let m = ui.len();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut values = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let num = |i: usize| -> Result<f64, Error> {
            let s = rec.get(i).unwrap_or("");
            s.trim()
                .parse()
                .map_err(|_| Error::Format(format!("row {}: `{s}` is not a number", line + 2)))
        };
        xs.push(num(xi)?);
        if let Some(yi) = yi {
            ys.push(num(yi)?);
        }
        for &i in &ui {
            values.push(num(i)?);
        }
    }
    let grid = infer_grid(&xs, yi.map(|_| ys.as_slice()))?;
    SolutionGrid::from_values(grid, m, values).map_err(|e| Error::Format(e.to_string()))
}

fn infer_grid(xs: &[f64], ys: Option<&[f64]>) -> Result<GridSpec, Error> {
    let rows = xs.len();
    let grid = match ys {
        None => {
            if rows < 3 {
                return Err(Error::Format("a grid needs at least 3 rows".into()));
            }
            GridSpec::interval(-xs[0], rows)
        }
        Some(_) => {
            let n = (rows as f64).sqrt().round() as usize;
            if n < 3 || n * n != rows {
                return Err(Error::Format(format!(
                    "{rows} rows do not form a square grid"
                )));
            }
            GridSpec::square(-xs[0], n)
        }
    };
    grid.validate().map_err(|e| Error::Format(e.to_string()))?;
    let tol = 1e-9 * grid.half_width.max(1.0);
    for node in 0..rows {
        let c = grid.coords(node);
        let got = match ys {
            None => vec![xs[node]],
            Some(ys) => vec![xs[node], ys[node]],
        };
        if c.iter().zip(&got).any(|(a, b)| (a - b).abs() > tol) {
            return Err(Error::Format(format!(
                "row {} coordinates {got:?} do not match a uniform grid on [-X, X]",
                node + 2
            )));
        }
    }
    Ok(grid)
}

fn csv_err(e: csv::Error) -> Error {
    Error::Format(e.to_string())
}
