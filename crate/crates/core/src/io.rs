//! Plain-text CSV dumps of matrices and trajectories.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::moments::LagMoments;
use crate::simulate::TimeSeries;

/// Header-less CSV, one matrix row per line.
pub fn matrix_to_csv(m: &DMatrix<f64>) -> String {
    let mut out = String::new();
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            if c > 0 {
                out.push(',');
            }
            let _ = write!(out, "{}", m[(r, c)]);
        }
        out.push('\n');
    }
    out
}

pub fn bool_matrix_to_csv(m: &DMatrix<bool>) -> String {
    matrix_to_csv(&m.map(|b| if b { 1.0 } else { 0.0 }))
}

fn parse_row(line: &str, line_no: usize) -> Result<Vec<f64>> {
    line.split(',')
        .map(|tok| {
            tok.trim().parse::<f64>().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("not a number: {tok:?}"),
            })
        })
        .collect()
}

pub fn matrix_from_csv(text: &str) -> Result<DMatrix<f64>> {
    let rows = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| parse_row(l, i + 1))
        .collect::<Result<Vec<_>>>()?;
    let ncols = rows.first().map_or(0, Vec::len);
    if let Some(bad) = rows.iter().find(|r| r.len() != ncols) {
        return Err(Error::DimensionMismatch {
            expected: ncols,
            found: bad.len(),
        });
    }
    Ok(DMatrix::from_fn(rows.len(), ncols, |r, c| rows[r][c]))
}

/// `t,y<id>,...` with one row per retained time step.
pub fn trajectory_to_csv(ts: &TimeSeries) -> String {
    let mut out = String::from("t");
    for id in ts.observed() {
        let _ = write!(out, ",y{id}");
    }
    out.push('\n');
    let s = ts.samples();
    for t in 0..s.nrows() {
        let _ = write!(out, "{t}");
        for c in 0..s.ncols() {
            let _ = write!(out, ",{}", s[(t, c)]);
        }
        out.push('\n');
    }
    out
}

pub fn trajectory_from_csv(text: &str) -> Result<TimeSeries> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::invalid("empty trajectory file"))?;
    let mut cols = header.split(',');
    if cols.next().map(str::trim) != Some("t") {
        return Err(Error::Parse {
            line: 1,
            message: "header must start with \"t\"".into(),
        });
    }
    let observed = cols
        .map(|c| {
            c.trim()
                .strip_prefix('y')
                .and_then(|id| id.parse::<usize>().ok())
                .ok_or_else(|| Error::Parse {
                    line: 1,
                    message: format!("bad column name {c:?}"),
                })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut data = Vec::new();
    let mut count = 0;
    for (i, line) in lines {
        let row = parse_row(line, i + 1)?;
        if row.len() != observed.len() + 1 {
            return Err(Error::Parse {
                line: i + 1,
                message: format!("expected {} fields", observed.len() + 1),
            });
        }
        data.extend_from_slice(&row[1..]);
        count += 1;
    }
    TimeSeries::new(
        DMatrix::from_row_slice(count, observed.len(), &data),
        observed,
    )
}

/// Write `R_<k>.csv` for every lag into `dir` (created if missing).
pub fn write_lag_moments(moments: &LagMoments, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    for (k, m) in moments.iter() {
        fs::write(dir.join(format!("R_{k}.csv")), matrix_to_csv(m))?;
    }
    Ok(())
}
