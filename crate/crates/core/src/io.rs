//! File formats.
//!
//! Matrices are stored as JSON objects
//!
//! ```json
//! { "shape": [rows, cols], "s": [row-major values], "i": [row-major values],
//!   "seed": 7, "config": { ... } }
//! ```
//!
//! where `i` is present only for dual matrices and `seed`/`config` echo the
//! run that produced the matrix. CSV files hold one real matrix, one row per
//! line, every value written with 17 significant digits.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::dual::DualMatrix;
use crate::error::{Error, Result};
use crate::sweep::{SweepRecord, SweepTable};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixFile {
    pub shape: [usize; 2],
    pub s: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub i: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<serde_json::Value>,
}

fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    m.transpose().as_slice().to_vec()
}

impl MatrixFile {
    pub fn real(m: &DMatrix<f64>) -> Self {
        MatrixFile {
            shape: [m.nrows(), m.ncols()],
            s: row_major(m),
            i: None,
            seed: None,
            config: None,
        }
    }

    pub fn dual(m: &DualMatrix) -> Self {
        MatrixFile {
            i: Some(row_major(m.i())),
            ..MatrixFile::real(m.s())
        }
    }

    pub fn with_provenance(mut self, seed: Option<u64>, config: Option<serde_json::Value>) -> Self {
        self.seed = seed;
        self.config = config;
        self
    }

    fn part(&self, values: &[f64]) -> Result<DMatrix<f64>> {
        let [r, c] = self.shape;
        if values.len() != r * c {
            return Err(Error::Parse(format!(
                "shape {r}×{c} needs {} values, found {}",
                r * c,
                values.len()
            )));
        }
        Ok(DMatrix::from_row_slice(r, c, values))
    }

    pub fn standard(&self) -> Result<DMatrix<f64>> {
        self.part(&self.s)
    }

    /// Standard and infinitesimal parts; a missing `i` reads as zero.
    pub fn to_dual(&self) -> Result<DualMatrix> {
        let s = self.standard()?;
        let i = match &self.i {
            Some(v) => self.part(v)?,
            None => DMatrix::zeros(s.nrows(), s.ncols()),
        };
        DualMatrix::new(s, i)
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

/// 17 significant digits: exact round trip for `f64`.
pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn matrix_to_csv(m: &DMatrix<f64>) -> String {
    let mut out = String::new();
    for r in 0..m.nrows() {
        let row: Vec<String> = m.row(r).iter().map(|&x| format_f64(x)).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn write_matrix_csv(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    fs::write(path, matrix_to_csv(m))?;
    Ok(())
}

fn parse_rows(text: &str) -> Result<Vec<Vec<f64>>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|line| {
            line.split(',')
                .map(|v| {
                    v.trim()
                        .parse::<f64>()
                        .map_err(|e| Error::Parse(format!("{v:?}: {e}")))
                })
                .collect()
        })
        .collect()
}

pub fn matrix_from_csv(text: &str) -> Result<DMatrix<f64>> {
    let rows = parse_rows(text)?;
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::Parse("ragged CSV matrix".into()));
    }
    let flat: Vec<f64> = rows.concat();
    Ok(DMatrix::from_row_slice(rows.len(), ncols, &flat))
}

pub fn read_matrix_csv(path: &Path) -> Result<DMatrix<f64>> {
    matrix_from_csv(&fs::read_to_string(path)?)
}

/// Reads a matrix from `.json` ([`MatrixFile`]) or `.csv` (real only).
pub fn read_matrix(path: &Path) -> Result<DualMatrix> {
    if is_csv(path) {
        DualMatrix::from_real(read_matrix_csv(path)?)
    } else {
        read_json::<MatrixFile>(path)?.to_dual()
    }
}

fn is_csv(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

/// Trajectory file: one state `x_t` per line (CSV) or a JSON array of states.
pub fn write_trajectory(path: &Path, xs: &[DVector<f64>]) -> Result<()> {
    if is_csv(path) {
        let mut out = String::new();
        for x in xs {
            let row: Vec<String> = x.iter().map(|&v| format_f64(v)).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        fs::write(path, out)?;
        Ok(())
    } else {
        let states: Vec<Vec<f64>> = xs.iter().map(|x| x.as_slice().to_vec()).collect();
        write_json(path, &states)
    }
}

pub fn read_trajectory(path: &Path) -> Result<Vec<DVector<f64>>> {
    let rows = if is_csv(path) {
        parse_rows(&fs::read_to_string(path)?)?
    } else {
        read_json::<Vec<Vec<f64>>>(path)?
    };
    Ok(rows.into_iter().map(DVector::from_vec).collect())
}

pub const SWEEP_HEADER: &str = "k,p,standard,infinitesimal,delta_gamma";

pub fn sweep_to_csv(table: &SweepTable) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for r in &table.records {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.k,
            format_f64(r.p),
            format_f64(r.standard),
            format_f64(r.infinitesimal),
            format_f64(r.delta_gamma)
        );
    }
    out
}

/// Parses a sweep CSV; `rank` is the largest `k` and `group_tol` is unknown (NaN).
pub fn sweep_from_csv(text: &str) -> Result<SweepTable> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    if lines.next().map(str::trim) != Some(SWEEP_HEADER) {
        return Err(Error::Parse(format!("sweep CSV must start with {SWEEP_HEADER:?}")));
    }
    let mut records = Vec::new();
    let mut p_list: Vec<f64> = Vec::new();
    for line in lines {
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if f.len() != 5 {
            return Err(Error::Parse(format!("expected 5 fields in {line:?}")));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|e| Error::Parse(format!("{s:?}: {e}")));
        let k = f[0]
            .parse::<usize>()
            .map_err(|e| Error::Parse(format!("{:?}: {e}", f[0])))?;
        let p = num(f[1])?;
        if !p_list.contains(&p) {
            p_list.push(p);
        }
        records.push(SweepRecord {
            k,
            p,
            standard: num(f[2])?,
            infinitesimal: num(f[3])?,
            delta_gamma: num(f[4])?,
        });
    }
    Ok(SweepTable {
        rank: records.iter().map(|r| r.k).max().unwrap_or(0),
        records,
        p_list,
        group_tol: f64::NAN,
        provenance: serde_json::Value::Null,
    })
}

pub fn read_sweep(path: &Path) -> Result<SweepTable> {
    if is_csv(path) {
        sweep_from_csv(&fs::read_to_string(path)?)
    } else {
        read_json(path)
    }
}
