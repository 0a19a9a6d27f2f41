//! Tabular data behind Andrews curves, scatter matrices and parallel
//! coordinate plots. Nothing here renders.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::{Column, Dataset};
use crate::error::{Error, Result};

use super::relevancy::relevancy_factor;

pub const DEFAULT_ANDREWS_SAMPLES: usize = 201;

/// `x₁/√2 + x₂ sin t + x₃ cos t + x₄ sin 2t + x₅ cos 2t + x₆ sin 3t + …`
pub fn andrews_curve(x: &[f64], t: f64) -> Result<f64> {
    let (first, rest) = x
        .split_first()
        .ok_or_else(|| Error::invalid("Andrews curve needs at least one value"))?;
    let mut f = first * FRAC_1_SQRT_2;
    for (j, v) in rest.iter().enumerate() {
        let freq = (j / 2 + 1) as f64;
        f += if j % 2 == 0 {
            v * (freq * t).sin()
        } else {
            v * (freq * t).cos()
        };
    }
    Ok(f)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlotKind {
    Andrews,
    ScatterMatrix,
    ParallelCoords,
}

impl PlotKind {
    pub const ALL: [PlotKind; 3] = [
        PlotKind::Andrews,
        PlotKind::ScatterMatrix,
        PlotKind::ParallelCoords,
    ];

    pub fn file_name(self) -> &'static str {
        match self {
            PlotKind::Andrews => "andrews.csv",
            PlotKind::ScatterMatrix => "scatter.csv",
            PlotKind::ParallelCoords => "parallel.csv",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AndrewsRow {
    pub record_id: usize,
    pub t: f64,
    pub f: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterRow {
    pub col_a: Column,
    pub col_b: Column,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterPair {
    pub col_a: Column,
    pub col_b: Column,
    /// `None` when either column is constant.
    pub r: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParallelRow {
    pub record_id: usize,
    pub column: Column,
    pub value: f64,
}

fn present_columns(data: &Dataset) -> Vec<Column> {
    Column::ALL
        .into_iter()
        .filter(|&c| data.records.iter().all(|r| r.get(c).is_some()))
        .collect()
}

fn record_values(data: &Dataset, columns: &[Column]) -> Vec<Vec<f64>> {
    data.records
        .iter()
        .map(|r| columns.iter().map(|&c| r.get(c).unwrap()).collect())
        .collect()
}

fn require_records(data: &Dataset) -> Result<()> {
    if data.is_empty() {
        Err(Error::invalid("plot data needs at least one record"))
    } else {
        Ok(())
    }
}

/// Each record's curve sampled at `samples` evenly spaced angles over
/// [−π, π], using the columns in schema order.
pub fn andrews_rows(data: &Dataset, samples: usize) -> Result<Vec<AndrewsRow>> {
    require_records(data)?;
    if samples < 2 {
        return Err(Error::invalid("Andrews curves need at least two samples"));
    }
    let columns = present_columns(data);
    let mut rows = Vec::with_capacity(data.len() * samples);
    for (id, values) in record_values(data, &columns).iter().enumerate() {
        for s in 0..samples {
            let t = -PI + 2.0 * PI * s as f64 / (samples - 1) as f64;
            rows.push(AndrewsRow {
                record_id: id,
                t,
                f: andrews_curve(values, t)?,
            });
        }
    }
    Ok(rows)
}

/// Every unordered pair of columns with its correlation, plus the points.
pub fn scatter_matrix(data: &Dataset) -> Result<(Vec<ScatterPair>, Vec<ScatterRow>)> {
    require_records(data)?;
    let columns = present_columns(data);
    let mut pairs = Vec::new();
    let mut rows = Vec::new();
    for (i, &a) in columns.iter().enumerate() {
        for &b in &columns[i + 1..] {
            let xa = data.column(a).expect("present");
            let xb = data.column(b).expect("present");
            let r = match relevancy_factor(&xa, &xb) {
                Ok(r) => Some(r),
                Err(Error::DegenerateColumn(_)) | Err(Error::InvalidArgument(_)) => None,
                Err(e) => return Err(e),
            };
            pairs.push(ScatterPair {
                col_a: a,
                col_b: b,
                r,
            });
            rows.extend(xa.iter().zip(&xb).map(|(&x, &y)| ScatterRow {
                col_a: a,
                col_b: b,
                x,
                y,
            }));
        }
    }
    Ok((pairs, rows))
}

/// One row per record and column.
pub fn parallel_rows(data: &Dataset) -> Result<Vec<ParallelRow>> {
    require_records(data)?;
    let columns = present_columns(data);
    let mut rows = Vec::with_capacity(data.len() * columns.len());
    for (id, values) in record_values(data, &columns).iter().enumerate() {
        for (&column, &value) in columns.iter().zip(values) {
            rows.push(ParallelRow {
                record_id: id,
                column,
                value,
            });
        }
    }
    Ok(rows)
}

pub fn rows_to_csv<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Training(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Writes the CSV for one plot kind into `dir` under its fixed file name and
/// returns the path.
pub fn write_plot_data(data: &Dataset, kind: PlotKind, dir: &Path) -> Result<std::path::PathBuf> {
    let path = dir.join(kind.file_name());
    let text = match kind {
        PlotKind::Andrews => rows_to_csv(&andrews_rows(data, DEFAULT_ANDREWS_SAMPLES)?)?,
        PlotKind::ScatterMatrix => rows_to_csv(&scatter_matrix(data)?.1)?,
        PlotKind::ParallelCoords => rows_to_csv(&parallel_rows(data)?)?,
    };
    write_text(&path, &text)?;
    Ok(path)
}
