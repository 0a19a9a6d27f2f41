//! Collector records: CSV ingestion, min-max scaling to [-1, 1], seeded
//! train/test splitting and a synthetic data generator.
//!
//! The CSV schema is fixed. Column order is part of the file contract and also
//! fixes the Andrews-curve basis order downstream.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::rng::{tags, RandomStream};

/// Number of model inputs.
pub const INPUT_COUNT: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Column {
    InletTemp,
    FlowRate,
    Heat,
    SolarRadiation,
    SunHeat,
    ElectricalEfficiency,
}

impl Column {
    /// Schema order.
    pub const ALL: [Column; 6] = [
        Column::InletTemp,
        Column::FlowRate,
        Column::Heat,
        Column::SolarRadiation,
        Column::SunHeat,
        Column::ElectricalEfficiency,
    ];
    pub const INPUTS: [Column; INPUT_COUNT] = [
        Column::InletTemp,
        Column::FlowRate,
        Column::Heat,
        Column::SolarRadiation,
        Column::SunHeat,
    ];
    pub const TARGET: Column = Column::ElectricalEfficiency;

    pub fn name(self) -> &'static str {
        match self {
            Column::InletTemp => "inlet_temp",
            Column::FlowRate => "flow_rate",
            Column::Heat => "heat",
            Column::SolarRadiation => "solar_radiation",
            Column::SunHeat => "sun_heat",
            Column::ElectricalEfficiency => "electrical_efficiency",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Column {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Column {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Column::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::UnknownColumn(s.to_string()))
    }
}

/// One operating point. Units: °C, L/min, W, W/m², W, %.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RawRecord {
    pub inlet_temp: f64,
    pub flow_rate: f64,
    pub heat: f64,
    pub solar_radiation: f64,
    pub sun_heat: f64,
    /// Absent for prediction-only inputs.
    pub electrical_efficiency: Option<f64>,
}

impl RawRecord {
    pub fn inputs(&self) -> [f64; INPUT_COUNT] {
        [
            self.inlet_temp,
            self.flow_rate,
            self.heat,
            self.solar_radiation,
            self.sun_heat,
        ]
    }

    pub fn get(&self, col: Column) -> Option<f64> {
        match col {
            Column::InletTemp => Some(self.inlet_temp),
            Column::FlowRate => Some(self.flow_rate),
            Column::Heat => Some(self.heat),
            Column::SolarRadiation => Some(self.solar_radiation),
            Column::SunHeat => Some(self.sun_heat),
            Column::ElectricalEfficiency => self.electrical_efficiency,
        }
    }

    fn set(&mut self, col: Column, v: f64) {
        match col {
            Column::InletTemp => self.inlet_temp = v,
            Column::FlowRate => self.flow_rate = v,
            Column::Heat => self.heat = v,
            Column::SolarRadiation => self.solar_radiation = v,
            Column::SunHeat => self.sun_heat = v,
            Column::ElectricalEfficiency => self.electrical_efficiency = Some(v),
        }
    }
}

/// Ordered records under the fixed schema.
///
/// The same type holds raw and normalized values; physical-range checks only
/// apply to raw data (see [`Dataset::validate_raw`]).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Dataset {
    pub records: Vec<RawRecord>,
}

/// Model inputs and targets pulled out of a dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct Samples {
    pub inputs: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
}

impl Samples {
    pub fn new(inputs: Vec<Vec<f64>>, targets: Vec<f64>) -> Result<Self> {
        crate::error::check_dim(inputs.len(), targets.len())?;
        if let Some(first) = inputs.first() {
            let d = first.len();
            for row in &inputs {
                crate::error::check_dim(d, row.len())?;
            }
        }
        Ok(Samples { inputs, targets })
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.inputs.first().map_or(0, Vec::len)
    }

    pub fn subset(&self, idx: &[usize]) -> Samples {
        Samples {
            inputs: idx.iter().map(|&i| self.inputs[i].clone()).collect(),
            targets: idx.iter().map(|&i| self.targets[i]).collect(),
        }
    }
}

impl Dataset {
    pub fn new(records: Vec<RawRecord>) -> Self {
        Dataset { records }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn column_names() -> [&'static str; 6] {
        Column::ALL.map(Column::name)
    }

    pub fn has_targets(&self) -> bool {
        self.records
            .iter()
            .all(|r| r.electrical_efficiency.is_some())
    }

    pub fn column(&self, col: Column) -> Option<Vec<f64>> {
        self.records.iter().map(|r| r.get(col)).collect()
    }

    pub fn inputs(&self) -> Vec<Vec<f64>> {
        self.records.iter().map(|r| r.inputs().to_vec()).collect()
    }

    pub fn targets(&self) -> Result<Vec<f64>> {
        self.column(Column::TARGET)
            .ok_or_else(|| Error::invalid("dataset has records without electrical_efficiency"))
    }

    pub fn to_samples(&self) -> Result<Samples> {
        Ok(Samples {
            inputs: self.inputs(),
            targets: self.targets()?,
        })
    }

    pub fn subset(&self, idx: &[usize]) -> Dataset {
        Dataset::new(idx.iter().map(|&i| self.records[i]).collect())
    }

    /// Checks the physical invariants of unscaled records.
    pub fn validate_raw(&self) -> Result<()> {
        for (i, r) in self.records.iter().enumerate() {
            let finite = r.inputs().iter().all(|v| v.is_finite())
                && r.electrical_efficiency.is_none_or(f64::is_finite);
            if !finite {
                return Err(Error::invalid(format!("record {i} has non-finite values")));
            }
            if r.flow_rate <= 0.0 {
                return Err(Error::invalid(format!(
                    "record {i}: flow_rate must be positive"
                )));
            }
            if r.solar_radiation < 0.0 {
                return Err(Error::invalid(format!(
                    "record {i}: solar_radiation must be non-negative"
                )));
            }
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let with_target = self.is_empty() || self.has_targets();
        let cols: &[Column] = if with_target {
            &Column::ALL
        } else {
            &Column::INPUTS
        };
        w.write_record(cols.iter().map(|c| c.name()))?;
        for r in &self.records {
            w.write_record(
                cols.iter()
                    .map(|&c| r.get(c).map_or(String::new(), |v| v.to_string())),
            )?;
        }
        let bytes = w.into_inner().map_err(|e| Error::invalid(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let text = self.to_csv_string()?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

/// Reads a dataset from CSV text. The header must list the schema columns in
/// order; the trailing `electrical_efficiency` column may be omitted for
/// prediction-only inputs.
pub fn parse_csv(text: &str) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = reader.headers()?.clone();
    let names = Dataset::column_names();
    if header.len() < INPUT_COUNT {
        return Err(Error::Schema {
            position: header.len(),
            expected: names[header.len()].to_string(),
            found: "<missing>".into(),
        });
    }
    for (i, found) in header.iter().enumerate() {
        let expected = names.get(i).copied().unwrap_or("<end of schema>");
        if found != expected {
            return Err(Error::Schema {
                position: i,
                expected: expected.to_string(),
                found: found.to_string(),
            });
        }
    }
    let with_target = header.len() == names.len();

    let mut records = Vec::new();
    for (row_idx, row) in reader.records().enumerate() {
        let row = row?;
        // 1-based data-row index, header excluded
        let row_no = row_idx + 1;
        if row.len() != header.len() {
            return Err(Error::Parse {
                row: row_no,
                column: row.len(),
                name: names.get(row.len()).copied().unwrap_or("?").to_string(),
                value: "<wrong field count>".into(),
            });
        }
        let mut values = [0.0; 6];
        for (c, cell) in row.iter().enumerate() {
            values[c] = cell.parse::<f64>().map_err(|_| Error::Parse {
                row: row_no,
                column: c,
                name: names[c].to_string(),
                value: cell.to_string(),
            })?;
        }
        records.push(RawRecord {
            inlet_temp: values[0],
            flow_rate: values[1],
            heat: values[2],
            solar_radiation: values[3],
            sun_heat: values[4],
            electrical_efficiency: with_target.then_some(values[5]),
        });
    }
    Ok(Dataset::new(records))
}

pub fn load_csv(path: &Path) -> Result<Dataset> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_csv(&text)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColumnRange {
    pub min: f64,
    pub max: f64,
}

/// Per-column min-max scaler onto [-1, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Scaler {
    pub columns: BTreeMap<Column, ColumnRange>,
}

impl Scaler {
    /// Fits every column present in all records.
    pub fn fit(d: &Dataset) -> Result<Scaler> {
        if d.is_empty() {
            return Err(Error::invalid("cannot fit a scaler on an empty dataset"));
        }
        let mut columns = BTreeMap::new();
        for col in Column::ALL {
            let Some(values) = d.column(col) else {
                continue;
            };
            let (min, max) = values
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                    (lo.min(v), hi.max(v))
                });
            if !(max > min) {
                return Err(Error::DegenerateColumn(col.name().to_string()));
            }
            columns.insert(col, ColumnRange { min, max });
        }
        Ok(Scaler { columns })
    }

    fn range(&self, col: Column) -> Result<ColumnRange> {
        self.columns
            .get(&col)
            .copied()
            .ok_or_else(|| Error::UnknownColumn(col.name().to_string()))
    }

    pub fn normalize_value(&self, v: f64, col: Column) -> Result<f64> {
        let r = self.range(col)?;
        Ok(2.0 * (v - r.min) / (r.max - r.min) - 1.0)
    }

    pub fn denormalize(&self, x: f64, col: Column) -> Result<f64> {
        let r = self.range(col)?;
        Ok((x + 1.0) * (r.max - r.min) / 2.0 + r.min)
    }

    /// Applies the fitted mapping to another dataset; values may leave [-1, 1].
    pub fn apply(&self, d: &Dataset) -> Result<Dataset> {
        let mut out = d.clone();
        for rec in &mut out.records {
            for col in Column::ALL {
                if let Some(v) = rec.get(col) {
                    rec.set(col, self.normalize_value(v, col)?);
                }
            }
        }
        Ok(out)
    }

    pub fn normalize_inputs(&self, inputs: &[f64; INPUT_COUNT]) -> Result<Vec<f64>> {
        Column::INPUTS
            .iter()
            .zip(inputs)
            .map(|(&c, &v)| self.normalize_value(v, c))
            .collect()
    }
}

/// Fits a scaler on `d` and returns the scaled copy alongside it.
pub fn fit_normalize(d: &Dataset) -> Result<(Dataset, Scaler)> {
    let scaler = Scaler::fit(d)?;
    let normalized = scaler.apply(d)?;
    Ok((normalized, scaler))
}

pub fn denormalize(x: f64, s: &Scaler, col: Column) -> Result<f64> {
    s.denormalize(x, col)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitResult {
    pub train: Dataset,
    pub test: Dataset,
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
    pub seed: u64,
}

/// Train size for `n` records: `round(n · fraction)`, halves going to train.
pub fn train_size(n: usize, train_fraction: f64) -> usize {
    (n as f64 * train_fraction).round() as usize
}

/// Shuffled index partition; both parts must be non-empty.
pub fn split_indices(n: usize, train_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::invalid(format!(
            "train fraction must lie in (0, 1), got {train_fraction}"
        )));
    }
    let n_train = train_size(n, train_fraction);
    if n_train == 0 || n_train >= n {
        return Err(Error::invalid(format!(
            "split of {n} records at fraction {train_fraction} leaves an empty partition"
        )));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut RandomStream::derive(seed, &[tags::SPLIT]).into_rng());
    let test = idx.split_off(n_train);
    Ok((idx, test))
}

pub fn split(d: &Dataset, train_fraction: f64, seed: u64) -> Result<SplitResult> {
    let (train_indices, test_indices) = split_indices(d.len(), train_fraction, seed)?;
    Ok(SplitResult {
        train: d.subset(&train_indices),
        test: d.subset(&test_indices),
        train_indices,
        test_indices,
        seed,
    })
}

/// Constants of the synthetic collector model.
///
/// Cell temperature rises above the inlet as
/// `T_cell = T_in + rise_coefficient · G / (flow_offset + flow)`,
/// extracted heat is `heat_capacity_rate · flow · (T_cell − T_in)` and the
/// electrical efficiency is derated linearly from its nominal value at 25 °C.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticModel {
    /// °C·(L/min) per W/m².
    pub rise_coefficient: f64,
    /// L/min.
    pub flow_offset: f64,
    /// W per (L/min · K); water at 4186 J/(kg·K), 1 L = 1 kg.
    pub heat_capacity_rate: f64,
    /// m².
    pub panel_area: f64,
    /// %.
    pub nominal_efficiency: f64,
    /// Fractional efficiency loss per °C above 25 °C.
    pub temperature_coefficient: f64,
    pub inlet_temp_range: (f64, f64),
    pub flow_rate_range: (f64, f64),
    pub solar_radiation_range: (f64, f64),
}

impl Default for SyntheticModel {
    fn default() -> Self {
        SyntheticModel {
            rise_coefficient: 0.1,
            flow_offset: 0.5,
            heat_capacity_rate: 4186.0 / 60.0,
            panel_area: 0.7,
            nominal_efficiency: 12.5,
            temperature_coefficient: 0.004,
            inlet_temp_range: (20.0, 45.0),
            flow_rate_range: (0.5, 4.0),
            solar_radiation_range: (600.0, 1000.0),
        }
    }
}

impl SyntheticModel {
    pub fn cell_temperature(&self, inlet_temp: f64, flow_rate: f64, solar_radiation: f64) -> f64 {
        inlet_temp + self.rise_coefficient * solar_radiation / (self.flow_offset + flow_rate)
    }

    /// Noise-free record for the given operating point.
    pub fn record(&self, inlet_temp: f64, flow_rate: f64, solar_radiation: f64) -> RawRecord {
        let cell = self.cell_temperature(inlet_temp, flow_rate, solar_radiation);
        RawRecord {
            inlet_temp,
            flow_rate,
            heat: self.heat_capacity_rate * flow_rate * (cell - inlet_temp),
            solar_radiation,
            sun_heat: solar_radiation * self.panel_area,
            electrical_efficiency: Some(
                self.nominal_efficiency * (1.0 - self.temperature_coefficient * (cell - 25.0)),
            ),
        }
    }

    pub fn generate(&self, n: usize, seed: u64, noise_sd: f64) -> Result<Dataset> {
        if !(noise_sd >= 0.0 && noise_sd.is_finite()) {
            return Err(Error::invalid(format!(
                "noise_sd must be non-negative, got {noise_sd}"
            )));
        }
        let noise = Normal::new(0.0, noise_sd).map_err(|e| Error::invalid(e.to_string()))?;
        let mut rng = RandomStream::derive(seed, &[tags::SYNTHETIC]).into_rng();
        let records = (0..n)
            .map(|_| {
                let t = rng.random_range(self.inlet_temp_range.0..=self.inlet_temp_range.1);
                let f = rng.random_range(self.flow_rate_range.0..=self.flow_rate_range.1);
                let g =
                    rng.random_range(self.solar_radiation_range.0..=self.solar_radiation_range.1);
                let mut rec = self.record(t, f, g);
                let eps = noise.sample(&mut rng);
                rec.electrical_efficiency = rec.electrical_efficiency.map(|e| e + eps);
                rec
            })
            .collect();
        Ok(Dataset::new(records))
    }
}

/// Synthetic records from the default collector model.
pub fn generate_synthetic(n: usize, seed: u64, noise_sd: f64) -> Result<Dataset> {
    SyntheticModel::default().generate(n, seed, noise_sd)
}
