//! File formats: potential and interval-set JSON, CSV float encoding.

use std::fs;
use std::path::Path;

use qpspec_core::potential::{FourierMode, GevreyPotential};
use qpspec_core::spectrum::IntervalSet;
use serde::{Deserialize, Serialize};

use crate::error::RunError;

/// On-disk potential: Gevrey parameters plus `[k, re, im]` Fourier triples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialDoc {
    pub s: f64,
    #[serde(rename = "K")]
    pub k_scale: f64,
    #[serde(rename = "norm_sK")]
    pub norm_sk: f64,
    pub coeffs: Vec<(i64, f64, f64)>,
}

impl PotentialDoc {
    pub fn from_potential(v: &GevreyPotential) -> Self {
        Self {
            s: v.s(),
            k_scale: v.k_scale(),
            norm_sk: v.norm_sk(),
            coeffs: v.modes().iter().map(|m| (m.k, m.re, m.im)).collect(),
        }
    }

    pub fn build(&self) -> Result<GevreyPotential, qpspec_core::potential::PotentialError> {
        let modes = self.coeffs.iter().map(|&(k, re, im)| FourierMode { k, re, im }).collect();
        GevreyPotential::new(self.s, self.k_scale, self.norm_sk, modes)
    }
}

pub fn load_potential(path: &Path) -> Result<PotentialDoc, RunError> {
    let text = fs::read_to_string(path).map_err(|e| RunError::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

pub fn save_potential(path: &Path, v: &GevreyPotential) -> Result<(), RunError> {
    let text = serde_json::to_string_pretty(&PotentialDoc::from_potential(v))?;
    fs::write(path, text).map_err(|e| RunError::io(path, e))
}

/// `[[l, r], ...]`
pub fn interval_set_to_json(s: &IntervalSet) -> serde_json::Value {
    serde_json::to_value(s.intervals()).expect("pairs of floats serialize")
}

pub fn interval_set_from_json(v: &serde_json::Value) -> Result<IntervalSet, serde_json::Error> {
    let raw: Vec<(f64, f64)> = serde_json::from_value(v.clone())?;
    Ok(IntervalSet::from_intervals(raw))
}

/// 17 significant digits, so every `f64` round-trips.
pub fn float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Parses a field written by [`float`] (or any decimal float).
pub fn parse_float(s: &str) -> Option<f64> {
    s.trim().parse().ok()
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<(), RunError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| RunError::io(path, e))
}

/// CSV with a fixed header; rows are already-formatted fields.
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Self {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write(&self, path: &Path) -> Result<(), RunError> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush().map_err(|e| RunError::io(path, e))
    }
}

/// Reads a CSV written by [`Table::write`] into header + rows.
pub fn read_table(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>), RunError> {
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.map(|rec| rec.iter().map(String::from).collect()))
        .collect::<Result<_, _>>()?;
    Ok((header, rows))
}
