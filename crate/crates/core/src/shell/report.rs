//! Structured reports and plot-data tables.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::calibrate::FitResult;
use crate::dynamics::Method;
use crate::error::{Error, Result};
use crate::microsim::MicroState;
use crate::model::{ModelParams, SystemState};
use crate::scenarios::{EnergyBreakdown, Provenance, ENERGY_UNIT};

/// Bumped whenever a field of [`Report`] changes meaning or shape.
pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const REPORT_FILE: &str = "report.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputSummary {
    pub kind: String,
    pub unit: String,
    pub path: String,
    pub first_year: i32,
    pub last_year: i32,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitRow {
    pub year: i32,
    pub x: f64,
    pub y: f64,
    pub fitted: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub x_label: String,
    pub y_label: String,
    pub x_unit: String,
    pub y_unit: String,
    pub result: FitResult,
    /// Observed and model values in the units above.
    pub rows: Vec<FitRow>,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastSummary {
    /// Calendar year corresponding to `t = 0`.
    pub start_year: i32,
    pub method: Method,
    pub dt: f64,
    pub horizon: f64,
    pub depleted_at: Option<f64>,
    pub samples: Vec<SystemState>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BackcastRow {
    pub year: i32,
    pub energy: f64,
    pub provenance: Provenance,
    /// Reported energy for the same year, when there is one.
    pub observed: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackcastSummary {
    pub alpha: f64,
    pub pre_history: f64,
    pub rows: Vec<BackcastRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub tool_version: String,
    pub entity: String,
    pub notes: String,
    pub conventions: Vec<String>,
    pub inputs: Vec<InputSummary>,
    pub fits: BTreeMap<String, FitSummary>,
    pub params: ModelParams,
    pub flags: Vec<String>,
    pub forecast: Option<ForecastSummary>,
    pub backcast: Option<BackcastSummary>,
    pub breakdown: Option<EnergyBreakdown>,
}

impl Report {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self).map_err(|e| Error::Serialize(e.to_string()))?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Serialize(e.to_string()))
    }
}

/// A plot-data table ready to be written as CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: impl Into<String>, header: &[&str]) -> Self {
        Self {
            name: name.into(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).map_err(|e| Error::Serialize(e.to_string()))?;
        for r in &self.rows {
            w.write_record(r).map_err(|e| Error::Serialize(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Serialize(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Serialize(e.to_string()))
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Plot-data tables derived from a report, in a fixed order.
pub fn tables(report: &Report) -> Vec<Table> {
    let mut out = Vec::new();
    for (name, fit) in &report.fits {
        let x = fit.x_label.as_str();
        let y = fit.y_label.as_str();
        let header = [
            "year".to_string(),
            x.to_string(),
            format!("{y}_observed"),
            format!("{y}_fitted"),
            format!("{x}_unit"),
            format!("{y}_unit"),
        ];
        let mut t = Table::new(format!("{name}_fit"), &[]);
        t.header = header.to_vec();
        for r in &fit.rows {
            t.rows.push(vec![
                r.year.to_string(),
                r.x.to_string(),
                r.y.to_string(),
                r.fitted.to_string(),
                fit.x_unit.clone(),
                fit.y_unit.clone(),
            ]);
        }
        out.push(t);
    }
    if let Some(b) = &report.backcast {
        let mut t = Table::new("backcast", &["year", "energy", "provenance", "observed", "unit"]);
        for r in &b.rows {
            let prov = match r.provenance {
                Provenance::Observed => "observed",
                Provenance::Estimated => "estimated",
            };
            t.rows.push(vec![
                r.year.to_string(),
                r.energy.to_string(),
                prov.into(),
                opt(r.observed),
                ENERGY_UNIT.into(),
            ]);
        }
        out.push(t);
    }
    if let Some(b) = &report.breakdown {
        let mut t = Table::new(
            "energy_breakdown",
            &["year", "datacenter", "device", "network", "total", "unit"],
        );
        for r in &b.records {
            t.rows.push(vec![
                r.year.to_string(),
                r.datacenter.to_string(),
                r.device.to_string(),
                r.network.to_string(),
                r.total.to_string(),
                ENERGY_UNIT.into(),
            ]);
        }
        out.push(t);
    }
    if let Some(f) = &report.forecast {
        out.push(trajectory_table("forecast", f.start_year, &f.samples));
    }
    out
}

pub fn trajectory_table(name: &str, start_year: i32, samples: &[SystemState]) -> Table {
    let mut t = Table::new(
        name,
        &["t", "year", "flux", "length", "cum_work", "delta_phi", "cum_energy"],
    );
    for s in samples {
        t.rows.push(vec![
            s.t.to_string(),
            (f64::from(start_year) + s.t).to_string(),
            s.flux.to_string(),
            s.length.to_string(),
            s.cum_work.to_string(),
            s.delta_phi.to_string(),
            s.cum_energy.to_string(),
        ]);
    }
    t
}

pub fn micro_table(name: &str, states: &[MicroState], exponent: f64) -> Table {
    let mut t = Table::new(
        name,
        &["t", "n_system", "n_reservoir", "interface", "flux", "cum_work", "cum_energy"],
    );
    for s in states {
        t.rows.push(vec![
            s.t.to_string(),
            s.n_system.to_string(),
            s.n_reservoir.to_string(),
            s.interface(exponent).to_string(),
            s.a_current.to_string(),
            s.c_cum.to_string(),
            s.e_cum.to_string(),
        ]);
    }
    t
}

/// Writes `report.json` and every plot table into `dir`, creating it if
/// needed. Returns the written paths in write order.
pub fn emit(report: &Report, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    let path = dir.join(REPORT_FILE);
    fs::write(&path, report.to_json()?).map_err(|e| Error::io(&path, e))?;
    written.push(path);
    for t in tables(report) {
        let path = dir.join(format!("{}.csv", t.name));
        fs::write(&path, t.to_csv()?).map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}
