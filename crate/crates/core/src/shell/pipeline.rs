//! End-to-end analysis of one entity's dataset.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::manifest::Dataset;
use super::report::{
    BackcastRow, BackcastSummary, FitRow, FitSummary, ForecastSummary, InputSummary, Report, SCHEMA_VERSION,
    TOOL_VERSION,
};
use crate::calibrate::{
    endpoint_growth_rate, fit_alpha, fit_eta, fit_proportional, fit_size_proxy_with_history, AlphaFit, FitMode,
    FitResult, PROXY_R2_THRESHOLD,
};
use crate::dynamics::{simulate, Method, SimConfig, DEFAULT_DT};
use crate::error::{Error, Result};
use crate::model::{ModelParams, SystemState};
use crate::scenarios::{backcast_energy, total_system_energy, ClientEnergyParams, Provenance};
use crate::series::{align, cumulative, AnnualSeries, SeriesKind};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForecastConfig {
    pub horizon: f64,
    pub dt: f64,
    pub method: Method,
    pub output_interval: f64,
    /// Reservoir capacity in MWh; absent keeps the potential constant.
    pub reservoir: Option<f64>,
}

impl Default for ForecastConfig {
    fn default() -> Self {
        Self {
            horizon: 10.0,
            dt: DEFAULT_DT,
            method: Method::Rk4,
            output_interval: 1.0,
            reservoir: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct BackcastConfig {
    /// First year to estimate; defaults to the first revenue year.
    pub start: Option<i32>,
    /// Last year to estimate; defaults to the last revenue year.
    pub end: Option<i32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub proxy_r2_threshold: f64,
    /// Seed proxy fits with back-cast energy for years before the first
    /// energy observation.
    pub proxy_history: bool,
    /// Overrides the fitted conductivity.
    pub alpha: Option<f64>,
    /// Overrides the efficiency implied by `η̂/α`.
    pub epsilon: Option<f64>,
    pub delta_phi0: f64,
    pub forecast: Option<ForecastConfig>,
    pub backcast: Option<BackcastConfig>,
    pub client: Option<ClientEnergyParams>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            proxy_r2_threshold: PROXY_R2_THRESHOLD,
            proxy_history: true,
            alpha: None,
            epsilon: None,
            delta_phi0: 1.0,
            forecast: None,
            backcast: None,
            client: None,
        }
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str, source: &Path) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Manifest {
            path: source.to_owned(),
            message: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text, path)
    }
}

const CONVENTIONS: [&str; 4] = [
    "yearly totals stand in for instantaneous rates; integrals are left-closed annual running sums",
    "fits are unweighted ordinary least squares; alpha and proxy fits pass through the origin",
    "revenue is nominal; alpha absorbs the potential difference, which is fixed at delta_phi0",
    "interface length L = N_S^(1/3) * N_R in the micro-ensemble",
];

fn summarize(pair_x: &AnnualSeries, pair_y: &AnnualSeries, labels: (&str, &str), fit: FitResult, threshold: f64) -> FitSummary {
    let rows = pair_x
        .points()
        .iter()
        .zip(pair_y.points())
        .map(|(&(year, x), &(_, y))| FitRow {
            year,
            x,
            y,
            fitted: fit.predict(x),
        })
        .collect();
    FitSummary {
        x_label: labels.0.into(),
        y_label: labels.1.into(),
        x_unit: pair_x.unit().into(),
        y_unit: pair_y.unit().into(),
        flagged: fit.is_weak(threshold),
        result: fit,
        rows,
    }
}

fn eta_summary(energy: &AnnualSeries, fit: FitResult) -> FitSummary {
    let rows = energy
        .points()
        .iter()
        .map(|&(year, a)| FitRow {
            year,
            x: f64::from(year),
            y: a,
            fitted: fit.predict(f64::from(year)).exp(),
        })
        .collect();
    FitSummary {
        x_label: "year".into(),
        y_label: "A".into(),
        x_unit: "yr".into(),
        y_unit: energy.unit().into(),
        flagged: false,
        result: fit,
        rows,
    }
}

/// Back-cast energy for revenue years before the first energy observation,
/// summed. Used as the pre-window history of cumulative energy.
fn prior_energy(revenue: &AnnualSeries, energy: &AnnualSeries, alpha: &AlphaFit) -> Result<f64> {
    match (revenue.first_year(), energy.first_year()) {
        (Some(r0), Some(e0)) if r0 < e0 => {
            let b = backcast_energy(revenue, &alpha.fit, r0..=e0 - 1, alpha.historical_revenue)?;
            Ok(b.energy.values().iter().sum())
        }
        _ => Ok(0.0),
    }
}

/// Fits, optional forecast/back-cast/client energy, assembled into a report.
pub fn run_pipeline(data: &Dataset, config: &PipelineConfig) -> Result<Report> {
    let energy = data.require(SeriesKind::Energy, "alpha fit")?;
    let revenue = data.require(SeriesKind::Revenue, "alpha fit")?;
    let history = data.manifest.pre_window_cumulative_revenue.unwrap_or(0.0);
    let threshold = config.proxy_r2_threshold;

    let mut fits = BTreeMap::new();
    let mut flags = Vec::new();

    let alpha_fit = fit_alpha(energy, revenue, history)?;
    let a_pair = align(&alpha_fit.cumulative_revenue, energy)?;
    fits.insert(
        "alpha".to_string(),
        summarize(a_pair.x(), a_pair.y(), ("C", "A"), alpha_fit.fit.clone(), threshold),
    );
    let affine = fit_proportional(&a_pair, FitMode::Affine)?;
    fits.insert(
        "alpha_affine".to_string(),
        summarize(a_pair.x(), a_pair.y(), ("C", "A"), affine, threshold),
    );
    if history > 0.0 {
        // sensitivity of alpha to the assumed pre-window history
        let bare = fit_alpha(energy, revenue, 0.0)?;
        let pair = align(&bare.cumulative_revenue, energy)?;
        fits.insert(
            "alpha_no_history".to_string(),
            summarize(pair.x(), pair.y(), ("C", "A"), bare.fit, threshold),
        );
    }

    let eta = if energy.len() >= 3 {
        let fit = fit_eta(energy)?;
        let eta = fit.slope;
        fits.insert("eta".to_string(), eta_summary(energy, fit));
        eta
    } else {
        let p = energy.points();
        endpoint_growth_rate(p[0].1, p[1].1, f64::from(p[1].0 - p[0].0))?
    };

    let alpha = config.alpha.unwrap_or(alpha_fit.alpha);
    let mut params = match config.epsilon {
        Some(eps) => ModelParams::new(alpha, eps)?,
        None => ModelParams::from_alpha_eta(alpha, eta)?,
    }
    .with_delta_phi0(config.delta_phi0)?;

    let prior = if config.proxy_history {
        prior_energy(revenue, energy, &alpha_fit)?
    } else {
        0.0
    };
    for (kind, key, label) in [
        (SeriesKind::Scope3, "scope3_proxy", "scope3"),
        (SeriesKind::Capex, "capex_proxy", "capex"),
    ] {
        if let Some(proxy) = data.get(kind) {
            let fit = fit_size_proxy_with_history(proxy, energy, prior)?;
            let e_cum = cumulative(energy, prior)?;
            let pair = align(&e_cum, proxy)?;
            let summary = summarize(pair.x(), pair.y(), ("E_cum", label), fit, threshold);
            if summary.flagged {
                flags.push(format!(
                    "{key}: R^2 = {} below {threshold}; {label} is not proportional to cumulative energy",
                    summary.result.r_squared
                ));
            }
            fits.insert(key.to_string(), summary);
        }
    }

    let backcast = match &config.backcast {
        Some(bc) => {
            let start = bc.start.or(revenue.first_year()).unwrap_or_default();
            let end = bc.end.or(revenue.last_year()).unwrap_or_default();
            let b = backcast_energy(revenue, &alpha_fit.fit, start..=end, history)?;
            let rows = b
                .energy
                .points()
                .iter()
                .map(|&(year, e)| BackcastRow {
                    year,
                    energy: e,
                    provenance: Provenance::Estimated,
                    observed: energy.value_at(year),
                })
                .collect();
            Some(BackcastSummary {
                alpha: alpha_fit.alpha,
                pre_history: history,
                rows,
            })
        }
        None => None,
    };

    let forecast = match &config.forecast {
        Some(fc) => {
            if let Some(r) = fc.reservoir {
                params = params.with_reservoir(r)?;
            }
            let &(last_year, a0) = energy.points().last().expect("energy fit succeeded");
            let c0 = alpha_fit
                .cumulative_revenue
                .value_at(last_year)
                .unwrap_or_else(|| a0 / params.alpha);
            let initial = SystemState::from_flux(&params, a0)?.with_cum_work(c0)?;
            let cfg = SimConfig {
                horizon: fc.horizon,
                dt: fc.dt,
                method: fc.method,
                output_interval: fc.output_interval,
            };
            let traj = simulate(&params, &initial, &cfg)?;
            Some(ForecastSummary {
                start_year: last_year,
                method: traj.method,
                dt: traj.dt,
                horizon: fc.horizon,
                depleted_at: traj.depleted_at,
                samples: traj.samples,
            })
        }
        None => None,
    };

    let breakdown = match data.get(SeriesKind::Users) {
        Some(users) => {
            let params = config.client.unwrap_or_default();
            Some(total_system_energy(
                energy,
                users,
                data.get(SeriesKind::InternetEnergy),
                &params,
            )?)
        }
        None => None,
    };

    let inputs = data
        .manifest
        .series
        .iter()
        .filter_map(|entry| {
            let s = data.get(entry.kind)?;
            Some(InputSummary {
                kind: entry.kind.to_string(),
                unit: entry.unit.clone(),
                path: entry.path.to_string_lossy().replace('\\', "/"),
                first_year: s.first_year()?,
                last_year: s.last_year()?,
                n: s.len(),
            })
        })
        .collect();

    Ok(Report {
        schema_version: SCHEMA_VERSION,
        tool_version: TOOL_VERSION.to_string(),
        entity: data.manifest.entity.clone(),
        notes: data.manifest.notes.clone(),
        conventions: CONVENTIONS.iter().map(|s| s.to_string()).collect(),
        inputs,
        fits,
        params,
        flags,
        forecast,
        backcast,
        breakdown,
    })
}

/// Loads a manifest (and optional config file) and runs the pipeline.
pub fn run_manifest(manifest: &Path, config: Option<&Path>) -> Result<Report> {
    let data = Dataset::open(manifest)?;
    let config = match config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    run_pipeline(&data, &config)
}
