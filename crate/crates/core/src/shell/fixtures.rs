//! Synthetic datasets generated from the model with known parameters.
//!
//! The shipped fixtures under `fixtures/` are produced by [`write_fixture`];
//! a test regenerates them and compares byte for byte.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::csv_io::render_series;
use crate::dynamics::{simulate, Method, SimConfig};
use crate::error::{Error, Result};
use crate::model::{ModelParams, SystemState};
use crate::series::{AnnualSeries, SeriesKind};

#[derive(Debug, Clone, PartialEq)]
pub struct FixtureParams {
    pub entity: String,
    pub alpha: f64,
    pub eta: f64,
    /// Energy flux at the end of the year before the first revenue year.
    pub a0: f64,
    pub first_revenue_year: i32,
    pub first_energy_year: i32,
    pub last_year: i32,
    /// Scope 3 emissions per MWh of cumulative energy.
    pub scope3_per_mwh: f64,
    /// Capex per MWh of cumulative energy.
    pub capex_per_mwh: f64,
    /// From this year on, Scope 3 decays by 15% a year instead of tracking
    /// cumulative energy.
    pub scope3_break: Option<i32>,
    pub users0: f64,
    pub user_growth: f64,
    pub internet0: f64,
    pub internet_growth: f64,
}

impl FixtureParams {
    pub fn exemplar() -> Self {
        Self {
            entity: "exemplar-cloud".into(),
            alpha: 1e-5,
            eta: 0.2,
            a0: 1.5e6,
            first_revenue_year: 2010,
            first_energy_year: 2016,
            last_year: 2025,
            scope3_per_mwh: 0.4,
            capex_per_mwh: 150.0,
            scope3_break: None,
            users0: 1.2e9,
            user_growth: 0.08,
            internet0: 2.0e8,
            internet_growth: 0.05,
        }
    }

    pub fn regime_break() -> Self {
        Self {
            entity: "regime-break".into(),
            scope3_break: Some(2021),
            ..Self::exemplar()
        }
    }

    pub fn params(&self) -> Result<ModelParams> {
        ModelParams::from_alpha_eta(self.alpha, self.eta)
    }

    /// Cumulative revenue before the first revenue year.
    pub fn pre_window_revenue(&self) -> f64 {
        self.a0 / self.alpha
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fixture {
    pub fp: FixtureParams,
    pub series: Vec<(AnnualSeries, &'static str)>,
}

impl Fixture {
    pub fn get(&self, kind: SeriesKind) -> Option<&AnnualSeries> {
        self.series.iter().map(|(s, _)| s).find(|s| s.kind() == kind)
    }

    pub fn manifest_toml(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "entity = \"{}\"", self.fp.entity);
        let _ = writeln!(
            out,
            "notes = \"synthetic: generated from the model with alpha = {}, eta = {}\"",
            self.fp.alpha, self.fp.eta
        );
        let _ = writeln!(out, "pre_window_cumulative_revenue = {:?}", self.fp.pre_window_revenue());
        for (s, file) in &self.series {
            let _ = write!(
                out,
                "\n[[series]]\nkind = \"{}\"\nunit = \"{}\"\npath = \"{file}\"\n",
                s.kind(),
                s.unit()
            );
        }
        out
    }
}

/// Samples the closed-form trajectory yearly and derives every series.
pub fn generate(fp: &FixtureParams) -> Result<Fixture> {
    let params = fp.params()?;
    let initial = SystemState::from_flux(&params, fp.a0)?.with_cum_work(fp.pre_window_revenue())?;
    let years = fp.last_year - fp.first_revenue_year + 1;
    let cfg = SimConfig::new(f64::from(years))
        .with_method(Method::ClosedForm)
        .with_dt(1.0);
    let traj = simulate(&params, &initial, &cfg)?;
    let year_of = |k: usize| fp.first_revenue_year - 1 + k as i32;

    let mut revenue = Vec::new();
    let mut energy = Vec::new();
    let mut scope3 = Vec::new();
    let mut capex = Vec::new();
    let mut users = Vec::new();
    let mut internet = Vec::new();
    let mut e_cum = 0.0;
    let mut last_scope3 = 0.0;
    for (k, w) in traj.samples.windows(2).enumerate() {
        let year = year_of(k + 1);
        let flux = w[1].flux;
        e_cum += flux;
        revenue.push((year, w[1].cum_work - w[0].cum_work));
        if year < fp.first_energy_year {
            continue;
        }
        energy.push((year, flux));
        let s3 = match fp.scope3_break {
            Some(b) if year >= b => last_scope3 * 0.85,
            _ => fp.scope3_per_mwh * e_cum,
        };
        last_scope3 = s3;
        scope3.push((year, s3));
        capex.push((year, fp.capex_per_mwh * e_cum));
        let n = f64::from(year - fp.first_energy_year);
        users.push((year, (fp.users0 * (1.0 + fp.user_growth).powf(n)).round()));
        internet.push((year, fp.internet0 * (1.0 + fp.internet_growth).powf(n)));
    }

    let e = &fp.entity;
    let series = vec![
        (AnnualSeries::new(e, SeriesKind::Energy, "MWh/yr", energy)?, "energy.csv"),
        (AnnualSeries::new(e, SeriesKind::Revenue, "USD/yr", revenue)?, "revenue.csv"),
        (AnnualSeries::new(e, SeriesKind::Scope3, "tCO2e/yr", scope3)?, "scope3.csv"),
        (AnnualSeries::new(e, SeriesKind::Capex, "USD/yr", capex)?, "capex.csv"),
        (AnnualSeries::new(e, SeriesKind::Users, "persons", users)?, "users.csv"),
        (
            AnnualSeries::new(e, SeriesKind::InternetEnergy, "MWh/yr", internet)?,
            "internet_energy.csv",
        ),
    ];
    Ok(Fixture {
        fp: fp.clone(),
        series,
    })
}

pub const EXEMPLAR_CONFIG: &str = "\
# Pipeline configuration for the synthetic exemplar.
proxy_r2_threshold = 0.9

[forecast]
horizon = 10.0
dt = 0.01
method = \"rk4\"

[backcast]

[client]
device_wh_per_user_day = 2.0
charger_efficiency = 1.0
internet_share = 0.1
days_per_year = 365.0
";

/// Writes `manifest.toml`, `config.toml` and one CSV per series into `dir`.
pub fn write_fixture(fp: &FixtureParams, dir: &Path) -> Result<()> {
    let fixture = generate(fp)?;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let write = |name: &str, text: &str| {
        let p = dir.join(name);
        fs::write(&p, text).map_err(|e| Error::io(&p, e))
    };
    write("manifest.toml", &fixture.manifest_toml())?;
    write("config.toml", EXEMPLAR_CONFIG)?;
    for (s, file) in &fixture.series {
        write(file, &render_series(s))?;
    }
    Ok(())
}
