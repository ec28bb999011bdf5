//! Invariant checks run against a dataset and the parameters fitted from it.

use std::fmt;

use serde::Serialize;

use super::manifest::Dataset;
use super::pipeline::{run_pipeline, PipelineConfig};
use crate::calibrate::{fit_alpha, FitMode};
use crate::dynamics::{closed_form_energy, embodied, simulate, Method, SimConfig};
use crate::error::Result;
use crate::microsim::{micro_run, MicroParams, MicroState};
use crate::model::{ModelParams, SystemState, ETA_CONSISTENCY_TOL};
use crate::scenarios::backcast_energy;
use crate::series::{align, cumulative, decumulate, stock_unit, SeriesKind};

const EXACT: f64 = 1e-9;
const INTEGRATOR: f64 = 1e-6;
const MICRO: f64 = 0.05;
const HORIZON: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub severity: Severity,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub entity: String,
    pub checks: Vec<Check>,
}

impl ValidationReport {
    /// True when every error-severity check passed; warnings don't count.
    pub fn passed(&self) -> bool {
        self.checks
            .iter()
            .all(|c| c.passed || c.severity == Severity::Warning)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    fn push(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check {
            name: name.into(),
            passed,
            severity: Severity::Error,
            detail: detail.into(),
        });
    }

    fn warn(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check {
            name: name.into(),
            passed,
            severity: Severity::Warning,
            detail: detail.into(),
        });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            let tag = match (c.passed, c.severity) {
                (true, _) => "ok  ",
                (false, Severity::Error) => "FAIL",
                (false, Severity::Warning) => "warn",
            };
            writeln!(f, "{tag} {:<28} {}", c.name, c.detail)?;
        }
        Ok(())
    }
}

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

/// Runs the pipeline on `data` and checks the model's identities on the
/// result. Data and model errors propagate; failed checks are reported.
pub fn validate(data: &Dataset, config: &PipelineConfig) -> Result<ValidationReport> {
    let report = run_pipeline(data, config)?;
    let mut out = ValidationReport {
        entity: data.manifest.entity.clone(),
        checks: Vec::new(),
    };

    for (kind, s) in &data.series {
        if stock_unit(s.unit()).is_none() || !kind.requires_non_negative() {
            continue;
        }
        let c = cumulative(s, 0.0)?;
        let monotone = c.values().windows(2).all(|w| w[1] >= w[0]);
        out.push(format!("{kind}.cumulative_monotone"), monotone, format!("{} years", c.len()));
        let back = decumulate(&c, 0.0)?;
        let worst = s
            .values()
            .iter()
            .zip(back.values())
            .map(|(&a, b)| (a - b).abs() / c.values().last().copied().unwrap_or(1.0).max(f64::MIN_POSITIVE))
            .fold(0.0, f64::max);
        out.push(
            format!("{kind}.cumulative_round_trip"),
            worst <= EXACT,
            format!("max error {worst:.3e} of the running total"),
        );
    }

    for (name, fit) in &report.fits {
        let r = &fit.result;
        out.push(
            format!("{name}.r_squared_range"),
            (0.0..=1.0).contains(&r.r_squared) && r.residuals.len() == r.n,
            format!("R^2 = {}", r.r_squared),
        );
        if r.mode == FitMode::ThroughOrigin && name != "eta" {
            let sxr: f64 = fit.rows.iter().zip(&r.residuals).map(|(row, (_, e))| row.x * e).sum();
            let sxy: f64 = fit.rows.iter().map(|row| (row.x * row.y).abs()).sum();
            let scaled = sxr.abs() / sxy.max(f64::MIN_POSITIVE);
            out.push(
                format!("{name}.normal_equation"),
                scaled <= EXACT && r.intercept == 0.0,
                format!("|sum x*e| / sum |x*y| = {scaled:.3e}"),
            );
        }
    }
    for flag in &report.flags {
        out.warn("proxy_fit", false, flag.clone());
    }

    let p = report.params;
    let eta_err = rel(p.eta, p.alpha * p.epsilon);
    out.push(
        "params.eta_consistency",
        eta_err <= ETA_CONSISTENCY_TOL,
        format!("eta = {}, alpha*epsilon = {}", p.eta, p.alpha * p.epsilon),
    );

    let energy = data.require(SeriesKind::Energy, "alpha fit")?;
    let revenue = data.require(SeriesKind::Revenue, "alpha fit")?;
    let history = data.manifest.pre_window_cumulative_revenue.unwrap_or(0.0);
    let af = fit_alpha(energy, revenue, history)?;
    let pair = align(&af.cumulative_revenue, energy)?;
    if let (Some(&first), Some(&last)) = (pair.years().first(), pair.years().last()) {
        let bc = backcast_energy(revenue, &af.fit, first..=last, history)?;
        let worst = bc
            .energy
            .points()
            .iter()
            .zip(pair.x().values())
            .map(|(&(_, e), c)| rel(e, af.fit.predict(c)))
            .fold(0.0, f64::max);
        out.push(
            "backcast.matches_fit",
            worst <= EXACT,
            format!("max relative gap {worst:.3e} over {first}..={last}"),
        );
    }

    check_dynamics(&mut out, &p, energy.points().last().map_or(1.0, |x| x.1))?;
    check_microsim(&mut out, &p)?;
    Ok(out)
}

fn check_dynamics(out: &mut ValidationReport, fitted: &ModelParams, a0: f64) -> Result<()> {
    let params = ModelParams { reservoir: None, ..*fitted };
    if a0.is_nan() || a0 <= 0.0 {
        out.push("dynamics", false, "last observed energy is not positive");
        return Ok(());
    }
    let initial = SystemState::from_flux(&params, a0)?;
    let traj = simulate(&params, &initial, &SimConfig::new(HORIZON).with_method(Method::Rk4))?;

    let worst = traj
        .samples
        .iter()
        .map(|s| rel(s.flux, closed_form_energy(a0, params.eta, s.t)))
        .fold(0.0, f64::max);
    out.push(
        "dynamics.rk4_vs_closed_form",
        worst < INTEGRATOR,
        format!("max relative error {worst:.3e} over {HORIZON} yr"),
    );

    let s0 = &traj.samples[0];
    let worst = traj
        .samples
        .iter()
        .map(|s| ((s.flux - s0.flux) - params.alpha * (s.cum_work - s0.cum_work)).abs() / s.flux)
        .fold(0.0, f64::max);
    out.push(
        "dynamics.inertia_law",
        worst < INTEGRATOR,
        format!("max |dA - alpha dC| / A = {worst:.3e}"),
    );

    if params.epsilon > 0.0 {
        let k = params.delta_phi0 / params.epsilon;
        let mut worst: f64 = 0.0;
        for s in &traj.samples[1..] {
            worst = worst.max(rel(embodied(&traj, s.t)?, k * (s.length - s0.length)));
        }
        out.push(
            "dynamics.embodied_vs_interface",
            worst < INTEGRATOR,
            format!("max relative gap {worst:.3e}"),
        );
    }

    // the configured reservoir, if any, applies here
    let ok = simulate(fitted, &initial, &SimConfig::new(HORIZON))?.check_invariants();
    out.push("dynamics.trajectory_invariants", ok.is_ok(), ok.err().unwrap_or_default());
    Ok(())
}

fn check_microsim(out: &mut ValidationReport, p: &ModelParams) -> Result<()> {
    let eta = p.eta;
    if eta.is_nan() || eta <= 0.0 {
        out.push("microsim.growth_rate", true, "skipped: eta <= 0");
        return Ok(());
    }
    let mut mp = MicroParams::new(p.alpha, p.epsilon);
    mp.delta_phi0 = p.delta_phi0;
    mp.dt = 0.01 / eta;
    mp.output_interval = 1.0 / eta;
    let burn_in = 5.0 / eta;
    let horizon = 10.0 / eta;
    let initial = MicroState::new(1e4, 1.0, &mp)?;
    let states = micro_run(&initial, &mp, horizon)?;
    let after: Vec<&MicroState> = states.iter().filter(|s| s.t >= burn_in - 1e-9).collect();
    let (a, b) = (after[0], after[after.len() - 1]);
    let rate = (b.interface(mp.exponent).ln() - a.interface(mp.exponent).ln()) / (b.t - a.t);
    let err = rel(rate, eta);
    out.push(
        "microsim.growth_rate",
        err < MICRO,
        format!("d ln L/dt = {rate}, alpha*epsilon = {eta} (gap {:.2}%)", 100.0 * err),
    );
    Ok(())
}
