//! Thermodynamic identities linking energy flux, work, efficiency and the
//! size of the system/reservoir interface.
//!
//! Units used throughout the crate:
//!
//! | quantity | symbol | unit |
//! |----------|--------|------|
//! | energy flux | A | MWh/yr |
//! | work rate (revenue) | W | USD/yr |
//! | efficiency | ε | USD/MWh |
//! | conductivity | α | (MWh/yr) per potential per length |
//! | growth rate | η = αε | 1/yr |
//! | potential | ΔΦ | dimensionless, default 1 |
//!
//! Only the product `α·ΔΦ` is observable from energy and revenue data, so a
//! calibrated α silently absorbs whatever ΔΦ is assumed.

use serde::{Deserialize, Serialize};

use crate::error::{check_param, Error, Result};

/// Joules in one megawatt-hour.
pub const JOULES_PER_MWH: f64 = 3.6e9;

/// Relative tolerance for the `η = α·ε` consistency check.
pub const ETA_CONSISTENCY_TOL: f64 = 1e-9;

/// Default interface exponent for three-dimensional systems.
pub const DEFAULT_INTERFACE_EXPONENT: f64 = 1.0 / 3.0;

/// Converts an efficiency in USD per joule into USD per MWh.
pub fn usd_per_joule_to_usd_per_mwh(x: f64) -> f64 {
    x * JOULES_PER_MWH
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub alpha: f64,
    pub epsilon: f64,
    pub eta: f64,
    pub delta_phi0: f64,
    /// Reservoir capacity in cumulative-energy units (MWh); `None` is an
    /// infinite bath at constant potential.
    pub reservoir: Option<f64>,
}

impl ModelParams {
    /// Builds parameters with `η = α·ε`, unit potential and no reservoir limit.
    pub fn new(alpha: f64, epsilon: f64) -> Result<Self> {
        let p = Self {
            alpha,
            epsilon,
            eta: growth_rate(alpha, epsilon),
            delta_phi0: 1.0,
            reservoir: None,
        };
        p.validate()?;
        Ok(p)
    }

    /// Parameters fixed by α and a target growth rate; ε is derived.
    pub fn from_alpha_eta(alpha: f64, eta: f64) -> Result<Self> {
        check_param("alpha", alpha, alpha > 0.0, "must be > 0")?;
        Self::new(alpha, eta / alpha).map(|p| Self { eta, ..p })
    }

    pub fn with_delta_phi0(mut self, delta_phi0: f64) -> Result<Self> {
        self.delta_phi0 = delta_phi0;
        self.validate()?;
        Ok(self)
    }

    pub fn with_reservoir(mut self, capacity: f64) -> Result<Self> {
        self.reservoir = Some(capacity);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        check_param("alpha", self.alpha, self.alpha > 0.0, "must be > 0")?;
        check_param("epsilon", self.epsilon, self.epsilon >= 0.0, "must be >= 0")?;
        check_param("delta_phi0", self.delta_phi0, self.delta_phi0 > 0.0, "must be > 0")?;
        let expected = self.alpha * self.epsilon;
        let scale = expected.abs().max(self.eta.abs());
        check_param(
            "eta",
            self.eta,
            (self.eta - expected).abs() <= ETA_CONSISTENCY_TOL * scale,
            "must equal alpha * epsilon",
        )?;
        if let Some(r) = self.reservoir {
            check_param("reservoir", r, r > 0.0, "capacity must be > 0")?;
        }
        Ok(())
    }
}

/// Macro state of the system at time `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemState {
    pub t: f64,
    /// Interface length L.
    pub length: f64,
    /// Energy flux A (MWh/yr).
    pub flux: f64,
    /// Cumulative work C (USD).
    pub cum_work: f64,
    pub delta_phi: f64,
    /// Cumulative energy drawn (MWh).
    pub cum_energy: f64,
}

impl SystemState {
    /// State at `t = 0` with the flux implied by `length` and the initial
    /// potential, no accumulated work and nothing drawn yet.
    pub fn initial(params: &ModelParams, length: f64) -> Result<Self> {
        let s = Self {
            t: 0.0,
            length,
            flux: energy_flux(params.alpha, length, params.delta_phi0),
            cum_work: 0.0,
            delta_phi: params.delta_phi0,
            cum_energy: 0.0,
        };
        s.validate()?;
        Ok(s)
    }

    /// Initial state whose interface carries flux `a0`.
    pub fn from_flux(params: &ModelParams, a0: f64) -> Result<Self> {
        check_param("a0", a0, a0 > 0.0, "initial flux must be > 0")?;
        Self::initial(params, a0 / (params.alpha * params.delta_phi0))
    }

    /// Sets the work accumulated before `t = 0`.
    pub fn with_cum_work(mut self, cum_work: f64) -> Result<Self> {
        self.cum_work = cum_work;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        check_param("length", self.length, self.length > 0.0, "interface length must be > 0")?;
        check_param("flux", self.flux, self.flux >= 0.0, "must be >= 0")?;
        check_param("cum_work", self.cum_work, self.cum_work >= 0.0, "must be >= 0")?;
        check_param("delta_phi", self.delta_phi, self.delta_phi >= 0.0, "must be >= 0")?;
        check_param("cum_energy", self.cum_energy, self.cum_energy >= 0.0, "must be >= 0")?;
        check_param("t", self.t, true, "must be finite")
    }
}

/// Energy drawn through an interface: `A = α·L·ΔΦ`.
pub fn energy_flux(alpha: f64, length: f64, delta_phi: f64) -> f64 {
    debug_assert!(alpha >= 0.0 && length >= 0.0 && delta_phi >= 0.0);
    alpha * length * delta_phi
}

/// Work extracted from an energy flux: `W = ε·A`.
pub fn work_rate(epsilon: f64, flux: f64) -> f64 {
    debug_assert!(epsilon >= 0.0 && flux >= 0.0);
    epsilon * flux
}

/// Interface growth driven by work against the potential: `dL/dt = W/ΔΦ`.
pub fn interface_growth(work: f64, delta_phi: f64) -> Result<f64> {
    if delta_phi <= 0.0 {
        return Err(Error::ZeroPotential);
    }
    check_param("work", work, work >= 0.0, "must be >= 0")?;
    Ok(work / delta_phi)
}

/// Exponential growth rate `η = α·ε`.
pub fn growth_rate(alpha: f64, epsilon: f64) -> f64 {
    alpha * epsilon
}

/// Interface length `N_S^{1/3}·N_R` of a system of `n_system` particles in
/// contact with a reservoir of `n_reservoir`.
pub fn interface_length(n_system: f64, n_reservoir: f64) -> f64 {
    interface_length_with_exponent(n_system, n_reservoir, DEFAULT_INTERFACE_EXPONENT)
}

pub fn interface_length_with_exponent(n_system: f64, n_reservoir: f64, exponent: f64) -> f64 {
    debug_assert!(n_system >= 0.0 && n_reservoir >= 0.0);
    // cbrt is exact on perfect cubes, powf is not
    let size = if exponent == DEFAULT_INTERFACE_EXPONENT {
        n_system.cbrt()
    } else {
        n_system.powf(exponent)
    };
    size * n_reservoir
}

/// Potential left after drawing `drawn` from a reservoir of `capacity`:
/// `ΔΦ₀·max(0, 1 − drawn/capacity)`. Infinite reservoirs keep `ΔΦ₀`.
pub fn depleted_potential(delta_phi0: f64, drawn: f64, capacity: Option<f64>) -> f64 {
    match capacity {
        Some(r) => delta_phi0 * (1.0 - drawn / r).max(0.0),
        None => delta_phi0,
    }
}

/// Same law expressed through the undrawn remainder, which keeps full
/// relative precision as the reservoir empties.
pub fn potential_from_remaining(delta_phi0: f64, remaining: f64, capacity: Option<f64>) -> f64 {
    match capacity {
        Some(r) => delta_phi0 * (remaining / r).clamp(0.0, 1.0),
        None => delta_phi0,
    }
}
