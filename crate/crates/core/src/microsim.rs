//! Particle-count ensemble that grows at the expense of a reservoir.
//!
//! Each step the system of `N_S` particles draws energy through an interface
//! of length `N_S^p·N_R` (p = 1/3 by default), turns it into work, and
//! reinvests that work in more particles. Nothing here integrates the macro
//! equations directly: exponential growth, `A ∝ C` and saturation under a
//! draining reservoir have to emerge from the step rule, which is what makes
//! the ensemble usable as an oracle for [`crate::dynamics`].
//!
//! Reinvestment closure: the work done in a step, `W·dt`, extends the
//! interface by `growth_cost·W·dt/ΔΦ₀`; the particle count is whatever the
//! geometry needs to realise that length. In conserving mode the new
//! particles are taken from the reservoir, which also lowers the potential
//! in proportion to the reservoir fraction left.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{check_param, Error, Result};
use crate::model::{energy_flux, interface_length_with_exponent, work_rate, DEFAULT_INTERFACE_EXPONENT};
use crate::series::{AnnualSeries, SeriesKind};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MicroState {
    pub n_system: f64,
    pub n_reservoir: f64,
    pub t: f64,
    /// Energy flux through the current interface.
    pub a_current: f64,
    pub c_cum: f64,
    pub e_cum: f64,
}

impl MicroState {
    /// State at `t = 0` with its flux evaluated under `params`.
    pub fn new(n_system: f64, n_reservoir: f64, params: &MicroParams) -> Result<Self> {
        check_param("n_system", n_system, n_system >= 0.0, "must be >= 0")?;
        check_param("n_reservoir", n_reservoir, n_reservoir >= 0.0, "must be >= 0")?;
        let (_, a) = params.flux(n_system, n_reservoir);
        Ok(Self {
            n_system,
            n_reservoir,
            t: 0.0,
            a_current: a,
            c_cum: 0.0,
            e_cum: 0.0,
        })
    }

    pub fn interface(&self, exponent: f64) -> f64 {
        interface_length_with_exponent(self.n_system, self.n_reservoir, exponent)
    }

    pub fn total_matter(&self) -> f64 {
        self.n_system + self.n_reservoir
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MicroParams {
    pub alpha: f64,
    pub epsilon: f64,
    pub delta_phi0: f64,
    pub dt: f64,
    /// Take new particles out of the reservoir (finite, depleting bath).
    pub conserve_matter: bool,
    /// Interface gained per unit of reinvested work, relative to `1/ΔΦ₀`.
    /// Values other than 1 rescale time only.
    pub growth_cost: f64,
    /// Interface exponent p in `L = N_S^p·N_R`.
    pub exponent: f64,
    pub output_interval: f64,
    /// Reservoir size at which the potential equals `ΔΦ₀`. Filled from the
    /// initial state by [`micro_run`] when absent.
    pub reservoir_ref: Option<f64>,
    /// Seed for Poisson-rounded particle transfers; `None` is deterministic.
    pub poisson_seed: Option<u64>,
}

impl MicroParams {
    pub fn new(alpha: f64, epsilon: f64) -> Self {
        Self {
            alpha,
            epsilon,
            delta_phi0: 1.0,
            dt: 0.01,
            conserve_matter: false,
            growth_cost: 1.0,
            exponent: DEFAULT_INTERFACE_EXPONENT,
            output_interval: 1.0,
            reservoir_ref: None,
            poisson_seed: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_param("alpha", self.alpha, self.alpha > 0.0, "must be > 0")?;
        check_param("epsilon", self.epsilon, self.epsilon >= 0.0, "must be >= 0")?;
        check_param("delta_phi0", self.delta_phi0, self.delta_phi0 > 0.0, "must be > 0")?;
        check_param("dt", self.dt, self.dt > 0.0, "must be > 0")?;
        check_param("growth_cost", self.growth_cost, self.growth_cost > 0.0, "must be > 0")?;
        check_param("exponent", self.exponent, self.exponent > 0.0, "must be > 0")?;
        check_param(
            "output_interval",
            self.output_interval,
            self.output_interval >= self.dt,
            "must be >= dt",
        )?;
        if let Some(r) = self.reservoir_ref {
            check_param("reservoir_ref", r, r > 0.0, "must be > 0")?;
        }
        Ok(())
    }

    pub fn eta(&self) -> f64 {
        self.alpha * self.epsilon
    }

    fn potential(&self, n_reservoir: f64) -> f64 {
        match (self.conserve_matter, self.reservoir_ref) {
            (true, Some(r)) => self.delta_phi0 * (n_reservoir / r).clamp(0.0, 1.0),
            _ => self.delta_phi0,
        }
    }

    /// `(L, A)` for the given counts.
    fn flux(&self, n_system: f64, n_reservoir: f64) -> (f64, f64) {
        let l = interface_length_with_exponent(n_system, n_reservoir, self.exponent);
        (l, energy_flux(self.alpha, l, self.potential(n_reservoir)))
    }

    /// Particles needed to extend the interface from `l` by `gain`, holding
    /// the reservoir fixed.
    fn particles_for(&self, n_system: f64, l: f64, gain: f64) -> f64 {
        if l <= 0.0 || gain <= 0.0 {
            return 0.0;
        }
        // N' = N·(1 + gain/L)^{1/p}, evaluated without cancellation
        n_system * ((1.0 / self.exponent) * (gain / l).ln_1p()).exp_m1()
    }
}

fn advance(state: &MicroState, params: &MicroParams, transfer: impl FnOnce(f64) -> f64) -> MicroState {
    let dt = params.dt;
    let (l, a) = params.flux(state.n_system, state.n_reservoir);
    let w = work_rate(params.epsilon, a);
    let gain = params.growth_cost * w * dt / params.delta_phi0;
    let mut moved = transfer(params.particles_for(state.n_system, l, gain));
    let mut n_reservoir = state.n_reservoir;
    if params.conserve_matter {
        moved = moved.min(n_reservoir);
        n_reservoir -= moved;
    }
    let n_system = state.n_system + moved;
    let (_, a_next) = params.flux(n_system, n_reservoir);
    MicroState {
        n_system,
        n_reservoir,
        t: state.t + dt,
        a_current: a_next,
        c_cum: state.c_cum + w * dt,
        e_cum: state.e_cum + a * dt,
    }
}

/// One deterministic step of length `params.dt`.
pub fn micro_step(state: &MicroState, params: &MicroParams) -> MicroState {
    advance(state, params, |mean| mean)
}

/// One step with the particle transfer drawn from a Poisson distribution
/// around its deterministic mean.
pub fn micro_step_stochastic<R: Rng + ?Sized>(state: &MicroState, params: &MicroParams, rng: &mut R) -> MicroState {
    advance(state, params, |mean| {
        if mean > 0.0 {
            Poisson::new(mean).map_or(mean, |d| d.sample(rng))
        } else {
            0.0
        }
    })
}

/// Iterates [`micro_step`] over `horizon` years and returns the initial
/// state followed by one state per output interval.
pub fn micro_run(initial: &MicroState, params: &MicroParams, horizon: f64) -> Result<Vec<MicroState>> {
    let mut params = *params;
    if params.conserve_matter && params.reservoir_ref.is_none() && initial.n_reservoir > 0.0 {
        params.reservoir_ref = Some(initial.n_reservoir);
    }
    params.validate()?;
    check_param("horizon", horizon, horizon >= params.dt, "must be >= dt")?;

    let steps = (horizon / params.dt).round() as usize;
    let every = ((params.output_interval / params.dt).round() as usize).max(1);
    let mut rng = params.poisson_seed.map(ChaCha8Rng::seed_from_u64);
    let mut out = Vec::with_capacity(steps / every + 2);
    out.push(*initial);
    let mut state = *initial;
    for k in 1..=steps {
        state = match rng.as_mut() {
            Some(r) => micro_step_stochastic(&state, &params, r),
            None => micro_step(&state, &params),
        };
        state.t = initial.t + k as f64 * params.dt;
        if k % every == 0 || k == steps {
            out.push(state);
        }
    }
    Ok(out)
}

/// Entropy-growth proxy `d ln S/dt` with `S ∝ N_S^p`, the linear size of
/// the system. Under a constant potential this tends to `αε`.
///
/// Years are the rounded start time of each interval.
pub fn entropy_diagnostic(states: &[MicroState], exponent: f64) -> Result<AnnualSeries> {
    if states.len() < 2 {
        return Err(Error::TooFewPoints {
            entity: "microsim".into(),
            needed: 2,
            found: states.len(),
        });
    }
    if let Some(s) = states.iter().find(|s| s.n_system <= 0.0) {
        return Err(Error::NonPositive {
            entity: "microsim".into(),
            year: s.t.round() as i32,
            value: s.n_system,
        });
    }
    let points = states
        .windows(2)
        .map(|w| {
            let rate = exponent * (w[1].n_system.ln() - w[0].n_system.ln()) / (w[1].t - w[0].t);
            (w[0].t.round() as i32, rate)
        })
        .collect();
    AnnualSeries::new("microsim", SeriesKind::Other, "1/yr", points)
}
