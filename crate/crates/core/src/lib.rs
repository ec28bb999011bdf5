//! Thermodynamic growth model of cloud systems.
//!
//! A cloud platform is treated as an open system drawing energy from a
//! reservoir through an interface of size `L`. Energy flux, work (revenue)
//! and efficiency are tied together by a handful of identities, which this
//! crate turns into calibration routines, forward simulators and applied
//! analyses over annual data.
//!
//! - [`series`]: annual series and discrete calculus
//! - [`model`]: the flux/work/growth identities
//! - [`calibrate`]: proportionality and log-linear fits
//! - [`dynamics`]: macro trajectories (closed form, Euler, RK4)
//! - [`microsim`]: particle-count ensemble used as an independent oracle
//! - [`scenarios`]: back-casting and client-side energy
//! - [`shell`]: CSV/manifest ingestion, pipelines and reports

pub mod calibrate;
pub mod dynamics;
pub mod error;
pub mod microsim;
pub mod model;
pub mod scenarios;
pub mod series;
pub mod shell;

pub use calibrate::{fit_alpha, fit_eta, fit_proportional, fit_size_proxy, AlphaFit, FitMode, FitResult};
pub use dynamics::{embodied, simulate, Method, SimConfig, Trajectory};
pub use error::{Category, Error, Result};
pub use model::{ModelParams, SystemState};
pub use series::{align, cumulative, log_growth_rate, AnnualSeries, SeriesKind, SeriesPair};
