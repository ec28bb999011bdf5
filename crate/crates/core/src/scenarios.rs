//! Applied analyses: back-casting energy from revenue history, and the
//! client-side extension of a platform's energy footprint.

use std::collections::BTreeSet;
use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use crate::calibrate::{FitMode, FitResult};
use crate::error::{check_param, Error, Result};
use crate::series::{cumulative, AnnualSeries, SeriesKind};

/// Unit of every energy series produced here.
pub const ENERGY_UNIT: &str = "MWh/yr";
pub const USERS_UNIT: &str = "persons";
pub const WH_PER_MWH: f64 = 1e6;

/// Whether a reported value was measured or produced by the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Observed,
    Estimated,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Backcast {
    pub energy: AnnualSeries,
    pub provenance: Provenance,
}

/// Model-based energy estimates `Â(t) = α̂·C(t)` for the years in `window`,
/// where `C` accumulates `revenue` from its earliest record on top of
/// `pre_history` (zero when the revenue series is the full history).
pub fn backcast_energy(
    revenue: &AnnualSeries,
    fit: &FitResult,
    window: RangeInclusive<i32>,
    pre_history: f64,
) -> Result<Backcast> {
    if fit.mode != FitMode::ThroughOrigin {
        return Err(Error::InvalidParameter {
            name: "fit.intercept",
            value: fit.intercept,
            reason: "back-casting needs a through-origin alpha fit",
        });
    }
    let covered = match (revenue.first_year(), revenue.last_year()) {
        (Some(a), Some(b)) => a <= *window.start() && *window.end() <= b && window.start() <= window.end(),
        _ => false,
    };
    if !covered {
        return Err(Error::Window {
            entity: revenue.entity().to_owned(),
            start: *window.start(),
            end: *window.end(),
        });
    }
    let c = cumulative(revenue, pre_history)?;
    let points = c
        .points()
        .iter()
        .filter(|(y, _)| window.contains(y))
        .map(|&(y, cv)| (y, fit.slope * cv))
        .collect();
    Ok(Backcast {
        energy: AnnualSeries::new(revenue.entity(), SeriesKind::Energy, ENERGY_UNIT, points)?,
        provenance: Provenance::Estimated,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClientEnergyParams {
    pub device_wh_per_user_day: f64,
    /// Fraction of wall energy reaching the battery; 1.0 applies no loss.
    pub charger_efficiency: f64,
    /// Share of total internet energy attributed to the platform.
    pub internet_share: f64,
    pub days_per_year: f64,
}

impl Default for ClientEnergyParams {
    fn default() -> Self {
        Self {
            device_wh_per_user_day: 2.0,
            charger_efficiency: 1.0,
            internet_share: 0.10,
            days_per_year: 365.0,
        }
    }
}

impl ClientEnergyParams {
    /// Daily device energy from an average app power draw and hours of use.
    pub fn from_usage(watts: f64, hours_per_day: f64) -> Self {
        Self {
            device_wh_per_user_day: watts * hours_per_day,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_param(
            "device_wh_per_user_day",
            self.device_wh_per_user_day,
            self.device_wh_per_user_day > 0.0,
            "must be > 0",
        )?;
        check_param(
            "charger_efficiency",
            self.charger_efficiency,
            self.charger_efficiency > 0.0 && self.charger_efficiency <= 1.0,
            "must be in (0, 1]",
        )?;
        check_param(
            "internet_share",
            self.internet_share,
            self.internet_share > 0.0 && self.internet_share <= 1.0,
            "must be in (0, 1]",
        )?;
        check_param("days_per_year", self.days_per_year, self.days_per_year > 0.0, "must be > 0")
    }

    fn device_mwh(&self, users: f64) -> f64 {
        users * self.device_wh_per_user_day * self.days_per_year / self.charger_efficiency / WH_PER_MWH
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClientEnergy {
    pub device: AnnualSeries,
    /// Zero everywhere when no internet energy series was supplied.
    pub network: AnnualSeries,
}

impl ClientEnergy {
    pub fn total(&self) -> Vec<(i32, f64)> {
        self.device
            .points()
            .iter()
            .zip(self.network.points())
            .map(|(&(y, d), &(_, n))| (y, d + n))
            .collect()
    }
}

fn require_unit(s: &AnnualSeries, unit: &str) -> Result<()> {
    if s.unit() == unit {
        Ok(())
    } else {
        Err(Error::UnitMismatch {
            entity: s.entity().to_owned(),
            expected: unit.to_owned(),
            found: s.unit().to_owned(),
        })
    }
}

fn common_years<'a>(series: impl IntoIterator<Item = &'a AnnualSeries>) -> BTreeSet<i32> {
    let mut it = series.into_iter();
    let mut years: BTreeSet<i32> = it.next().map(|s| s.years().into_iter().collect()).unwrap_or_default();
    for s in it {
        let other: BTreeSet<i32> = s.years().into_iter().collect();
        years.retain(|y| other.contains(y));
    }
    years
}

/// Device and network energy attributable to a platform's users.
pub fn client_energy(
    users: &AnnualSeries,
    internet_energy: Option<&AnnualSeries>,
    params: &ClientEnergyParams,
) -> Result<ClientEnergy> {
    params.validate()?;
    require_unit(users, USERS_UNIT)?;
    let users = match internet_energy {
        Some(net) => {
            require_unit(net, ENERGY_UNIT)?;
            let years = common_years([users, net]);
            if years.is_empty() {
                return Err(Error::Alignment {
                    x: users.entity().to_owned(),
                    y: net.entity().to_owned(),
                    common: 0,
                });
            }
            users.restrict(&years)
        }
        None => users.clone(),
    };
    let device = users
        .points()
        .iter()
        .map(|&(y, u)| (y, params.device_mwh(u)))
        .collect();
    let network = users
        .points()
        .iter()
        .map(|&(y, _)| {
            let total = internet_energy.and_then(|n| n.value_at(y)).unwrap_or(0.0);
            (y, params.internet_share * total)
        })
        .collect();
    Ok(ClientEnergy {
        device: AnnualSeries::new(users.entity(), SeriesKind::Other, ENERGY_UNIT, device)?,
        network: AnnualSeries::new(users.entity(), SeriesKind::Other, ENERGY_UNIT, network)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyRecord {
    pub year: i32,
    pub datacenter: f64,
    pub device: f64,
    pub network: f64,
    pub total: f64,
}

impl EnergyRecord {
    pub fn new(year: i32, datacenter: f64, device: f64, network: f64) -> Self {
        Self {
            year,
            datacenter,
            device,
            network,
            total: datacenter + device + network,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct EnergyBreakdown {
    pub records: Vec<EnergyRecord>,
}

/// Data-center, device and network energy on the years all inputs share.
pub fn total_system_energy(
    datacenter: &AnnualSeries,
    users: &AnnualSeries,
    internet_energy: Option<&AnnualSeries>,
    params: &ClientEnergyParams,
) -> Result<EnergyBreakdown> {
    require_unit(datacenter, ENERGY_UNIT)?;
    let client = client_energy(users, internet_energy, params)?;
    let years = common_years([datacenter, &client.device]);
    if years.is_empty() {
        return Err(Error::Alignment {
            x: datacenter.entity().to_owned(),
            y: users.entity().to_owned(),
            common: 0,
        });
    }
    let records = years
        .into_iter()
        .map(|y| {
            let dc = datacenter.value_at(y).unwrap_or_default();
            let device = client.device.value_at(y).unwrap_or_default();
            let network = client.network.value_at(y).unwrap_or_default();
            EnergyRecord::new(y, dc, device, network)
        })
        .collect();
    Ok(EnergyBreakdown { records })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calibrate::fit_alpha;

    fn users(v: &[f64]) -> AnnualSeries {
        AnnualSeries::from_values("u", SeriesKind::Users, USERS_UNIT, 2016, v).unwrap()
    }

    fn energy(kind: SeriesKind, v: &[f64]) -> AnnualSeries {
        AnnualSeries::from_values("e", kind, ENERGY_UNIT, 2016, v).unwrap()
    }

    #[test]
    fn device_energy_for_a_billion_users() {
        let c = client_energy(&users(&[1e9]), None, &ClientEnergyParams::default()).unwrap();
        assert_eq!(c.device.values(), [730_000.0]);
        assert_eq!(c.network.values(), [0.0]);
        let half = ClientEnergyParams {
            charger_efficiency: 0.5,
            ..Default::default()
        };
        assert_eq!(client_energy(&users(&[1e9]), None, &half).unwrap().device.values(), [1_460_000.0]);
        assert_eq!(
            client_energy(&users(&[0.0]), None, &ClientEnergyParams::default()).unwrap().device.values(),
            [0.0]
        );
        assert_eq!(ClientEnergyParams::from_usage(1.0, 2.0).device_wh_per_user_day, 2.0);
    }

    #[test]
    fn client_energy_errors() {
        let wrong = AnnualSeries::from_values("u", SeriesKind::Users, "millions", 2016, &[1.0]).unwrap();
        assert!(matches!(
            client_energy(&wrong, None, &ClientEnergyParams::default()),
            Err(Error::UnitMismatch { .. })
        ));
        let bad = ClientEnergyParams {
            charger_efficiency: 1.5,
            ..Default::default()
        };
        assert!(client_energy(&users(&[1.0]), None, &bad).is_err());
    }

    #[test]
    fn breakdown_sums() {
        let params = ClientEnergyParams {
            device_wh_per_user_day: 50e6,
            days_per_year: 1.0,
            ..Default::default()
        };
        let dc = energy(SeriesKind::Energy, &[100.0]);
        let net = energy(SeriesKind::InternetEnergy, &[100.0]);
        let b = total_system_energy(&dc, &users(&[1.0]), Some(&net), &params).unwrap();
        assert_eq!(b.records, vec![EnergyRecord::new(2016, 100.0, 50.0, 10.0)]);
        assert_eq!(b.records[0].total, 160.0);

        let b = total_system_energy(&dc, &users(&[1.0]), None, &params).unwrap();
        assert_eq!(b.records[0].network, 0.0);
        assert_eq!(b.records[0].total, 150.0);
    }

    #[test]
    fn doubling_device_energy_touches_only_device_column() {
        let dc = energy(SeriesKind::Energy, &[100.0, 120.0, 150.0]);
        let net = energy(SeriesKind::InternetEnergy, &[1e6, 1.1e6, 1.2e6]);
        let u = users(&[1e8, 2e8, 3e8]);
        let base = ClientEnergyParams::default();
        let doubled = ClientEnergyParams {
            device_wh_per_user_day: 4.0,
            ..base
        };
        let a = total_system_energy(&dc, &u, Some(&net), &base).unwrap();
        let b = total_system_energy(&dc, &u, Some(&net), &doubled).unwrap();
        for (x, y) in a.records.iter().zip(&b.records) {
            assert_eq!(y.device, 2.0 * x.device);
            assert_eq!(y.network, x.network);
            assert_eq!(y.datacenter, x.datacenter);
        }
    }

    #[test]
    fn backcast_round_trip_and_errors() {
        let revenue = AnnualSeries::from_values(
            "r",
            SeriesKind::Revenue,
            "USD/yr",
            2010,
            &[50.0, 60.0, 70.0, 85.0, 100.0, 120.0, 140.0],
        )
        .unwrap();
        let c = cumulative(&revenue, 0.0).unwrap();
        let observed: Vec<(i32, f64)> = c.points().iter().filter(|p| p.0 >= 2013).map(|&(y, v)| (y, 4e-4 * v)).collect();
        let observed = AnnualSeries::new("r", SeriesKind::Energy, ENERGY_UNIT, observed).unwrap();
        let fit = fit_alpha(&observed, &revenue, 0.0).unwrap();
        let back = backcast_energy(&revenue, &fit.fit, 2013..=2016, 0.0).unwrap();
        assert_eq!(back.provenance, Provenance::Estimated);
        for ((_, a), (_, b)) in back.energy.points().iter().zip(observed.points()) {
            assert!((a - b).abs() <= 1e-12 * b);
        }
        // years before the energy window are the point of back-casting
        let early = backcast_energy(&revenue, &fit.fit, 2010..=2012, 0.0).unwrap();
        assert!((early.energy.values()[0] - 4e-4 * 50.0).abs() < 1e-15);

        assert!(matches!(
            backcast_energy(&revenue, &fit.fit, 2005..=2012, 0.0),
            Err(Error::Window { .. })
        ));
        let zero = AnnualSeries::from_values("r", SeriesKind::Revenue, "USD/yr", 2010, &[0.0, 0.0]).unwrap();
        assert_eq!(backcast_energy(&zero, &fit.fit, 2010..=2011, 0.0).unwrap().energy.values(), [0.0, 0.0]);
    }
}
