//! Annual time series and discrete calculus on yearly aggregates.
//!
//! Sustainability reports and financial filings publish one total per year,
//! so a yearly total stands in for the instantaneous rate over that year.
//! Integrals are left-closed running sums and derivatives are forward
//! differences.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{check_param, Error, Result};

/// Suffix marking a per-year rate unit, e.g. `MWh/yr`.
pub const RATE_SUFFIX: &str = "/yr";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesKind {
    Energy,
    Revenue,
    Capex,
    Scope3,
    Users,
    InternetEnergy,
    Other,
}

impl SeriesKind {
    pub const ALL: [SeriesKind; 7] = [
        SeriesKind::Energy,
        SeriesKind::Revenue,
        SeriesKind::Capex,
        SeriesKind::Scope3,
        SeriesKind::Users,
        SeriesKind::InternetEnergy,
        SeriesKind::Other,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SeriesKind::Energy => "energy",
            SeriesKind::Revenue => "revenue",
            SeriesKind::Capex => "capex",
            SeriesKind::Scope3 => "scope3",
            SeriesKind::Users => "users",
            SeriesKind::InternetEnergy => "internet_energy",
            SeriesKind::Other => "other",
        }
    }

    /// Physical stocks and flows that cannot be negative.
    pub fn requires_non_negative(self) -> bool {
        matches!(
            self,
            SeriesKind::Energy | SeriesKind::Revenue | SeriesKind::Capex | SeriesKind::Users
        )
    }
}

impl fmt::Display for SeriesKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SeriesKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        SeriesKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown series kind '{s}'"))
    }
}

/// Ordered `(year, value)` observations for one entity and quantity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnnualSeries {
    entity: String,
    kind: SeriesKind,
    unit: String,
    points: Vec<(i32, f64)>,
}

impl AnnualSeries {
    /// Validates and builds a series. Gaps between years are allowed here;
    /// operations that integrate reject them (see [`AnnualSeries::interpolate_gaps`]).
    pub fn new(
        entity: impl Into<String>,
        kind: SeriesKind,
        unit: impl Into<String>,
        points: Vec<(i32, f64)>,
    ) -> Result<Self> {
        let entity = entity.into();
        let unit = unit.into();
        if unit.trim().is_empty() {
            return Err(Error::EmptyUnit { entity });
        }
        for w in points.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(Error::YearsNotIncreasing {
                    entity,
                    previous: w[0].0,
                    year: w[1].0,
                });
            }
        }
        for &(year, value) in &points {
            if !value.is_finite() {
                return Err(Error::NonFinite { entity, year });
            }
            if kind.requires_non_negative() && value < 0.0 {
                return Err(Error::Negative {
                    entity,
                    kind: kind.to_string(),
                    year,
                    value,
                });
            }
        }
        Ok(Self {
            entity,
            kind,
            unit,
            points,
        })
    }

    /// Builds a series over consecutive years starting at `first_year`.
    pub fn from_values(
        entity: impl Into<String>,
        kind: SeriesKind,
        unit: impl Into<String>,
        first_year: i32,
        values: &[f64],
    ) -> Result<Self> {
        let points = values
            .iter()
            .enumerate()
            .map(|(i, &v)| (first_year + i as i32, v))
            .collect();
        Self::new(entity, kind, unit, points)
    }

    pub fn entity(&self) -> &str {
        &self.entity
    }

    pub fn kind(&self) -> SeriesKind {
        self.kind
    }

    pub fn unit(&self) -> &str {
        &self.unit
    }

    pub fn points(&self) -> &[(i32, f64)] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn years(&self) -> Vec<i32> {
        self.points.iter().map(|p| p.0).collect()
    }

    pub fn values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.1).collect()
    }

    pub fn first_year(&self) -> Option<i32> {
        self.points.first().map(|p| p.0)
    }

    pub fn last_year(&self) -> Option<i32> {
        self.points.last().map(|p| p.0)
    }

    pub fn value_at(&self, year: i32) -> Option<f64> {
        self.points
            .binary_search_by_key(&year, |p| p.0)
            .ok()
            .map(|i| self.points[i].1)
    }

    /// Years absent between the first and last observation.
    pub fn missing_years(&self) -> Vec<i32> {
        let mut missing = Vec::new();
        for w in self.points.windows(2) {
            missing.extend(w[0].0 + 1..w[1].0);
        }
        missing
    }

    /// Fills interior gaps by linear interpolation between the neighbouring
    /// observations. Opt-in only: silent gap filling distorts running sums.
    pub fn interpolate_gaps(&self) -> Self {
        let mut points = Vec::with_capacity(self.points.len());
        for w in self.points.windows(2) {
            let ((y0, v0), (y1, v1)) = (w[0], w[1]);
            points.push((y0, v0));
            let span = f64::from(y1 - y0);
            for y in y0 + 1..y1 {
                let frac = f64::from(y - y0) / span;
                points.push((y, v0 + (v1 - v0) * frac));
            }
        }
        if let Some(&last) = self.points.last() {
            points.push(last);
        }
        Self {
            points,
            ..self.clone()
        }
    }

    /// Same metadata, new points. Points must already satisfy the invariants.
    pub(crate) fn with_points(&self, points: Vec<(i32, f64)>) -> Self {
        Self {
            points,
            ..self.clone()
        }
    }

    pub fn relabel(&self, kind: SeriesKind, unit: impl Into<String>) -> Result<Self> {
        Self::new(self.entity.clone(), kind, unit, self.points.clone())
    }

    /// Restricts to the given years, keeping order.
    pub fn restrict(&self, years: &BTreeSet<i32>) -> Self {
        self.with_points(
            self.points
                .iter()
                .copied()
                .filter(|(y, _)| years.contains(y))
                .collect(),
        )
    }

    fn require_contiguous(&self) -> Result<()> {
        let missing = self.missing_years();
        if missing.is_empty() {
            Ok(())
        } else {
            Err(Error::MissingYears {
                entity: self.entity.clone(),
                missing,
            })
        }
    }
}

/// Strips the per-year suffix from a rate unit: `USD/yr` becomes `USD`.
pub fn stock_unit(rate_unit: &str) -> Option<&str> {
    rate_unit
        .strip_suffix(RATE_SUFFIX)
        .map(str::trim_end)
        .filter(|u| !u.is_empty())
}

/// Running sum `out[k] = initial + Σ_{i≤k} s[i]`, converting a rate unit into
/// the matching stock unit.
pub fn cumulative(s: &AnnualSeries, initial: f64) -> Result<AnnualSeries> {
    check_param("initial", initial, initial >= 0.0, "pre-observation history must be >= 0")?;
    if s.is_empty() {
        return Err(Error::EmptySeries {
            entity: s.entity.clone(),
        });
    }
    s.require_contiguous()?;
    let stock = stock_unit(&s.unit).ok_or_else(|| Error::UnitMismatch {
        entity: s.entity.clone(),
        expected: format!("<unit>{RATE_SUFFIX}"),
        found: s.unit.clone(),
    })?;
    let mut acc = initial;
    let points = s
        .points
        .iter()
        .map(|&(y, v)| {
            acc += v;
            (y, acc)
        })
        .collect();
    AnnualSeries::new(s.entity.clone(), s.kind, stock, points)
}

/// Inverse of [`cumulative`]: first differences of a stock, with `initial`
/// subtracted from the first value.
pub fn decumulate(s: &AnnualSeries, initial: f64) -> Result<AnnualSeries> {
    if s.is_empty() {
        return Err(Error::EmptySeries {
            entity: s.entity.clone(),
        });
    }
    let mut prev = initial;
    let points = s
        .points
        .iter()
        .map(|&(y, v)| {
            let d = v - prev;
            prev = v;
            (y, d)
        })
        .collect();
    AnnualSeries::new(
        s.entity.clone(),
        SeriesKind::Other,
        format!("{}{RATE_SUFFIX}", s.unit),
        points,
    )
}

/// Forward-difference log growth rate, one point shorter than the input and
/// indexed by the start year of each interval. Unit `1/yr`.
pub fn log_growth_rate(s: &AnnualSeries) -> Result<AnnualSeries> {
    if s.len() < 2 {
        return Err(Error::TooFewPoints {
            entity: s.entity.clone(),
            needed: 2,
            found: s.len(),
        });
    }
    if let Some(&(year, value)) = s.points.iter().find(|p| p.1 <= 0.0) {
        return Err(Error::NonPositive {
            entity: s.entity.clone(),
            year,
            value,
        });
    }
    let points = s
        .points
        .windows(2)
        .map(|w| {
            let dt = f64::from(w[1].0 - w[0].0);
            (w[0].0, (w[1].1.ln() - w[0].1.ln()) / dt)
        })
        .collect();
    AnnualSeries::new(s.entity.clone(), SeriesKind::Other, "1/yr", points)
}

/// Two series restricted to their common years.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesPair {
    x: AnnualSeries,
    y: AnnualSeries,
    years: Vec<i32>,
}

impl SeriesPair {
    pub fn x(&self) -> &AnnualSeries {
        &self.x
    }

    pub fn y(&self) -> &AnnualSeries {
        &self.y
    }

    pub fn years(&self) -> &[i32] {
        &self.years
    }

    pub fn len(&self) -> usize {
        self.years.len()
    }

    pub fn is_empty(&self) -> bool {
        self.years.is_empty()
    }
}

/// Restricts both series to the intersection of their years.
pub fn align(x: &AnnualSeries, y: &AnnualSeries) -> Result<SeriesPair> {
    let xs: BTreeSet<i32> = x.points.iter().map(|p| p.0).collect();
    let common: BTreeSet<i32> = y.points.iter().map(|p| p.0).filter(|yr| xs.contains(yr)).collect();
    if common.len() < 2 {
        return Err(Error::Alignment {
            x: format!("{}/{}", x.entity, x.kind),
            y: format!("{}/{}", y.entity, y.kind),
            common: common.len(),
        });
    }
    Ok(SeriesPair {
        x: x.restrict(&common),
        y: y.restrict(&common),
        years: common.into_iter().collect(),
    })
}
