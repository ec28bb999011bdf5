//! Parameter estimation from observed annual series.
//!
//! Every fit is ordinary least squares, unweighted. Through-origin fits are
//! the default because the model's claims are strict proportionalities; the
//! affine mode exists so the intercept can be inspected as a deviation.

use serde::{Deserialize, Serialize};

use crate::error::{check_param, Error, Result};
use crate::series::{align, cumulative, AnnualSeries, SeriesKind, SeriesPair};

/// Size-proxy fits with R² below this are flagged as not proportional.
pub const PROXY_R2_THRESHOLD: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FitMode {
    #[default]
    ThroughOrigin,
    Affine,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// `(year, y − ŷ)` for every observation.
    pub residuals: Vec<(i32, f64)>,
    pub n: usize,
    pub mode: FitMode,
}

impl FitResult {
    pub fn predict(&self, x: f64) -> f64 {
        self.intercept + self.slope * x
    }

    pub fn is_weak(&self, threshold: f64) -> bool {
        self.r_squared < threshold
    }
}

/// Least-squares fit of `y` on `x` over aligned years.
pub fn fit_xy(years: &[i32], x: &[f64], y: &[f64], mode: FitMode) -> Result<FitResult> {
    assert_eq!(x.len(), y.len());
    assert_eq!(years.len(), x.len());
    let n = x.len();
    if n < 2 {
        return Err(Error::SingularFit(format!("need at least 2 observations, got {n}")));
    }
    let nf = n as f64;
    let (slope, intercept) = match mode {
        FitMode::ThroughOrigin => {
            let sxx: f64 = x.iter().map(|v| v * v).sum();
            if sxx == 0.0 {
                return Err(Error::SingularFit("regressor is identically zero".into()));
            }
            let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
            (sxy / sxx, 0.0)
        }
        FitMode::Affine => {
            let mx = x.iter().sum::<f64>() / nf;
            let my = y.iter().sum::<f64>() / nf;
            let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
            if sxx == 0.0 {
                return Err(Error::SingularFit("regressor has no variance".into()));
            }
            let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
            let slope = sxy / sxx;
            (slope, my - slope * mx)
        }
    };
    let residuals: Vec<(i32, f64)> = years
        .iter()
        .zip(x.iter().zip(y))
        .map(|(&yr, (xv, yv))| (yr, yv - (intercept + slope * xv)))
        .collect();
    let my = y.iter().sum::<f64>() / nf;
    let ss_tot: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let ss_res: f64 = residuals.iter().map(|r| r.1 * r.1).sum();
    // nothing to explain: report no explanatory power
    let r_squared = if ss_tot > 0.0 {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    } else {
        0.0
    };
    Ok(FitResult {
        slope,
        intercept,
        r_squared,
        residuals,
        n,
        mode,
    })
}

/// Fits `pair.y` against `pair.x`.
pub fn fit_proportional(pair: &SeriesPair, mode: FitMode) -> Result<FitResult> {
    fit_xy(pair.years(), &pair.x().values(), &pair.y().values(), mode)
}

/// Conductivity estimate from energy against cumulative revenue.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaFit {
    pub fit: FitResult,
    /// α̂ in (MWh/yr)/USD.
    pub alpha: f64,
    /// Revenue accumulated before the first revenue observation.
    pub historical_revenue: f64,
    /// Cumulative revenue C(t) on the years used by the fit.
    pub cumulative_revenue: AnnualSeries,
}

/// Builds `C(t) = historical_revenue + Σ revenue`, aligns it with energy and
/// fits `A = α·C` through the origin.
pub fn fit_alpha(energy: &AnnualSeries, revenue: &AnnualSeries, historical_revenue: f64) -> Result<AlphaFit> {
    let c = cumulative(revenue, historical_revenue)?;
    let pair = align(&c, energy)?;
    let fit = fit_proportional(&pair, FitMode::ThroughOrigin)?;
    Ok(AlphaFit {
        alpha: fit.slope,
        fit,
        historical_revenue,
        cumulative_revenue: pair.x().clone(),
    })
}

/// Growth-rate estimate: OLS of `ln A` on the year. The slope is η̂ in 1/yr
/// and R² measures how exponential the series is.
pub fn fit_eta(energy: &AnnualSeries) -> Result<FitResult> {
    if energy.len() < 3 {
        return Err(Error::TooFewPoints {
            entity: energy.entity().to_owned(),
            needed: 3,
            found: energy.len(),
        });
    }
    if let Some(&(year, value)) = energy.points().iter().find(|p| p.1 <= 0.0) {
        return Err(Error::NonPositive {
            entity: energy.entity().to_owned(),
            year,
            value,
        });
    }
    let years = energy.years();
    let origin = years[0];
    let t: Vec<f64> = years.iter().map(|&y| f64::from(y - origin)).collect();
    let ln_a: Vec<f64> = energy.values().iter().map(|v| v.ln()).collect();
    let mut fit = fit_xy(&years, &t, &ln_a, FitMode::Affine)?;
    // report the intercept as ln A at year 0 of the calendar, not of the window
    fit.intercept -= fit.slope * f64::from(origin);
    Ok(fit)
}

/// Growth rate from two observations `years` apart: `ln(last/first)/years`.
pub fn endpoint_growth_rate(first: f64, last: f64, years: f64) -> Result<f64> {
    check_param("first", first, first > 0.0, "must be > 0")?;
    check_param("last", last, last > 0.0, "must be > 0")?;
    check_param("years", years, years > 0.0, "must be > 0")?;
    Ok((last / first).ln() / years)
}

/// Fits an interface-size proxy (Scope 3 emissions or capex) against the
/// cumulative energy drawn, through the origin.
pub fn fit_size_proxy(proxy: &AnnualSeries, energy: &AnnualSeries) -> Result<FitResult> {
    fit_size_proxy_with_history(proxy, energy, 0.0)
}

/// As [`fit_size_proxy`], seeding the cumulative energy with `prior_energy`
/// drawn before the first observation.
pub fn fit_size_proxy_with_history(proxy: &AnnualSeries, energy: &AnnualSeries, prior_energy: f64) -> Result<FitResult> {
    if !matches!(proxy.kind(), SeriesKind::Scope3 | SeriesKind::Capex) {
        return Err(Error::WrongKind {
            entity: proxy.entity().to_owned(),
            expected: "scope3 or capex",
            found: proxy.kind().to_string(),
        });
    }
    let e_cum = cumulative(energy, prior_energy)?;
    let pair = align(&e_cum, proxy)?;
    fit_proportional(&pair, FitMode::ThroughOrigin)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn s(kind: SeriesKind, unit: &str, first: i32, v: &[f64]) -> AnnualSeries {
        AnnualSeries::from_values("t", kind, unit, first, v).unwrap()
    }

    #[test]
    fn exact_proportionality() {
        let fit = fit_xy(&[1, 2, 3], &[10.0, 20.0, 30.0], &[5.0, 10.0, 15.0], FitMode::ThroughOrigin).unwrap();
        assert_eq!(fit.slope, 0.5);
        assert_eq!(fit.intercept, 0.0);
        assert_eq!(fit.r_squared, 1.0);
        assert_eq!(fit.residuals.len(), fit.n);
    }

    #[test]
    fn constant_y_affine_is_mean_model() {
        let fit = fit_xy(&[1, 2, 3, 4], &[1.0, 2.0, 3.0, 4.0], &[7.0; 4], FitMode::Affine).unwrap();
        assert_eq!(fit.slope, 0.0);
        assert_eq!(fit.intercept, 7.0);
        assert_eq!(fit.r_squared, 0.0);
    }

    #[test]
    fn degenerate_regressor() {
        assert!(matches!(
            fit_xy(&[1, 2], &[0.0, 0.0], &[1.0, 2.0], FitMode::ThroughOrigin),
            Err(Error::SingularFit(_))
        ));
        assert!(matches!(
            fit_xy(&[1, 2], &[3.0, 3.0], &[1.0, 2.0], FitMode::Affine),
            Err(Error::SingularFit(_))
        ));
    }

    #[test]
    fn noisy_recovery_single_seed() {
        let x: Vec<f64> = (1..=10).map(|i| 10.0 * i as f64).collect();
        let scale = 0.5 * x.iter().sum::<f64>() / x.len() as f64;
        let noise = Normal::new(0.0, 0.05 * scale).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let y: Vec<f64> = x.iter().map(|v| 0.5 * v + noise.sample(&mut rng)).collect();
        let years: Vec<i32> = (1..=10).collect();
        let fit = fit_xy(&years, &x, &y, FitMode::ThroughOrigin).unwrap();
        assert!((fit.slope - 0.5).abs() < 0.02, "{}", fit.slope);
    }

    #[test]
    fn eta_from_exact_exponential() {
        let v: Vec<f64> = (0..7).map(|k| 100.0 * (0.218 * k as f64).exp()).collect();
        let fit = fit_eta(&s(SeriesKind::Energy, "MWh/yr", 2016, &v)).unwrap();
        assert!((fit.slope - 0.218).abs() < 1e-9, "{}", fit.slope);
        assert!(fit.r_squared > 1.0 - 1e-12);
    }

    #[test]
    fn eta_from_growth_multiples() {
        for (ratio, expected) in [(3.7f64, 0.21803), (2.5, 0.15272)] {
            let v: Vec<f64> = (0..7).map(|k| ratio.powf(k as f64 / 6.0)).collect();
            let fit = fit_eta(&s(SeriesKind::Energy, "MWh/yr", 2016, &v)).unwrap();
            assert!((fit.slope - expected).abs() < 1e-4, "{ratio}: {}", fit.slope);
            assert!((fit.slope - ratio.ln() / 6.0).abs() < 1e-12);
            assert!((endpoint_growth_rate(1.0, ratio, 6.0).unwrap() - expected).abs() < 1e-4);
        }
    }

    #[test]
    fn eta_errors() {
        assert!(matches!(
            fit_eta(&s(SeriesKind::Energy, "MWh/yr", 2016, &[1.0, 2.0])),
            Err(Error::TooFewPoints { .. })
        ));
        assert!(matches!(
            fit_eta(&s(SeriesKind::Energy, "MWh/yr", 2016, &[1.0, 0.0, 2.0])),
            Err(Error::NonPositive { year: 2017, .. })
        ));
        assert!(endpoint_growth_rate(0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn alpha_history_shifts_estimate() {
        let revenue = s(SeriesKind::Revenue, "USD/yr", 2016, &[100.0, 110.0, 121.0, 133.1]);
        let c = cumulative(&revenue, 1000.0).unwrap();
        let energy = s(
            SeriesKind::Energy,
            "MWh/yr",
            2016,
            &c.values().iter().map(|v| 2e-3 * v).collect::<Vec<_>>(),
        );
        let with = fit_alpha(&energy, &revenue, 1000.0).unwrap();
        assert!((with.alpha - 2e-3).abs() < 1e-15);
        assert!((with.fit.r_squared - 1.0).abs() < 1e-12);
        let without = fit_alpha(&energy, &revenue, 0.0).unwrap();
        assert!(without.alpha > with.alpha * 2.0);
        assert!(without.fit.r_squared < with.fit.r_squared);
    }

    #[test]
    fn size_proxy_exact_and_flagged() {
        let energy = s(SeriesKind::Energy, "MWh/yr", 2016, &[10.0, 12.0, 14.0, 17.0, 20.0, 24.0]);
        let e_cum = cumulative(&energy, 0.0).unwrap().values();
        let proxy = s(
            SeriesKind::Scope3,
            "tCO2e/yr",
            2016,
            &e_cum.iter().map(|v| 2.0 * v).collect::<Vec<_>>(),
        );
        let fit = fit_size_proxy(&proxy, &energy).unwrap();
        assert_eq!(fit.slope, 2.0);
        assert!(!fit.is_weak(PROXY_R2_THRESHOLD));

        // regime break: proxy collapses halfway through
        let broken: Vec<f64> = e_cum
            .iter()
            .enumerate()
            .map(|(i, v)| if i < 3 { 2.0 * v } else { 2.0 * e_cum[2] * (0.6f64).powi(i as i32 - 2) })
            .collect();
        let fit = fit_size_proxy(&s(SeriesKind::Scope3, "tCO2e/yr", 2016, &broken), &energy).unwrap();
        assert!(fit.is_weak(PROXY_R2_THRESHOLD), "{}", fit.r_squared);

        let wrong = s(SeriesKind::Users, "persons", 2016, &[1.0; 6]);
        assert!(matches!(fit_size_proxy(&wrong, &energy), Err(Error::WrongKind { .. })));
    }

    #[test]
    fn uncorrelated_proxy_has_no_fit() {
        let energy = s(SeriesKind::Energy, "MWh/yr", 2000, &[1.0; 40]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let noise = Normal::new(0.0, 1.0).unwrap();
        let proxy: Vec<f64> = (0..40).map(|_| noise.sample(&mut rng)).collect();
        let fit = fit_size_proxy(&s(SeriesKind::Scope3, "tCO2e/yr", 2000, &proxy), &energy).unwrap();
        assert!(fit.r_squared < 0.1, "{}", fit.r_squared);
    }
}
