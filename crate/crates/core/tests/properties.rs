use proptest::prelude::*;

use cloudtherm_core::calibrate::fit_xy;
use cloudtherm_core::microsim::{micro_run, MicroParams, MicroState};
use cloudtherm_core::model::{energy_flux, growth_rate, interface_growth, interface_length, work_rate};
use cloudtherm_core::scenarios::{backcast_energy, client_energy, total_system_energy, ClientEnergyParams};
use cloudtherm_core::series::decumulate;
use cloudtherm_core::{
    align, cumulative, fit_alpha, fit_eta, fit_proportional, log_growth_rate, simulate, AnnualSeries, FitMode,
    ModelParams, SeriesKind, SimConfig, SystemState,
};

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

fn rate(kind: SeriesKind, start: i32, values: &[f64]) -> AnnualSeries {
    let unit = match kind {
        SeriesKind::Revenue => "USD/yr",
        SeriesKind::Users => "persons",
        _ => "MWh/yr",
    };
    AnnualSeries::from_values("p", kind, unit, start, values).unwrap()
}

fn values(n: std::ops::Range<usize>) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0..1e6f64, n)
}

proptest! {
    #[test]
    fn cumulative_is_monotone(v in values(1..40), initial in 0.0..1e6f64) {
        let c = cumulative(&rate(SeriesKind::Energy, 2000, &v), initial).unwrap();
        prop_assert!(c.values()[0] >= initial);
        prop_assert!(c.values().windows(2).all(|w| w[1] >= w[0]));
        prop_assert_eq!(c.unit(), "MWh");
    }

    #[test]
    fn cumulative_then_difference_recovers(v in values(1..40), initial in 0.0..1e6f64) {
        let s = rate(SeriesKind::Energy, 1990, &v);
        let back = decumulate(&cumulative(&s, initial).unwrap(), initial).unwrap();
        let total: f64 = initial + v.iter().sum::<f64>();
        for (a, b) in back.values().iter().zip(&v) {
            prop_assert!((a - b).abs() <= 1e-12 * total.max(1.0), "{} vs {}", a, b);
        }
        prop_assert_eq!(back.unit(), "MWh/yr");
    }

    #[test]
    fn log_growth_of_exponential_is_constant(eta in -0.5..0.5f64, a0 in 1e-3..1e9f64, n in 2usize..30) {
        let v: Vec<f64> = (0..n).map(|k| a0 * (eta * k as f64).exp()).collect();
        let g = log_growth_rate(&rate(SeriesKind::Energy, 2000, &v)).unwrap();
        for x in g.values() {
            prop_assert!((x - eta).abs() < 1e-12, "{} vs {}", x, eta);
        }
    }

    #[test]
    fn align_years_commute(a0 in 1980i32..2000, na in 2usize..20, b0 in 1980i32..2000, nb in 2usize..20) {
        let x = rate(SeriesKind::Energy, a0, &vec![1.0; na]);
        let y = rate(SeriesKind::Revenue, b0, &vec![2.0; nb]);
        match (align(&x, &y), align(&y, &x)) {
            (Ok(p), Ok(q)) => {
                prop_assert_eq!(p.years(), q.years());
                prop_assert_eq!(p.x().years(), p.y().years());
            }
            (Err(_), Err(_)) => {}
            _ => prop_assert!(false, "alignment not symmetric"),
        }
    }

    #[test]
    fn identity_chain(alpha in 1e-6..10.0f64, eps in 0.0..1e4f64, l in 1e-3..1e9f64, dphi in 1e-3..10.0f64) {
        let a = energy_flux(alpha, l, dphi);
        let w = work_rate(eps, a);
        let dl = interface_growth(w, dphi).unwrap();
        let eta = growth_rate(alpha, eps);
        prop_assert!(rel(dl / l, eta) <= 1e-12 || (eta == 0.0 && dl == 0.0));
        prop_assert!(rel(dl, w / dphi) <= 1e-12 || w == 0.0);
    }

    #[test]
    fn flux_is_linear_in_each_argument(alpha in 1e-6..10.0f64, l in 1e-3..1e6f64, dphi in 1e-3..10.0f64, k in 1e-3..1e3f64) {
        let a = energy_flux(alpha, l, dphi);
        prop_assert!(rel(energy_flux(k * alpha, l, dphi), k * a) <= 1e-12);
        prop_assert!(rel(energy_flux(alpha, k * l, dphi), k * a) <= 1e-12);
        prop_assert!(rel(energy_flux(alpha, l, k * dphi), k * a) <= 1e-12);
        prop_assert_eq!(energy_flux(alpha, 0.0, dphi), 0.0);
    }

    #[test]
    fn interface_is_monotone_and_homogeneous(ns in 1.0..1e12f64, nr in 1e-3..1e6f64, k in 1e-2..1e2f64, d in 0.0..1e6f64) {
        let l = interface_length(ns, nr);
        prop_assert!(interface_length(ns + d, nr) >= l);
        prop_assert!(interface_length(ns, nr + d) >= l);
        prop_assert!(rel(interface_length(k * k * k * ns, nr), k * l) <= 1e-12);
    }

    #[test]
    fn proportional_data_fits_exactly(slope in 1e-6..1e3f64, xs in prop::collection::vec(1.0..1e6f64, 2..20)) {
        let years: Vec<i32> = (0..xs.len() as i32).map(|k| 2000 + k).collect();
        let ys: Vec<f64> = xs.iter().map(|x| slope * x).collect();
        let fit = fit_xy(&years, &xs, &ys, FitMode::ThroughOrigin).unwrap();
        prop_assert!(rel(fit.slope, slope) <= 1e-12);
        prop_assert!(fit.r_squared > 1.0 - 1e-12);
        prop_assert_eq!(fit.intercept, 0.0);
    }

    #[test]
    fn fit_invariants(xs in prop::collection::vec(1.0..1e6f64, 2..20), noise in prop::collection::vec(-1.0..1.0f64, 20), mode in prop_oneof![Just(FitMode::ThroughOrigin), Just(FitMode::Affine)]) {
        let years: Vec<i32> = (0..xs.len() as i32).map(|k| 2000 + k).collect();
        let ys: Vec<f64> = xs.iter().zip(&noise).map(|(x, e)| 3.0 * x + 1e5 * e).collect();
        let Ok(fit) = fit_xy(&years, &xs, &ys, mode) else { return Ok(()) };
        prop_assert!((0.0..=1.0).contains(&fit.r_squared));
        prop_assert_eq!(fit.residuals.len(), fit.n);
        for ((y, r), x) in fit.residuals.iter().zip(&ys).map(|((_, r), y)| (y, r)).zip(&xs) {
            prop_assert!((y - fit.predict(*x) - r).abs() <= 1e-9 * y.abs().max(1.0));
        }
        if mode == FitMode::ThroughOrigin {
            let sxr: f64 = xs.iter().zip(&fit.residuals).map(|(x, (_, r))| x * r).sum();
            let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x * y).abs()).sum();
            prop_assert!(sxr.abs() <= 1e-9 * sxy, "{} vs {}", sxr, sxy);
            prop_assert_eq!(fit.intercept, 0.0);
        }
    }

    #[test]
    fn fit_eta_ignores_scale(eta in -0.3..0.5f64, c in 1e-6..1e6f64, noise in prop::collection::vec(-0.05..0.05f64, 8)) {
        let v: Vec<f64> = noise.iter().enumerate().map(|(k, e)| (eta * k as f64 + e).exp()).collect();
        let scaled: Vec<f64> = v.iter().map(|x| c * x).collect();
        let a = fit_eta(&rate(SeriesKind::Energy, 2010, &v)).unwrap();
        let b = fit_eta(&rate(SeriesKind::Energy, 2010, &scaled)).unwrap();
        prop_assert!((a.slope - b.slope).abs() <= 1e-9 * a.slope.abs().max(1.0));
    }

    #[test]
    fn alpha_round_trips_through_simulation(alpha in 1e-6..1e-2f64, eta in 0.01..0.5f64, a0 in 1.0..1e7f64) {
        let p = ModelParams::from_alpha_eta(alpha, eta).unwrap();
        let c0 = a0 / alpha;
        let s = SystemState::from_flux(&p, a0).unwrap().with_cum_work(c0).unwrap();
        let traj = simulate(&p, &s, &SimConfig::new(10.0)).unwrap();
        let mut energy = Vec::new();
        let mut revenue = Vec::new();
        for w in traj.samples.windows(2) {
            energy.push(w[1].flux);
            revenue.push(w[1].cum_work - w[0].cum_work);
        }
        let fit = fit_alpha(&rate(SeriesKind::Energy, 2016, &energy), &rate(SeriesKind::Revenue, 2016, &revenue), c0).unwrap();
        prop_assert!(rel(fit.alpha, alpha) < 1e-9, "{} vs {}", fit.alpha, alpha);
    }

    #[test]
    fn trajectories_respect_reservoir(alpha in 0.1..2.0f64, eps in 0.01..0.3f64, r in 1.0..1e3f64, a0 in 0.1..5.0f64) {
        let p = ModelParams::new(alpha, eps).unwrap().with_reservoir(r).unwrap();
        let s = SystemState::from_flux(&p, a0).unwrap();
        let traj = simulate(&p, &s, &SimConfig::new(20.0)).unwrap();
        prop_assert!(traj.check_invariants().is_ok(), "{:?}", traj.check_invariants());
        let e = traj.cum_energy();
        prop_assert!(e.iter().all(|&x| x <= r));
        prop_assert!(e.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn backcast_gap_is_fit_residual(noise in prop::collection::vec(-0.1..0.1f64, 10), history in 0.0..1e3f64) {
        let revenue: Vec<f64> = (0..10).map(|k| 100.0 * 1.2f64.powi(k)).collect();
        let rev = rate(SeriesKind::Revenue, 2016, &revenue);
        let c = cumulative(&rev, history).unwrap();
        let energy: Vec<f64> = c.values().iter().zip(&noise).map(|(c, e)| 0.01 * c * (1.0 + e)).collect();
        let en = rate(SeriesKind::Energy, 2016, &energy);
        let fit = fit_alpha(&en, &rev, history).unwrap();
        let b = backcast_energy(&rev, &fit.fit, 2016..=2025, history).unwrap();
        for ((&(_, est), obs), (_, r)) in b.energy.points().iter().zip(&energy).zip(&fit.fit.residuals) {
            prop_assert!((obs - est - r).abs() <= 1e-12 * obs.abs().max(1.0));
        }
    }

    #[test]
    fn client_energy_is_linear(users in prop::collection::vec(0.0..1e9f64, 1..10), wh in 0.1..50.0f64, k in 0.0..100.0f64) {
        let params = ClientEnergyParams { device_wh_per_user_day: wh, ..ClientEnergyParams::default() };
        let base = client_energy(&rate(SeriesKind::Users, 2016, &users), None, &params).unwrap();
        let scaled_users: Vec<f64> = users.iter().map(|u| k * u).collect();
        let more = client_energy(&rate(SeriesKind::Users, 2016, &scaled_users), None, &params).unwrap();
        let hotter = ClientEnergyParams { device_wh_per_user_day: k * wh, ..params };
        let hot = client_energy(&rate(SeriesKind::Users, 2016, &users), None, &hotter).unwrap();
        for ((b, m), h) in base.device.values().iter().zip(more.device.values()).zip(hot.device.values()) {
            prop_assert!((m - k * b).abs() <= 1e-12 * (k * b).max(1.0));
            prop_assert!((h - k * b).abs() <= 1e-12 * (k * b).max(1.0));
        }
    }

    #[test]
    fn breakdown_totals_reconcile(dc in prop::collection::vec(0.0..1e8f64, 5), users in prop::collection::vec(0.0..3e9f64, 5), net in prop::collection::vec(0.0..1e9f64, 5)) {
        let b = total_system_energy(
            &rate(SeriesKind::Energy, 2016, &dc),
            &rate(SeriesKind::Users, 2016, &users),
            Some(&rate(SeriesKind::InternetEnergy, 2016, &net)),
            &ClientEnergyParams::default(),
        ).unwrap();
        prop_assert_eq!(b.records.len(), 5);
        for r in &b.records {
            prop_assert_eq!(r.total, r.datacenter + r.device + r.network);
        }
    }

    #[test]
    fn micro_inertia_is_exact(alpha in 0.1..2.0f64, eps in 0.01..0.5f64, ns in 1e2..1e6f64) {
        let p = MicroParams::new(alpha, eps);
        let start = MicroState::new(ns, 1.0, &p).unwrap();
        let states = micro_run(&start, &p, 5.0).unwrap();
        let l0 = start.interface(p.exponent);
        for s in &states {
            let lhs = s.a_current - start.a_current;
            let rhs = alpha * p.delta_phi0 * (s.interface(p.exponent) - l0);
            prop_assert!((lhs - rhs).abs() <= 1e-9 * s.a_current, "{} vs {}", lhs, rhs);
            let via_c = alpha * s.c_cum;
            prop_assert!((lhs - via_c).abs() <= 1e-9 * s.a_current, "{} vs {}", lhs, via_c);
        }
    }

    #[test]
    fn micro_conserves_matter(ns in 1e2..1e5f64, nr in 1e3..1e7f64, alpha in 0.1..2.0f64, eps in 0.05..0.5f64) {
        let mut p = MicroParams::new(alpha, eps);
        p.conserve_matter = true;
        let start = MicroState::new(ns, nr, &p).unwrap();
        let states = micro_run(&start, &p, 30.0).unwrap();
        let total = start.total_matter();
        for s in &states {
            prop_assert!(rel(s.total_matter(), total) <= 1e-12);
            prop_assert!(s.n_reservoir >= 0.0);
        }
    }
}

#[test]
fn micro_runs_are_bit_identical() {
    let p = MicroParams::new(0.5, 0.4);
    let start = MicroState::new(1e4, 1.0, &p).unwrap();
    assert_eq!(micro_run(&start, &p, 20.0).unwrap(), micro_run(&start, &p, 20.0).unwrap());
    let mut seeded = p;
    seeded.poisson_seed = Some(7);
    assert_eq!(micro_run(&start, &seeded, 20.0).unwrap(), micro_run(&start, &seeded, 20.0).unwrap());
}

#[test]
fn conservation_holds_over_a_million_steps() {
    let mut p = MicroParams::new(1.0, 0.2);
    p.conserve_matter = true;
    p.dt = 1e-4;
    p.output_interval = 10.0;
    let start = MicroState::new(1e3, 1e8, &p).unwrap();
    let states = micro_run(&start, &p, 100.0).unwrap();
    let total = start.total_matter();
    let end = states.last().unwrap();
    assert!(rel(end.total_matter(), total) <= 1e-9, "{} vs {}", end.total_matter(), total);
}

#[test]
fn fit_proportional_matches_fit_xy() {
    let x = rate(SeriesKind::Revenue, 2016, &[1.0, 2.0, 4.0]);
    let y = rate(SeriesKind::Energy, 2016, &[2.1, 3.9, 8.2]);
    let pair = align(&x, &y).unwrap();
    let a = fit_proportional(&pair, FitMode::ThroughOrigin).unwrap();
    let b = fit_xy(&[2016, 2017, 2018], &[1.0, 2.0, 4.0], &[2.1, 3.9, 8.2], FitMode::ThroughOrigin).unwrap();
    assert_eq!(a, b);
}
