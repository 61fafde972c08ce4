//! Property tests for the invariants each stage promises.

use std::collections::BTreeMap;

use proptest::prelude::*;

use heatrisk::features::{
    build_design_matrix, cooling_degree_hours, heating_degree_hours, HolidayCalendar, StationTemperature,
};
use heatrisk::ingest::{load_consumption_csv, load_weather_csv, write_consumption_csv, write_weather_csv, MacroSeries};
use heatrisk::risk::{cvar_upper, kde_density, load_duration, quantile, representative_duration_curves, DurationCurve};
use heatrisk::scenario::{build_scenario, HeatingInventory};
use heatrisk::series::{stable_mean, stable_sum, year_start, HourlySeries, Unit};
use heatrisk::simulate::{aggregate_nordic, residual_demand, PowerBalance};
use heatrisk::weathergen::{feasible_pairs, select_pairs, CountryWeather, WeatherArchive};

fn finite(lo: f64, hi: f64) -> impl Strategy<Value = f64> {
    lo..hi
}

fn series(values: Vec<f64>) -> HourlySeries {
    HourlySeries::new(year_start(2041), values, Unit::Mwh).unwrap()
}

fn balance(c: Vec<f64>, w: Vec<f64>, s: Vec<f64>) -> PowerBalance {
    residual_demand(series(c), series(w), series(s)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn degree_hours_are_monotone_and_non_negative(a in finite(-60.0, 60.0), b in finite(-60.0, 60.0)) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(heating_degree_hours(lo).unwrap() >= heating_degree_hours(hi).unwrap());
        prop_assert!(cooling_degree_hours(lo).unwrap() <= cooling_degree_hours(hi).unwrap());
        prop_assert!(heating_degree_hours(a).unwrap() >= 0.0);
        prop_assert!(cooling_degree_hours(a).unwrap() >= 0.0);
        // A temperature cannot be both a heating and a cooling hour.
        prop_assert!(heating_degree_hours(a).unwrap() * cooling_degree_hours(a).unwrap() == 0.0);
    }

    #[test]
    fn design_matrix_is_deterministic_with_one_hot_calendar(
        temps in prop::collection::vec(finite(-30.0, 30.0), 5 * 72),
        start_day in 0i64..360,
    ) {
        let start = year_start(2013) + chrono::Duration::days(start_day);
        let stations: Vec<StationTemperature> = temps
            .chunks(72)
            .enumerate()
            .map(|(k, c)| StationTemperature::new(format!("s{k}"), HourlySeries::new(start, c.to_vec(), Unit::Celsius).unwrap()).unwrap())
            .collect();
        let m = MacroSeries::from_anchors(vec![(2013, 300.0, 5.0), (2014, 306.0, 5.1), (2015, 312.0, 5.2)]).unwrap();
        let (gdp, pop) = m.window(start, 72).unwrap();
        let holidays = HolidayCalendar::new([]);
        let a = build_design_matrix(&stations, &gdp, &pop, &holidays, start).unwrap();
        let b = build_design_matrix(&stations, &gdp, &pop, &holidays, start).unwrap();
        prop_assert_eq!(a.data(), b.data());
        let hours: Vec<usize> = (0..a.ncols()).filter(|&j| a.schema()[j].starts_with("hour_")).collect();
        for i in 0..a.nrows() {
            let row = a.row(i);
            let active = hours.iter().filter(|&&j| row[j] == 1.0).count();
            // Hour 0 is the omitted level, so at most one dummy is set.
            prop_assert!(active <= 1);
            prop_assert_eq!(row[a.column_index("trend").unwrap()], i as f64);
        }
    }

    #[test]
    fn cvar_is_translation_equivariant_and_homogeneous(
        xs in prop::collection::vec(finite(-1e3, 1e3), 20..200),
        shift in finite(-1e3, 1e3),
        scale in finite(0.01, 100.0),
    ) {
        let base = cvar_upper(&xs, 0.05).unwrap();
        let shifted: Vec<f64> = xs.iter().map(|x| x + shift).collect();
        let scaled: Vec<f64> = xs.iter().map(|x| x * scale).collect();
        let tol = 1e-9 * (1.0 + base.abs() + shift.abs()) * (1.0 + scale);
        prop_assert!((cvar_upper(&shifted, 0.05).unwrap() - (base + shift)).abs() <= tol);
        prop_assert!((cvar_upper(&scaled, 0.05).unwrap() - base * scale).abs() <= tol);
    }

    #[test]
    fn cvar_dominates_quantile_and_mean(xs in prop::collection::vec(finite(-1e3, 1e3), 20..300)) {
        let cvar = cvar_upper(&xs, 0.05).unwrap();
        let q = quantile(&xs, 0.95).unwrap();
        let mean = stable_mean(&xs);
        let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(cvar <= max);
        prop_assert!(cvar >= q - 1e-9 * q.abs().max(1.0));
        prop_assert!(cvar >= mean - 1e-9 * mean.abs().max(1.0));
    }

    #[test]
    fn duration_curve_is_a_sorted_permutation(xs in prop::collection::vec(finite(-1e4, 1e5), 1..500)) {
        let curve = load_duration(&series(xs.clone()));
        prop_assert!(curve.values.windows(2).all(|w| w[0] >= w[1]));
        let mut a = xs.clone();
        a.sort_by(|x, y| y.total_cmp(x));
        prop_assert_eq!(&a, &curve.values);
        prop_assert_eq!(curve.total(), stable_sum(&xs));
    }

    #[test]
    fn rank_wise_mean_curve_is_monotone(
        rows in prop::collection::vec(prop::collection::vec(finite(0.0, 1e4), 24), 20..40),
    ) {
        let curves: Vec<DurationCurve> = rows.into_iter().map(|r| load_duration(&series(r))).collect();
        let (mean, tail) = representative_duration_curves(&curves).unwrap();
        prop_assert!(mean.values.windows(2).all(|w| w[0] >= w[1] - 1e-9));
        prop_assert!(mean.values.iter().zip(&tail.values).all(|(m, t)| *t >= *m - 1e-9));
    }

    #[test]
    fn aggregation_ignores_country_order(
        data in prop::collection::vec(prop::collection::vec(finite(0.0, 1e5), 3 * 48), 2..6),
        rotate in 0usize..6,
    ) {
        let parts: Vec<PowerBalance> = data
            .iter()
            .map(|d| balance(d[..48].to_vec(), d[48..96].to_vec(), d[96..].to_vec()))
            .collect();
        let forward: Vec<&PowerBalance> = parts.iter().collect();
        let mut rotated = forward.clone();
        rotated.rotate_left(rotate % parts.len());
        let a = aggregate_nordic(&forward).unwrap();
        let b = aggregate_nordic(&rotated).unwrap();
        prop_assert_eq!(&a, &b);
        let sum: f64 = parts.iter().map(|p| p.consumption.total()).sum();
        prop_assert!((a.consumption.total() - sum).abs() <= 1e-9 * sum.abs().max(1.0));
    }

    #[test]
    fn residual_identity_is_exact(
        c in prop::collection::vec(finite(0.0, 1e5), 48),
        w in prop::collection::vec(finite(0.0, 1e5), 48),
        s in prop::collection::vec(finite(0.0, 1e4), 48),
    ) {
        let b = balance(c.clone(), w.clone(), s.clone());
        for h in 0..48 {
            prop_assert_eq!(b.residual.values()[h], c[h] - w[h] - s[h]);
        }
        prop_assert_eq!(b.surplus_hours, b.residual.values().iter().filter(|v| **v < 0.0).count());
    }

    #[test]
    fn kde_is_reflection_symmetric(xs in prop::collection::vec(finite(-50.0, 50.0), 2..60)) {
        prop_assume!(heatrisk::risk::sample_std(&xs) > 1e-6);
        let d = kde_density(&xs, None).unwrap();
        let mirrored: Vec<f64> = xs.iter().map(|x| -x).collect();
        let m = kde_density(&mirrored, None).unwrap();
        let n = d.density.len();
        for i in 0..n {
            let (a, b) = (d.density[i], m.density[n - 1 - i]);
            prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1e-12) + 1e-15);
        }
        prop_assert!((d.integral() - 1.0).abs() < 0.01);
    }

    #[test]
    fn electrification_scales_linearly_with_share(
        sw in finite(0.0, 50.0),
        dh in finite(0.0, 50.0),
        el in finite(0.5, 50.0),
        pr in finite(0.0, 50.0),
        share in finite(0.0, 1.0),
    ) {
        let inv = HeatingInventory {
            country: "XX".into(),
            fossil_space_water: sw,
            fossil_district: dh,
            direct_electric_sw: el,
            fossil_process: pr,
        };
        let full = build_scenario(&inv, 1.0, 0.475).unwrap();
        let part = build_scenario(&inv, share, 0.475).unwrap();
        prop_assert!((part.sensitivity_increase() - share * full.sensitivity_increase()).abs() <= 1e-12 * (1.0 + full.sensitivity_increase()));
        prop_assert!((part.baseload_twh - share * pr).abs() <= 1e-12 * (1.0 + pr));
        prop_assert!(part.hdh_multiplier >= 1.0);
    }

    #[test]
    fn consumption_csv_round_trips(values in prop::collection::vec(finite(0.0, 1e6), 1..200), offset in 0i64..1000) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.csv");
        let s = HourlySeries::new(year_start(2012) + chrono::Duration::hours(offset), values, Unit::Mwh).unwrap();
        write_consumption_csv(&path, &s).unwrap();
        prop_assert_eq!(load_consumption_csv(&path).unwrap(), s);
    }

    #[test]
    fn weather_csv_round_trips(temps in prop::collection::vec(finite(-40.0, 40.0), 5 * 30)) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("w.csv");
        let stations: Vec<StationTemperature> = temps
            .chunks(30)
            .enumerate()
            .map(|(k, c)| StationTemperature::new(format!("st{k}"), HourlySeries::new(year_start(2015), c.to_vec(), Unit::Celsius).unwrap()).unwrap())
            .collect();
        write_weather_csv(&path, &stations).unwrap();
        prop_assert_eq!(load_weather_csv(&path).unwrap(), stations);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn scenario_selection_prefers_small_shifts(count in 1usize..27) {
        let start = year_start(2010);
        let n = 3 * 8760;
        let mut countries = BTreeMap::new();
        countries.insert("NO".to_string(), CountryWeather {
            stations: vec![("s".to_string(), (0..n).map(|i| i as f64).collect())],
            wind_cf: vec![0.5; n],
            solar_cf: vec![0.1; n],
        });
        let archive = WeatherArchive::new(start, countries).unwrap();
        let pairs = feasible_pairs(&archive, 2041, &[-4, -3, -2, -1, 0, 1, 2, 3, 4]).unwrap();
        prop_assume!(count <= pairs.len());
        let chosen = select_pairs(&pairs, count).unwrap();
        prop_assert_eq!(chosen.len(), count);
        let worst = chosen.iter().map(|p| p.1.abs()).max().unwrap();
        // Nothing left out may have a strictly smaller shift than something chosen.
        prop_assert!(pairs.iter().filter(|p| !chosen.contains(p)).all(|p| p.1.abs() >= worst));
        prop_assert!(chosen.windows(2).all(|w| w[0] < w[1]));
    }
}
