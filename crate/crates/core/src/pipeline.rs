//! End-to-end run: load inputs, calibrate one model per country, build the
//! electrification scenarios and shifted-date weather years, simulate every
//! (weather year, share) pair and write risk summaries with a checksummed
//! manifest.
//!
//! Outputs are first written to a hidden staging directory next to the
//! output directory and moved into place only when every stage succeeded.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use chrono::NaiveDateTime;
use rayon::prelude::*;

use crate::calibrate::{
    accuracy, effect_sizes_by_group, fit_ols, predict, CalibratedModel, Dataset, ErrorMetrics,
};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::features::{build_design_matrix, ColumnGroup, HolidayCalendar, StationTemperature};
use crate::ingest::{
    common_span, format_timestamp, load_capacity_factors_csv, load_consumption_csv, load_holidays,
    load_macro, load_weather_csv, CapacityFactors, MacroSeries,
};
use crate::output::{
    file_entry, line_plot_svg, CsvText, FileEntry, ModelDocument, OutputSink, PlotLine,
    RunManifest, Span, FORMAT_VERSION, MANIFEST_FILE, MANIFEST_FORMAT,
};
use crate::risk::{
    kde_density, peak_gwh, representative_duration_curves, scenario_statistics, total_twh,
    DurationCurve, Metric, RiskSummary, CVAR_ALPHA,
};
use crate::scenario::{
    apply_electrification, build_scenario, scenario_table, share_label, ModifiedModel,
    ScenarioTableRow,
};
use crate::series::{hours_in_year, year_start, HourlySeries};
use crate::simulate::{simulate_scenario, PowerBalance, ProjectionDrivers, VreCapacity};
use crate::weathergen::{feasible_pairs, materialize, select_pairs, CountryWeather, WeatherArchive};

/// Region name of the copperplate aggregate.
pub const NORDIC: &str = "NORDIC";

/// Raw inputs of one country.
#[derive(Debug, Clone)]
pub struct CountryData {
    pub id: String,
    pub consumption: HourlySeries,
    pub stations: Vec<StationTemperature>,
    pub macro_series: MacroSeries,
    pub holidays: HolidayCalendar,
}

#[derive(Debug, Clone)]
pub struct Inputs {
    pub countries: Vec<CountryData>,
    pub capacity_factors: BTreeMap<String, CapacityFactors>,
}

pub fn load_inputs(cfg: &RunConfig) -> Result<Inputs> {
    let capacity_factors = load_capacity_factors_csv(&cfg.input_path(&cfg.capacity_factors))?;
    let mut countries = Vec::with_capacity(cfg.countries.len());
    for c in &cfg.countries {
        if !capacity_factors.contains_key(&c.id) {
            return Err(Error::Data(format!(
                "capacity-factor file has no rows for {}",
                c.id
            )));
        }
        log::info!("loading inputs for {}", c.id);
        countries.push(CountryData {
            id: c.id.clone(),
            consumption: load_consumption_csv(&cfg.input_path(&c.consumption))?,
            stations: load_weather_csv(&cfg.input_path(&c.weather))?,
            macro_series: load_macro(&cfg.input_path(&c.macro_path))?,
            holidays: load_holidays(&cfg.input_path(&c.holidays))?,
        });
    }
    Ok(Inputs {
        countries,
        capacity_factors,
    })
}

fn span_of(start: NaiveDateTime, hours: usize) -> Span {
    Span {
        start: format_timestamp(start),
        end: format_timestamp(start + chrono::Duration::hours(hours as i64)),
        hours,
    }
}

/// Design matrix and consumption over the span covered by consumption,
/// every station and the macro series. The trend is counted from the first
/// hour of that span.
pub fn calibration_dataset(data: &CountryData) -> Result<Dataset> {
    let mut all: Vec<&HourlySeries> = vec![&data.consumption, &data.macro_series.gdp];
    all.extend(data.stations.iter().map(|s| &s.series));
    let (start, len) = common_span(all).ok_or_else(|| {
        Error::Data(format!(
            "{}: consumption, weather and macro data do not overlap",
            data.id
        ))
    })?;
    let cut = |s: &HourlySeries| s.window(start, len).expect("inside the common span");
    let stations = data
        .stations
        .iter()
        .map(|s| StationTemperature::new(s.station_id.clone(), cut(&s.series)))
        .collect::<Result<Vec<_>>>()?;
    let (gdp, pop) = data.macro_series.window(start, len)?;
    let x = build_design_matrix(&stations, &gdp, &pop, &data.holidays, start)?;
    Dataset::new(x, cut(&data.consumption))
}

/// A fitted model with its in-sample and validation accuracy.
#[derive(Debug, Clone)]
pub struct Calibration {
    pub country: String,
    /// Fitted on the training rows only.
    pub model: CalibratedModel,
    pub train: ErrorMetrics,
    pub valid: Option<ErrorMetrics>,
    pub n_train: usize,
    pub n_valid: usize,
    pub dataset: Dataset,
}

impl Calibration {
    pub fn span(&self) -> Span {
        span_of(self.dataset.x.start(), self.dataset.len())
    }
}

pub fn calibrate_country(data: &CountryData, train_fraction: f64) -> Result<Calibration> {
    let dataset = calibration_dataset(data)?;
    let (train, valid) = dataset.split(train_fraction)?;
    let model = fit_ols(&train.x, &train.ln_consumption(), &data.id)?;
    let train_acc = accuracy(&predict(&model, &train.x)?, &train.consumption)?;
    let valid_acc = if valid.is_empty() {
        None
    } else {
        Some(accuracy(&predict(&model, &valid.x)?, &valid.consumption)?)
    };
    log::info!(
        "{}: R² {:.4} on {} training hours, validation MAPE {}",
        data.id,
        model.r_squared,
        train.len(),
        valid_acc.map_or("n/a".to_string(), |a| format!("{:.2}%", a.mape))
    );
    Ok(Calibration {
        country: data.id.clone(),
        model,
        train: train_acc,
        valid: valid_acc,
        n_train: train.len(),
        n_valid: valid.len(),
        dataset,
    })
}

/// Cohen's f² of every regressor group, from a fit on the full sample.
pub fn effects_for(cal: &Calibration) -> Result<Vec<(ColumnGroup, f64)>> {
    let y = cal.dataset.ln_consumption();
    let full = fit_ols(&cal.dataset.x, &y, &cal.country)?;
    effect_sizes_by_group(&full, &cal.dataset.x, &y)
}

/// Loads inputs and calibrates every configured country.
pub fn calibrate_all(cfg: &RunConfig) -> Result<Vec<Calibration>> {
    cfg.validate().map_err(|e| e.in_stage("config"))?;
    let inputs = load_inputs(cfg).map_err(|e| e.in_stage("load"))?;
    inputs
        .countries
        .iter()
        .map(|d| calibrate_country(d, cfg.train_fraction))
        .collect::<Result<Vec<_>>>()
        .map_err(|e| e.in_stage("calibrate"))
}

pub fn accuracy_csv(cals: &[Calibration]) -> CsvText {
    let mut csv = CsvText::new(&[
        "country", "sample", "n_obs", "rmse_mwh", "mae_mwh", "mape_pct", "smape_pct",
    ]);
    for c in cals {
        let mut row = |sample: &str, n: usize, m: &ErrorMetrics| {
            csv.row(&[&c.country, &sample, &n, &m.rmse, &m.mae, &m.mape, &m.smape]);
        };
        row("train", c.n_train, &c.train);
        if let Some(v) = &c.valid {
            row("valid", c.n_valid, v);
        }
    }
    csv
}

pub fn effects_csv(effects: &[(String, Vec<(ColumnGroup, f64)>)]) -> CsvText {
    let mut csv = CsvText::new(&["country", "group", "f2"]);
    for (country, groups) in effects {
        for (g, f2) in groups {
            csv.row(&[country, &g.name(), f2]);
        }
    }
    csv
}

pub fn scenario_table_csv(rows: &[ScenarioTableRow]) -> CsvText {
    let mut csv = CsvText::new(&[
        "country",
        "share",
        "label",
        "temperature_sensitive_fossil_twh",
        "replacement_electric_twh",
        "direct_electric_sw_twh",
        "implied_increase_pct",
        "fossil_process_twh",
        "hdh_increase_pct",
        "constant_twh",
    ]);
    for r in rows {
        for (share, inc, constant) in &r.scenarios {
            csv.row(&[
                &r.country,
                share,
                &share_label(*share),
                &r.temperature_sensitive_fossil_twh,
                &r.replacement_electric_twh,
                &r.direct_electric_sw_twh,
                &r.implied_increase_pct,
                &r.fossil_process_twh,
                inc,
                constant,
            ]);
        }
    }
    csv
}

/// Archive over the hours covered by every station and capacity-factor
/// series of the configured countries.
pub fn build_archive(inputs: &Inputs) -> Result<WeatherArchive> {
    let mut all: Vec<&HourlySeries> = Vec::new();
    for d in &inputs.countries {
        all.extend(d.stations.iter().map(|s| &s.series));
        let cf = &inputs.capacity_factors[&d.id];
        all.push(&cf.wind);
        all.push(&cf.solar);
    }
    let (start, len) = common_span(all)
        .ok_or_else(|| Error::Data("weather and capacity-factor archives do not overlap".into()))?;
    let cut = |s: &HourlySeries| {
        s.window(start, len)
            .expect("inside the common span")
            .into_values()
    };
    let mut countries = BTreeMap::new();
    for d in &inputs.countries {
        let cf = &inputs.capacity_factors[&d.id];
        countries.insert(
            d.id.clone(),
            CountryWeather {
                stations: d
                    .stations
                    .iter()
                    .map(|s| (s.station_id.clone(), cut(&s.series)))
                    .collect(),
                wind_cf: cut(&cf.wind),
                solar_cf: cut(&cf.solar),
            },
        );
    }
    WeatherArchive::new(start, countries)
}

/// Per-region scenario metrics in [`Metric::ALL`] order.
type RegionMetrics = Vec<(String, [f64; 3])>;

#[derive(Debug, Clone)]
struct ShareOutcome {
    metrics: RegionMetrics,
    consumption_curve: DurationCurve,
    residual_curve: DurationCurve,
    hourly: Option<Vec<u8>>,
}

#[derive(Debug, Clone)]
struct PairOutcome {
    scenario_id: String,
    source_year: i32,
    shift_days: i64,
    first_source: NaiveDateTime,
    shares: Vec<ShareOutcome>,
}

/// Everything a worker needs; shared read-only across threads.
struct SimulationContext<'a> {
    archive: &'a WeatherArchive,
    target_year: i32,
    share_models: &'a [(f64, BTreeMap<String, ModifiedModel>)],
    drivers: &'a BTreeMap<String, ProjectionDrivers>,
    capacities: &'a BTreeMap<String, VreCapacity>,
    write_hourly: bool,
}

fn region_metrics(name: &str, b: &PowerBalance) -> (String, [f64; 3]) {
    (
        name.to_string(),
        [
            total_twh(&b.consumption),
            peak_gwh(&b.consumption),
            peak_gwh(&b.residual),
        ],
    )
}

fn hourly_csv(result: &crate::simulate::SimulationResult) -> Vec<u8> {
    let mut csv = CsvText::new(&[
        "timestamp",
        "region",
        "consumption_mwh",
        "wind_mwh",
        "solar_mwh",
        "residual_mwh",
    ]);
    let regions: Vec<(&str, &PowerBalance)> = result
        .countries
        .iter()
        .map(|(c, b)| (c.as_str(), b))
        .chain(std::iter::once((NORDIC, &result.nordic)))
        .collect();
    for h in 0..result.nordic.consumption.len() {
        let ts = format_timestamp(result.nordic.consumption.timestamp(h));
        for (name, b) in &regions {
            csv.row(&[
                &ts,
                name,
                &b.consumption.values()[h],
                &b.wind.values()[h],
                &b.solar.values()[h],
                &b.residual.values()[h],
            ]);
        }
    }
    csv.into_bytes()
}

fn run_pair(ctx: &SimulationContext<'_>, (year, shift): (i32, i64)) -> Result<PairOutcome> {
    let weather = materialize(ctx.archive, ctx.target_year, year, shift)?;
    let mut shares = Vec::with_capacity(ctx.share_models.len());
    for (share, models) in ctx.share_models {
        let r = simulate_scenario(&weather, *share, models, ctx.drivers, ctx.capacities)?;
        let mut metrics: RegionMetrics = r
            .countries
            .iter()
            .map(|(c, b)| region_metrics(c, b))
            .collect();
        metrics.push(region_metrics(NORDIC, &r.nordic));
        shares.push(ShareOutcome {
            metrics,
            consumption_curve: crate::risk::load_duration(&r.nordic.consumption),
            residual_curve: crate::risk::load_duration(&r.nordic.residual),
            hourly: ctx.write_hourly.then(|| hourly_csv(&r)),
        });
    }
    Ok(PairOutcome {
        scenario_id: weather.scenario_id,
        source_year: year,
        shift_days: shift,
        first_source: ctx.archive.timestamp(weather.source_hours[0]),
        shares,
    })
}

/// Output directory contents are only replaced if they came from an
/// earlier run (a manifest is present) or the directory is empty.
fn check_output_dir(out: &Path) -> Result<()> {
    if !out.exists() {
        return Ok(());
    }
    if !out.is_dir() {
        return Err(Error::Config(format!("output path {} is not a directory", out.display())));
    }
    let empty = std::fs::read_dir(out)
        .map_err(|e| Error::io(format!("reading {}", out.display()), e))?
        .next()
        .is_none();
    if empty || out.join(MANIFEST_FILE).is_file() {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "output directory {} is not empty and holds no previous run; refusing to overwrite",
            out.display()
        )))
    }
}

fn staging_dir(out: &Path) -> PathBuf {
    let name = out
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".into());
    out.with_file_name(format!(".{name}.partial"))
}

/// Runs every stage and writes all outputs to `cfg.output_path()`.
pub fn run_pipeline(cfg: &RunConfig) -> Result<RunManifest> {
    cfg.validate().map_err(|e| e.in_stage("config"))?;
    let out = cfg.output_path();
    check_output_dir(&out).map_err(|e| e.in_stage("config"))?;
    let staging = staging_dir(&out);
    if staging.exists() {
        std::fs::remove_dir_all(&staging)
            .map_err(|e| Error::io(format!("removing {}", staging.display()), e).in_stage("report"))?;
    }
    match run_into(cfg, &staging) {
        Ok(manifest) => {
            let commit = || -> Result<()> {
                if out.exists() {
                    std::fs::remove_dir_all(&out)
                        .map_err(|e| Error::io(format!("removing {}", out.display()), e))?;
                }
                std::fs::rename(&staging, &out).map_err(|e| {
                    Error::io(format!("moving {} to {}", staging.display(), out.display()), e)
                })
            };
            commit().map_err(|e| e.in_stage("report"))?;
            log::info!("wrote {} outputs to {}", manifest.outputs.len(), out.display());
            Ok(manifest)
        }
        Err(e) => {
            if let Err(rm) = std::fs::remove_dir_all(&staging) {
                log::warn!("could not remove partial outputs {}: {rm}", staging.display());
            }
            Err(e)
        }
    }
}

fn run_into(cfg: &RunConfig, dir: &Path) -> Result<RunManifest> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {} workers: {e}", cfg.jobs)).in_stage("config"))?;
    let mut sink = OutputSink::new(dir).map_err(|e| e.in_stage("report"))?;
    let mut spans = BTreeMap::new();

    // load
    let inputs = load_inputs(cfg).map_err(|e| e.in_stage("load"))?;
    let data_root = cfg.data_root();
    let mut input_entries = Vec::new();
    let mut rel_inputs = vec![cfg.capacity_factors.clone()];
    for c in &cfg.countries {
        rel_inputs.extend([c.consumption.clone(), c.weather.clone(), c.macro_path.clone(), c.holidays.clone()]);
    }
    for rel in rel_inputs {
        let name = rel.to_string_lossy().replace('\\', "/");
        if input_entries.iter().any(|e: &FileEntry| e.path == name) {
            continue;
        }
        input_entries.push(file_entry(&data_root.join(&rel), &name).map_err(|e| e.in_stage("load"))?);
    }

    // calibrate
    let calibrations: Vec<Calibration> = pool
        .install(|| {
            inputs
                .countries
                .par_iter()
                .map(|d| calibrate_country(d, cfg.train_fraction))
                .collect::<Result<Vec<_>>>()
        })
        .map_err(|e| e.in_stage("calibrate"))?;
    let effects: Vec<(String, Vec<(ColumnGroup, f64)>)> = pool
        .install(|| {
            calibrations
                .par_iter()
                .map(|c| Ok((c.country.clone(), effects_for(c)?)))
                .collect::<Result<Vec<_>>>()
        })
        .map_err(|e| e.in_stage("calibrate"))?;
    let mut model_hashes = BTreeMap::new();
    let report = |e: Error| e.in_stage("report");
    for c in &calibrations {
        let bytes = ModelDocument::new(c.model.clone()).to_json();
        model_hashes.insert(c.country.clone(), crate::output::sha256_hex(&bytes));
        sink.write(&format!("models/{}.json", c.country), &bytes).map_err(report)?;
        spans.insert(format!("calibration/{}", c.country), c.span());
    }
    sink.write("accuracy.csv", accuracy_csv(&calibrations).as_str().as_bytes())
        .map_err(report)?;
    sink.write("effects.csv", effects_csv(&effects).as_str().as_bytes())
        .map_err(report)?;

    // scenarios
    let inventories: Vec<_> = cfg.countries.iter().map(|c| c.heating_inventory()).collect();
    let table = scenario_table(&inventories, &cfg.shares, cfg.replacement_factor)
        .map_err(|e| e.in_stage("scenarios"))?;
    sink.write("scenario_table.csv", scenario_table_csv(&table).as_str().as_bytes())
        .map_err(report)?;
    let share_models = cfg
        .shares
        .iter()
        .map(|&share| {
            let models = cfg
                .countries
                .iter()
                .zip(&calibrations)
                .map(|(c, cal)| {
                    let spec = build_scenario(&c.heating_inventory(), share, cfg.replacement_factor)?;
                    Ok((c.id.clone(), apply_electrification(&cal.model, &spec)?))
                })
                .collect::<Result<BTreeMap<_, _>>>()?;
            Ok((share, models))
        })
        .collect::<Result<Vec<_>>>()
        .map_err(|e| e.in_stage("scenarios"))?;

    // weather
    let archive = build_archive(&inputs).map_err(|e| e.in_stage("weather"))?;
    spans.insert("weather_archive".into(), span_of(archive.start(), archive.len()));
    let pairs = feasible_pairs(&archive, cfg.target_year, &cfg.shifts)
        .and_then(|feasible| match cfg.scenario_count {
            Some(n) => select_pairs(&feasible, n),
            None => Ok(feasible),
        })
        .map_err(|e| e.in_stage("weather"))?;
    log::info!("{} weather scenarios, {} shares", pairs.len(), cfg.shares.len());
    let target_start = year_start(cfg.target_year);
    let target_len = hours_in_year(cfg.target_year);
    let drivers = inputs
        .countries
        .iter()
        .map(|d| {
            let (gdp, pop) = d.macro_series.window(target_start, target_len)?;
            Ok((
                d.id.clone(),
                ProjectionDrivers {
                    gdp,
                    pop,
                    holidays: d.holidays.clone(),
                },
            ))
        })
        .collect::<Result<BTreeMap<_, _>>>()
        .map_err(|e| e.in_stage("weather"))?;
    let capacities: BTreeMap<String, VreCapacity> =
        cfg.countries.iter().map(|c| (c.id.clone(), c.capacity())).collect();

    // simulate: workers compute in chunks, this thread writes
    let ctx = SimulationContext {
        archive: &archive,
        target_year: cfg.target_year,
        share_models: &share_models,
        drivers: &drivers,
        capacities: &capacities,
        write_hourly: cfg.write_hourly,
    };
    let mut outcomes: Vec<PairOutcome> = Vec::with_capacity(pairs.len());
    for chunk in pairs.chunks(cfg.jobs * 4) {
        let done = pool
            .install(|| chunk.par_iter().map(|&p| run_pair(&ctx, p)).collect::<Result<Vec<_>>>())
            .map_err(|e| e.in_stage("simulate"))?;
        for mut o in done {
            for (k, s) in o.shares.iter_mut().enumerate() {
                if let Some(bytes) = s.hourly.take() {
                    let label = share_label(cfg.shares[k]);
                    sink.write(&format!("hourly/{}_{label}.csv", o.scenario_id), &bytes)
                        .map_err(report)?;
                }
            }
            outcomes.push(o);
        }
    }

    let mut scen_csv = CsvText::new(&["scenario_id", "source_year", "shift_days", "first_source_timestamp"]);
    let mut metrics_csv = CsvText::new(&["scenario_id", "share", "region", "metric", "value"]);
    for o in &outcomes {
        scen_csv.row(&[&o.scenario_id, &o.source_year, &o.shift_days, &format_timestamp(o.first_source)]);
        for (k, s) in o.shares.iter().enumerate() {
            for (region, values) in &s.metrics {
                for (m, v) in Metric::ALL.iter().zip(values) {
                    metrics_csv.row(&[&o.scenario_id, &cfg.shares[k], region, &m.name(), v]);
                }
            }
        }
    }
    sink.write("scenarios.csv", scen_csv.as_str().as_bytes()).map_err(report)?;
    sink.write("metrics.csv", metrics_csv.as_str().as_bytes()).map_err(report)?;

    // risk
    let regions: Vec<String> = cfg
        .countries
        .iter()
        .map(|c| c.id.clone())
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .chain(std::iter::once(NORDIC.to_string()))
        .collect();
    write_risk_outputs(cfg, &regions, &outcomes, &mut sink).map_err(|e| e.in_stage("risk"))?;

    let manifest = RunManifest {
        format: MANIFEST_FORMAT.into(),
        version: FORMAT_VERSION,
        config_hash: cfg.hash(),
        seed: cfg.seed,
        target_year: cfg.target_year,
        shares: cfg.shares.clone(),
        countries: cfg.countries.iter().map(|c| c.id.clone()).collect(),
        cvar_tail: "upper".into(),
        cvar_alpha: CVAR_ALPHA,
        scenario_count: outcomes.len(),
        scenario_ids: outcomes.iter().map(|o| o.scenario_id.clone()).collect(),
        spans,
        inputs: input_entries,
        models: model_hashes,
        outputs: sink.into_entries(),
    };
    std::fs::write(dir.join(MANIFEST_FILE), manifest.to_json())
        .map_err(|e| Error::io("writing manifest", e).in_stage("report"))?;
    Ok(manifest)
}

/// One row of `summary.csv`.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SummaryRow {
    pub region: String,
    pub share: f64,
    #[serde(flatten)]
    pub summary: RiskSummary,
}

fn write_risk_outputs(
    cfg: &RunConfig,
    regions: &[String],
    outcomes: &[PairOutcome],
    sink: &mut OutputSink,
) -> Result<()> {
    let values = |k: usize, region: &str, mi: usize| -> Vec<f64> {
        outcomes
            .iter()
            .map(|o| {
                o.shares[k]
                    .metrics
                    .iter()
                    .find(|(r, _)| r == region)
                    .map(|(_, v)| v[mi])
                    .expect("every outcome has every region")
            })
            .collect()
    };

    let mut rows = Vec::new();
    let mut summary_csv = CsvText::new(&[
        "region", "share", "metric", "mean", "std_dev", "cvar_upper_5pct", "n_scenarios",
    ]);
    let mut densities: BTreeMap<(usize, usize), crate::risk::DensityCurve> = BTreeMap::new();
    for region in regions {
        for (k, &share) in cfg.shares.iter().enumerate() {
            for (mi, &metric) in Metric::ALL.iter().enumerate() {
                let v = values(k, region, mi);
                let s = scenario_statistics(metric, &v)?;
                summary_csv.row(&[region, &share, &metric.name(), &s.mean, &s.std_dev, &s.cvar_upper_5pct, &s.n_scenarios]);
                rows.push(SummaryRow {
                    region: region.clone(),
                    share,
                    summary: s,
                });
                let name = format!("densities/{region}_{}_{}.csv", share_label(share), metric.name());
                match kde_density(&v, None) {
                    Ok(d) => {
                        let mut csv = CsvText::new(&["x", "density"]);
                        for (x, y) in d.grid.iter().zip(&d.density) {
                            csv.row(&[x, y]);
                        }
                        sink.write(&name, csv.as_str().as_bytes())?;
                        if region == NORDIC {
                            densities.insert((k, mi), d);
                        }
                    }
                    Err(Error::Domain(msg)) => log::warn!("skipping {name}: {msg}"),
                    Err(e) => return Err(e),
                }
            }
        }
    }
    sink.write("summary.csv", summary_csv.as_str().as_bytes())?;
    let json = serde_json::json!({
        "cvar_tail": "upper",
        "cvar_alpha": CVAR_ALPHA,
        "rows": rows,
    });
    let mut bytes = serde_json::to_vec_pretty(&json).expect("summary serialises");
    bytes.push(b'\n');
    sink.write("summary.json", &bytes)?;

    let mut curves: BTreeMap<(&str, usize), (DurationCurve, DurationCurve)> = BTreeMap::new();
    for (k, &share) in cfg.shares.iter().enumerate() {
        let label = share_label(share);
        for kind in ["consumption", "residual"] {
            let per_scenario: Vec<DurationCurve> = outcomes
                .iter()
                .map(|o| {
                    let s = &o.shares[k];
                    if kind == "consumption" {
                        s.consumption_curve.clone()
                    } else {
                        s.residual_curve.clone()
                    }
                })
                .collect();
            let (mean, tail) = representative_duration_curves(&per_scenario)?;
            for (which, c) in [("mean", &mean), ("one_in_twenty", &tail)] {
                let mut csv = CsvText::new(&["hours", "mwh"]);
                for (h, v) in c.hours().zip(&c.values) {
                    csv.row(&[&h, v]);
                }
                sink.write(
                    &format!("duration/nordic_{kind}_{label}_{which}.csv"),
                    csv.as_str().as_bytes(),
                )?;
            }
            curves.insert((kind, k), (mean, tail));
        }
    }

    if cfg.plots {
        for (mi, metric) in Metric::ALL.iter().enumerate() {
            let lines: Vec<PlotLine> = cfg
                .shares
                .iter()
                .enumerate()
                .filter_map(|(k, &share)| {
                    densities.get(&(k, mi)).map(|d| PlotLine {
                        label: share_label(share),
                        x: &d.grid,
                        y: &d.density,
                        dashed: false,
                    })
                })
                .collect();
            let svg = line_plot_svg(
                &format!("{NORDIC} {} across weather years", metric.name()),
                metric.name(),
                "density",
                &lines,
            );
            sink.write(&format!("plots/density_{}.svg", metric.name()), svg.as_bytes())?;
        }
        for kind in ["consumption", "residual"] {
            let hours: Vec<f64> = curves
                .get(&(kind, 0))
                .map(|(m, _)| m.hours().map(|h| h as f64).collect())
                .unwrap_or_default();
            let mut lines = Vec::new();
            for (k, &share) in cfg.shares.iter().enumerate() {
                let (mean, tail) = &curves[&(kind, k)];
                let label = share_label(share);
                lines.push(PlotLine {
                    label: format!("{label} mean"),
                    x: &hours,
                    y: &mean.values,
                    dashed: false,
                });
                lines.push(PlotLine {
                    label: format!("{label} 1/20"),
                    x: &hours,
                    y: &tail.values,
                    dashed: true,
                });
            }
            let svg = line_plot_svg(
                &format!("{NORDIC} {kind} duration curve"),
                "hours at or above",
                "MWh/h",
                &lines,
            );
            sink.write(&format!("plots/duration_{kind}.svg"), svg.as_bytes())?;
        }
    }
    Ok(())
}
