//! Command-line front end. Every subcommand is a thin wrapper over the
//! library; see `heatrisk --help`.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use heatrisk::config::RunConfig;
use heatrisk::output::{ModelDocument, OutputSink, RunManifest};
use heatrisk::pipeline::{
    accuracy_csv, calibrate_all, effects_csv, effects_for, run_pipeline, scenario_table_csv, SummaryRow,
};
use heatrisk::scenario::{
    nordic_2012_inventory, render_scenario_table, scenario_table, DEFAULT_REPLACEMENT_FACTOR,
};
use heatrisk::{Error, Result};

/// `println!` that ignores a closed stdout (for example `| head`).
macro_rules! out {
    ($($arg:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

#[derive(Parser, Debug)]
#[command(name = "heatrisk", version, about = "Weather risk of heating electrification")]
struct Cli {
    /// Log progress (repeat for more detail).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Default)]
struct Common {
    /// Run configuration (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Restrict to these countries (repeatable).
    #[arg(long = "country")]
    countries: Vec<String>,
    /// Electrification shares in [0, 1] (repeatable); replaces the config list.
    #[arg(long = "share")]
    shares: Vec<f64>,
    /// Worker threads.
    #[arg(long)]
    jobs: Option<usize>,
    /// Reserved; the pipeline is deterministic and draws no random numbers.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit the consumption model of each country.
    Calibrate(Common),
    /// Training and validation accuracy of each model.
    Evaluate(Common),
    /// Cohen's f² per regressor group.
    Effects(Common),
    /// Replacement electricity, sensitivity increases and constants per share.
    ScenarioTable(Common),
    /// Full run: calibration, scenarios, weather years, simulation and risk.
    Simulate(Common),
    /// Verify a finished run and print its summary.
    Report(Common),
}

fn load_config(c: &Common) -> Result<RunConfig> {
    let path = c
        .config
        .as_deref()
        .ok_or_else(|| Error::Config("--config is required for this command".into()))?;
    let mut cfg = RunConfig::load(path)?;
    if !c.countries.is_empty() {
        cfg.restrict_countries(&c.countries)?;
    }
    if !c.shares.is_empty() {
        cfg.shares = c.shares.clone();
    }
    if let Some(j) = c.jobs {
        cfg.jobs = j;
    }
    if c.seed.is_some() {
        log::info!("--seed is reserved and does not affect results");
        cfg.seed = c.seed;
    }
    if let Some(out) = &c.out {
        cfg.output_dir = absolute(out)?;
    }
    Ok(cfg)
}

fn absolute(p: &Path) -> Result<PathBuf> {
    if p.is_absolute() {
        return Ok(p.to_path_buf());
    }
    let cwd = std::env::current_dir().map_err(|e| Error::io("reading the working directory", e))?;
    Ok(cwd.join(p))
}

fn calibrate(c: &Common) -> Result<()> {
    let cfg = load_config(c)?;
    let cals = calibrate_all(&cfg)?;
    out!("{:<8}{:>10}{:>10}{:>14}{:>14}", "country", "n_obs", "R²", "hdh_sum", "max_cos");
    for cal in &cals {
        let hdh: f64 = (1..=5).filter_map(|k| cal.model.coefficient(&format!("hdh_{k}"))).sum();
        out!(
            "{:<8}{:>10}{:>10.4}{:>14.6}{:>14.2e}",
            cal.country, cal.model.n_obs, cal.model.r_squared, hdh, cal.model.max_residual_cosine
        );
    }
    if let Some(out) = &c.out {
        let mut sink = OutputSink::new(out)?;
        for cal in &cals {
            sink.write(
                &format!("models/{}.json", cal.country),
                &ModelDocument::new(cal.model.clone()).to_json(),
            )?;
        }
        out!("models written to {}", out.display());
    }
    Ok(())
}

fn evaluate(c: &Common) -> Result<()> {
    let cfg = load_config(c)?;
    let cals = calibrate_all(&cfg)?;
    out!(
        "{:<8}{:<7}{:>8}{:>12}{:>12}{:>9}{:>9}",
        "country", "sample", "n_obs", "RMSE MWh", "MAE MWh", "MAPE%", "sMAPE%"
    );
    for cal in &cals {
        for (name, n, m) in [("train", cal.n_train, Some(&cal.train)), ("valid", cal.n_valid, cal.valid.as_ref())] {
            if let Some(m) = m {
                out!(
                    "{:<8}{:<7}{:>8}{:>12.1}{:>12.1}{:>9.2}{:>9.2}",
                    cal.country, name, n, m.rmse, m.mae, m.mape, m.smape
                );
            }
        }
    }
    if let Some(out) = &c.out {
        OutputSink::new(out)?.write("accuracy.csv", accuracy_csv(&cals).as_str().as_bytes())?;
    }
    Ok(())
}

fn effects(c: &Common) -> Result<()> {
    let cfg = load_config(c)?;
    let cals = calibrate_all(&cfg)?;
    let all = cals
        .iter()
        .map(|cal| Ok((cal.country.clone(), effects_for(cal)?)))
        .collect::<Result<Vec<_>>>()
        .map_err(|e| e.in_stage("calibrate"))?;
    for (country, groups) in &all {
        out!("{country}");
        for (g, f2) in groups {
            out!("  {:<12}{:>12.4}", g.name(), f2);
        }
    }
    if let Some(out) = &c.out {
        OutputSink::new(out)?.write("effects.csv", effects_csv(&all).as_str().as_bytes())?;
    }
    Ok(())
}

fn table(c: &Common) -> Result<()> {
    let (inventories, mut shares, factor) = match &c.config {
        Some(_) => {
            let cfg = load_config(c)?;
            let inv = cfg.countries.iter().map(|k| k.heating_inventory()).collect();
            (inv, cfg.shares.clone(), cfg.replacement_factor)
        }
        None => {
            let mut inv = nordic_2012_inventory();
            if !c.countries.is_empty() {
                inv.retain(|i| c.countries.contains(&i.country));
            }
            (inv, vec![0.5, 1.0], DEFAULT_REPLACEMENT_FACTOR)
        }
    };
    if !c.shares.is_empty() {
        shares = c.shares.clone();
    }
    let rows = scenario_table(&inventories, &shares, factor)?;
    out!("{}", render_scenario_table(&rows).trim_end());
    if let Some(out) = &c.out {
        OutputSink::new(out)?.write("scenario_table.csv", scenario_table_csv(&rows).as_str().as_bytes())?;
    }
    Ok(())
}

fn print_summary(dir: &Path) -> Result<()> {
    let path = dir.join("summary.json");
    let bytes = std::fs::read(&path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    #[derive(serde::Deserialize)]
    struct Summary {
        rows: Vec<SummaryRow>,
    }
    let s: Summary =
        serde_json::from_slice(&bytes).map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
    out!(
        "{:<8}{:>6}  {:<22}{:>12}{:>10}{:>12}",
        "region", "share", "metric", "mean", "std", "CVaR 5%"
    );
    for r in &s.rows {
        out!(
            "{:<8}{:>6.2}  {:<22}{:>12.2}{:>10.2}{:>12.2}",
            r.region,
            r.share,
            r.summary.metric.name(),
            r.summary.mean,
            r.summary.std_dev,
            r.summary.cvar_upper_5pct
        );
    }
    Ok(())
}

fn simulate(c: &Common) -> Result<()> {
    let cfg = load_config(c)?;
    let manifest = run_pipeline(&cfg)?;
    let out = cfg.output_path();
    out!(
        "{} scenarios × {} shares, {} outputs in {}",
        manifest.scenario_count,
        manifest.shares.len(),
        manifest.outputs.len(),
        out.display()
    );
    print_summary(&out)
}

fn report(c: &Common) -> Result<()> {
    let dir = match (&c.out, &c.config) {
        (Some(out), _) => out.clone(),
        (None, Some(_)) => load_config(c)?.output_path(),
        (None, None) => return Err(Error::Config("report needs --out or --config".into())),
    };
    let manifest = RunManifest::load(&dir)?;
    let bad = manifest.verify(&dir)?;
    if !bad.is_empty() {
        for b in &bad {
            eprintln!("{b}");
        }
        return Err(Error::Data(format!("{} output files fail verification", bad.len())));
    }
    out!(
        "run {} verified: {} files, {} scenarios, target year {}",
        &manifest.config_hash[..12],
        manifest.outputs.len(),
        manifest.scenario_count,
        manifest.target_year
    );
    print_summary(&dir)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let result = match &cli.command {
        Command::Calibrate(c) => calibrate(c),
        Command::Evaluate(c) => evaluate(c),
        Command::Effects(c) => effects(c),
        Command::ScenarioTable(c) => table(c),
        Command::Simulate(c) => simulate(c),
        Command::Report(c) => report(c),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
