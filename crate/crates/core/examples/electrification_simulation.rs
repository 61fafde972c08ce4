//! Full pipeline on the synthetic Nordic fixture: calibration, scenarios,
//! shifted-date weather years, simulation and risk summaries.
//!
//! ```text
//! cargo run --release --example electrification_simulation -- /tmp/heatrisk-run
//! ```

use std::path::PathBuf;

use heatrisk::config::RunConfig;
use heatrisk::fixture::{write_fixture, FixtureSpec};
use heatrisk::pipeline::{run_pipeline, SummaryRow, NORDIC};

fn main() -> heatrisk::Result<()> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("heatrisk-run"));
    std::fs::create_dir_all(&dir).map_err(|e| heatrisk::Error::io("creating run directory", e))?;
    let config = write_fixture(&dir, &FixtureSpec::default())?;
    let cfg = RunConfig::load(&config)?;
    let manifest = run_pipeline(&cfg)?;
    let out = cfg.output_path();
    println!(
        "{} weather years x {} shares -> {} files in {}",
        manifest.scenario_count,
        manifest.shares.len(),
        manifest.outputs.len(),
        out.display()
    );

    #[derive(serde::Deserialize)]
    struct Summary {
        rows: Vec<SummaryRow>,
    }
    let bytes = std::fs::read(out.join("summary.json")).map_err(|e| heatrisk::Error::io("reading summary", e))?;
    let summary: Summary = serde_json::from_slice(&bytes).map_err(|e| heatrisk::Error::Data(e.to_string()))?;
    println!("{:<6}{:<22}{:>10}{:>9}{:>10}", "share", "metric", "mean", "std", "CVaR 5%");
    for r in summary.rows.iter().filter(|r| r.region == NORDIC) {
        println!(
            "{:<6}{:<22}{:>10.1}{:>9.2}{:>10.1}",
            r.share,
            r.summary.metric.name(),
            r.summary.mean,
            r.summary.std_dev,
            r.summary.cvar_upper_5pct
        );
    }
    Ok(())
}
