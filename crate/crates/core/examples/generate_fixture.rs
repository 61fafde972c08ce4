//! Writes the seeded synthetic input bundle and its run config.
//!
//! ```text
//! cargo run --release --example generate_fixture -- /tmp/heatrisk-fixture
//! cargo run --release -- simulate --config /tmp/heatrisk-fixture/heatrisk.toml
//! ```

use std::path::PathBuf;

use heatrisk::fixture::{write_fixture, FixtureSpec};

fn main() -> heatrisk::Result<()> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("heatrisk-fixture"));
    std::fs::create_dir_all(&dir).map_err(|e| heatrisk::Error::io("creating fixture directory", e))?;
    let spec = FixtureSpec::default();
    let config = write_fixture(&dir, &spec)?;
    println!(
        "fixture for {} written; archive {}..={}, consumption {}..={}",
        spec.countries.join(", "),
        spec.archive_years.0,
        spec.archive_years.1,
        spec.consumption_years.0,
        spec.consumption_years.1
    );
    println!("config: {}", config.display());
    Ok(())
}
