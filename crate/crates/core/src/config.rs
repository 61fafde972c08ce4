//! Run configuration read from TOML.
//!
//! ```toml
//! target_year = 2040
//! shares = [0.0, 0.5, 1.0]
//! shifts = [-4, -3, -2, -1, 0, 1, 2, 3, 4]
//! scenario_count = 60
//! jobs = 4
//! output_dir = "out"
//! capacity_factors = "capacity_factors.csv"
//!
//! [[country]]
//! id = "NO"
//! consumption = "NO/consumption.csv"
//! weather = "NO/weather.csv"
//! macro = "NO/macro.csv"
//! holidays = "NO/holidays.csv"
//! wind_gw = 7.2
//! solar_gw = 0.03
//! inventory = { fossil_space_water = 9.7, fossil_district = 0.9, direct_electric_sw = 29.0, fossil_process = 17.6 }
//! ```
//!
//! Input paths are relative to the data root: `data_dir` if set (itself
//! relative to the config file), else `$HEATRISK_DATA_DIR`, else the directory
//! holding the config file. `output_dir` is relative to the config file.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::calibrate::DEFAULT_TRAIN_FRACTION;
use crate::error::{Error, Result};
use crate::scenario::{HeatingInventory, DEFAULT_REPLACEMENT_FACTOR};
use crate::simulate::VreCapacity;
use crate::weathergen::DEFAULT_SHIFTS;

/// Environment variable naming the default input root.
pub const DATA_DIR_ENV: &str = "HEATRISK_DATA_DIR";

/// Heating inventory block of a country, TWh/yr.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InventoryConfig {
    pub fossil_space_water: f64,
    pub fossil_district: f64,
    pub direct_electric_sw: f64,
    pub fossil_process: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CountryConfig {
    pub id: String,
    pub consumption: PathBuf,
    pub weather: PathBuf,
    #[serde(rename = "macro")]
    pub macro_path: PathBuf,
    pub holidays: PathBuf,
    pub wind_gw: f64,
    pub solar_gw: f64,
    pub inventory: InventoryConfig,
}

impl CountryConfig {
    pub fn heating_inventory(&self) -> HeatingInventory {
        HeatingInventory {
            country: self.id.clone(),
            fossil_space_water: self.inventory.fossil_space_water,
            fossil_district: self.inventory.fossil_district,
            direct_electric_sw: self.inventory.direct_electric_sw,
            fossil_process: self.inventory.fossil_process,
        }
    }

    pub fn capacity(&self) -> VreCapacity {
        VreCapacity {
            wind_gw: self.wind_gw,
            solar_gw: self.solar_gw,
        }
    }
}

fn default_target_year() -> i32 {
    2040
}

fn default_shares() -> Vec<f64> {
    vec![0.0, 0.5, 1.0]
}

fn default_shifts() -> Vec<i64> {
    DEFAULT_SHIFTS.to_vec()
}

fn default_jobs() -> usize {
    1
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_train_fraction() -> f64 {
    DEFAULT_TRAIN_FRACTION
}

fn default_replacement_factor() -> f64 {
    DEFAULT_REPLACEMENT_FACTOR
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_target_year")]
    pub target_year: i32,
    /// Electrification shares; 0 is business as usual.
    #[serde(default = "default_shares")]
    pub shares: Vec<f64>,
    /// Day offsets for the shifted-date weather years.
    #[serde(default = "default_shifts")]
    pub shifts: Vec<i64>,
    /// Number of weather scenarios; all feasible pairs when absent.
    #[serde(default)]
    pub scenario_count: Option<usize>,
    #[serde(default = "default_jobs")]
    pub jobs: usize,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub data_dir: Option<PathBuf>,
    /// Reserved: the pipeline draws no random numbers today.
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default = "default_train_fraction")]
    pub train_fraction: f64,
    #[serde(default = "default_replacement_factor")]
    pub replacement_factor: f64,
    /// Also write every scenario's hourly balance (large).
    #[serde(default)]
    pub write_hourly: bool,
    #[serde(default = "default_true")]
    pub plots: bool,
    pub capacity_factors: PathBuf,
    #[serde(rename = "country")]
    pub countries: Vec<CountryConfig>,
    /// Directory of the config file; set on load, never serialised.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl RunConfig {
    pub fn from_toml_str(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg: RunConfig =
            toml::from_str(text).map_err(|e| Error::Config(format!("invalid config: {e}")))?;
        cfg.base_dir = base_dir.to_path_buf();
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        let base = path
            .parent()
            .filter(|p| !p.as_os_str().is_empty())
            .unwrap_or_else(|| Path::new("."));
        Self::from_toml_str(&text, base)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(format!("cannot serialise config: {e}")))
    }

    /// Root against which input paths resolve.
    pub fn data_root(&self) -> PathBuf {
        if let Some(d) = &self.data_dir {
            return self.base_dir.join(d);
        }
        match std::env::var_os(DATA_DIR_ENV) {
            Some(v) if !v.is_empty() => PathBuf::from(v),
            _ => self.base_dir.clone(),
        }
    }

    pub fn input_path(&self, p: &Path) -> PathBuf {
        self.data_root().join(p)
    }

    pub fn output_path(&self) -> PathBuf {
        self.base_dir.join(&self.output_dir)
    }

    /// Every input file, resolved, in a fixed order.
    pub fn input_files(&self) -> Vec<PathBuf> {
        let mut files = vec![self.input_path(&self.capacity_factors)];
        for c in &self.countries {
            for p in [&c.consumption, &c.weather, &c.macro_path, &c.holidays] {
                files.push(self.input_path(p));
            }
        }
        files
    }

    pub fn country(&self, id: &str) -> Option<&CountryConfig> {
        self.countries.iter().find(|c| c.id == id)
    }

    /// Keeps only the named countries, in config order.
    pub fn restrict_countries(&mut self, ids: &[String]) -> Result<()> {
        for id in ids {
            if self.country(id).is_none() {
                return Err(Error::Config(format!("country {id} is not in the config")));
            }
        }
        self.countries.retain(|c| ids.contains(&c.id));
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.countries.is_empty() {
            return Err(Error::Config("config lists no countries".into()));
        }
        let mut seen = BTreeSet::new();
        for c in &self.countries {
            if c.id.is_empty() || !c.id.chars().all(|ch| ch.is_ascii_alphanumeric() || ch == '_') {
                return Err(Error::Config(format!(
                    "country id {:?} must be non-empty ASCII letters, digits or _",
                    c.id
                )));
            }
            if !seen.insert(c.id.as_str()) {
                return Err(Error::Config(format!("country {} listed twice", c.id)));
            }
            for (name, v) in [("wind_gw", c.wind_gw), ("solar_gw", c.solar_gw)] {
                if !(v.is_finite() && v >= 0.0) {
                    return Err(Error::Config(format!("{}: {name} must be >= 0, got {v}", c.id)));
                }
            }
            c.heating_inventory()
                .validate()
                .map_err(|e| Error::Config(e.to_string()))?;
        }
        if self.shares.is_empty() {
            return Err(Error::Config("shares must not be empty".into()));
        }
        let mut sorted = self.shares.clone();
        sorted.sort_by(f64::total_cmp);
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Config(format!("shares {:?} contain duplicates", self.shares)));
        }
        if let Some(s) = self.shares.iter().find(|s| !(0.0..=1.0).contains(*s)) {
            return Err(Error::Config(format!("share {s} is outside [0, 1]")));
        }
        if self.shifts.is_empty() {
            return Err(Error::Config("shifts must not be empty".into()));
        }
        if self.scenario_count == Some(0) {
            return Err(Error::Config("scenario_count must be positive".into()));
        }
        if self.jobs == 0 {
            return Err(Error::Config("jobs must be at least 1".into()));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction <= 1.0) {
            return Err(Error::Config(format!(
                "train_fraction must be in (0, 1], got {}",
                self.train_fraction
            )));
        }
        if !(self.replacement_factor.is_finite() && self.replacement_factor >= 0.0) {
            return Err(Error::Config(format!(
                "replacement_factor must be >= 0, got {}",
                self.replacement_factor
            )));
        }
        for f in self.input_files() {
            if !f.is_file() {
                return Err(Error::Config(format!("input file {} does not exist", f.display())));
            }
        }
        Ok(())
    }

    /// SHA-256 over every setting that affects results. Output location,
    /// parallelism and the data root are excluded: moving a run or changing
    /// `--jobs` does not change its outputs.
    pub fn hash(&self) -> String {
        let mut view = self.clone();
        view.output_dir = PathBuf::new();
        view.data_dir = None;
        view.jobs = 0;
        let bytes = serde_json::to_vec(&view).expect("config serialises to JSON");
        hex::encode(Sha256::digest(&bytes))
    }
}
