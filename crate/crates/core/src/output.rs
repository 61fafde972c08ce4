//! Run outputs: persisted models, the run manifest, checksummed file writing
//! and small CSV/SVG renderers.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::calibrate::CalibratedModel;
use crate::error::{Error, Result};

pub const MODEL_FORMAT: &str = "heatrisk-model";
pub const MANIFEST_FORMAT: &str = "heatrisk-manifest";
pub const FORMAT_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Schema-stamped JSON wrapper around a calibrated model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub format: String,
    pub version: u32,
    pub model: CalibratedModel,
}

impl ModelDocument {
    pub fn new(model: CalibratedModel) -> Self {
        Self {
            format: MODEL_FORMAT.into(),
            version: FORMAT_VERSION,
            model,
        }
    }

    pub fn to_json(&self) -> Vec<u8> {
        let mut bytes = serde_json::to_vec_pretty(self).expect("model serialises to JSON");
        bytes.push(b'\n');
        bytes
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        let doc: ModelDocument = serde_json::from_slice(bytes)
            .map_err(|e| Error::Data(format!("invalid model document: {e}")))?;
        if doc.format != MODEL_FORMAT || doc.version != FORMAT_VERSION {
            return Err(Error::Data(format!(
                "unsupported model document {} v{}",
                doc.format, doc.version
            )));
        }
        Ok(doc)
    }

    pub fn load(path: &Path) -> Result<CalibratedModel> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        Ok(Self::from_json(&bytes)?.model)
    }
}

/// A file with its checksum; `path` is relative and `/`-separated.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

/// Hourly span `[start, end)` in UTC.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Span {
    pub start: String,
    pub end: String,
    pub hours: usize,
}

/// Record of one pipeline run. Contains no wall-clock time, so identical
/// inputs give a byte-identical manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub format: String,
    pub version: u32,
    pub config_hash: String,
    pub seed: Option<u64>,
    pub target_year: i32,
    pub shares: Vec<f64>,
    pub countries: Vec<String>,
    /// Tail used for CVaR: `upper` (large values are adverse).
    pub cvar_tail: String,
    pub cvar_alpha: f64,
    pub scenario_count: usize,
    pub scenario_ids: Vec<String>,
    /// Data spans used: `calibration/<country>` and `weather_archive`.
    pub spans: BTreeMap<String, Span>,
    /// Input files relative to the data root.
    pub inputs: Vec<FileEntry>,
    /// SHA-256 of each model document by country.
    pub models: BTreeMap<String, String>,
    /// Every output file except the manifest itself.
    pub outputs: Vec<FileEntry>,
}

impl RunManifest {
    pub fn to_json(&self) -> Vec<u8> {
        let mut bytes = serde_json::to_vec_pretty(self).expect("manifest serialises to JSON");
        bytes.push(b'\n');
        bytes
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        let m: RunManifest = serde_json::from_slice(bytes)
            .map_err(|e| Error::Data(format!("invalid manifest: {e}")))?;
        if m.format != MANIFEST_FORMAT || m.version != FORMAT_VERSION {
            return Err(Error::Data(format!(
                "unsupported manifest {} v{}",
                m.format, m.version
            )));
        }
        Ok(m)
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST_FILE);
        let bytes = std::fs::read(&path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        Self::from_json(&bytes)
    }

    /// Recomputes every output checksum under `dir`; returns the mismatches.
    pub fn verify(&self, dir: &Path) -> Result<Vec<String>> {
        let mut bad = Vec::new();
        for f in &self.outputs {
            match std::fs::read(dir.join(&f.path)) {
                Ok(bytes) if sha256_hex(&bytes) == f.sha256 && bytes.len() as u64 == f.bytes => {}
                Ok(_) => bad.push(format!("{}: checksum mismatch", f.path)),
                Err(e) => bad.push(format!("{}: {e}", f.path)),
            }
        }
        Ok(bad)
    }

    pub fn output(&self, path: &str) -> Option<&FileEntry> {
        self.outputs.iter().find(|f| f.path == path)
    }
}

pub fn file_entry(path: &Path, relative: &str) -> Result<FileEntry> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    Ok(FileEntry {
        path: relative.to_string(),
        sha256: sha256_hex(&bytes),
        bytes: bytes.len() as u64,
    })
}

/// Writes files under one root and records their checksums.
#[derive(Debug)]
pub struct OutputSink {
    root: PathBuf,
    entries: Vec<FileEntry>,
}

impl OutputSink {
    pub fn new(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        std::fs::create_dir_all(&root).map_err(|e| Error::io(format!("creating {}", root.display()), e))?;
        Ok(Self {
            root,
            entries: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn write(&mut self, relative: &str, bytes: &[u8]) -> Result<()> {
        if self.entries.iter().any(|e| e.path == relative) {
            return Err(Error::Contract(format!("output {relative} written twice")));
        }
        let path = self.root.join(relative);
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;
        }
        std::fs::write(&path, bytes).map_err(|e| Error::io(format!("writing {}", path.display()), e))?;
        self.entries.push(FileEntry {
            path: relative.to_string(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len() as u64,
        });
        Ok(())
    }

    /// Entries sorted by path.
    pub fn into_entries(mut self) -> Vec<FileEntry> {
        self.entries.sort_by(|a, b| a.path.cmp(&b.path));
        self.entries
    }
}

/// Builds CSV text with a fixed header; floats use the shortest
/// representation that round-trips.
#[derive(Debug, Clone)]
pub struct CsvText {
    buf: String,
    width: usize,
}

impl CsvText {
    pub fn new(header: &[&str]) -> Self {
        let mut buf = header.join(",");
        buf.push('\n');
        Self {
            buf,
            width: header.len(),
        }
    }

    pub fn row(&mut self, fields: &[&dyn std::fmt::Display]) {
        debug_assert_eq!(fields.len(), self.width, "CSV row width");
        for (i, f) in fields.iter().enumerate() {
            if i > 0 {
                self.buf.push(',');
            }
            let _ = write!(self.buf, "{f}");
        }
        self.buf.push('\n');
    }

    pub fn as_str(&self) -> &str {
        &self.buf
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.buf.into_bytes()
    }
}

/// One polyline of an SVG plot.
#[derive(Debug, Clone)]
pub struct PlotLine<'a> {
    pub label: String,
    pub x: &'a [f64],
    pub y: &'a [f64],
    pub dashed: bool,
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

/// Minimal line chart: axes with min/max ticks, a legend and one polyline per
/// line. Colours cycle per distinct label prefix before the first space.
pub fn line_plot_svg(title: &str, x_label: &str, y_label: &str, lines: &[PlotLine<'_>]) -> String {
    const W: f64 = 640.0;
    const H: f64 = 400.0;
    const L: f64 = 70.0;
    const R: f64 = 20.0;
    const T: f64 = 40.0;
    const B: f64 = 50.0;
    let finite = |v: &&f64| v.is_finite();
    let xs = lines.iter().flat_map(|l| l.x.iter()).filter(finite);
    let ys = lines.iter().flat_map(|l| l.y.iter()).filter(finite);
    let (x0, x1) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let (y0, y1) = ys.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let span = |a: f64, b: f64| if b > a { b - a } else { 1.0 };
    let (sx, sy) = (span(x0, x1), span(y0, y1));
    let px = |x: f64| L + (x - x0) / sx * (W - L - R);
    let py = |y: f64| H - B - (y - y0) / sy * (H - T - B);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, escape(title));
    let _ = writeln!(
        s,
        r#"<path d="M{L} {T} V{} H{}" fill="none" stroke="black"/>"#,
        H - B,
        W - R
    );
    if x0.is_finite() && y0.is_finite() {
        let _ = writeln!(s, r#"<text x="{L}" y="{}" text-anchor="middle">{}</text>"#, H - B + 16.0, tick(x0));
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, W - R, H - B + 16.0, tick(x1));
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#, L - 4.0, H - B, tick(y0));
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#, L - 4.0, T + 4.0, tick(y1));
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, (L + W - R) / 2.0, H - 12.0, escape(x_label));
    let _ = writeln!(
        s,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
        (T + H - B) / 2.0,
        (T + H - B) / 2.0,
        escape(y_label)
    );

    let mut groups: Vec<&str> = Vec::new();
    for (k, line) in lines.iter().enumerate() {
        let group = line.label.split(' ').next().unwrap_or("");
        let ci = groups.iter().position(|g| *g == group).unwrap_or_else(|| {
            groups.push(group);
            groups.len() - 1
        });
        let colour = PALETTE[ci % PALETTE.len()];
        let mut d = String::new();
        for (i, (x, y)) in line.x.iter().zip(line.y).enumerate() {
            if !(x.is_finite() && y.is_finite()) {
                continue;
            }
            let _ = write!(d, "{}{:.2} {:.2}", if i == 0 { "M" } else { " L" }, px(*x), py(*y));
        }
        let dash = if line.dashed { r#" stroke-dasharray="6 3""# } else { "" };
        let _ = writeln!(s, r#"<path d="{d}" fill="none" stroke="{colour}" stroke-width="1.5"{dash}/>"#);
        let ly = T + 14.0 * k as f64;
        let _ = writeln!(
            s,
            r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{colour}" stroke-width="2"{dash}/><text x="{}" y="{}">{}</text>"#,
            W - R - 150.0,
            W - R - 125.0,
            W - R - 120.0,
            ly + 4.0,
            escape(&line.label)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn tick(v: f64) -> String {
    if v.abs() >= 1e4 || (v != 0.0 && v.abs() < 1e-2) {
        format!("{v:.3e}")
    } else {
        format!("{v:.2}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
