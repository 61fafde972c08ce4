//! Weather risk of heating electrification in the Nordic power system.
//!
//! The crate calibrates hourly log-linear consumption models driven by
//! heating and cooling degree hours, rewrites them for electrification
//! scenarios, replays shifted historical weather years against projection-year
//! drivers and summarises the spread of outcomes (CVaR, densities and
//! load-duration curves) for consumption and residual demand.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calibrate;
pub mod config;
pub mod error;
pub mod features;
pub mod fixture;
pub mod ingest;
pub mod output;
pub mod pipeline;
pub mod risk;
pub mod scenario;
pub mod series;
pub mod simulate;
pub mod weathergen;

pub use error::{Error, Result};
