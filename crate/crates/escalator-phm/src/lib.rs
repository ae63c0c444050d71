//! Escalator fleet prognostics toolkit.
//!
//! Ingests (or synthesizes) per-minute escalator energy data and per-sensor
//! vibration spectra, computes condition features, fits a lifetime-health-index
//! degradation curve, and predicts remaining useful life per escalator.
//!
//! The crate is organized around the pipeline stages:
//!
//! - [`domain`] — fleet metadata, sensor layout, thresholds, quarters.
//! - [`synth`] — deterministic synthetic-fleet generator with known ground truth.
//! - [`vibration`] — FFT, band RMS, dominant-band selection, `A_t`,
//!   exceedance curves, weighted vibration status.
//! - [`energy`] — service-day profiles, fixed/variable loss split, passenger
//!   estimation, maintenance-event detection.
//! - [`health`] — quarterly feature aggregation, lifetime health index,
//!   exponential reference-model fitting.
//! - [`rul`] — estimated age, remaining useful life, shifted-curve construction.
//! - [`store`] — file-based ingestion, validation, partitioned persistence.
//! - [`pipeline`] — orchestration of the stages over a store.
//! - [`report`] — static HTML reports with inline SVG charts.
//! - [`cli`] — the `escalator-phm` command-line front end.
//!
//! See the `examples/` directory for one runnable program per capability.

pub mod cli;
pub mod domain;
pub mod energy;
pub mod error;
pub mod health;
pub mod pipeline;
pub mod report;
pub mod rul;
pub mod store;
pub mod synth;
pub mod vibration;

pub use error::{PhmError, Result};
