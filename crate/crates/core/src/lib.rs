//! Walk-forward forecast selection and portfolio evaluation.
//!
//! The engine turns daily price and term-structure files into an aligned
//! frame, sweeps a zoo of small forecasting models across it, adapts which
//! model to trust via discounted-loss selection or ensembling, converts the
//! chosen forecasts into trading positions, and scores everything with
//! standard financial metrics. A quarterly allocation layer re-selects
//! whole strategies by trailing Sharpe ratio.
//!
//! Interchangeable algorithm variants (model families, selection methods)
//! sit behind traits and are picked by name at runtime from config or the
//! command line.

pub mod calendar;
pub mod config;
pub mod daa;
pub mod error;
pub mod frame;
pub mod ingest;
pub mod loss;
pub mod models;
pub mod report;
pub mod runner;
pub mod selection;
pub mod strategy;
pub mod synth;

pub use error::{Error, Result};
