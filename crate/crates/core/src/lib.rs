//! Soil volumetric water content (VWC) and field capacity estimation from
//! low-cost sensor channels.
//!
//! The crate is organised around the pipeline it implements:
//!
//! * [`dataset`]: CSV ingestion, feature selection, standardization, fold plans
//!   and sensor cost accounting.
//! * [`soilphys`]: travel time to permittivity, Topp's polynomial and its
//!   inverse, and plateau-based field capacity estimation.
//! * [`metrics`]: RMSE, MAE and Pearson's R.
//! * [`models`]: four regressors written from scratch (epsilon-SVR, random
//!   forest, gradient boosting, batch-normalized MLP) and a cross-validation
//!   driver.
//! * [`simulator`]: a bucket-model soil column with synthetic sensor responses,
//!   used as ground truth.
//! * [`cli`]: the `soilvwc` command-line surface.

pub mod cli;
pub mod dataset;
pub mod metrics;
pub mod models;
pub mod rng;
pub mod simulator;
pub mod soilphys;
