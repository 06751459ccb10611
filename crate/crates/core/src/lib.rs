//! Estimation of the restricted mean survival time (RMST) difference between
//! a treated and a control arm from right-censored data.
//!
//! The crate covers the full estimation pipeline:
//!
//! - [`data`] — validated survival datasets and the τ-restriction that turns
//!   censoring at or beyond the horizon into events;
//! - [`product_limit`] — a weighted product-limit engine producing the
//!   unadjusted, IPCW, IPTW and IPTW-IPCW Kaplan-Meier variants, with
//!   Greenwood variance and exact step-function integration;
//! - [`nuisance`] — logistic propensity and Cox proportional-hazards fitters
//!   (Breslow ties and baseline), plus closed-form oracle nuisances for the
//!   built-in generators;
//! - [`transforms`] — IPCW, Buckley-James, doubly robust and quadruply robust
//!   pseudo-outcome transformations;
//! - [`estimators`] — the RMST-difference estimators assembled from curves,
//!   pseudo-outcomes and nuisance predictions;
//! - [`bootstrap`] — nonparametric bootstrap standard errors and percentile
//!   confidence intervals;
//! - [`sim`] — synthetic data generators, Monte Carlo ground-truth oracles and
//!   a deterministic replication benchmark.

pub mod bootstrap;
pub mod data;
pub mod estimators;
mod linalg;
pub mod nuisance;
pub mod product_limit;
pub mod rng;
pub mod sim;
pub mod transforms;

pub use data::{Dataset, RestrictedDataset, SubjectRef};
pub use estimators::{Estimate, EstimatorSpec, Method, Normalization};
pub use product_limit::StepSurvival;
