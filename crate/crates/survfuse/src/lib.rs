//! Integrative estimation of heterogeneous treatment effects on restricted
//! mean survival time (RMST), fusing right-censored randomized-trial data
//! with possibly biased real-world data.
//!
//! The estimator targets `tau(x)`, the covariate-conditional difference in
//! RMST between treatment arms, identified from the trial, while borrowing
//! strength from real-world records through a jointly estimated omnibus bias
//! function `lambda(x)`. Censored outcomes are converted into complete-data
//! pseudo-outcomes by an augmented inverse-probability-of-censoring (AIPCW)
//! transform driven by Cox nuisance models, and `(tau, lambda)` are fit by a
//! penalized tensor B-spline sieve regression with kernel variance weights.
//!
//! Crate layout:
//! - [`data`]: subject records, horizon restriction, CSV I/O
//! - [`step`]: right-continuous step survival curves
//! - [`cox`]: Cox proportional-hazards fits with Breslow baseline
//! - [`pseudo`]: AIPCW/AIPW pseudo-outcome construction and propensity
//! - [`weights`]: kernel conditional-variance weights with GCV bandwidths
//! - [`basis`]: tensor B-spline bases and Sobolev roughness penalties
//! - [`fit`]: penalized weighted least-squares solve, GCV tuning, inference
//! - [`sim`]: simulation designs, ground truth, Monte Carlo harness, oracles

pub mod basis;
pub mod cox;
pub mod data;
pub mod exec;
pub mod fit;
pub mod pseudo;
pub mod quad;
pub mod sim;
pub mod step;
pub mod weights;

pub use data::{Dataset, RestrictedRecord, Source, SubjectRecord};

