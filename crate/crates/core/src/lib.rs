//! Quenched phase-ordering kinetics on the eigenbasis of empirical
//! correlation matrices.
//!
//! The crate is organised bottom-up:
//!
//! * [`speclin`] dense symmetric eigensolvers and random-matrix sampling,
//! * [`rmt`] Marchenko–Pastur law, bulk detection and the map from
//!   correlation eigenvalues to kinetic rates,
//! * [`market`] price panels, log-returns, correlation matrices and the
//!   GBM interpolation between real and synthetic prices,
//! * [`kinetics`] the ensemble Langevin integrator,
//! * [`analytics`] the closed quenched theory (H, G, F, T_c, tail exponents),
//! * [`detect`] exponent fits, the short-time concavity criterion and β sweeps,
//! * [`pipeline`] the stage functions shared by the sweep and the CLI.

pub mod analytics;
pub mod detect;
mod error;
pub mod kinetics;
pub mod market;
pub mod pipeline;
pub mod quad;
pub mod rmt;
pub mod rng;
pub mod series;
pub mod speclin;
pub mod stats;

pub use error::{Error, Result};
pub use series::{ObservableSeries, SeriesLabel};
