//! Multi Expression Programming (MEP) for software effort estimation.
//!
//! A chromosome is a fixed-length list of genes. Each gene is either a
//! terminal (a project feature) or a function whose operands point at
//! earlier genes, so one chromosome encodes as many expressions as it has
//! genes. Evolution is steady state: each step breeds two offspring and the
//! better one replaces the worst member of the population when it is
//! strictly fitter.
//!
//! Module map:
//!
//! * [`genome`]: chromosome encoding, validation, evaluation, decoding.
//! * [`fitness`]: protected arithmetic and the error metrics.
//! * [`evolution`]: selection, recombination, mutation, the run loop.
//! * [`datasets`]: CSV ingestion and cleaning of project datasets.
//! * [`baselines`]: fitted power-law and mean-effort reference models.
//! * [`experiments`]: reference-configuration runs, sweep grids, reports.

pub mod baselines;
pub mod datasets;
pub mod error;
pub mod evolution;
pub mod experiments;
pub mod fitness;
pub mod genome;
pub mod rng;

pub use error::{Error, Result};
