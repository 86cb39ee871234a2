//! Numerics for the weakly dissipative mu-Hunter-Saxton equation on the
//! circle `S = R/Z`: a Fourier pseudo-spectral solver for
//!
//! ```text
//! u_t + u u_x = -d/dx A^{-1}(2 mu0 e^{-lambda t} u + u_x^2 / 2) - lambda u,   A = mu - d^2/dx^2,
//! ```
//!
//! with the operator toolkit, mollified initial data, characteristics and the
//! diagnostics that check its conservation laws and a priori bounds.

pub mod characteristics;
pub mod config;
pub mod convergence;
pub mod diagnostics;
pub mod error;
pub mod evolution;
pub mod grid;
pub mod initial;
pub mod mollifier;
pub mod operator;
pub mod pipeline;

pub use characteristics::{advect, conserved_density_residual, CharacteristicsTrack};
pub use config::{parse_config, RunConfig};
pub use convergence::{family_run, helly_report, sup_distance, ConvergenceReport};
pub use diagnostics::{energy_balance, record, verify_decay, DiagnosticsRecord, EnergyBalanceRecord};
pub use error::{Error, Result};
pub use evolution::{rhs, simulate, step_rk4, SolverConfig, SolverState, TimeStepping, Trajectory};
pub use grid::{make_grid, mean, Field, PeriodicGrid};
pub use initial::{cosine_data, peakon_data, InitialCondition, SignClass};
pub use mollifier::{AtomicMeasure, MollifierKernel};
pub use operator::{apply_a, invert_a_explicit, invert_a_spectral, CumulativeRule, GreenKernel};
pub use pipeline::{run, Command, RunManifest, RunOptions};
