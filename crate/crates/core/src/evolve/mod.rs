//! Leapfrog time stepping of 𝕄U″ + (𝕂+𝔻)U = 0 with PCG mass solves.

pub mod initial;
pub mod leapfrog;
pub mod solver;

use thiserror::Error;

use crate::domain::DomainError;

pub use initial::{initial_bump, initial_random};
pub use leapfrog::{discrete_energy, leapfrog_run, snap_probes, LeapfrogOptions, Probe, ProbeSet, RunOutput, WaveState};
pub use solver::{ic0_factor, pcg_solve, Preconditioner};

/// Fraction of Δt_max allowed without forcing.
pub const SAFE_STEP_FRACTION: f64 = 0.95;

#[derive(Debug, Error)]
pub enum EvolveError {
    #[error("incomplete Cholesky breakdown at row {row} (pivot {pivot:e})")]
    BreakdownPivot { row: usize, pivot: f64 },
    #[error("PCG did not converge in {iterations} iterations (relative residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("energy blow-up at step {step}: E = {energy:e}, reference E(dt) = {reference:e}")]
    EnergyBlowup { step: usize, energy: f64, reference: f64 },
    #[error("time step {dt} exceeds {limit} (0.95 of the stability bound)")]
    StepTooLarge { dt: f64, limit: f64 },
    #[error("vector length {found}, expected {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("{0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error("snapshot output failed: {0}")]
    Snapshot(String),
}

/// Rejects Δt > 0.95·Δt_max unless forced.
pub fn check_time_step(dt: f64, dt_max: f64, force: bool) -> Result<(), EvolveError> {
    let limit = SAFE_STEP_FRACTION * dt_max;
    if dt > limit * (1.0 + 1e-12) && !force {
        return Err(EvolveError::StepTooLarge { dt, limit });
    }
    Ok(())
}
