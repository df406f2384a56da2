//! Sparse recovery with Kaczmarz-based solvers.
//!
//! This crate implements the KZ / IHT / KZIHT / KZPT solver family for the
//! compressed-sensing problem `b = A x + e` with `x` s-sparse, together
//! with:
//!
//! - the three sensing ensembles the methods are usually run on
//!   (randomly subsampled Hadamard rows, Rademacher entries, Gaussian rows
//!   rescaled to fixed length), each with fast forward/adjoint products;
//! - reshuffling, cyclic and with-replacement row schedules;
//! - numerical oracles that verify the multi-step epoch identity, the
//!   cross-term operator bound, brute-force restricted isometry constants
//!   and the statistical bias floor at desk scale;
//! - a seeded experiment harness producing error-decay curves, phase
//!   transition grids, schedule ablations and thresholding-period sweeps
//!   with CSV/JSON artifacts.
//!
//! Everything is deterministic given the configured seeds; trials derive
//! independent sub-streams so they can run in parallel and still replay
//! bit-identically.

pub mod analysis;
pub mod error;
pub mod harness;
pub mod schedules;
pub mod seeds;
pub mod sensing;
pub mod signal;
pub mod solvers;

pub use error::{KzError, Result};
pub use schedules::{next_epoch_schedule, validate_schedule, RowSchedule, ScheduleRule};
pub use sensing::{
    fwht, gen_bernoulli, gen_gaussian_fixed_norm, gen_subsampled_bos, make_measurements,
    Measurements, NoiseModel, OperatorDescriptor, OperatorKind, SensingOperator,
};
pub use signal::{
    hard_threshold, project_support, random_sparse_signal, relative_error, SignalVector,
    SparsityLevel, SupportSet,
};
pub use solvers::{
    iht_run, kz_epoch, kz_run, kz_step, kziht_run, kzpt_run, subgaussian_step_preset,
    IterateTrace, SolveStatus, SolverParams, SubgaussianPreset,
};
