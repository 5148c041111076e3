//! Quantum-trajectory engines for monitored fermion chains.
//!
//! Four engines share one stepping contract ([`trajectory::TrajectoryEngine`]):
//!
//! * [`slater`]: U(1) tight-binding chain with onsite dephasing, evolved as an
//!   `L x N` Slater isometry.
//! * [`bdg`]: Kitaev chain with onsite dephasing or long-range dissipators,
//!   evolved as the `(U, V)` frame of a Bogoliubov rotation.
//! * [`ed`]: exact evolution in the half-filling sector (staggered t-V chain,
//!   complex SYK model) with Krylov time stepping.
//! * [`ladder`]: stroboscopic two-leg ladder with random projective
//!   measurements, tracked through its two-point function.
//!
//! Entropy kernels live in [`observables`]; stochastic scheduling, ensemble
//! execution and the trajectory/time averages live in [`trajectory`].

pub mod bdg;
pub mod ed;
pub mod error;
pub mod ladder;
pub mod linalg;
pub mod observables;
pub mod slater;
pub mod trajectory;

pub use error::{EngineError, Result};
pub use num_complex::Complex64 as C64;
pub use trajectory::{
    ensemble_average, run_ensemble, run_trajectory, steady_state_average, steady_state_from_trajectories,
    EnsembleResult, Execution, NoiseStream, Observable, SteadyState, StepSchedule, TimeSeries,
    TrajectoryEngine,
};
