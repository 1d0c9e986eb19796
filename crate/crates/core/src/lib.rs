//! Numerical laboratory for approximate joint measurements of position and
//! momentum: state-independent calibration and metric errors, covariant
//! phase-space observables, a von Neumann pointer model of sequential
//! measurement, and verifiers for the preparation and measurement
//! uncertainty relations.
//!
//! States live on a uniform grid ([`GridSpec`]) with periodic boundary
//! conditions; distributions are treated as point masses at the grid nodes.

pub mod dist;
pub mod error;
pub mod exec;
pub mod grid;
pub mod husimi;
pub mod metrics;
pub mod phase;
pub mod pointer;
pub mod povm;
pub mod report;
pub mod spec;
pub mod state;
pub mod transport;

pub use dist::{convolve, quantile, rms_deviation, DiscreteMeasure, Distribution1D};
pub use error::{Error, Result};
pub use grid::{Axis, GridSpec};
pub use husimi::{husimi, smear_wigner, wigner};
pub use metrics::{
    calibration_error, covariant_estimate, global_error, CalibrationFamily, CovariantMarginal,
    EpsilonSchedule, ErrorEstimate, IdealDevice, MarginalDevice, SequentialMarginal,
};
pub use phase::{PhaseDistribution2D, PhaseGrid, PhaseKind};
pub use pointer::{
    conditional_state, disturbed_momentum_distribution, effective_position_distribution,
    induced_covariant_sigma, SequentialDevice, VonNeumannModel,
};
pub use povm::{
    covariant_calibration_error, direct_marginal_oracle, marginal_p, marginal_q, outcome_density,
    outcome_distribution, CovariantMeasurement,
};
pub use report::{verify_measurement_ur, verify_preparation_ur, RelationReport};
pub use spec::StateSpec;
pub use state::{
    gaussian_state, momentum_distribution, position_distribution, spread, vacuum, MixedState,
    PureState,
};
pub use transport::{noise_bound_check, wasserstein2, wasserstein2_coupling_oracle, Coupling};
