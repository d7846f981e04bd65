//! Subquantum position measurement with a nonequilibrium pointer under
//! `H = a x p_y`, trajectory tracking by sequences of such measurements,
//! and trajectory-based discrimination of non-orthogonal states.

pub mod apparatus;
pub mod discrimination;
pub mod pointer;
pub mod tracking;

pub use apparatus::{PointerApparatus, PointerShape};
pub use discrimination::{discriminate, momentum_for_overlap, Discrimination, DiscriminationScenario, DiscriminationSummary, TrialOutcome};
pub use pointer::{
    joint_density_check, mean_fidelity, measure_many, measure_position, records_to_text, smearing_check, JointCheck,
    Measurement, MeasurementRecord, SmearingCheck,
};
pub use tracking::{track_trajectory, TrackedPath, TrackedSample};
