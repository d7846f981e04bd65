//! Readout of computation results from one subquantum trajectory.

pub mod gadget;
pub mod modes;
pub mod read;

pub use gadget::{run_gadget, GadgetOutcome, Oracle, QubitRegister, MAX_QUBITS};
pub use modes::{
    binomial, residual, run_recovery, sample_times, solve_mode_set, synthesize_run, ModeFit, ModeSet, RecoveryConfig, RecoverySummary, RecoveryTrial,
    SingleRun, VelocitySample,
};
pub use read::{read_s_trials, read_s_via_trajectory, rms_speed, min_distinguishable, ReadConfig, ReadSummary, SReading, TwoLevel};
