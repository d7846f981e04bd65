use thiserror::Error;

/// Errors raised by the simulation library.
///
/// Variants fall into two families: invalid input (`InvalidParameter`,
/// `NotNormalized`, ...) and runtime domain failures of an otherwise valid
/// run (`DomainOverflow`, `TrajectoryExited`, ...). [`Error::is_input`]
/// separates them.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("wavefunction is not normalized (norm = {norm:.3e})")]
    NotNormalized { norm: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("probability {mass:.3e} reached the grid margin at t = {time}")]
    DomainOverflow { mass: f64, time: f64 },

    #[error("trajectory left the grid at t = {time} (position {position:?})")]
    TrajectoryExited { time: f64, position: Vec<f64> },

    #[error("step budget of {budget} exhausted near t = {time}")]
    StepBudget { budget: usize, time: f64 },

    #[error("distribution has mass {mass:.3e} outside the support of |psi0|^2")]
    OutsideSupport { mass: f64 },

    #[error("empty ensemble")]
    EmptyEnsemble,

    #[error("sample too small: {got} < {need}")]
    SampleTooSmall { got: usize, need: usize },

    #[error("optimizer hit the search boundary at {value}")]
    BoundaryHit { value: f64 },

    #[error("parent distribution is time-dependent; fit the static snapshot after transporting it")]
    TimeDependentParent,

    #[error("candidate distribution has undefined variance")]
    UndefinedVariance,

    #[error("schedule too dense: spacing {spacing} is below the velocity pair spacing {eps}")]
    ScheduleTooDense { spacing: f64, eps: f64 },

    #[error("register of {qubits} qubits exceeds the limit of {limit}")]
    RegisterTooLarge { qubits: usize, limit: usize },

    #[error("resolution {resolution:.3e} too coarse; smallest distinguishable s is {min_s}")]
    ResolutionTooCoarse { resolution: f64, min_s: u64 },

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }

    /// True for errors caused by invalid input rather than by the run itself.
    pub fn is_input(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter { .. }
                | Error::NotNormalized { .. }
                | Error::GridMismatch(_)
                | Error::SampleTooSmall { .. }
                | Error::TimeDependentParent
                | Error::UndefinedVariance
                | Error::ScheduleTooDense { .. }
                | Error::RegisterTooLarge { .. }
                | Error::Parse(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
