use thiserror::Error;

/// Errors raised by the core library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid model parameter: {0}")]
    InvalidModel(&'static str),

    #[error("mean {value} is outside the {model} mean domain")]
    OutOfDomain { model: &'static str, value: f64 },

    #[error("an instance needs at least two arms, got {0}")]
    TooFewArms(usize),

    #[error("best arm is not unique: arms {0} and {1} share the largest mean")]
    TiedBest(usize, usize),

    #[error("arm index {index} out of range for {arms} arms")]
    ArmOutOfRange { index: usize, arms: usize },

    #[error("arm {0} is the best arm; the operation needs a suboptimal arm")]
    BestArm(usize),

    #[error("invalid weights: {0}")]
    InvalidWeights(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),

    #[error("posterior sampling needs at least {required} observations, got {count}")]
    TooFewObservations { count: u64, required: u64 },

    #[error("invalid observations: {0}")]
    InvalidObservations(&'static str),

    #[error("gap between the two best means ({0:e}) is too small to solve for")]
    DegenerateGap(f64),

    #[error("{what} did not converge within {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },
}

pub type Result<T> = core::result::Result<T, Error>;
