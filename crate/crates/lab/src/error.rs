use std::path::PathBuf;

/// Failures of the experiment front end, grouped by exit code.
#[derive(Debug, thiserror::Error)]
pub enum LabError {
    #[error("config: {0}")]
    Config(String),
    #[error("solver: {0}")]
    Solver(#[source] bai_core::Error),
    #[error("run failed for policy {policy}, delta {delta}, run {run_index} (master seed {master_seed}): {source}")]
    Run {
        policy: String,
        delta: f64,
        run_index: u64,
        master_seed: u64,
        #[source]
        source: bai_core::Error,
    },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Runtime(String),
}

pub type Result<T> = std::result::Result<T, LabError>;

impl LabError {
    /// 2 for configuration errors, 3 for solver failures, 4 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Config(_) => 2,
            LabError::Solver(_) => 3,
            LabError::Run { .. } | LabError::Io { .. } | LabError::Runtime(_) => 4,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        LabError::Io {
            path: path.into(),
            source,
        }
    }
}

/// Model/instance validation problems are configuration errors; everything
/// else the core reports is a solver failure.
impl From<bai_core::Error> for LabError {
    fn from(e: bai_core::Error) -> Self {
        use bai_core::Error as E;
        match e {
            E::InvalidModel(_)
            | E::OutOfDomain { .. }
            | E::TooFewArms(_)
            | E::TiedBest(..)
            | E::InvalidArgument(_) => LabError::Config(e.to_string()),
            other => LabError::Solver(other),
        }
    }
}
