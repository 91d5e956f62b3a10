//! Error types shared across the crate.

use thiserror::Error;

/// Errors produced by the simulator, model, plant, and pipeline stages.
#[derive(Debug, Error)]
pub enum Error {
    #[error("qubit index {index} out of range for {n_qubits}-qubit register")]
    QubitOutOfRange { index: usize, n_qubits: usize },

    #[error("CNOT control and target must differ (both {qubit})")]
    DegenerateCnot { qubit: usize },

    #[error("circuit spans {circuit} qubits but state has {state}")]
    DimensionMismatch { circuit: usize, state: usize },

    #[error("shot count must be positive")]
    ZeroShots,

    #[error("probabilities sum to {sum}, expected 1 within {tol}")]
    UnnormalizedProbabilities { sum: f64, tol: f64 },

    #[error("parameter vector has {got} entries, ansatz expects {expected}")]
    ParameterLength { expected: usize, got: usize },

    #[error("SPSA perturbation magnitude must be positive")]
    ZeroPerturbation,

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("simulation diverged (non-finite state) at t = {t:.4} s")]
    Diverged { t: f64 },

    #[error("simulation horizon {duration} s does not cover the last load step at {last_event} s")]
    HorizonTooShort { duration: f64, last_event: f64 },

    #[error("every gain pair in the grid was unstable on this event")]
    AllPairsUnstable,

    #[error("gain grid is empty")]
    EmptyGrid,

    #[error("capture interval [{start} s, {end} s] exceeds the simulation horizon {duration} s")]
    CaptureOutsideHorizon { start: f64, end: f64, duration: f64 },

    #[error("replay memory spans {events} events, need more than {needed} for the split")]
    TooFewEvents { events: usize, needed: usize },

    #[error("training loss became non-finite at epoch {epoch}")]
    DivergentLoss { epoch: usize },

    #[error("lookup table needs at least 2 classes, got {classes}")]
    SingleClassTable { classes: usize },

    #[error("update period {update_period} s must be a positive multiple of the sampling period {sampling_period} s")]
    BadUpdatePeriod {
        update_period: f64,
        sampling_period: f64,
    },

    #[error("config field `{field}`: {reason}")]
    InvalidConfig { field: String, reason: String },

    #[error("missing input artifact: {0}")]
    MissingArtifact(String),

    #[error("failed to parse {path}: {reason}")]
    Parse { path: String, reason: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code for the CLI; distinct per failure family.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidConfig { .. } | Error::Parse { .. } => 3,
            Error::MissingArtifact(_) => 4,
            Error::Io { .. } => 5,
            _ => 1,
        }
    }
}
