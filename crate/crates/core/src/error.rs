use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised anywhere in the simulator.
#[derive(Debug, Error)]
pub enum Error {
    /// A function argument is outside its documented domain.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// A configuration struct violates one of its invariants.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// An estimator could not produce a trustworthy value.
    #[error("estimation failure: {0}")]
    EstimationFailure(String),

    /// Frame alignment against the reference payload failed.
    #[error("synchronization failure: correlation peak {peak:.3} below threshold")]
    SyncFailure { peak: f64 },

    #[error("equalizer diverged: output/input power ratio {ratio:.1}")]
    EqualizerDiverged { ratio: f64 },

    /// Phase increments too large to unwrap unambiguously.
    #[error("sampling too coarse: phase increment {increment:.3} rad exceeds limit")]
    SamplingTooCoarse { increment: f64 },

    /// A BER curve never crosses the requested target.
    #[error("curve '{curve}' never crosses BER {target:e}")]
    NoCrossing { curve: String, target: f64 },

    /// Wraps an error with the scenario it came from.
    #[error("scenario '{scenario}': {source}")]
    Scenario {
        scenario: String,
        #[source]
        source: Box<Error>,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Short machine-readable kind tag, used by the CLI error report.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Parameter(_) => "parameter",
            Error::Config(_) => "config",
            Error::EstimationFailure(_) => "estimation-failure",
            Error::SyncFailure { .. } => "sync-failure",
            Error::EqualizerDiverged { .. } => "equalizer-diverged",
            Error::SamplingTooCoarse { .. } => "sampling-too-coarse",
            Error::NoCrossing { .. } => "no-crossing",
            Error::Scenario { source, .. } => source.kind(),
            Error::Parse(_) => "parse",
            Error::Io(_) => "io",
        }
    }

    pub(crate) fn in_scenario(self, name: &str) -> Error {
        match self {
            e @ Error::Scenario { .. } => e,
            e => Error::Scenario {
                scenario: name.to_string(),
                source: Box::new(e),
            },
        }
    }
}

pub(crate) fn param(msg: impl Into<String>) -> Error {
    Error::Parameter(msg.into())
}

pub(crate) fn config(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}
