use thiserror::Error;

/// Errors produced by model construction, sampling, and the harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid task graph: {0}")]
    InvalidTaskGraph(String),

    #[error("invalid cloud graph: {0}")]
    InvalidCloudGraph(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("unknown topology tag `{0}` (expected star, ring, or tadpole)")]
    UnknownTopology(String),

    #[error("{topology} topology needs at least {min} subtasks, got {got}")]
    TooFewSubtasks {
        topology: &'static str,
        min: usize,
        got: usize,
    },

    #[error("invalid range [{lo}, {hi}] for {name}")]
    InvalidRange { name: String, lo: f64, hi: f64 },

    #[error("invalid generator argument: {0}")]
    InvalidGenArg(String),

    #[error("invalid mapping: {0}")]
    InvalidMapping(String),

    #[error("realization out of bounds: {0}")]
    RealizationOutOfBounds(String),

    #[error("non-finite evaluation output at sample index {index}: {value}")]
    NonFiniteSample { index: usize, value: f64 },

    #[error("monte carlo estimation needs at least one sample")]
    NoSamples,

    #[error("negative duration {0} passed to contact CDF")]
    NegativeDuration(f64),

    #[error("unknown policy name `{0}`")]
    UnknownPolicy(String),

    #[error("scenario is invalid:\n{}", .0.join("\n"))]
    InvalidScenario(Vec<String>),

    #[error("config error: {0}")]
    Config(String),

    #[error("precomputed mapping does not match this scenario: {0}")]
    AlphaMismatch(String),

    #[error("failed to {action} `{path}`: {source}")]
    Io {
        action: &'static str,
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("failed to parse {what}: {detail}")]
    Parse { what: &'static str, detail: String },
}

pub type Result<T> = std::result::Result<T, Error>;
