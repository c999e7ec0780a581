use crate::tree::ValidationReport;

/// Errors produced by the valuation, simulation, and scenario-IO engines.
///
/// Validation deliberately never panics and never throws per violation:
/// structural problems are collected into a [`ValidationReport`] and returned
/// as a single [`Error::Invalid`].
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// The input model violates one or more structural invariants.
    #[error("invalid model:\n{0}")]
    Invalid(ValidationReport),

    /// A discount or growth rate at or below -100% per period.
    #[error("rate must be greater than -1, got {0}")]
    RateOutOfDomain(f64),

    /// A random distribution was found where a scalar was required and the
    /// caller did not ask for mean-projection.
    #[error("{path} is random; resolve it explicitly (value on means) or use simulation")]
    UnresolvedRandom { path: String },

    /// Analytic moment propagation is defined for Gaussian (or degenerate
    /// deterministic) flows only.
    #[error("{path} is not Gaussian; analytic moments are undefined, use simulation")]
    NonGaussian { path: String },

    /// Confidence level outside the one-sided lower-tail domain.
    #[error("alpha must be in (0, 0.5], got {0}")]
    AlphaOutOfRange(f64),

    /// Two reports or results were combined but were computed under
    /// different settings.
    #[error("cannot compare: {0}")]
    IncomparableReports(String),

    /// Expectation-form sampling has no per-replication functional on the
    /// two-stage tree; only branch sampling is defined there.
    #[error("expectation-form sampling is not defined for option trees; use branch sampling")]
    UnsupportedSimulationMode,

    /// Simulation needs at least one replication.
    #[error("sample count must be at least 1, got {0}")]
    NoSamples(u64),

    /// Scenario input could not be read.
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// Scenario input is not well-formed TOML.
    #[error("parse error: {0}")]
    Parse(String),

    /// Scenario file declares a schema version this build does not know.
    #[error("unsupported schema_version {found:?}; this build supports {supported:?}")]
    UnsupportedSchemaVersion { found: String, supported: String },

    /// Scenario file declares an unknown document kind.
    #[error("unknown kind {found:?}; expected one of two_scenario, option_tree, brcf_one_stage")]
    UnknownKind { found: String },

    /// The scenario kind does not support the requested operation.
    #[error("{0}")]
    KindMismatch(String),
}

impl Error {
    /// Convenience for rejecting an operation on an invalid model.
    pub(crate) fn from_report(report: ValidationReport) -> Self {
        Error::Invalid(report)
    }
}
