use thiserror::Error;

/// Errors produced by the evaluation, simulation and analysis layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: `{arg}` = {value} outside {expected}")]
    Domain {
        arg: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("degenerate information: {0}")]
    DegenerateInfo(String),

    #[error("normalization error: mass sums to {sum} (deficit {deficit:+e})")]
    Normalization { sum: f64, deficit: f64 },

    #[error("regime mismatch: {regime} requires {required}, got experience/info ratio {ratio}")]
    RegimeMismatch {
        regime: &'static str,
        required: &'static str,
        ratio: f64,
    },

    #[error("missing external source for joint-external regime")]
    MissingExternalSource,

    #[error("unexpected external source: only the joint-external regime takes one")]
    UnexpectedExternalSource,

    #[error("quadrature did not converge within depth {depth} on [{lower}, {upper}]")]
    Quadrature { lower: f64, upper: f64, depth: u32 },

    #[error("extrapolation: {at} outside sampled range [{lo}, {hi}]")]
    Extrapolation { at: f64, lo: f64, hi: f64 },

    #[error("degenerate ladder: {0}")]
    DegenerateLadder(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("insufficient data: need at least {required}, got {got}")]
    InsufficientData { required: usize, got: usize },

    #[error("degenerate flow: {0}")]
    DegenerateFlow(String),

    #[error("unknown node `{0}`")]
    UnknownNode(String),

    #[error("invalid workflow: {0}")]
    InvalidGraph(String),

    #[error("node `{node}`: {source}")]
    NodeAbort {
        node: String,
        #[source]
        source: Box<Error>,
    },

    #[error("trial {trial}: {source}")]
    TrialAbort {
        trial: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("learning mode runs trials sequentially; refusing {workers} concurrent workers")]
    ConcurrentLearning { workers: usize },

    #[error("missing field `{0}`")]
    MissingField(&'static str),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Checks that `value` is a probability, naming `arg` on failure.
pub(crate) fn check_probability(arg: &'static str, value: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(Error::Domain {
            arg,
            value,
            expected: "[0, 1]",
        })
    }
}

pub(crate) fn check_positive(arg: &'static str, value: f64) -> Result<f64> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Domain {
            arg,
            value,
            expected: "(0, inf)",
        })
    }
}

pub(crate) fn check_nonnegative(arg: &'static str, value: f64) -> Result<f64> {
    if value >= 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Domain {
            arg,
            value,
            expected: "[0, inf)",
        })
    }
}
