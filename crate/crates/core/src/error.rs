use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unknown surface `{0}`")]
    UnknownSurface(String),

    #[error("point {0:?} lies outside the base space")]
    OutOfDomain(Vec<f64>),

    #[error("transform leaves domain: L·b = {0:?}")]
    TransformLeavesDomain(Vec<f64>),

    #[error("non-lengthlike segment: squared speed {value:e} at t = {t}")]
    NonLengthlikeSegment { value: f64, t: f64 },

    #[error("disconnected or out-of-domain: rejection sampling failed {draws} consecutive draws around waypoint {waypoint}")]
    SamplingExhausted { waypoint: usize, draws: usize },

    #[error("pair ({i}, {j}): {source}")]
    Pair {
        i: usize,
        j: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("class `{0}` has fewer than 2 members and cannot be stratified")]
    CannotStratify(String),

    #[error("graph is disconnected ({n_components} components, sizes {sizes:?})")]
    Disconnected { n_components: usize, sizes: Vec<usize> },

    #[error("{path}:{line}: {msg}")]
    Parse { path: String, line: usize, msg: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    pub(crate) fn at_pair(self, i: usize, j: usize) -> Self {
        Error::Pair { i, j, source: Box::new(self) }
    }

    /// True for errors caused by bad input rather than numerical breakdown.
    pub fn is_input_error(&self) -> bool {
        match self {
            Error::Numerical(_)
            | Error::NonLengthlikeSegment { .. }
            | Error::SamplingExhausted { .. } => false,
            Error::Pair { source, .. } => source.is_input_error(),
            _ => true,
        }
    }
}
