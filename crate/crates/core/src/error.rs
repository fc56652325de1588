use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Broad error class, used by the CLI to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Model,
    Solver,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("invalid network: {0}")]
    InvalidNetwork(String),
    #[error("hydraulics: {0}")]
    Hydraulics(String),
    #[error("config: {0}")]
    Config(String),
    #[error("{what}: expected length {expected}, got {found}")]
    Dimension {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("CFL number {cfl} outside [0, 1]")]
    Cfl { cfl: f64 },
    #[error("stagnant network: every pipe velocity is zero")]
    Stagnant,
    #[error("model: {0}")]
    Model(String),
    #[error("solver: {0}")]
    Solver(String),
    #[error("QP is infeasible")]
    Infeasible,
    #[error("at t = {time_s} s: {source}")]
    At {
        time_s: f64,
        #[source]
        source: Box<Error>,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Syntax { .. }
            | Error::InvalidNetwork(_)
            | Error::Hydraulics(_)
            | Error::Config(_)
            | Error::Io(_)
            | Error::Csv(_)
            | Error::Json(_)
            | Error::Toml(_) => ErrorKind::Config,
            Error::Dimension { .. } | Error::Cfl { .. } | Error::Stagnant | Error::Model(_) => {
                ErrorKind::Model
            }
            Error::Solver(_) | Error::Infeasible => ErrorKind::Solver,
            Error::At { source, .. } => source.kind(),
        }
    }

    /// Attach the simulation time at which the error surfaced.
    pub fn at(self, time_s: f64) -> Error {
        match self {
            e @ Error::At { .. } => e,
            e => Error::At {
                time_s,
                source: Box::new(e),
            },
        }
    }
}
