use std::fmt;
use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

/// Optimization block that produced an error inside the alternating loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Block {
    Initialization,
    Auxiliaries,
    DeliveryTime,
    Beamforming,
    Phase,
}

impl fmt::Display for Block {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Block::Initialization => "initialization",
            Block::Auxiliaries => "auxiliary update",
            Block::DeliveryTime => "delivery-time",
            Block::Beamforming => "beamforming",
            Block::Phase => "phase-shift",
        };
        f.write_str(name)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("{block} subproblem infeasible: lower bound {lower} exceeds upper bound {upper}")]
    SubproblemInfeasible { block: Block, lower: f64, upper: f64 },

    #[error("{block} conic program reported infeasible ({status})")]
    ConicInfeasible { block: Block, status: String },

    #[error("conic solver failed on {block} program: {status}")]
    Solver { block: Block, status: String },

    #[error("internal consistency violated in {block}: {detail}")]
    InternalConsistency { block: Block, detail: String },

    #[error("rank-one extraction degenerate: anchor entry magnitude {0:e}")]
    ExtractionDegenerate(f64),

    #[error("no feasible starting point after {attempts} attempt(s): {reason}")]
    InitializationInfeasible { attempts: usize, reason: String },

    #[error("scenario infeasible: {0}")]
    ScenarioInfeasible(String),

    #[error("closed-form case not applicable: {0}")]
    CaseInapplicable(String),

    #[error("feasibility condition undefined: {0}")]
    ConditionUndefined(String),

    #[error("{block} step failed: {source}")]
    Step {
        block: Block,
        #[source]
        source: Box<Error>,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn in_block(self, block: Block) -> Error {
        match self {
            e @ Error::Step { .. } => e,
            other => Error::Step {
                block,
                source: Box::new(other),
            },
        }
    }

    /// True for errors that mean the instance has no feasible point, as opposed
    /// to numerical or I/O failures.
    pub fn is_infeasibility(&self) -> bool {
        match self {
            Error::SubproblemInfeasible { .. }
            | Error::ConicInfeasible { .. }
            | Error::InitializationInfeasible { .. }
            | Error::ScenarioInfeasible(_) => true,
            Error::Step { source, .. } => source.is_infeasibility(),
            _ => false,
        }
    }
}
