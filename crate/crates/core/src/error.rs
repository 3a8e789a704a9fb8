use thiserror::Error;

/// Errors raised by group construction, algebra operations and the dynamics
/// predictors.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid group: {0}")]
    InvalidGroup(String),
    #[error("operands belong to different groups")]
    GroupMismatch,
    #[error("element set is empty")]
    EmptySet,
    #[error("not a point of the simplex: {0}")]
    NotInSimplex(String),
    #[error("invalid series: {0}")]
    InvalidSeries(String),
    /// The series is `t^r`; callers should use the pure-power path instead.
    #[error("series is the pure power t^{0}; use the pure-power report")]
    PurePower(usize),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("parse error: {0}")]
    Parse(String),
    /// A numerical budget ran out before the result could be confirmed.
    #[error("inconclusive: {0}")]
    Inconclusive(String),
    /// A mathematical invariant that must always hold was violated. This
    /// indicates a bug, never a bad input.
    #[error("internal consistency violated: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
