use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("no centers")]
    NoCenters,

    #[error("empty subset")]
    EmptySubset,

    #[error("empty point set")]
    EmptyPointSet,

    #[error("dimension mismatch: expected dim={expected}, got dim={got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid weight {weight} at point {index}: weights must be positive and finite")]
    InvalidWeight { index: usize, weight: f64 },

    #[error("non-finite coordinate at point {index}")]
    NonFiniteCoordinate { index: usize },

    #[error("degenerate distribution")]
    DegenerateDistribution,

    #[error("cost already zero")]
    CostAlreadyZero,

    #[error("k must be positive")]
    InvalidK,

    #[error("epsilon must lie in (0, 1), got {0}")]
    InvalidEpsilon(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("enumeration infeasible; set tuple_budget ({tuples:.3e} tuples exceed the limit of {limit:.0e})")]
    EnumerationInfeasible { tuples: f64, limit: f64 },

    #[error("instance too large for exact oracle (n={n}, limit {limit})")]
    InstanceTooLarge { n: usize, limit: usize },

    #[error("expand requires integer weights")]
    NonIntegerWeights,

    #[error("experiment too large ({repetitions} draws per run)")]
    ExperimentTooLarge { repetitions: f64 },

    #[error("region must be convex")]
    NonConvexRegion,

    #[error("invalid region: {0}")]
    InvalidRegion(String),

    #[error("density has zero total mass over the region")]
    ZeroMass,

    #[error("density mass over the region is negligible ({mass:.3e}); rescaling would be ill-conditioned")]
    NegligibleMass { mass: f64 },

    #[error("grid too coarse or density degenerate")]
    DegenerateGrid,

    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
