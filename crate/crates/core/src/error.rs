use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate interval [{lo}, {hi}]: need finite lo < hi")]
    DegenerateInterval { lo: f64, hi: f64 },

    #[error("a grid needs at least 2 points, got {0}")]
    TooFewPoints(usize),

    #[error("value at index {index} is NaN")]
    NanValue { index: usize },

    #[error("value at index {index} is -inf; only +inf is allowed")]
    NegativeInfinity { index: usize },

    #[error("function is +inf everywhere (improper)")]
    Improper,

    #[error("value at index {index} is infinite where a finite value is required")]
    InfiniteValue { index: usize },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("composite midpoint rule needs an odd number of grid points, got {0}")]
    MidpointNeedsOddPoints(usize),

    #[error("cost {family} is undefined at (x, y) = ({x}, {y})")]
    CostDomain { family: String, x: f64, y: f64 },

    #[error("cost {family} is undefined at grid cell ({i}, {j}) = ({x}, {y})")]
    CostDomainAt {
        family: String,
        i: usize,
        j: usize,
        x: f64,
        y: f64,
    },

    #[error("cost entry ({i}, {j}) is not finite")]
    NonFiniteCost { i: usize, j: usize },

    #[error("grid too small for {property}: need at least 3 points along the tested axis, got {points}")]
    GridTooSmall { property: String, points: usize },

    #[error("cost {0} has no closed-form partial derivative in x")]
    NotAnalytic(String),

    #[error("cost has no analytic description (tabulated only)")]
    NoCostSpec,

    #[error("cost is not 1-affine (max second difference {violation:e})")]
    NotOneAffine { violation: f64 },

    #[error("set is empty")]
    EmptySet,

    #[error("local window around index {x0_index} with epsilon {epsilon} contains no grid point")]
    EmptyWindow { x0_index: usize, epsilon: f64 },

    #[error("index {index} out of range for grid of {n} points")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("point {x} lies outside [{lo}, {hi}]")]
    OutOfInterval { x: f64, lo: f64, hi: f64 },

    #[error("selected y index {y_index} is not in the c-subdifferential at t index {t_index} (slack {slack:e})")]
    InvalidSelection {
        t_index: usize,
        y_index: usize,
        slack: f64,
    },

    #[error("selection covers no interior point")]
    EmptySelection,

    #[error("no admissible witness: the c-subdifferential at {x} is empty")]
    NoAdmissibleWitness { x: f64 },

    #[error("barycenter {barycenter} is an endpoint of [{lo}, {hi}]")]
    BarycenterAtEndpoint { barycenter: f64, lo: f64, hi: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("line {line}: {message}")]
    Csv { line: u64, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
