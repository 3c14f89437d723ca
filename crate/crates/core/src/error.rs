use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("coordinates must be finite, got ({x}, {y})")]
    NonFinite { x: f64, y: f64 },
    #[error("tolerances must be strictly positive (eps_len = {eps_len}, eps_ang = {eps_ang})")]
    InvalidTolerance { eps_len: f64, eps_ang: f64 },
    #[error("coincident points")]
    CoincidentPoints,
    #[error("points are collinear")]
    Collinear,
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("duplicate terminal: #{first} and #{second} coincide")]
    DuplicateTerminal { first: usize, second: usize },
    #[error("edge {edge} references vertex {index}, but only {len} vertices exist")]
    EdgeIndexOutOfRange { edge: usize, index: usize, len: usize },
    #[error("malformed tree: {0}")]
    MalformedTree(String),
    #[error("{n} terminals exceed the exact solver cap of {cap}")]
    TooManyTerminals { n: usize, cap: usize },
    #[error("vertical fork infeasible: aspect ratio {lambda} is below the threshold {lambda_v}")]
    ForkInfeasible { lambda: f64, lambda_v: f64 },
    #[error("not an isosceles trapezoid with the requested apex angle: {0}")]
    NotATrapezoid(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("grid graph has {vertices} vertices, above the cap of {cap}; try a larger epsilon")]
    GridCapExceeded { vertices: usize, cap: usize },
    #[error("{interior} interior terminals exceed the cap of {cap}")]
    InteriorCapExceeded { interior: usize, cap: usize },
    #[error("convex hull of the terminals is a single point")]
    DegenerateHull,
    #[error("instance too large for the brute-force oracle: {0}")]
    OracleSizeExceeded(String),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by a configured size cap rather than bad input.
    pub fn is_cap_violation(&self) -> bool {
        matches!(
            self,
            Error::TooManyTerminals { .. }
                | Error::GridCapExceeded { .. }
                | Error::InteriorCapExceeded { .. }
                | Error::OracleSizeExceeded(_)
        )
    }
}
