use thiserror::Error;

/// Errors raised by mesh construction, discretization and the solvers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("mesh has no parent map into the coarse mesh")]
    MissingParentMap,

    #[error("degenerate triangle {index} (signed area {area:e})")]
    DegenerateTriangle { index: usize, area: f64 },

    #[error("point ({x}, {y}) lies outside the unit square")]
    PointOutsideDomain { x: f64, y: f64 },

    #[error("unknown {kind} `{name}`")]
    Unknown { kind: &'static str, name: String },

    /// The saddle-point matrix is structurally singular: no pivot exists for
    /// some column regardless of values. For a mixed pair this means the
    /// velocity/pressure combination is not inf-sup stable on the mesh.
    #[error("unstable velocity/pressure pair: structurally singular at column {column}")]
    UnstablePair { column: usize },

    #[error("numerical breakdown in saddle-point solve: {0}")]
    Breakdown(String),

    #[error("saddle-point solve did not reach tolerance: relative residual {residual:e} > {tol:e}")]
    NotConverged { residual: f64, tol: f64 },

    #[error("patch {patch}: {source}")]
    Patch {
        patch: usize,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
