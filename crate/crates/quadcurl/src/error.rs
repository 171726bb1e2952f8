use thiserror::Error;

/// Everything that can go wrong in the library.
///
/// [`Error::exit_code`] maps each variant onto the CLI exit status: input
/// problems are 1, numerical breakdowns are 2.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
    #[error("unknown mesh family `{0}`")]
    UnknownFamily(String),
    #[error("mesh level must be at least 1, got {0}")]
    InvalidLevel(usize),
    #[error("polynomial degree k must be at least 2, got {0}")]
    DegreeTooLow(usize),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("quadrature of exactness {requested} requested, at most {max} is tabulated")]
    QuadratureTooHigh { requested: usize, max: usize },
    #[error("cannot decompose cell {cell} into simplices: {reason}")]
    Decomposition { cell: usize, reason: String },
    #[error("mass matrix on {entity} is numerically singular")]
    SingularMass { entity: String },
    #[error("polynomial basis on cell {cell} lost rank at degree {degree}")]
    BasisRankDeficient { cell: usize, degree: usize },
    #[error("expression not supported by the symbolic differentiator: {0}")]
    UnsupportedExpression(String),
    #[error("system has {dofs} unknowns, above the cap of {cap}")]
    DofCapExceeded { dofs: usize, cap: usize },
    #[error("linear solve failed: relative residual {residual:.3e} above tolerance {tol:.1e}")]
    SolveFailed { residual: f64, tol: f64 },
    #[error("sparse factorization failed: {0}")]
    Factorization(String),
    #[error("failed to parse {what}: {detail}")]
    Parse { what: String, detail: String },
    #[error("level {level}: {source}")]
    AtLevel { level: u32, source: Box<Error> },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::AtLevel { source, .. } => source.exit_code(),
            Error::SingularMass { .. }
            | Error::BasisRankDeficient { .. }
            | Error::SolveFailed { .. }
            | Error::Factorization(_)
            | Error::Decomposition { .. } => 2,
            _ => 1,
        }
    }
}
