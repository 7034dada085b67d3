use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("grid spacing {h} leaves the domain without interior nodes")]
    EmptyInterior { h: f64 },
    #[error("malformed mask file: {0}")]
    MalformedMask(String),
    #[error("domain has no interior nodes")]
    EmptyDomain,
    #[error("node {node} keeps only {pairs} antipodal pairs, need at least {needed}")]
    DegenerateStencil { node: usize, pairs: usize, needed: usize },
    #[error("parse error at {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("declared attribute violated: {0}")]
    AttributeViolation(String),
    #[error("unknown coefficient `{0}`")]
    UnknownCoefficient(String),
    #[error("ordering violated: {0}")]
    Ordering(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("singular integral diverges: {0}")]
    SingularIntegral(String),
    #[error("geometry: {0}")]
    Geometry(String),
    #[error("fields live on different domains")]
    DomainMismatch,
    #[error("root bracket not found after {0} expansions")]
    Bracket(usize),
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
