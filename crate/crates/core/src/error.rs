use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A bound or plan was evaluated outside the hypothesis that makes it a bound.
    #[error("outside validity window: {0}")]
    Validity(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("unknown vertex {0}")]
    UnknownVertex(usize),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("size cap exceeded: {what} needs {needed}, cap is {cap}")]
    CapExceeded {
        what: &'static str,
        needed: usize,
        cap: usize,
    },
    #[error("operator is not Hermitian (defect {0:e})")]
    NotHermitian(f64),
    #[error("symmetry violated: {0}")]
    Symmetry(String),
    #[error("unknown model `{0}`")]
    UnknownModel(String),
    #[error("missing cluster dependency {0:?}")]
    MissingDependency(Vec<usize>),
}

impl Error {
    /// True for errors that mean "a scientific precondition does not hold"
    /// rather than "the program or its input is broken".
    pub fn is_validity(&self) -> bool {
        matches!(self, Error::Validity(_))
    }
}
