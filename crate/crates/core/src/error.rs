use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix entry `{name}` = {value} is not a finite nonnegative number")]
    InvalidEntry { name: &'static str, value: f64 },

    #[error("vector entry = {0} is not finite")]
    InvalidVectorEntry(f64),

    #[error("matrix product overflowed to infinity; use a ScaledProduct for long products")]
    Overflow,

    #[error("column {column} of the matrix is null")]
    NullColumn { column: usize },

    #[error("invalid ensemble: {0}")]
    InvalidEnsemble(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid start vector: {0}")]
    InvalidVector(String),

    #[error("config error{}: {message}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Config { line: Option<usize>, message: String },

    #[error("runtime degeneracy: {0}")]
    Degenerate(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
