use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("no prime in ({low}, {high}]")]
    NoPrimeInInterval { low: u64, high: u64 },
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("inverse of zero")]
    InverseOfZero,
    #[error("duplicate abscissa {0}")]
    DuplicateAbscissa(u64),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("evaluation point must be non-zero")]
    ZeroEvaluationPoint,
    #[error("need {needed} evaluations, got {got}")]
    InsufficientEvaluations { needed: usize, got: usize },
    #[error("group size {group_size} does not divide user count {users}")]
    IndivisibleGroups { users: usize, group_size: usize },
    #[error("threshold violated: T={t} must be < N-D={bound}")]
    ThresholdViolation { t: usize, bound: usize },
    #[error("K={k} outside [1, {max}]")]
    BadK { k: usize, max: usize },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("not a tree: {0}")]
    NotATree(String),
    #[error("server child must be group {expected}, found {found:?}")]
    BadRoot { expected: usize, found: Vec<usize> },
    #[error("unknown group {0}")]
    UnknownGroup(usize),
    #[error("too many dropouts: server holds {got} non-null messages, needs {needed}")]
    TooManyDropouts { needed: usize, got: usize },
    #[error("invalid config field `{field}`: {reason}")]
    ConfigInvalid { field: String, reason: String },
    #[error("field with manually chosen prime {0} cannot back load assertions")]
    NonConformingField(u64),
    #[error("enumeration needs {estimate} protocol runs, budget is {budget}")]
    SearchSpaceTooLarge { estimate: u128, budget: u128 },
    #[error("io: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::ConfigInvalid {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
