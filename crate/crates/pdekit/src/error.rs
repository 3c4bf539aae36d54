use thiserror::Error;

/// Every failure the library can report.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PdeError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("field mismatch: {0} vs {1} coefficient variables")]
    FieldMismatch(usize, usize),
    #[error("index {index} out of range (bound {bound})")]
    IndexOutOfRange { index: usize, bound: usize },
    #[error("inconsistent system: a nonzero constant is equated to zero")]
    Inconsistent,
    #[error("system is not formally integrable at order {order}")]
    NotFormallyIntegrable { order: u32 },
    #[error("delta-regular search exhausted after {tries} candidates")]
    SearchExhausted { tries: usize },
    #[error("completion exceeded the order cap {cap}")]
    OrderCapExceeded { cap: u32 },
    #[error("system is not involutive: {0}")]
    NotInvolutive(String),
    #[error("system is not first order")]
    NotFirstOrder,
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("truncation exhausted: section of truncation {0} cannot be shifted")]
    TruncationExhausted(u32),
    #[error("generation certificate failed at truncation {truncation}: span deficit {deficit}")]
    CertificateFailed { truncation: u32, deficit: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("element reduces to zero modulo the system")]
    ElementIsZero,
    #[error("coefficients are not constant")]
    NotConstantCoefficients,
    #[error("wrong codimension: expected {expected}, found {found}")]
    WrongCodimension { expected: usize, found: usize },
}

pub type Result<T> = std::result::Result<T, PdeError>;
