use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("invalid field descriptor: {0}")]
    InvalidDescriptor(String),
    #[error("unsupported tower: {0}")]
    UnsupportedTower(String),
    #[error("unsupported descriptor: {0}")]
    UnsupportedDescriptor(String),
    #[error("elements belong to different fields")]
    FieldMismatch,
    #[error("element is zero or below the working precision")]
    ZeroOrBelowPrecision,
    #[error("element has negative valuation")]
    NotIntegral,
    #[error("level precondition fails: need n > e' = {e_prime}, got n = {n}")]
    PreconditionLevel { n: i64, e_prime: String },
    #[error("element is not in U^{n}: v(u - 1) = {actual}")]
    NotInLevel { n: i64, actual: String },
    #[error("precision exhausted: {0}")]
    PrecisionExhausted(String),
    #[error("Hensel condition fails: v(f(x0)) = {vf}, v(f'(x0)) = {vd}")]
    HenselConditionFails { vf: String, vd: String },
    #[error("not a p-th power")]
    NotAPthPower,
    #[error("symbol entry {0} is zero at the working precision")]
    ZeroEntry(usize),
    #[error("not a unit")]
    NotAUnit,
    #[error("the iota maps need zeta_p - 1 in the field; only p = 2 is supported")]
    OddPNotSupported,
    #[error("symbol not in tame form: {0}")]
    NotInTameForm(String),
    #[error("arity {0} reached the obstruction branch")]
    ArityUnsupported(usize),
    #[error("invalid pseudo-basis: {0}")]
    InvalidPseudoBasis(String),
    #[error("search budget of {budget} nodes exceeded after {explored} of {total} candidates")]
    SearchBudgetExceeded { budget: u64, explored: u64, total: u64 },
    #[error("precondition fails: {0}")]
    Precondition(String),
}
