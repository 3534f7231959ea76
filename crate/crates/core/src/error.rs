use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid law: {0}")]
    InvalidLaw(String),

    #[error("empty site range {lo}..={hi}")]
    EmptyRange { lo: i64, hi: i64 },

    #[error("operation needs a {expected} environment, got {found}")]
    WrongModel { expected: &'static str, found: &'static str },

    #[error("site {site} has p = {p}; the walk cannot step right there")]
    NonPositiveP { site: i64, p: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("quantity undefined: {0}")]
    Undefined(String),

    #[error("series diverges: {0}")]
    Divergent(String),

    #[error("continued fraction did not converge at depth {depth} (bracket width {width:e})")]
    NonConvergence { depth: usize, width: f64 },

    #[error("site budget exhausted: window would exceed {limit} sites")]
    SiteBudget { limit: usize },

    #[error("too few samples: need at least {needed}, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("step budget exhausted after {completed} of {total} environments")]
    BudgetExhausted { completed: usize, total: usize },

    #[error("event budget exhausted after {events} events at t = {time}")]
    EventBudget { events: u64, time: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
