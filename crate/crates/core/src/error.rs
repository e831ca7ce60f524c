use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error(
        "truncation at nmax = {nmax} discards probability {discarded:e} (tolerance {eps_tail:e}); \
         use nmax >= {required}"
    )]
    Truncation {
        nmax: usize,
        discarded: f64,
        eps_tail: f64,
        required: usize,
    },

    #[error("trace drifted by {drift:e} during evolution at nmax = {nmax}; increase nmax")]
    TruncationLeak { drift: f64, nmax: usize },

    #[error("non-finite Wigner series term at (n = {n}, m = {m})")]
    NumericalOverflow { n: usize, m: usize },

    #[error("oracle basis too small: working nmax = {have}, need at least {required}")]
    InsufficientHeadroom { have: usize, required: usize },

    #[error("invalid state: {0}")]
    InvalidState(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
