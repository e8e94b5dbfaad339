use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("operator is not Hermitian (relative anti-Hermitian part {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error(
        "thermal state with nbar = {nbar} leaves tail weight {tail:.3e} beyond fock_dim = {fock_dim}; \
         need fock_dim >= {required}"
    )]
    ThermalTruncation {
        nbar: f64,
        fock_dim: usize,
        tail: f64,
        required: usize,
    },

    #[error("truncation guard tripped at t = {time:.6e} s: population {population:.3e} in the top Fock levels")]
    Truncation { time: f64, population: f64 },

    #[error("max_step {max_step:.3e} s exceeds the allowed {limit:.3e} s for this drive")]
    StepTooLarge { max_step: f64, limit: f64 },

    #[error("unknown motional mode `{0}`")]
    UnknownMode(String),

    #[error("gradient frequency equals the mode frequency ({0:.6e} rad/s); the formula is singular")]
    Resonance(f64),

    #[error("constraint violated: {0}")]
    Constraint(String),

    #[error("no fit: {0}")]
    NoFit(String),

    #[error("sequence step {index}: {source}")]
    Sequence {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("output: {0}")]
    Output(String),

    #[error("operation cancelled")]
    Cancelled,
}

impl Error {
    /// True for failures of the numerical guards (truncation, step size).
    pub fn is_numerical_guard(&self) -> bool {
        match self {
            Error::Truncation { .. } | Error::StepTooLarge { .. } | Error::ThermalTruncation { .. } => true,
            Error::Sequence { source, .. } => source.is_numerical_guard(),
            _ => false,
        }
    }
}
