use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("{0} is not a prime")]
    NotPrime(u64),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// The residues handed to a congruence solver are not known to enough
    /// q-adic digits.
    #[error("precision too low: residues known mod q^{given}, need q^{needed}")]
    Precision { needed: u32, given: u32 },

    /// A scan would visit more residue pairs than the configured budget.
    #[error("pair budget exceeded: {label} needs {pairs} pairs (budget {budget})")]
    Resource {
        label: String,
        pairs: u128,
        budget: u128,
    },

    #[error("internal consistency failure: {0}")]
    Consistency(String),

    #[error("not implemented: {0}")]
    NotImplemented(String),

    #[error("numerical failure: {0}")]
    Numeric(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
