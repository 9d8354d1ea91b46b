use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("empty isoparametric family for m={m}, k={multiplicity}: l-m-1 = {m2}; minimal multiplicity is {min_multiplicity}")]
    EmptyFamily {
        m: usize,
        multiplicity: usize,
        m2: i64,
        min_multiplicity: usize,
    },

    #[error("construction bug: {0}")]
    Construction(String),

    #[error("point is off the level set: residual {residual:e} exceeds {tolerance:e}")]
    StalePoint { residual: f64, tolerance: f64 },

    #[error("inconsistent {what}: residual {residual:e} exceeds {tolerance:e}")]
    Inconsistency {
        what: String,
        residual: f64,
        tolerance: f64,
    },

    #[error("sampling failed: {0}")]
    Sampling(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("degenerate point: {0}")]
    Degenerate(String),

    #[error("numerical integrity failure in {check}: discrepancy {discrepancy:e} exceeds {tolerance:e}")]
    NumericalIntegrity {
        check: String,
        discrepancy: f64,
        tolerance: f64,
    },
}
