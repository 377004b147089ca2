use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the operation (e.g. `Im τ ≤ 0`).
    #[error("domain error: {0}")]
    Domain(String),

    /// A certified series would need more terms than the policy allows.
    #[error("truncation error: series needs n_max = {needed} but the cap is {cap}")]
    Truncation { needed: usize, cap: usize },

    /// The requested transformation has no representation in the residue indexing used here.
    #[error("unsupported convention: {0}")]
    UnsupportedConvention(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    /// A measured magnetic-translation action is not a pure phase times a basis state.
    #[error("convention mismatch at state ({j}, {k}): {detail}")]
    ConventionMismatch { j: usize, k: usize, detail: String },

    /// `q² = 1`, so `q − q⁻¹` vanishes and the U_q(sl2) generators are undefined.
    #[error("degenerate deformation: q^2 = 1 for q = exp(2 pi i {n}/{m})")]
    DegenerateDeformation { m: u32, n: u32 },
}

pub type Result<T> = std::result::Result<T, Error>;
