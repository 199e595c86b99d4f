use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LatticeError {
    #[error("site ({}, {}, {}) mixes coordinate parities", .0[0], .0[1], .0[2])]
    MixedParity([i64; 3]),
    #[error("step index {0} is not one of ±1..±4")]
    InvalidStep(i8),
    #[error("step code {0:?} has a non-binary digit")]
    InvalidCode([u8; 3]),
    #[error("cannot parse site from {0:?}; expected x1,x2,x3")]
    Parse(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WalkError {
    #[error("code strings have lengths {0}, {1}, {2}; expected equal and non-zero")]
    StringLengths(usize, usize, usize),
    #[error("state mixes sublattices: {0} does not share the parity of the existing support")]
    MixedSupport(crate::lattice::Site),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CombinatoricsError {
    #[error("count {count} exceeds string length {t}")]
    CountOutOfRange { t: u64, count: u64 },
    #[error("closed-form coefficients need t >= 2, got t = {0}")]
    TooShort(u64),
    #[error("enumeration of {size} string triples exceeds the budget of {budget}")]
    BudgetExceeded { size: u128, budget: u128 },
    #[error("bit strings of length {0} cannot be enumerated (limit 64)")]
    TooLong(usize),
    #[error("string triples need length t >= 1")]
    ZeroLength,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("exact value 2^{exponent} (approximately) overflows double precision")]
pub struct FloatOverflow {
    pub exponent: i64,
}

#[derive(Debug, Error)]
pub enum WireError {
    #[error("invalid integer literal {0:?}")]
    Integer(String),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Walk(#[from] WalkError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("duplicate site {0} in state file")]
    DuplicateSite(crate::lattice::Site),
}
