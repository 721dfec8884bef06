use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unknown element `{0}`")]
    UnknownElement(String),
    #[error("duplicate element `{0}`")]
    DuplicateElement(String),
    #[error("order relation has a cycle through `{0}` and `{1}`")]
    Cycle(String, String),
    #[error("lower-set enumeration exceeds the cap of {cap}")]
    TooManyLowerSets { cap: usize },
    #[error("not a lower set: `{member}` is present but `{missing}` below it is not")]
    NotLowerSet { member: String, missing: String },
    #[error("lower set is not contained in the principal lower set of `{0}`")]
    NotBelow(String),
    #[error("poset is not a meet semi-lattice")]
    NotMeetSemilattice,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("operands live in different ambient spaces")]
    AmbientMismatch,
    #[error("ambient dimension {dim} exceeds the cap of {cap}")]
    AmbientTooLarge { dim: usize, cap: usize },
    #[error("gram matrix is not symmetric positive definite: {0}")]
    NotPositiveDefinite(String),
    #[error("family is not increasing: H({lower}) is not contained in H({upper})")]
    NotMonotone { lower: String, upper: String },
    #[error("map `{edge}` is not an isometry (deviation {deviation:.3e})")]
    NotIsometry { edge: String, deviation: f64 },
    #[error("diagram does not commute on `{square}` (deviation {deviation:.3e})")]
    NotFunctorial { square: String, deviation: f64 },
    #[error("missing map for covering pair `{0}`")]
    MissingEdge(String),
    #[error("fiber dimensions decrease along `{0}`")]
    DecreasingDims(String),
    #[error("state space of size {size} exceeds the cap of {cap}")]
    StateSpaceTooLarge { size: usize, cap: usize },
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("probability vector must be strictly positive (entry {index} is {value})")]
    NonPositiveProbability { index: usize, value: f64 },
    #[error("degree {degree} exceeds the maximal degree {max}")]
    DegreeTooLarge { degree: usize, max: usize },
    #[error("monomial count {count} exceeds the cap of {cap}")]
    TooManyMonomials { count: usize, cap: usize },
    #[error("moment gram matrix lost rank: {0}")]
    GramRankCollapse(String),
    #[error("invalid input: {0}")]
    Invalid(String),
}
