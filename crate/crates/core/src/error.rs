use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix data is not square or is empty")]
    NotSquare,
    #[error("non-finite value in input")]
    NonFinite,
    #[error("matrix exponential overflowed")]
    Overflow,
    #[error("matrix is numerically singular")]
    Singular,
    #[error("eigen-iteration did not converge (residual {residual:e})")]
    NonConvergence { residual: f64 },
    #[error("dominant eigenvalue {rho} is not simple (gap {gap:e}); the maximum principle requires a simple Perron root")]
    NotSimple { rho: f64, gap: f64 },
    #[error("invalid time interval [{a}, {b}] for horizon {horizon}")]
    InvalidInterval { a: f64, b: f64, horizon: f64 },
    #[error("invalid control: {0}")]
    InvalidControl(&'static str),
    #[error("control horizon {control} does not match system horizon {system}")]
    HorizonMismatch { control: f64, system: f64 },
    #[error("invalid system: A+B and A-B must both be Metzler")]
    InvalidSystem,
    #[error("index {index} out of range (len {len})")]
    BadIndex { index: usize, len: usize },
    #[error("matrices A and B must be symmetric")]
    NotSymmetric,
    #[error("needle variation of width {needed} does not fit in horizon {horizon}")]
    HorizonTooShort { needed: f64, horizon: f64 },
    #[error("control has {arcs} arcs, at least 2 required")]
    TooFewArcs { arcs: usize },
    #[error("perturbation makes an arc duration negative")]
    InvalidPerturbation,
    #[error("search needs {needed} evaluations, budget is {budget}")]
    BudgetExceeded { needed: u64, budget: u64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),
}
