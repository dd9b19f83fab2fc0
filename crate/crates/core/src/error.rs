use crate::register::Axis;

/// Crate-wide error type. Validation failures are reported before any state
/// is mutated; every constructor and operation returns `Result` rather than
/// panicking on bad input.
#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    #[error("level count d = {0} must be at least 2")]
    LevelCountTooSmall(usize),
    #[error("register must contain at least one site")]
    EmptyRegister,
    #[error("register d = {d}, sites = {n_sites} exceeds the dense cap of {cap} amplitudes")]
    RegisterTooLarge { d: usize, n_sites: usize, cap: usize },
    #[error("site index {site} out of range for {n_sites} sites")]
    SiteOutOfRange { site: usize, n_sites: usize },
    #[error("digit {digit} out of range for d = {d}")]
    DigitOutOfRange { digit: usize, d: usize },
    #[error("expected {expected} amplitudes, got {got}")]
    AmplitudeLengthMismatch { expected: usize, got: usize },
    #[error("state norm {norm} deviates from 1 by more than {tol}")]
    NotNormalized { norm: f64, tol: f64 },
    #[error("matrix is not unitary: max |U\u{2020}U - I| entry = {defect:.3e}")]
    NotUnitary { defect: f64 },
    #[error("axis label {label} out of range for d = {d}")]
    LabelOutOfRange { label: usize, d: usize },
    #[error("y-axis kets are only defined for d = 2, got d = {0}")]
    YAxisRequiresQubits(usize),
    #[error("expected a register with d = 2, got d = {0}")]
    RequiresQubits(usize),
    #[error("register already carries a probe site")]
    ProbeAlreadyPresent,
    #[error("register carries no probe site")]
    ProbeMissing,
    #[error("phase gate requires two distinct sites, got site {0} twice")]
    PhaseGateSameSite(usize),
    #[error("support must list distinct in-range sites and must not be empty")]
    InvalidSupport,
    #[error("probe must be prepared along the x axis, got {0:?}")]
    ProbeAxisNotX(Axis),
    #[error("unknown axis character '{0}', expected one of X, Y, Z, E")]
    UnknownAxisChar(char),
    #[error("element acts as the identity on every site")]
    IdentityElement,
    #[error("element length {len} does not match system size {n}")]
    ElementLengthMismatch { len: usize, n: usize },
    #[error("no cyclic transform is defined for axis {0:?}")]
    NoCyclicTransform(Axis),
    #[error("dense operator dimension {dim} exceeds cap {cap}")]
    OperatorTooLarge { dim: usize, cap: usize },
    #[error("operator dimensions {a} and {b} are incompatible")]
    DimensionMismatch { a: usize, b: usize },
    #[error("declared eigenvalue {0} is missing from the operator's spectrum")]
    EigenvalueMissing(String),
    #[error("projector family failed validation: {0}")]
    ProjectorDefect(String),
    #[error("pulse sequence is malformed: {0}")]
    MalformedSequence(String),
    #[error("pulse sequence contains non-unitary primitives; cannot compose a matrix")]
    NonUnitaryPrimitive,
    #[error("support size {n} is above the dense verification bound of {bound} sites")]
    SupportSizeOutOfRange { n: usize, bound: usize },
    #[error("json: {0}")]
    Json(String),
}

pub type Result<T> = std::result::Result<T, Error>;
