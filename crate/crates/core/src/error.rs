use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("non-invertible: zero series")]
    NonInvertible,
    #[error("divergent composition: inner series has leading grade {0}, need at least 1")]
    DivergentComposition(i32),
    #[error("outer series of a composition must have nonnegative integer powers only")]
    OuterNotIntegerPower,
    #[error("expected an integer-power series")]
    NotIntegerPower,
    #[error("no unique inverse; use invert_two_branch")]
    NoUniqueInverse,
    #[error("unsupported leading grade {0}")]
    UnsupportedLeadingGrade(i32),
    #[error("degenerate: second moment vanishes")]
    DegenerateSecondMoment,
    #[error("not a positive-definite moment sequence")]
    NotPositiveDefinite,
    #[error("not a moment sequence: {0}")]
    NotMomentSequence(&'static str),
    #[error("invalid moment sequence: {0}")]
    InvalidMomentSequence(&'static str),
    #[error("mean and second moment both vanish: no S-transform exists")]
    DegenerateMean,
    #[error("branch inconsistency: the two recovery routes differ by {0:e}")]
    BranchInconsistency(f64),
    #[error("insufficient order: need {needed}, have {available}")]
    InsufficientOrder { needed: usize, available: usize },
    #[error("order too large for enumeration: {0} (limit 16)")]
    OrderTooLarge(usize),
    #[error("order must be at least 1")]
    ZeroOrder,
    #[error("no closed form registered for {0}")]
    NoClosedForm(&'static str),
    #[error("invalid law parameters: {0}")]
    InvalidLaw(&'static str),
    #[error("invalid series: {0}")]
    InvalidSeries(&'static str),
    #[error("unknown curve `{0}`")]
    UnknownCurve(String),
    #[error("invalid curve: {0}")]
    InvalidCurve(&'static str),
    #[error("invalid grid: {0}")]
    InvalidGrid(&'static str),
    #[error("regularization height must be positive, got {0}")]
    InvalidEpsilon(f64),
    #[error("polynomial root finder did not converge")]
    RootFinding,
    #[error("root tracking failed at x = {0}: no root within continuation radius")]
    RootTracking(f64),
    #[error("moment sequence not positive to required depth (breakdown at level {0})")]
    HankelBreakdown(usize),
}
