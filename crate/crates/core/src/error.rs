use alloc::string::String;
use core::fmt;

/// Broad class of a failure, used by front ends to pick exit codes and hints.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Config,
    Data,
    Numerical,
    NonConvergence,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Two objects that must describe the same actor set do not.
    DimensionMismatch { expected: usize, found: usize, what: &'static str },
    /// Parameter vector length does not match the effect set.
    LengthMismatch { expected: usize, found: usize, what: &'static str },
    UnknownEffect(String),
    MissingCovariate(String),
    InvalidParameter(String),
    PeriodOutOfRange { period: usize, periods: usize },
    /// The permitted set of an actor contains no option at all.
    EmptyPermittedSet { actor: usize },
    ZeroTotalRate,
    /// A period in which no tie changed; the rate estimate would sit on the boundary.
    DegeneratePeriod { period: usize },
    /// Observed waves differ on a tie variable that the structural-zero mask forbids.
    StructuralZeroConflict { from: usize, to: usize },
    InvalidData(String),
    NoEligibleMove,
    SingularMatrix(&'static str),
    NotPositiveDefinite(&'static str),
    Diverged { iteration: usize, norm: f64 },
    TooLarge { n: usize, max: usize },
    ImpossibleData { period: usize },
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        use Error::*;
        match self {
            UnknownEffect(_) | MissingCovariate(_) | InvalidParameter(_) | LengthMismatch { .. }
            | PeriodOutOfRange { .. } | TooLarge { .. } => ErrorCategory::Config,
            DimensionMismatch { .. }
            | DegeneratePeriod { .. }
            | StructuralZeroConflict { .. }
            | InvalidData(_)
            | EmptyPermittedSet { .. }
            | ImpossibleData { .. } => ErrorCategory::Data,
            ZeroTotalRate | NoEligibleMove | SingularMatrix(_) | NotPositiveDefinite(_) => {
                ErrorCategory::Numerical
            }
            Diverged { .. } => ErrorCategory::NonConvergence,
        }
    }

    /// Short remediation advice shown next to the error message.
    pub fn hint(&self) -> &'static str {
        use Error::*;
        match self {
            DegeneratePeriod { .. } => "merge this period with a neighbouring one",
            StructuralZeroConflict { .. } => "fix the mask or the wave files so forbidden ties never change",
            UnknownEffect(_) => "check effect names against the list in the README",
            MissingCovariate(_) => "declare the covariate in the [data] section",
            TooLarge { .. } => "the exact likelihood enumerates all digraphs; use n <= 4",
            Diverged { .. } => "start from a better initial value or lower gain_initial",
            SingularMatrix(_) | NotPositiveDefinite(_) => "the model may be over-specified for these data",
            EmptyPermittedSet { .. } => "allow the no-change option or relax the structural zeros",
            ImpossibleData { .. } => "the observed waves have zero probability under these parameters",
            _ => "see the documentation of the failing command",
        }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Error::*;
        match self {
            DimensionMismatch { expected, found, what } => {
                write!(f, "{what}: expected dimension {expected}, found {found}")
            }
            LengthMismatch { expected, found, what } => {
                write!(f, "{what}: expected length {expected}, found {found}")
            }
            UnknownEffect(name) => write!(f, "unknown effect `{name}`"),
            MissingCovariate(name) => write!(f, "covariate `{name}` is not defined"),
            InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
            PeriodOutOfRange { period, periods } => {
                write!(f, "period {period} out of range (model has {periods} periods)")
            }
            EmptyPermittedSet { actor } => write!(f, "actor {actor} has an empty permitted set"),
            ZeroTotalRate => write!(f, "total rate of change is zero"),
            DegeneratePeriod { period } => {
                write!(f, "period {} has no observed tie changes", period + 1)
            }
            StructuralZeroConflict { from, to } => write!(
                f,
                "tie ({}, {}) is a structural zero but changes between waves",
                from + 1,
                to + 1
            ),
            InvalidData(msg) => write!(f, "invalid data: {msg}"),
            NoEligibleMove => write!(f, "no Metropolis-Hastings move is eligible for the current path"),
            SingularMatrix(what) => write!(f, "{what} is singular"),
            NotPositiveDefinite(what) => write!(f, "{what} is not positive definite"),
            Diverged { iteration, norm } => {
                write!(f, "estimation diverged at iteration {iteration} (|theta| = {norm:.3e})")
            }
            TooLarge { n, max } => write!(f, "n = {n} exceeds the supported maximum n <= {max}"),
            ImpossibleData { period } => {
                write!(f, "observed transition in period {} has probability zero", period + 1)
            }
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
