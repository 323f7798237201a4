use num_complex::Complex64;
use std::fmt;

/// Error type shared by all modules of the crate.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A range-like model parameter (shell radius, well radius, barrier width) was not positive.
    NonPositiveRange { name: &'static str, value: f64 },
    /// A model parameter was NaN or infinite.
    NonFiniteParameter { name: &'static str },
    /// Evaluation was requested at (or numerically on top of) a pole of the
    /// requested quantity.
    PoleEvaluation { k: Complex64 },
    /// Operation is only defined for the other family of models (radial vs 1D).
    WrongModelKind { op: &'static str },
    /// A real wave number argument had to be positive.
    NonPositiveK { k: f64 },
    /// A time argument had to be strictly positive.
    NonPositiveTime { t: f64 },
    /// A zero of the dispersion function sits on the search-region boundary
    /// and nudging the boundary did not cure it.
    ZeroOnBoundary { k: Complex64 },
    /// Newton refinement failed to converge inside its cell.
    NewtonStall { start: Complex64 },
    /// Pole classification cannot decide between axis classes at the origin.
    AmbiguousOnAxis { k: Complex64 },
    /// The supplied wave number is not a zero of the dispersion function.
    NotAPole { k: Complex64, residual: f64 },
    /// The normalization integral vanished (or nearly vanished).
    DegenerateNorm { k: Complex64 },
    /// The residue-extraction circle comes too close to another pole.
    ContourTouchesOtherPole { k: Complex64, other: Complex64 },
    /// A state list that must come in (k, -k*) conjugate pairs does not.
    UnpairedPoles { k: Complex64 },
    /// Two poles are too close for the requested operation to separate them.
    PoleTooClose { a: Complex64, b: Complex64 },
    /// An adaptive numerical process exhausted its budget before reaching
    /// the requested tolerance.
    NoConvergence { what: &'static str, achieved: f64, requested: f64 },
    /// The test function is not compactly supported where the identity holds.
    UnsupportedTestFunction { lo: f64, hi: f64 },
    /// A position argument lies outside the region where the expansion is valid.
    OutsideInteractionRegion { x: f64 },
    /// The exponential-plus-correction rearrangement was requested for a
    /// fourth-quadrant pole that is not proper (Re k <= |Im k|).
    ImproperPoleInExponentialPath { k: Complex64 },
    /// An operation received an empty pole/state selection.
    EmptySelection,
    /// The contour integrand produced non-finite values on the path.
    NonMeromorphicIntegrand { k: Complex64 },
    /// More poles than the configured budget inside the relevance radius.
    PoleBudgetExceeded { found: usize, budget: usize },
    /// An integration path passes within the exclusion distance of a pole.
    PoleOnPath { k: Complex64 },
    /// The remainder series started growing instead of converging.
    SeriesDiverging { n: usize },
    /// Probability leaked into the guard band next to the grid boundary.
    BoundaryContamination { norm: f64 },
    /// Time step violates the accuracy bound of the propagation scheme.
    InvalidTimeStep { dt: f64, bound: f64 },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::NonPositiveRange { name, value } => {
                write!(f, "model parameter {name} must be positive, got {value}")
            }
            Error::NonFiniteParameter { name } => {
                write!(f, "model parameter {name} must be finite")
            }
            Error::PoleEvaluation { k } => {
                write!(f, "evaluation at k = {k} hits a pole of the requested quantity")
            }
            Error::WrongModelKind { op } => {
                write!(f, "operation {op} is not defined for this model kind")
            }
            Error::NonPositiveK { k } => write!(f, "wave number must be positive, got {k}"),
            Error::NonPositiveTime { t } => write!(f, "time must be positive, got {t}"),
            Error::ZeroOnBoundary { k } => {
                write!(f, "dispersion zero on search-region boundary near k = {k}")
            }
            Error::NewtonStall { start } => {
                write!(f, "Newton refinement stalled starting from k = {start}")
            }
            Error::AmbiguousOnAxis { k } => {
                write!(f, "pole at k = {k} is too close to the origin to classify")
            }
            Error::NotAPole { k, residual } => {
                write!(f, "k = {k} is not a dispersion zero (residual {residual:.3e})")
            }
            Error::DegenerateNorm { k } => {
                write!(f, "normalization integral degenerate for pole k = {k}")
            }
            Error::ContourTouchesOtherPole { k, other } => {
                write!(f, "residue circle around k = {k} comes too close to pole at {other}")
            }
            Error::UnpairedPoles { k } => {
                write!(f, "state at k = {k} lacks its conjugate partner at -k*")
            }
            Error::PoleTooClose { a, b } => {
                write!(f, "poles {a} and {b} are too close to separate")
            }
            Error::NoConvergence { what, achieved, requested } => {
                write!(f, "{what} did not converge: reached {achieved:.3e}, wanted {requested:.3e}")
            }
            Error::UnsupportedTestFunction { lo, hi } => {
                write!(f, "test function support [{lo}, {hi}] is not admissible here")
            }
            Error::OutsideInteractionRegion { x } => {
                write!(f, "position {x} lies outside the region of validity")
            }
            Error::ImproperPoleInExponentialPath { k } => {
                write!(f, "pole k = {k} is not proper; exponential rearrangement invalid")
            }
            Error::EmptySelection => write!(f, "empty pole selection"),
            Error::NonMeromorphicIntegrand { k } => {
                write!(f, "integrand not finite at k = {k} on the path")
            }
            Error::PoleBudgetExceeded { found, budget } => {
                write!(f, "{found} poles inside relevance radius exceed budget {budget}")
            }
            Error::PoleOnPath { k } => {
                write!(f, "integration path passes through pole region at k = {k}")
            }
            Error::SeriesDiverging { n } => {
                write!(f, "remainder series diverging at order {n}")
            }
            Error::BoundaryContamination { norm } => {
                write!(f, "probability {norm:.3e} reached the grid boundary guard band")
            }
            Error::InvalidTimeStep { dt, bound } => {
                write!(f, "time step {dt} exceeds accuracy bound {bound}")
            }
        }
    }
}

impl std::error::Error for Error {}

pub type Result<T> = std::result::Result<T, Error>;
