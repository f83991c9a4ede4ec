//! Error type shared by every module in the crate.

use alloc::string::String;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Two containers that must agree in length do not.
    LengthMismatch {
        field: &'static str,
        expected: usize,
        actual: usize,
    },
    /// NaN or infinity where a finite value is required.
    NonFiniteValue { field: &'static str, row: usize },
    /// Treatment indicator outside {0, 1}.
    NonBinaryTreatment { row: usize, value: f64 },
    /// A required treatment arm has no units. `fold` is set when the
    /// failure concerns a cross-validation fold or its complement.
    EmptyArm {
        treated: bool,
        context: &'static str,
        fold: Option<usize>,
    },
    /// Fewer units than an operation needs.
    TooFewUnits { needed: usize, actual: usize },
    /// Stratified folding needs at least K units per arm.
    TooFewPerArm {
        treated: bool,
        needed: usize,
        actual: usize,
    },
    /// Covariate blocks with different widths cannot be combined.
    ColumnMismatch { left: usize, right: usize },
    /// Collinear regression design: smallest/largest singular value of the
    /// (equilibrated) Gram matrix fell at or below the tolerance.
    SingularDesign { ratio: f64, tol: f64 },
    /// The assembled weighted system is numerically singular.
    SingularSystem { lambda: f64, ratio: f64, tol: f64 },
    /// Propensity outside the open interval (0, 1).
    DegeneratePropensity { row: Option<usize>, value: f64 },
    /// Zero variance in both samples; the Welch statistic is undefined.
    DegenerateVariance,
    /// Mixing weight outside [0, 1].
    LambdaOutOfRange { lambda: f64 },
    /// Cross-validation grid empty, unsorted, or out of range.
    InvalidGrid { reason: &'static str },
    /// Newton iteration exhausted its budget; reports the final gradient norm.
    NoConvergence { grad_norm: f64 },
    /// The requested loss is not available for this fitting routine.
    UnsupportedLoss { op: &'static str },
    /// Anything else wrong with a configuration.
    InvalidConfig { reason: String },
    /// A Monte Carlo or bootstrap replicate failed; carries the replicate
    /// index and seed so the failure can be replayed in isolation.
    ReplicateFailed {
        run: usize,
        seed: u64,
        source: alloc::boxed::Box<Error>,
    },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::LengthMismatch {
                field,
                expected,
                actual,
            } => write!(f, "length mismatch in `{field}`: expected {expected}, got {actual}"),
            Error::NonFiniteValue { field, row } => {
                write!(f, "non-finite value in `{field}` at row {row}")
            }
            Error::NonBinaryTreatment { row, value } => {
                write!(f, "treatment at row {row} is {value}, expected 0 or 1")
            }
            Error::EmptyArm {
                treated,
                context,
                fold,
            } => {
                let arm = if *treated { "treated" } else { "control" };
                match fold {
                    Some(k) => write!(f, "no {arm} units in {context} (fold {k})"),
                    None => write!(f, "no {arm} units in {context}"),
                }
            }
            Error::TooFewUnits { needed, actual } => {
                write!(f, "too few units: need {needed}, have {actual}")
            }
            Error::TooFewPerArm {
                treated,
                needed,
                actual,
            } => {
                let arm = if *treated { "treated" } else { "control" };
                write!(f, "too few {arm} units for stratified folds: need {needed}, have {actual}")
            }
            Error::ColumnMismatch { left, right } => {
                write!(f, "covariate column mismatch: {left} vs {right}")
            }
            Error::SingularDesign { ratio, tol } => {
                write!(f, "singular design: singular value ratio {ratio:e} <= tolerance {tol:e}")
            }
            Error::SingularSystem { lambda, ratio, tol } => write!(
                f,
                "singular weighted system at lambda={lambda}: ratio {ratio:e} <= tolerance {tol:e}"
            ),
            Error::DegeneratePropensity { row, value } => match row {
                Some(r) => write!(f, "propensity {value} at row {r} outside (0, 1)"),
                None => write!(f, "propensity {value} outside (0, 1)"),
            },
            Error::DegenerateVariance => {
                write!(f, "zero variance in both samples; t statistic undefined")
            }
            Error::LambdaOutOfRange { lambda } => {
                write!(f, "lambda {lambda} outside [0, 1]")
            }
            Error::InvalidGrid { reason } => write!(f, "invalid lambda grid: {reason}"),
            Error::NoConvergence { grad_norm } => {
                write!(f, "no convergence: final gradient norm {grad_norm:e}")
            }
            Error::UnsupportedLoss { op } => write!(f, "loss not supported by {op}"),
            Error::InvalidConfig { reason } => write!(f, "invalid configuration: {reason}"),
            Error::ReplicateFailed { run, seed, source } => {
                write!(f, "replicate {run} (seed {seed}) failed: {source}")
            }
        }
    }
}

impl core::error::Error for Error {}

impl Error {
    /// Stable machine-readable tag, used by the CLI for one-line errors.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::LengthMismatch { .. } => "length_mismatch",
            Error::NonFiniteValue { .. } => "non_finite_value",
            Error::NonBinaryTreatment { .. } => "non_binary_treatment",
            Error::EmptyArm { .. } => "empty_arm",
            Error::TooFewUnits { .. } => "too_few_units",
            Error::TooFewPerArm { .. } => "too_few_per_arm",
            Error::ColumnMismatch { .. } => "column_mismatch",
            Error::SingularDesign { .. } => "singular_design",
            Error::SingularSystem { .. } => "singular_system",
            Error::DegeneratePropensity { .. } => "degenerate_propensity",
            Error::DegenerateVariance => "degenerate_variance",
            Error::LambdaOutOfRange { .. } => "lambda_out_of_range",
            Error::InvalidGrid { .. } => "invalid_grid",
            Error::NoConvergence { .. } => "no_convergence",
            Error::UnsupportedLoss { .. } => "unsupported_loss",
            Error::InvalidConfig { .. } => "invalid_config",
            Error::ReplicateFailed { .. } => "replicate_failed",
        }
    }

    /// Attach a fold index to arm-coverage errors surfaced inside CV.
    pub(crate) fn with_fold(self, k: usize) -> Self {
        match self {
            Error::EmptyArm {
                treated,
                context,
                fold: None,
            } => Error::EmptyArm {
                treated,
                context,
                fold: Some(k),
            },
            other => other,
        }
    }
}
