//! Error types shared across the crate.

use std::fmt;

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// A violated uniqueness condition for the local-model window design.
///
/// The closed-form window solve is unique only when the window holds at
/// least as many points as parameters, fits inside the slow-rate grid, and
/// the input spectrum is rough enough that no two bins in a window (or any
/// of its aliased images) coincide.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Violation {
    /// Window has fewer points than local-model parameters.
    WindowTooSmall { points: usize, parameters: usize },
    /// Window has more points than the slow-rate record provides.
    WindowExceedsData { points: usize, data: usize },
    /// Input spectrum repeats a value inside a window or its aliased images;
    /// `bin` is the first slow-rate center bin where the check failed.
    InputNotRough { bin: usize },
}

impl Violation {
    /// Short stable label used in diagnostics and exit messages.
    pub fn label(&self) -> &'static str {
        match self {
            Violation::WindowTooSmall { .. } => "window-too-small",
            Violation::WindowExceedsData { .. } => "window-exceeds-data",
            Violation::InputNotRough { .. } => "input-not-rough",
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::WindowTooSmall { points, parameters } => write!(
                f,
                "window-too-small: {points} window points cannot identify {parameters} parameters"
            ),
            Violation::WindowExceedsData { points, data } => write!(
                f,
                "window-exceeds-data: window of {points} points exceeds the {data} slow-rate bins"
            ),
            Violation::InputNotRough { bin } => write!(
                f,
                "input-not-rough: input spectrum repeats within the window around bin {bin} or \
                 one of its aliased images"
            ),
        }
    }
}

/// Crate-wide error type.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An argument or signal failed validation.
    InvalidInput(String),
    /// The estimator configuration violates one or more uniqueness conditions.
    InvalidConfig(Vec<Violation>),
    /// The regressor for the window centered at `bin` is numerically rank
    /// deficient (reciprocal condition below threshold).
    RankDeficientWindow { bin: usize, rcond: f64 },
    /// The system denominator vanishes at frequency bin `bin`.
    PoleOnGrid { bin: usize },
    /// The local-model denominator vanishes at window offset `offset`.
    LocalPole { offset: i64 },
    /// A simulation produced a non-finite sample at index `sample`.
    Overflow { sample: usize },
    /// No residual degrees of freedom; the noise variance is unavailable.
    NoDegreesOfFreedom,
    /// A data file could not be read, written, or parsed.
    File {
        path: String,
        line: Option<usize>,
        message: String,
    },
    /// Two estimates or spectra are not defined on the same grid.
    GridMismatch(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidInput(msg) => write!(f, "invalid input: {msg}"),
            Error::InvalidConfig(violations) => {
                write!(f, "invalid estimator configuration:")?;
                for v in violations {
                    write!(f, " [{v}]")?;
                }
                Ok(())
            }
            Error::RankDeficientWindow { bin, rcond } => write!(
                f,
                "window at bin {bin} is rank deficient (reciprocal condition {rcond:.2e}); \
                 check that the input spectrum is sufficiently rough over the window and its \
                 aliased images (e.g. use a random-phase multisine)"
            ),
            Error::PoleOnGrid { bin } => {
                write!(f, "system denominator vanishes at frequency bin {bin}")
            }
            Error::LocalPole { offset } => write!(
                f,
                "local-model denominator vanishes at window offset {offset}"
            ),
            Error::Overflow { sample } => write!(
                f,
                "simulation diverged (non-finite output at sample {sample}); system is unstable"
            ),
            Error::NoDegreesOfFreedom => write!(
                f,
                "no residual degrees of freedom; window size equals parameter count, noise \
                 variance unavailable"
            ),
            Error::File {
                path,
                line,
                message,
            } => match line {
                Some(line) => write!(f, "{path}:{line}: {message}"),
                None => write!(f, "{path}: {message}"),
            },
            Error::GridMismatch(msg) => write!(f, "grid mismatch: {msg}"),
        }
    }
}

impl std::error::Error for Error {}
