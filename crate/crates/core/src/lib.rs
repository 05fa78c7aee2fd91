//! Fast-rate frequency response function (FRF) identification from
//! fast-rate inputs and slow-rate outputs.
//!
//! Downsampling folds `F` frequency bands of the fast-rate output onto each
//! slow-rate bin, so the fast-rate FRF is not directly observable beyond the
//! Nyquist frequency of the output sensor. This crate disentangles the
//! aliased bands by fitting a local rational model of the system and its
//! transient jointly over all bands in a narrow frequency window, solved per
//! bin by weighted linear least squares with a closed form. Variance
//! estimates come with every bin, and the weighted solution can be refined
//! toward the original non-linear cost by Sanathanan-Koerner reweighting and
//! a damped Gauss-Newton pass.
//!
//! Modules:
//! - [`signals`]: DFT machinery, frequency grids, multisine excitation,
//!   downsampling.
//! - [`lti`]: ground-truth rational systems, simulation, noise injection.
//! - [`estimator`]: the per-bin local rational solve across aliased bands.
//! - [`refine`]: iterative reweighting (SK) and damped Gauss-Newton (LM).
//! - [`harness`]: spectral-analysis baseline and comparison metrics.
//! - [`io`]: CSV and plain-text formats for signals, spectra, and estimates.

pub mod error;
pub mod estimator;
pub mod harness;
pub mod io;
pub mod lti;
pub mod refine;
pub mod signals;

pub use error::{Error, Result, Violation};
