//! DFT machinery, frequency grids, excitation signals, and downsampling for
//! fast-rate/slow-rate signal pairs.
//!
//! Sign conventions: the forward transform uses `exp(-j*w_k*n*T)` and the
//! generalized frequency variable is `Omega_k = exp(-j*w_k*T)`. All bin
//! arithmetic wraps modulo the record length (DFT periodicity).

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rustfft::FftPlanner;
use std::f64::consts::TAU;

use crate::error::{Error, Result};

/// Tolerance used by the default roughness check on input spectra.
pub const DEFAULT_ROUGHNESS_TOL: f64 = 1e-12;

/// Whether a signal lives on the fast or the slow sampling grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateTag {
    Fast,
    Slow,
}

/// A uniformly sampled real signal.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSignal {
    pub samples: Vec<f64>,
    /// Seconds per sample.
    pub sampling_time: f64,
    pub rate: RateTag,
}

impl TimeSignal {
    pub fn new(samples: Vec<f64>, sampling_time: f64, rate: RateTag) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidInput("signal must not be empty".into()));
        }
        if !(sampling_time > 0.0) {
            return Err(Error::InvalidInput(format!(
                "sampling time must be positive, got {sampling_time}"
            )));
        }
        Ok(Self {
            samples,
            sampling_time,
            rate,
        })
    }

    pub fn fast(samples: Vec<f64>, sampling_time: f64) -> Result<Self> {
        Self::new(samples, sampling_time, RateTag::Fast)
    }

    pub fn slow(samples: Vec<f64>, sampling_time: f64) -> Result<Self> {
        Self::new(samples, sampling_time, RateTag::Slow)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Root-mean-square value.
    pub fn rms(&self) -> f64 {
        (self.samples.iter().map(|x| x * x).sum::<f64>() / self.len() as f64).sqrt()
    }

    /// Population variance around the sample mean.
    pub fn variance(&self) -> f64 {
        let n = self.len() as f64;
        let mean = self.samples.iter().sum::<f64>() / n;
        self.samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n
    }
}

/// Complex DFT coefficients on the full frequency grid of one record.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub coefficients: Vec<Complex64>,
    /// Sampling time of the originating record, seconds.
    pub sampling_time: f64,
    pub rate: RateTag,
}

impl Spectrum {
    pub fn new(coefficients: Vec<Complex64>, sampling_time: f64, rate: RateTag) -> Result<Self> {
        if coefficients.is_empty() {
            return Err(Error::InvalidInput("spectrum must not be empty".into()));
        }
        if !(sampling_time > 0.0) {
            return Err(Error::InvalidInput(format!(
                "sampling time must be positive, got {sampling_time}"
            )));
        }
        Ok(Self {
            coefficients,
            sampling_time,
            rate,
        })
    }

    pub fn n_points(&self) -> usize {
        self.coefficients.len()
    }

    /// Coefficient at bin `k`, wrapping modulo the record length.
    pub fn bin(&self, k: i64) -> Complex64 {
        let n = self.coefficients.len() as i64;
        self.coefficients[k.rem_euclid(n) as usize]
    }

    /// Frequency of bin `k` in Hz.
    pub fn freq_hz(&self, k: usize) -> f64 {
        k as f64 / (self.n_points() as f64 * self.sampling_time)
    }

    /// Largest deviation from conjugate symmetry, relative to the largest
    /// coefficient magnitude. Near zero for spectra of real signals; used
    /// as a diagnostic only.
    pub fn conjugate_asymmetry(&self) -> f64 {
        let n = self.n_points();
        let scale = self
            .coefficients
            .iter()
            .map(|c| c.norm())
            .fold(0.0f64, f64::max);
        if scale == 0.0 {
            return 0.0;
        }
        (0..n)
            .map(|k| (self.coefficients[k] - self.coefficients[(n - k) % n].conj()).norm())
            .fold(0.0f64, f64::max)
            / scale
    }
}

/// Angular frequencies `w_k = 2*pi*k / (n*T)` for bins `k = 0..n-1`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyGrid {
    pub omega: Vec<f64>,
    pub n_points: usize,
    pub sampling_time: f64,
}

impl FrequencyGrid {
    pub fn freq_hz(&self, k: usize) -> f64 {
        k as f64 / (self.n_points as f64 * self.sampling_time)
    }
}

/// Build the angular frequency grid for an `n_points` record sampled every
/// `sampling_time` seconds.
pub fn frequency_grid(n_points: usize, sampling_time: f64) -> Result<FrequencyGrid> {
    if n_points == 0 {
        return Err(Error::InvalidInput("grid needs at least one point".into()));
    }
    if !(sampling_time > 0.0) {
        return Err(Error::InvalidInput(format!(
            "sampling time must be positive, got {sampling_time}"
        )));
    }
    let omega = (0..n_points)
        .map(|k| TAU * k as f64 / (n_points as f64 * sampling_time))
        .collect();
    Ok(FrequencyGrid {
        omega,
        n_points,
        sampling_time,
    })
}

/// Forward DFT of a real signal: `X(k) = sum_n x(n) exp(-j*w_k*n*T)`.
pub fn dft(signal: &TimeSignal) -> Result<Spectrum> {
    if signal.is_empty() {
        return Err(Error::InvalidInput("cannot transform empty signal".into()));
    }
    let mut buf: Vec<Complex64> = signal
        .samples
        .iter()
        .map(|&x| Complex64::new(x, 0.0))
        .collect();
    FftPlanner::new()
        .plan_fft_forward(buf.len())
        .process(&mut buf);
    Spectrum::new(buf, signal.sampling_time, signal.rate)
}

/// Inverse DFT for spectra of real signals; the imaginary residual of the
/// inverse transform is discarded.
pub fn idft(spectrum: &Spectrum) -> Result<TimeSignal> {
    if spectrum.coefficients.is_empty() {
        return Err(Error::InvalidInput("cannot invert empty spectrum".into()));
    }
    let n = spectrum.n_points();
    let mut buf = spectrum.coefficients.clone();
    FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
    let samples = buf.iter().map(|c| c.re / n as f64).collect();
    TimeSignal::new(samples, spectrum.sampling_time, spectrum.rate)
}

/// Random-phase multisine description: flat amplitude over `excited_bins`,
/// phases drawn uniformly from `seed`, scaled to `rms` in the time domain.
#[derive(Debug, Clone, PartialEq)]
pub struct MultisineSpec {
    pub n_points: usize,
    pub sampling_time: f64,
    pub rms: f64,
    /// Sorted, deduplicated excited bins in `[1, n_points/2]`.
    excited_bins: Vec<usize>,
    pub seed: u64,
}

impl MultisineSpec {
    pub fn new(
        n_points: usize,
        sampling_time: f64,
        rms: f64,
        excited_bins: impl IntoIterator<Item = usize>,
        seed: u64,
    ) -> Result<Self> {
        if n_points < 2 {
            return Err(Error::InvalidInput(
                "multisine needs at least two points".into(),
            ));
        }
        if !(sampling_time > 0.0) {
            return Err(Error::InvalidInput(format!(
                "sampling time must be positive, got {sampling_time}"
            )));
        }
        if !(rms > 0.0) {
            return Err(Error::InvalidInput(format!(
                "rms must be positive, got {rms}"
            )));
        }
        let mut bins: Vec<usize> = excited_bins.into_iter().collect();
        bins.sort_unstable();
        bins.dedup();
        if bins.is_empty() {
            return Err(Error::InvalidInput("no excited bins".into()));
        }
        let half = n_points / 2;
        if bins[0] < 1 || *bins.last().unwrap() > half {
            return Err(Error::InvalidInput(format!(
                "excited bins must lie in [1, {half}]"
            )));
        }
        Ok(Self {
            n_points,
            sampling_time,
            rms,
            excited_bins: bins,
            seed,
        })
    }

    /// Excite every bin strictly between DC and Nyquist, matching the
    /// broadband flat-spectrum excitation used for identification runs.
    pub fn flat_band(n_points: usize, sampling_time: f64, rms: f64, seed: u64) -> Result<Self> {
        Self::new(n_points, sampling_time, rms, 1..n_points.div_ceil(2), seed)
    }

    pub fn excited_bins(&self) -> &[usize] {
        &self.excited_bins
    }
}

/// Synthesize the random-phase multisine described by `spec`.
///
/// Phases are drawn uniformly on `[0, 2*pi)` from a seeded generator; the
/// amplitude spectrum is flat across the excited bins and the time-domain
/// signal is scaled exactly to the requested RMS.
pub fn generate_multisine(spec: &MultisineSpec) -> Result<TimeSignal> {
    let n = spec.n_points;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut coeffs = vec![Complex64::new(0.0, 0.0); n];
    for &k in &spec.excited_bins {
        if n % 2 == 0 && k == n / 2 {
            // Nyquist coefficient must be real for a real signal; a random
            // sign keeps the phase draw seeded.
            let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
            coeffs[k] = Complex64::new(sign, 0.0);
        } else {
            let phase: f64 = rng.random_range(0.0..TAU);
            coeffs[k] = Complex64::from_polar(1.0, phase);
            coeffs[n - k] = coeffs[k].conj();
        }
    }
    let spectrum = Spectrum::new(coeffs, spec.sampling_time, RateTag::Fast)?;
    let mut signal = idft(&spectrum)?;
    let rms = signal.rms();
    if rms == 0.0 {
        return Err(Error::InvalidInput(
            "multisine synthesized to all zeros".into(),
        ));
    }
    let scale = spec.rms / rms;
    for x in &mut signal.samples {
        *x *= scale;
    }
    Ok(signal)
}

/// Keep every `factor`-th sample: `slow(m) = fast(m*factor)`.
///
/// The record length must be divisible by `factor`; callers trim first.
pub fn downsample(fast: &TimeSignal, factor: usize) -> Result<TimeSignal> {
    if factor == 0 {
        return Err(Error::InvalidInput("downsampling factor must be >= 1".into()));
    }
    if factor == 1 {
        return Ok(fast.clone());
    }
    if fast.len() % factor != 0 {
        return Err(Error::InvalidInput(format!(
            "signal length {} not divisible by downsampling factor {factor}",
            fast.len()
        )));
    }
    let samples = fast.samples.iter().step_by(factor).copied().collect();
    TimeSignal::new(samples, fast.sampling_time * factor as f64, RateTag::Slow)
}

/// Window offsets `r` so that the window around slow-rate bin `k` stays in
/// `[0, 2*half_width]` near the left border and `[m - 2*half_width, m]` near
/// the right border, and is symmetric elsewhere.
pub(crate) fn window_offsets(k: usize, half_width: usize, m: usize) -> std::ops::RangeInclusive<i64> {
    let (k, n_w, m) = (k as i64, half_width as i64, m as i64);
    if k <= n_w {
        -k..=(2 * n_w - k)
    } else if k > m - n_w {
        (m - 2 * n_w - k)..=(m - k)
    } else {
        -n_w..=n_w
    }
}

/// Check that the input spectrum is rough enough around slow-rate bin `k`:
/// within the window and each of its `factor` aliased images, no two bins may
/// carry values closer than `tol`. Out-of-range bins wrap modulo the record
/// length.
pub fn check_roughness(
    u: &Spectrum,
    k: usize,
    half_width: usize,
    factor: usize,
    m: usize,
    tol: f64,
) -> bool {
    debug_assert_eq!(u.n_points(), factor * m);
    let offsets: Vec<i64> = window_offsets(k, half_width, m).collect();
    for i in 0..factor as i64 {
        for (a, &r1) in offsets.iter().enumerate() {
            for &r2 in &offsets[a + 1..] {
                let u1 = u.bin(k as i64 + r1 + i * m as i64);
                let u2 = u.bin(k as i64 + r2 + i * m as i64);
                if (u1 - u2).norm() <= tol {
                    return false;
                }
            }
        }
    }
    true
}
