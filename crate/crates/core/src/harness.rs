//! Baseline estimator and comparison metrics: spectral analysis of the
//! zero-interpolated slow-rate output with Hanning-windowed averaging, and
//! the cumulative FRF error used to rank methods.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::estimator::{BinFailure, BinStatus, FrfEstimate, Method};
use crate::signals::{dft, RateTag, Spectrum, TimeSignal};

/// Segmentation of the spectral-analysis baseline; the window is the
/// periodic Hanning.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SaConfig {
    pub segment_length: usize,
    pub overlap: usize,
}

impl SaConfig {
    pub fn new(segment_length: usize, overlap: usize) -> Result<Self> {
        if segment_length == 0 {
            return Err(Error::InvalidInput("segment length must be >= 1".into()));
        }
        if overlap >= segment_length {
            return Err(Error::InvalidInput(format!(
                "overlap {overlap} must be smaller than the segment length {segment_length}"
            )));
        }
        Ok(Self {
            segment_length,
            overlap,
        })
    }

    /// Number of full segments available in a record of `n` samples.
    pub fn segment_count(&self, n: usize) -> usize {
        if n < self.segment_length {
            0
        } else {
            (n - self.segment_length) / (self.segment_length - self.overlap) + 1
        }
    }
}

/// Spread the slow-rate samples onto the fast grid with zeros in between:
/// `[y(0), 0, .., 0, y(1), 0, ..]`.
///
/// The DFT of the result repeats the slow-rate spectrum over the `F` bands
/// (without any gain); the band-periodicity assumption of spectral analysis
/// additionally scales it by `F`, which [`spectral_analysis`] applies.
pub fn zero_interpolate(y_l: &TimeSignal, factor: usize) -> TimeSignal {
    if factor <= 1 {
        return y_l.clone();
    }
    let mut samples = vec![0.0; y_l.len() * factor];
    for (m, &y) in y_l.samples.iter().enumerate() {
        samples[m * factor] = y;
    }
    TimeSignal {
        samples,
        sampling_time: y_l.sampling_time / factor as f64,
        rate: RateTag::Fast,
    }
}

fn hanning_periodic(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 - 0.5 * (std::f64::consts::TAU * i as f64 / n as f64).cos())
        .collect()
}

/// Classical FRF estimate: average the cross- and auto-spectra of
/// Hanning-windowed overlapping segments of the fast input and the
/// zero-interpolated output, with the band-periodicity gain `F` applied so a
/// band-flat system comes out with unit gain on average.
///
/// The result lives on the coarse segment grid; only fast bins that are a
/// multiple of `N / segment_length` carry values, the rest are absent.
pub fn spectral_analysis(
    u_h: &TimeSignal,
    y_l: &TimeSignal,
    factor: usize,
    cfg: &SaConfig,
) -> Result<FrfEstimate> {
    let n = u_h.len();
    if factor == 0 || y_l.len() * factor != n {
        return Err(Error::InvalidInput(format!(
            "output record of {} samples times factor {factor} does not match the {n}-sample input",
            y_l.len()
        )));
    }
    let length = cfg.segment_length;
    if length > n {
        return Err(Error::InvalidInput(format!(
            "segment length {length} exceeds the record of {n} samples"
        )));
    }
    if n % length != 0 {
        return Err(Error::InvalidInput(format!(
            "record of {n} samples is not a multiple of the segment length {length}; the \
             coarse grid would not align with the fast frequency grid"
        )));
    }
    let segments = cfg.segment_count(n);
    let step = length - cfg.overlap;
    let y_h = zero_interpolate(y_l, factor);
    let window = hanning_periodic(length);

    let mut cross = vec![Complex64::new(0.0, 0.0); length];
    let mut auto = vec![0.0f64; length];
    for segment in 0..segments {
        let start = segment * step;
        let windowed = |signal: &TimeSignal| -> Result<Spectrum> {
            let samples: Vec<f64> = signal.samples[start..start + length]
                .iter()
                .zip(&window)
                .map(|(x, w)| x * w)
                .collect();
            dft(&TimeSignal::new(samples, signal.sampling_time, signal.rate)?)
        };
        let u_spec = windowed(u_h)?;
        let y_spec = windowed(&y_h)?;
        for p in 0..length {
            cross[p] += y_spec.coefficients[p] * u_spec.coefficients[p].conj();
            auto[p] += u_spec.coefficients[p].norm_sqr();
        }
    }

    let stride = n / length;
    let auto_floor = 1e-14 * auto.iter().cloned().fold(0.0f64, f64::max);
    let mut estimate = FrfEstimate {
        method: Method::Sa,
        sampling_time: u_h.sampling_time,
        g: vec![Complex64::new(f64::NAN, f64::NAN); n],
        variance: vec![f64::NAN; n],
        status: vec![BinStatus::Absent; n],
        transient: Vec::new(),
        noise_variance: Vec::new(),
        failures: Vec::new(),
    };
    for p in 0..length {
        let bin = p * stride;
        if auto[p] <= auto_floor {
            estimate.status[bin] = BinStatus::Failed;
            estimate.failures.push(BinFailure {
                bin: p,
                error: Error::InvalidInput(format!(
                    "no input power at coarse bin {p}; FRF undefined"
                )),
            });
            continue;
        }
        estimate.g[bin] = factor as f64 * cross[p] / auto[p];
        estimate.status[bin] = BinStatus::Ok;
    }
    Ok(estimate)
}

/// Cumulative FRF error over the first `n` bins together with the number of
/// bins that had to be skipped for lack of an estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CumulativeError {
    /// `(1/N) * sum_{k=1..n} |G(k) - Ghat(k)|` over the usable bins.
    pub value: f64,
    /// Bins in `1..=n` without a valid estimate.
    pub skipped: usize,
}

/// Running mean absolute FRF error against the true response, skipping and
/// counting bins where the estimate is absent or failed.
pub fn cumulative_frf_error(
    g_true: &Spectrum,
    g_hat: &FrfEstimate,
    n: usize,
) -> Result<CumulativeError> {
    let bins = g_true.n_points();
    if g_hat.n_fast_bins() != bins {
        return Err(Error::GridMismatch(format!(
            "estimate has {} bins, true response has {bins}",
            g_hat.n_fast_bins()
        )));
    }
    if (g_hat.sampling_time - g_true.sampling_time).abs() > 1e-9 * g_true.sampling_time {
        return Err(Error::GridMismatch(format!(
            "estimate sampling time {} differs from {}",
            g_hat.sampling_time, g_true.sampling_time
        )));
    }
    if n >= bins {
        return Err(Error::InvalidInput(format!(
            "cumulative error over {n} bins exceeds the grid of {bins}"
        )));
    }
    let mut value = 0.0;
    let mut skipped = 0usize;
    for k in 1..=n {
        if g_hat.status[k] == BinStatus::Ok {
            value += (g_true.coefficients[k] - g_hat.g[k]).norm();
        } else {
            skipped += 1;
        }
    }
    Ok(CumulativeError {
        value: value / bins as f64,
        skipped,
    })
}
