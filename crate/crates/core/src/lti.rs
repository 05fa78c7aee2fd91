//! Ground-truth discrete-time rational systems: simulation with transients,
//! analytic frequency response, noise injection, and synthesis of lightly
//! damped resonant plants for experiments.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::signals::{FrequencyGrid, RateTag, Spectrum, TimeSignal};

/// Discrete-time rational transfer function `B(q)/A(q)` with polynomials in
/// the lag operator `q^-1`: `B(q) = sum_i b[i] q^-i`, `A(q) = sum_i a[i] q^-i`.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalSystem {
    b: Vec<f64>,
    a: Vec<f64>,
}

impl RationalSystem {
    pub fn new(b: Vec<f64>, a: Vec<f64>) -> Result<Self> {
        if b.is_empty() || a.is_empty() {
            return Err(Error::InvalidInput(
                "numerator and denominator must be non-empty".into(),
            ));
        }
        if a[0] == 0.0 {
            return Err(Error::InvalidInput(
                "leading denominator coefficient must be nonzero".into(),
            ));
        }
        if b.iter().chain(a.iter()).any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput("coefficients must be finite".into()));
        }
        Ok(Self { b, a })
    }

    /// The identity system `G = 1`.
    pub fn unit() -> Self {
        Self {
            b: vec![1.0],
            a: vec![1.0],
        }
    }

    /// A static gain.
    pub fn static_gain(gain: f64) -> Self {
        Self {
            b: vec![gain],
            a: vec![1.0],
        }
    }

    pub fn numerator(&self) -> &[f64] {
        &self.b
    }

    pub fn denominator(&self) -> &[f64] {
        &self.a
    }

    /// Poles in the `z` plane (roots of `sum_i a[i] z^(n_a - i)`), computed
    /// from the companion matrix.
    pub fn poles(&self) -> Vec<Complex64> {
        // Strip trailing zero coefficients; they only add poles at z = 0.
        let mut a = self.a.clone();
        while a.len() > 1 && *a.last().unwrap() == 0.0 {
            a.pop();
        }
        let degree = a.len() - 1;
        if degree == 0 {
            return Vec::new();
        }
        let mut companion = DMatrix::<f64>::zeros(degree, degree);
        for i in 0..degree {
            companion[(0, i)] = -a[i + 1] / a[0];
        }
        for i in 1..degree {
            companion[(i, i - 1)] = 1.0;
        }
        companion.complex_eigenvalues().iter().copied().collect()
    }

    /// All poles strictly inside the unit circle.
    pub fn is_stable(&self) -> bool {
        self.poles().iter().all(|p| p.norm() < 1.0)
    }

    /// Evaluate `B` and `A` at the generalized frequency variable
    /// `omega_var = exp(-j*w*T)`.
    fn eval_polynomials(&self, omega_var: Complex64) -> (Complex64, Complex64) {
        let horner = |c: &[f64]| {
            c.iter()
                .rev()
                .fold(Complex64::new(0.0, 0.0), |acc, &ci| acc * omega_var + ci)
        };
        (horner(&self.b), horner(&self.a))
    }

    /// Frequency response at a single angular frequency.
    pub fn response_at(&self, omega: f64, sampling_time: f64) -> Result<Complex64> {
        let omega_var = Complex64::from_polar(1.0, -omega * sampling_time);
        let (num, den) = self.eval_polynomials(omega_var);
        if den.norm() < 1e-14 {
            return Err(Error::InvalidInput(format!(
                "denominator vanishes at omega = {omega}"
            )));
        }
        Ok(num / den)
    }
}

/// Analytic frequency response `G(Omega_k) = B(Omega_k)/A(Omega_k)` on a
/// frequency grid, with `Omega_k = exp(-j*w_k*T)`.
pub fn freqresp(sys: &RationalSystem, grid: &FrequencyGrid) -> Result<Spectrum> {
    let mut coeffs = Vec::with_capacity(grid.n_points);
    for (k, &omega) in grid.omega.iter().enumerate() {
        let omega_var = Complex64::from_polar(1.0, -omega * grid.sampling_time);
        let (num, den) = sys.eval_polynomials(omega_var);
        if den.norm() < 1e-14 {
            return Err(Error::PoleOnGrid { bin: k });
        }
        coeffs.push(num / den);
    }
    Spectrum::new(coeffs, grid.sampling_time, RateTag::Fast)
}

/// Past samples feeding the difference equation at the start of a record.
///
/// `past_output[i]` holds `y(-1-i)` and `past_input[i]` holds `u(-1-i)`.
/// Missing entries are treated as zero.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct InitialConditions {
    pub past_output: Vec<f64>,
    pub past_input: Vec<f64>,
}

/// Run the difference equation
/// `sum_i a[i] y(n-i) = sum_i b[i] u(n-i)`
/// over the input record. Nonzero initial conditions produce the transient
/// contribution of a finite-length record.
pub fn simulate(
    sys: &RationalSystem,
    input: &TimeSignal,
    initial: Option<&InitialConditions>,
) -> Result<TimeSignal> {
    if input.is_empty() {
        return Err(Error::InvalidInput("cannot simulate empty input".into()));
    }
    let default_ic = InitialConditions::default();
    let ic = initial.unwrap_or(&default_ic);
    let n = input.len();
    let a0 = sys.a[0];
    let mut output = vec![0.0; n];

    let u_at = |idx: i64| -> f64 {
        if idx >= 0 {
            input.samples[idx as usize]
        } else {
            ic.past_input.get((-idx - 1) as usize).copied().unwrap_or(0.0)
        }
    };

    for sample in 0..n {
        let mut acc = 0.0;
        for (i, &bi) in sys.b.iter().enumerate() {
            if bi != 0.0 {
                acc += bi * u_at(sample as i64 - i as i64);
            }
        }
        for (i, &ai) in sys.a.iter().enumerate().skip(1) {
            if ai != 0.0 {
                let idx = sample as i64 - i as i64;
                let y_prev = if idx >= 0 {
                    output[idx as usize]
                } else {
                    ic.past_output.get((-idx - 1) as usize).copied().unwrap_or(0.0)
                };
                acc -= ai * y_prev;
            }
        }
        let y = acc / a0;
        if !y.is_finite() {
            return Err(Error::Overflow { sample });
        }
        output[sample] = y;
    }
    TimeSignal::new(output, input.sampling_time, input.rate)
}

/// Additive measurement-noise description: zero-mean i.i.d. Gaussian driving
/// noise of the given variance, optionally shaped by a rational system.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSpec {
    pub variance: f64,
    pub seed: u64,
    pub shaping: Option<RationalSystem>,
}

impl NoiseSpec {
    pub fn white(variance: f64, seed: u64) -> Result<Self> {
        if !(variance >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "noise variance must be non-negative, got {variance}"
            )));
        }
        Ok(Self {
            variance,
            seed,
            shaping: None,
        })
    }
}

/// Add seeded measurement noise to a signal. A zero variance returns the
/// signal unchanged.
pub fn add_noise(signal: &TimeSignal, noise: &NoiseSpec) -> Result<TimeSignal> {
    if noise.variance == 0.0 {
        return Ok(signal.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
    let normal = Normal::new(0.0, noise.variance.sqrt())
        .map_err(|e| Error::InvalidInput(format!("noise distribution: {e}")))?;
    let e: Vec<f64> = (0..signal.len()).map(|_| normal.sample(&mut rng)).collect();
    let disturbance = match &noise.shaping {
        Some(h) => {
            let e_sig = TimeSignal::new(e, signal.sampling_time, signal.rate)?;
            simulate(h, &e_sig, None)?.samples
        }
        None => e,
    };
    let samples = signal
        .samples
        .iter()
        .zip(&disturbance)
        .map(|(y, v)| y + v)
        .collect();
    TimeSignal::new(samples, signal.sampling_time, signal.rate)
}

/// Driving-noise variance that yields the requested signal-to-noise ratio
/// (variance of the signal over variance of the noise) in decibels.
pub fn variance_for_snr_db(signal: &TimeSignal, snr_db: f64) -> f64 {
    signal.variance() / 10f64.powf(snr_db / 10.0)
}

/// Measured signal-to-noise ratio between a clean signal and its noisy copy.
pub fn measured_snr_db(clean: &TimeSignal, noisy: &TimeSignal) -> f64 {
    let n = clean.len().min(noisy.len());
    let noise: Vec<f64> = (0..n)
        .map(|i| noisy.samples[i] - clean.samples[i])
        .collect();
    let noise_var = {
        let mean = noise.iter().sum::<f64>() / n as f64;
        noise.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64
    };
    10.0 * (clean.variance() / noise_var).log10()
}

/// One lightly damped second-order mode of a resonant plant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mode {
    pub frequency_hz: f64,
    pub damping: f64,
    /// Peak magnitude of the mode at resonance; may be negative to flip the
    /// residue sign.
    pub gain: f64,
}

/// Build a discrete-time plant as a sum of second-order resonant modes.
///
/// Each mode is discretized by mapping its continuous-time pole pair
/// `s = -zeta*w_n +/- j*w_n*sqrt(1-zeta^2)` to `z = exp(s*T)`, which places
/// the discrete resonance exactly at the requested frequency. The constant
/// numerator of each mode is normalized so its magnitude at resonance equals
/// `gain`. An empty mode list yields a unit static-gain system.
pub fn make_resonant_plant(modes: &[Mode], sampling_time: f64) -> Result<RationalSystem> {
    if !(sampling_time > 0.0) {
        return Err(Error::InvalidInput(format!(
            "sampling time must be positive, got {sampling_time}"
        )));
    }
    if modes.is_empty() {
        return Ok(RationalSystem::unit());
    }
    let nyquist = 1.0 / (2.0 * sampling_time);
    let mut sections: Vec<(f64, Vec<f64>)> = Vec::with_capacity(modes.len());
    for mode in modes {
        if !(mode.damping > 0.0 && mode.damping < 1.0) {
            return Err(Error::InvalidInput(format!(
                "damping ratio must lie in (0, 1), got {}",
                mode.damping
            )));
        }
        if !(mode.frequency_hz > 0.0 && mode.frequency_hz < nyquist) {
            return Err(Error::InvalidInput(format!(
                "mode frequency {} Hz outside (0, {nyquist}) Hz",
                mode.frequency_hz
            )));
        }
        if !mode.gain.is_finite() || mode.gain == 0.0 {
            return Err(Error::InvalidInput(format!(
                "mode gain must be finite and nonzero, got {}",
                mode.gain
            )));
        }
        let w_n = TAU * mode.frequency_hz;
        let w_d = w_n * (1.0 - mode.damping * mode.damping).sqrt();
        let radius = (-mode.damping * w_n * sampling_time).exp();
        let angle = w_d * sampling_time;
        let denom = vec![1.0, -2.0 * radius * angle.cos(), radius * radius];
        // |A| at the resonance angle, so the section peaks at |gain|.
        let omega_var = Complex64::from_polar(1.0, -angle);
        let a_mag = denom
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * omega_var + c)
            .norm();
        sections.push((mode.gain * a_mag, denom));
    }

    // Sum of sections over the common denominator.
    let mut den = vec![1.0];
    for (_, a) in &sections {
        den = poly_mul(&den, a);
    }
    let mut num = vec![0.0; den.len()];
    for (i, (k, _)) in sections.iter().enumerate() {
        let mut term = vec![*k];
        for (j, (_, a)) in sections.iter().enumerate() {
            if i != j {
                term = poly_mul(&term, a);
            }
        }
        poly_add_into(&mut num, &term);
    }
    while num.len() > 1 && *num.last().unwrap() == 0.0 {
        num.pop();
    }
    RationalSystem::new(num, den)
}

fn poly_mul(p: &[f64], q: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; p.len() + q.len() - 1];
    for (i, &pi) in p.iter().enumerate() {
        for (j, &qj) in q.iter().enumerate() {
            out[i + j] += pi * qj;
        }
    }
    out
}

fn poly_add_into(acc: &mut Vec<f64>, p: &[f64]) {
    if p.len() > acc.len() {
        acc.resize(p.len(), 0.0);
    }
    for (a, &pi) in acc.iter_mut().zip(p.iter()) {
        *a += pi;
    }
}
