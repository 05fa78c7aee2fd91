//! Per-frequency-bin local rational modeling over aliased frequency bands.
//!
//! Each slow-rate bin `k` receives contributions from the `F` fast-rate bins
//! `k + f*M`. A local model parameterizes the FRF in every band and the
//! transient with polynomial numerators over a common denominator inside a
//! window of `2*n_w + 1` bins around `k`. Weighting the residual by the
//! denominator turns the fit into a linear least-squares problem with a
//! closed-form solution per window, from which the fast-rate FRF, the
//! transient, the noise variance, and the FRF variance are extracted.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use std::fmt;
use std::ops::RangeInclusive;
use std::str::FromStr;

use crate::error::{Error, Result, Violation};
use crate::signals::{check_roughness, window_offsets, Spectrum, DEFAULT_ROUGHNESS_TOL};

/// Local-model orders and window geometry for the per-bin solve.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorConfig {
    /// Downsampling factor `F` between input and output rates.
    pub downsampling_factor: usize,
    /// Window half-width `n_w`; each window holds `2*n_w + 1` bins.
    pub window_half_width: usize,
    /// System numerator degree `R_g` per band.
    pub system_numerator_degree: usize,
    /// Transient numerator degree `R_t`.
    pub transient_numerator_degree: usize,
    /// Common denominator degree `R_e`.
    pub denominator_degree: usize,
    /// Windows whose scaled regressor has a reciprocal condition number
    /// below this threshold are reported rank deficient.
    pub rcond_threshold: f64,
    /// Tolerance for the input-roughness diagnostic.
    pub roughness_tol: f64,
}

impl EstimatorConfig {
    pub fn new(
        downsampling_factor: usize,
        window_half_width: usize,
        system_numerator_degree: usize,
        transient_numerator_degree: usize,
        denominator_degree: usize,
    ) -> Result<Self> {
        if downsampling_factor == 0 {
            return Err(Error::InvalidInput(
                "downsampling factor must be >= 1".into(),
            ));
        }
        Ok(Self {
            downsampling_factor,
            window_half_width,
            system_numerator_degree,
            transient_numerator_degree,
            denominator_degree,
            rcond_threshold: 1e-12,
            roughness_tol: DEFAULT_ROUGHNESS_TOL,
        })
    }

    /// Build the summed-band configuration from per-band rational degrees
    /// `R_n` (numerator), `R_d` (denominator), and `R_m` (transient
    /// numerator): `R_g = R_n + R_d*(F-1)`, `R_t = R_m + R_d*(F-1)`,
    /// `R_e = R_d*F`.
    pub fn from_band_degrees(
        downsampling_factor: usize,
        window_half_width: usize,
        numerator_degree: usize,
        denominator_degree: usize,
        transient_degree: usize,
    ) -> Result<Self> {
        let spread = denominator_degree * (downsampling_factor.saturating_sub(1));
        Self::new(
            downsampling_factor,
            window_half_width,
            numerator_degree + spread,
            transient_degree + spread,
            denominator_degree * downsampling_factor,
        )
    }

    /// Polynomial-only configuration: unit denominator with equal system and
    /// transient numerator degrees.
    pub fn polynomial(
        downsampling_factor: usize,
        window_half_width: usize,
        degree: usize,
    ) -> Result<Self> {
        Self::new(downsampling_factor, window_half_width, degree, degree, 0)
    }

    /// Number of local-model parameters `(R_g + 1)*F + R_t + 1 + R_e`.
    pub fn n_parameters(&self) -> usize {
        (self.system_numerator_degree + 1) * self.downsampling_factor
            + self.transient_numerator_degree
            + 1
            + self.denominator_degree
    }

    /// Number of bins per window, `2*n_w + 1`.
    pub fn window_points(&self) -> usize {
        2 * self.window_half_width + 1
    }

    /// Structural uniqueness violations against a slow-rate record of `m`
    /// bins (window size versus parameter count and record length).
    pub fn structural_violations(&self, m: usize) -> Vec<Violation> {
        let mut violations = Vec::new();
        if self.window_points() < self.n_parameters() {
            violations.push(Violation::WindowTooSmall {
                points: self.window_points(),
                parameters: self.n_parameters(),
            });
        }
        if self.window_points() > m {
            violations.push(Violation::WindowExceedsData {
                points: self.window_points(),
                data: m,
            });
        }
        violations
    }

    /// Power of the window offset `r` associated with each parameter, in
    /// layout order.
    pub(crate) fn row_powers(&self) -> Vec<u32> {
        let mut powers = Vec::with_capacity(self.n_parameters());
        for s in 0..=self.system_numerator_degree {
            for _ in 0..self.downsampling_factor {
                powers.push(s as u32);
            }
        }
        for s in 0..=self.transient_numerator_degree {
            powers.push(s as u32);
        }
        for s in 1..=self.denominator_degree {
            powers.push(s as u32);
        }
        powers
    }
}

/// Solved local-model parameters for one window, in the layout
/// `[theta_G (F) | theta_g (R_g*F, power-major) | T-block (R_t+1) | theta_e (R_e)]`.
///
/// The FRF and transient blocks are stored scaled by `1/F`; use
/// [`ParameterVector::frf`] and [`ParameterVector::transient`] for the
/// physical values.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterVector {
    values: Vec<Complex64>,
    bands: usize,
    system_degree: usize,
    transient_degree: usize,
    denominator_degree: usize,
}

impl ParameterVector {
    pub fn new(values: Vec<Complex64>, cfg: &EstimatorConfig) -> Result<Self> {
        if values.len() != cfg.n_parameters() {
            return Err(Error::InvalidInput(format!(
                "parameter vector length {} does not match the {} model parameters",
                values.len(),
                cfg.n_parameters()
            )));
        }
        Ok(Self {
            values,
            bands: cfg.downsampling_factor,
            system_degree: cfg.system_numerator_degree,
            transient_degree: cfg.transient_numerator_degree,
            denominator_degree: cfg.denominator_degree,
        })
    }

    pub fn zeros(cfg: &EstimatorConfig) -> Self {
        Self::new(vec![Complex64::new(0.0, 0.0); cfg.n_parameters()], cfg).unwrap()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn bands(&self) -> usize {
        self.bands
    }

    pub fn system_degree(&self) -> usize {
        self.system_degree
    }

    pub fn transient_degree(&self) -> usize {
        self.transient_degree
    }

    pub fn denominator_degree(&self) -> usize {
        self.denominator_degree
    }

    /// Numerator coefficient for offset power `s` in band `f` (the `s = 0`
    /// entries are the scaled FRF block).
    pub fn numerator(&self, s: usize, band: usize) -> Complex64 {
        debug_assert!(s <= self.system_degree && band < self.bands);
        self.values[s * self.bands + band]
    }

    /// Transient-numerator coefficient for offset power `s`.
    pub fn transient_coeff(&self, s: usize) -> Complex64 {
        debug_assert!(s <= self.transient_degree);
        self.values[(self.system_degree + 1) * self.bands + s]
    }

    /// Denominator coefficient `e_s` for `s` in `1..=R_e`.
    pub fn denominator_coeff(&self, s: usize) -> Complex64 {
        debug_assert!(s >= 1 && s <= self.denominator_degree);
        self.values[(self.system_degree + 1) * self.bands + self.transient_degree + s]
    }

    /// Estimated FRF at band `f`, i.e. `F` times the stored block entry.
    pub fn frf(&self, band: usize) -> Complex64 {
        self.numerator(0, band) * self.bands as f64
    }

    /// Estimated transient at the window center, `F` times the stored entry.
    pub fn transient(&self) -> Complex64 {
        self.transient_coeff(0) * self.bands as f64
    }

    /// Local denominator `1 + sum_s e_s r^s` at offset `r`.
    pub fn denominator_at(&self, r: f64) -> Complex64 {
        let mut acc = Complex64::new(1.0, 0.0);
        let mut r_pow = 1.0;
        for s in 1..=self.denominator_degree {
            r_pow *= r;
            acc += self.denominator_coeff(s) * r_pow;
        }
        acc
    }
}

/// Window offsets `r` for the local window around slow-rate bin `k`,
/// shifted inward at the left and right borders of the grid.
pub fn band_window(k: usize, half_width: usize, m: usize) -> RangeInclusive<i64> {
    window_offsets(k, half_width, m)
}

/// Assemble the regressor `K_w` (parameters x window bins) and the stacked
/// outputs for the window around slow-rate bin `k`.
///
/// The column for offset `r` is
/// `[K1(r,R_g) (x) U_bar(k+r); K1(r,R_t); -K2(r,R_e)*Y_l(k+r)]` with
/// `K1(r,R) = [1, r, .., r^R]^T`, `K2(r,R) = [r, .., r^R]^T`, and
/// `U_bar(k+r) = [U(k+r), U(k+r+M), .., U(k+r+(F-1)M)]^T`. Slow-rate bins
/// wrap modulo `M`, fast-rate bins modulo `N`.
pub fn build_regressor(
    u: &Spectrum,
    y_l: &Spectrum,
    k: usize,
    cfg: &EstimatorConfig,
) -> Result<(DMatrix<Complex64>, DVector<Complex64>)> {
    let factor = cfg.downsampling_factor;
    let n = u.n_points();
    let m = y_l.n_points();
    if n != factor * m {
        return Err(Error::InvalidInput(format!(
            "input record of {n} bins is not {factor} times the output record of {m} bins"
        )));
    }
    if k >= m {
        return Err(Error::InvalidInput(format!(
            "center bin {k} outside the slow-rate grid of {m} bins"
        )));
    }
    let violations = cfg.structural_violations(m);
    if !violations.is_empty() {
        return Err(Error::InvalidConfig(violations));
    }

    let n_params = cfg.n_parameters();
    let n_win = cfg.window_points();
    let mut regressor = DMatrix::<Complex64>::zeros(n_params, n_win);
    let mut outputs = DVector::<Complex64>::zeros(n_win);

    for (col, r) in band_window(k, cfg.window_half_width, m).enumerate() {
        let y_val = y_l.bin(k as i64 + r);
        outputs[col] = y_val;
        let r_f = r as f64;

        let mut r_pow = 1.0;
        for s in 0..=cfg.system_numerator_degree {
            for band in 0..factor {
                let u_val = u.bin(k as i64 + r + (band * m) as i64);
                regressor[(s * factor + band, col)] = u_val * r_pow;
            }
            r_pow *= r_f;
        }

        let t_base = (cfg.system_numerator_degree + 1) * factor;
        let mut r_pow = 1.0;
        for s in 0..=cfg.transient_numerator_degree {
            regressor[(t_base + s, col)] = Complex64::new(r_pow, 0.0);
            r_pow *= r_f;
        }

        let e_base = t_base + cfg.transient_numerator_degree + 1;
        let mut r_pow = r_f;
        for s in 1..=cfg.denominator_degree {
            regressor[(e_base + s - 1, col)] = -y_val * r_pow;
            r_pow *= r_f;
        }
    }
    Ok((regressor, outputs))
}

/// Closed-form solve of one window together with its residual and degrees of
/// freedom.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowSolve {
    pub center_bin: usize,
    pub theta: ParameterVector,
    pub residual: DVector<Complex64>,
    /// Degrees of freedom: window points minus parameters.
    pub dof: usize,
    /// Reciprocal condition number of the scaled regressor.
    pub rcond: f64,
}

/// Scale each regressor row by `n_w^-s` so the polynomial basis becomes
/// `(r/n_w)^s`, bounding the entries and keeping the stacked problem well
/// conditioned despite its Vandermonde structure.
fn scaled_design_matrix(
    regressor: &DMatrix<Complex64>,
    cfg: &EstimatorConfig,
) -> (DMatrix<Complex64>, Vec<f64>) {
    let base = cfg.window_half_width.max(1) as f64;
    let scales: Vec<f64> = cfg
        .row_powers()
        .iter()
        .map(|&s| base.powi(-(s as i32)))
        .collect();
    // The design matrix is the transposed regressor: window bins x parameters.
    let mut design = regressor.transpose();
    for (i, &scale) in scales.iter().enumerate() {
        design.column_mut(i).apply(|v| *v *= scale);
    }
    (design, scales)
}

fn rcond_of(design: &DMatrix<Complex64>) -> f64 {
    let singular_values = design.clone().svd(false, false).singular_values;
    let max = singular_values.iter().fold(0.0f64, |a, &b| a.max(b));
    let min = singular_values.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    if max == 0.0 {
        0.0
    } else {
        min / max
    }
}

/// Minimize `||Y_lw - theta * K_w||` over the local-model parameters via a
/// QR factorization of the scaled design matrix.
pub fn solve_window(
    regressor: &DMatrix<Complex64>,
    outputs: &DVector<Complex64>,
    cfg: &EstimatorConfig,
    k: usize,
) -> Result<WindowSolve> {
    let n_params = cfg.n_parameters();
    if regressor.nrows() != n_params || regressor.ncols() != outputs.len() {
        return Err(Error::InvalidInput(format!(
            "regressor of {}x{} does not match {} parameters and {} outputs",
            regressor.nrows(),
            regressor.ncols(),
            n_params,
            outputs.len()
        )));
    }
    let (design, scales) = scaled_design_matrix(regressor, cfg);
    let rcond = rcond_of(&design);
    if !rcond.is_finite() || rcond < cfg.rcond_threshold {
        return Err(Error::RankDeficientWindow { bin: k, rcond });
    }
    let qr = design.qr();
    let projected = qr.q().adjoint() * outputs;
    let scaled_theta = qr
        .r()
        .solve_upper_triangular(&projected)
        .ok_or(Error::RankDeficientWindow { bin: k, rcond })?;

    let values: Vec<Complex64> = scaled_theta
        .iter()
        .zip(&scales)
        .map(|(v, &s)| v * s)
        .collect();
    let theta = ParameterVector::new(values, cfg)?;
    let theta_vec = DVector::from_column_slice(theta.values());
    let residual = outputs - regressor.transpose() * theta_vec;
    Ok(WindowSolve {
        center_bin: k,
        theta,
        residual,
        dof: outputs.len() - n_params,
        rcond,
    })
}

/// FRF values at the window's `F` band bins and the transient at the center
/// bin, unscaled from the stored parameter block.
pub fn extract_frf(theta: &ParameterVector) -> (Vec<Complex64>, Complex64) {
    let g = (0..theta.bands()).map(|f| theta.frf(f)).collect();
    (g, theta.transient())
}

/// Noise-variance estimate `C_v = residual * residual^H / dof`.
pub fn estimate_noise_variance(residual: &DVector<Complex64>, dof: usize) -> Result<f64> {
    if dof == 0 {
        return Err(Error::NoDegreesOfFreedom);
    }
    Ok(residual.iter().map(|c| c.norm_sqr()).sum::<f64>() / dof as f64)
}

/// Variance of the estimated FRF in each band:
/// `var(G_f) = F^2 * (S_f^H S_f) * C_v` where `S_f` projects the noise onto
/// the band-`f` FRF parameter through the window's normal equations.
pub fn estimate_frf_variance(
    regressor: &DMatrix<Complex64>,
    noise_variance: f64,
    cfg: &EstimatorConfig,
    k: usize,
) -> Result<Vec<f64>> {
    if !(noise_variance >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "noise variance must be non-negative, got {noise_variance}"
        )));
    }
    let (design, _) = scaled_design_matrix(regressor, cfg);
    let rcond = rcond_of(&design);
    if !rcond.is_finite() || rcond < cfg.rcond_threshold {
        return Err(Error::RankDeficientWindow { bin: k, rcond });
    }
    let r = design.qr().unpack_r();
    let factor = cfg.downsampling_factor;
    let mut variances = Vec::with_capacity(factor);
    for band in 0..factor {
        // S_f^H S_f is the (f, f) entry of (K_w K_w^H)^-1, i.e. the squared
        // norm of R^-H e_f; the FRF rows have offset power zero so the basis
        // scaling drops out.
        let mut selector = DVector::<Complex64>::zeros(r.ncols());
        selector[band] = Complex64::new(1.0, 0.0);
        let solved = r
            .adjoint()
            .solve_lower_triangular(&selector)
            .ok_or(Error::RankDeficientWindow { bin: k, rcond })?;
        variances.push((factor * factor) as f64 * solved.norm_squared() * noise_variance);
    }
    Ok(variances)
}

/// Estimated slow-rate output of the local model at window offset `r`: the
/// rationally weighted numerator blocks evaluated against the input
/// spectrum, divided by the common denominator.
pub fn eval_estimated_output(
    theta: &ParameterVector,
    u: &Spectrum,
    k: usize,
    r: i64,
) -> Result<Complex64> {
    let factor = theta.bands();
    let n = u.n_points();
    if n % factor != 0 {
        return Err(Error::InvalidInput(format!(
            "input record of {n} bins is not divisible into {factor} bands"
        )));
    }
    let m = n / factor;
    let r_f = r as f64;
    let denominator = theta.denominator_at(r_f);
    if denominator.norm() < 1e-14 {
        return Err(Error::LocalPole { offset: r });
    }
    let mut numerator = Complex64::new(0.0, 0.0);
    for band in 0..factor {
        let mut band_num = Complex64::new(0.0, 0.0);
        let mut r_pow = 1.0;
        for s in 0..=theta.system_degree {
            band_num += theta.numerator(s, band) * r_pow;
            r_pow *= r_f;
        }
        numerator += band_num * u.bin(k as i64 + r + (band * m) as i64);
    }
    let mut r_pow = 1.0;
    for s in 0..=theta.transient_degree {
        numerator += theta.transient_coeff(s) * r_pow;
        r_pow *= r_f;
    }
    Ok(numerator / denominator)
}

/// Check the window-design conditions against a slow-rate record of `m` bins
/// and, when an input spectrum is supplied, the roughness of the input over
/// every window and its aliased images. Returns all violated conditions.
pub fn validate_config(cfg: &EstimatorConfig, m: usize, u: Option<&Spectrum>) -> Vec<Violation> {
    let mut violations = cfg.structural_violations(m);
    if let Some(u) = u {
        if u.n_points() == cfg.downsampling_factor * m {
            for k in 0..m {
                if !check_roughness(
                    u,
                    k,
                    cfg.window_half_width,
                    cfg.downsampling_factor,
                    m,
                    cfg.roughness_tol,
                ) {
                    violations.push(Violation::InputNotRough { bin: k });
                    break;
                }
            }
        }
    }
    violations
}

/// Identification method tags for estimates and reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    /// Local rational model across aliased bands (closed form).
    Lrm,
    /// Local polynomial model across aliased bands (`R_e = 0`).
    Lpm,
    /// Spectral analysis with zero interpolation and Hanning windowing.
    Sa,
    /// LRM refined by Sanathanan-Koerner iterations.
    LrmSk,
    /// LRM refined by SK iterations and a damped Gauss-Newton pass.
    LrmSkLm,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Lrm,
        Method::Lpm,
        Method::Sa,
        Method::LrmSk,
        Method::LrmSkLm,
    ];

    /// Lower-case identifier usable in file names.
    pub fn slug(&self) -> &'static str {
        match self {
            Method::Lrm => "lrm",
            Method::Lpm => "lpm",
            Method::Sa => "sa",
            Method::LrmSk => "lrm_sk",
            Method::LrmSkLm => "lrm_sk_lm",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Method::Lrm => "LRM",
            Method::Lpm => "LPM",
            Method::Sa => "SA",
            Method::LrmSk => "LRM+SK",
            Method::LrmSkLm => "LRM+SK+LM",
        };
        f.write_str(name)
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "+").as_str() {
            "lrm" => Ok(Method::Lrm),
            "lpm" => Ok(Method::Lpm),
            "sa" => Ok(Method::Sa),
            "lrm+sk" | "lrm_sk" => Ok(Method::LrmSk),
            "lrm+sk+lm" | "lrm_sk_lm" => Ok(Method::LrmSkLm),
            other => Err(Error::InvalidInput(format!("unknown method '{other}'"))),
        }
    }
}

/// Per-bin estimation status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinStatus {
    Ok,
    /// The method does not produce a value at this bin.
    Absent,
    /// The window solve failed; see the estimate's failure list.
    Failed,
}

impl fmt::Display for BinStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BinStatus::Ok => "ok",
            BinStatus::Absent => "absent",
            BinStatus::Failed => "failed",
        })
    }
}

impl FromStr for BinStatus {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ok" => Ok(BinStatus::Ok),
            "absent" => Ok(BinStatus::Absent),
            "failed" => Ok(BinStatus::Failed),
            other => Err(Error::InvalidInput(format!(
                "unknown bin status '{other}'"
            ))),
        }
    }
}

/// A bin whose solve failed during a sweep: the window center bin for
/// local-model sweeps, the coarse bin for spectral analysis.
#[derive(Debug, Clone, PartialEq)]
pub struct BinFailure {
    pub bin: usize,
    pub error: Error,
}

/// Non-parametric FRF estimate over the full fast-rate grid, with per-bin
/// variance and status, plus the transient and noise-variance estimates on
/// the slow-rate grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FrfEstimate {
    pub method: Method,
    /// Fast sampling time.
    pub sampling_time: f64,
    pub g: Vec<Complex64>,
    pub variance: Vec<f64>,
    pub status: Vec<BinStatus>,
    /// Transient estimate on the slow-rate grid; empty for methods that do
    /// not model it.
    pub transient: Vec<Complex64>,
    /// Noise-variance estimate per slow-rate bin; empty if unavailable.
    pub noise_variance: Vec<f64>,
    pub failures: Vec<BinFailure>,
}

impl FrfEstimate {
    pub fn n_fast_bins(&self) -> usize {
        self.g.len()
    }

    /// Frequency of fast-rate bin `k` in Hz.
    pub fn freq_hz(&self, k: usize) -> f64 {
        k as f64 / (self.n_fast_bins() as f64 * self.sampling_time)
    }
}

pub(crate) struct WindowOutcome {
    pub g: Vec<Complex64>,
    pub variance: Vec<f64>,
    pub transient: Complex64,
    pub noise_variance: f64,
}

pub(crate) fn solve_one_bin(
    u: &Spectrum,
    y_l: &Spectrum,
    k: usize,
    cfg: &EstimatorConfig,
) -> Result<(WindowOutcome, ParameterVector)> {
    let (regressor, outputs) = build_regressor(u, y_l, k, cfg)?;
    let solve = solve_window(&regressor, &outputs, cfg, k)?;
    let (g, transient) = extract_frf(&solve.theta);
    let (noise_variance, variance) = match estimate_noise_variance(&solve.residual, solve.dof) {
        Ok(c_v) => (c_v, estimate_frf_variance(&regressor, c_v, cfg, k)?),
        // A saturated window still yields the FRF, only without variances.
        Err(Error::NoDegreesOfFreedom) => (f64::NAN, vec![f64::NAN; cfg.downsampling_factor]),
        Err(e) => return Err(e),
    };
    Ok((
        WindowOutcome {
            g,
            variance,
            transient,
            noise_variance,
        },
        solve.theta,
    ))
}

pub(crate) fn check_sweep_inputs(
    u: &Spectrum,
    y_l: &Spectrum,
    cfg: &EstimatorConfig,
) -> Result<usize> {
    let factor = cfg.downsampling_factor;
    let n = u.n_points();
    let m = y_l.n_points();
    if n != factor * m {
        return Err(Error::InvalidInput(format!(
            "input record of {n} bins is not {factor} times the output record of {m} bins"
        )));
    }
    let expected_ratio = factor as f64;
    let ratio = y_l.sampling_time / u.sampling_time;
    if (ratio - expected_ratio).abs() > 1e-6 * expected_ratio {
        return Err(Error::InvalidInput(format!(
            "sampling-time ratio {ratio} does not match downsampling factor {factor}"
        )));
    }
    let violations = cfg.structural_violations(m);
    if !violations.is_empty() {
        return Err(Error::InvalidConfig(violations));
    }
    Ok(m)
}

pub(crate) fn empty_estimate(method: Method, n: usize, m: usize, sampling_time: f64) -> FrfEstimate {
    FrfEstimate {
        method,
        sampling_time,
        g: vec![Complex64::new(f64::NAN, f64::NAN); n],
        variance: vec![f64::NAN; n],
        status: vec![BinStatus::Failed; n],
        transient: vec![Complex64::new(f64::NAN, f64::NAN); m],
        noise_variance: vec![f64::NAN; m],
        failures: Vec::new(),
    }
}

pub(crate) fn merge_outcome(estimate: &mut FrfEstimate, k: usize, m: usize, w: &WindowOutcome) {
    for (band, (g, var)) in w.g.iter().zip(&w.variance).enumerate() {
        let bin = k + band * m;
        estimate.g[bin] = *g;
        estimate.variance[bin] = *var;
        estimate.status[bin] = BinStatus::Ok;
    }
    estimate.transient[k] = w.transient;
    estimate.noise_variance[k] = w.noise_variance;
}

/// Sweep all slow-rate bins: build, solve, and extract every window, then
/// assemble the fast-rate FRF via the band map `k + f*M`.
///
/// A failing window marks its bands as failed without aborting the sweep.
/// The result is deterministic and independent of execution order.
pub fn identify_frf(u: &Spectrum, y_l: &Spectrum, cfg: &EstimatorConfig) -> Result<FrfEstimate> {
    let m = check_sweep_inputs(u, y_l, cfg)?;
    let results = sweep_bins(m, |k| solve_one_bin(u, y_l, k, cfg));

    let method = if cfg.denominator_degree == 0 {
        Method::Lpm
    } else {
        Method::Lrm
    };
    let mut estimate = empty_estimate(method, u.n_points(), m, u.sampling_time);
    for (k, outcome) in results.into_iter().enumerate() {
        match outcome {
            Ok((w, _)) => merge_outcome(&mut estimate, k, m, &w),
            Err(error) => estimate.failures.push(BinFailure { bin: k, error }),
        }
    }
    Ok(estimate)
}

#[cfg(feature = "parallel")]
pub(crate) fn sweep_bins<T, F>(m: usize, solve: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..m).into_par_iter().map(solve).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn sweep_bins<T, F>(m: usize, solve: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..m).map(solve).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lti::{freqresp, make_resonant_plant, simulate, Mode};
    use crate::signals::{
        dft, downsample, frequency_grid, generate_multisine, MultisineSpec, RateTag,
    };
    use approx::assert_relative_eq;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn table_config() -> EstimatorConfig {
        EstimatorConfig::new(3, 18, 4, 4, 7).unwrap()
    }

    fn random_spectrum(n: usize, sampling_time: f64, rate: RateTag, seed: u64) -> Spectrum {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let coeffs = (0..n)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        Spectrum::new(coeffs, sampling_time, rate).unwrap()
    }

    /// Random parameter vector with a denominator kept small enough to stay
    /// away from zero inside the window.
    fn random_theta(cfg: &EstimatorConfig, seed: u64) -> ParameterVector {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n_w = cfg.window_half_width.max(1) as f64;
        let mut values = Vec::with_capacity(cfg.n_parameters());
        for (i, &power) in cfg.row_powers().iter().enumerate() {
            let e_block = i >= cfg.n_parameters() - cfg.denominator_degree;
            let magnitude = if e_block { 0.05 } else { 1.0 };
            let scale = magnitude / n_w.powi(power as i32);
            values.push(Complex64::new(
                rng.random_range(-scale..scale),
                rng.random_range(-scale..scale),
            ));
        }
        ParameterVector::new(values, cfg).unwrap()
    }

    /// Synthesize slow-rate outputs exactly representable by `theta` over the
    /// window around `k`.
    fn exact_outputs(
        theta: &ParameterVector,
        u: &Spectrum,
        k: usize,
        cfg: &EstimatorConfig,
        m: usize,
    ) -> Spectrum {
        let mut y = vec![Complex64::new(0.0, 0.0); m];
        for r in band_window(k, cfg.window_half_width, m) {
            let bin = (k as i64 + r).rem_euclid(m as i64) as usize;
            y[bin] = eval_estimated_output(theta, u, k, r).unwrap();
        }
        Spectrum::new(
            y,
            u.sampling_time * cfg.downsampling_factor as f64,
            RateTag::Slow,
        )
        .unwrap()
    }

    #[test]
    fn config_counts_parameters_and_window_points() {
        let cfg = table_config();
        assert_eq!(cfg.n_parameters(), 27);
        assert_eq!(cfg.window_points(), 37);
        assert!(cfg.structural_violations(400).is_empty());
    }

    #[test]
    fn band_degree_constructor_expands_orders() {
        // R_n = R_d = R_m = 2 with F = 3 expands to R_g = R_t = 6, R_e = 6.
        let cfg = EstimatorConfig::from_band_degrees(3, 18, 2, 2, 2).unwrap();
        assert_eq!(cfg.system_numerator_degree, 6);
        assert_eq!(cfg.transient_numerator_degree, 6);
        assert_eq!(cfg.denominator_degree, 6);
    }

    #[test]
    fn regressor_reduces_to_polynomial_form_for_single_rate() {
        let cfg = EstimatorConfig::polynomial(1, 3, 2).unwrap();
        let u = random_spectrum(16, 1.0, RateTag::Fast, 1);
        let y = random_spectrum(16, 1.0, RateTag::Slow, 2);
        let (k_w, _) = build_regressor(&u, &y, 8, &cfg).unwrap();
        assert_eq!(k_w.nrows(), 6);
        for (col, r) in band_window(8, 3, 16).enumerate() {
            let u_val = u.bin(8 + r);
            let r_f = r as f64;
            for s in 0..3usize {
                let p = r_f.powi(s as i32);
                assert_eq!(k_w[(s, col)], u_val * p);
                assert_eq!(k_w[(3 + s, col)], Complex64::new(p, 0.0));
            }
        }
    }

    #[test]
    fn regressor_matches_table_geometry() {
        let cfg = table_config();
        let u = random_spectrum(1200, 0.5e-3, RateTag::Fast, 3);
        let y = random_spectrum(400, 1.5e-3, RateTag::Slow, 4);
        let (k_w, y_lw) = build_regressor(&u, &y, 200, &cfg).unwrap();
        assert_eq!((k_w.nrows(), k_w.ncols()), (27, 37));
        assert_eq!(y_lw.len(), 37);
    }

    #[test]
    fn regressor_center_column_zeroes_slope_terms() {
        let cfg = table_config();
        let u = random_spectrum(1200, 0.5e-3, RateTag::Fast, 5);
        let y = random_spectrum(400, 1.5e-3, RateTag::Slow, 6);
        let k = 200;
        let (k_w, _) = build_regressor(&u, &y, k, &cfg).unwrap();
        let center_col = cfg.window_half_width;
        for (row, &power) in cfg.row_powers().iter().enumerate() {
            if power > 0 {
                assert_eq!(k_w[(row, center_col)], Complex64::new(0.0, 0.0), "row {row}");
            }
        }
        // r = 0 keeps the band inputs and the constant transient entry.
        for band in 0..3usize {
            assert_eq!(k_w[(band, center_col)], u.bin((k + band * 400) as i64));
        }
        assert_eq!(k_w[(15, center_col)], Complex64::new(1.0, 0.0));
    }

    #[test]
    fn regressor_rejects_bad_window_configs() {
        let u = random_spectrum(1200, 0.5e-3, RateTag::Fast, 7);
        let y = random_spectrum(400, 1.5e-3, RateTag::Slow, 8);
        let too_small = EstimatorConfig::new(3, 12, 4, 4, 7).unwrap();
        match build_regressor(&u, &y, 0, &too_small) {
            Err(Error::InvalidConfig(v)) => {
                assert!(matches!(v[0], Violation::WindowTooSmall { .. }))
            }
            other => panic!("expected config error, got {other:?}"),
        }
        let too_large = EstimatorConfig::new(3, 201, 4, 4, 7).unwrap();
        match build_regressor(&u, &y, 0, &too_large) {
            Err(Error::InvalidConfig(v)) => {
                assert!(matches!(v[0], Violation::WindowExceedsData { .. }))
            }
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn constant_system_solves_exactly() {
        let cfg = EstimatorConfig::new(1, 2, 0, 0, 0).unwrap();
        let g_true = Complex64::new(1.3, -0.4);
        let u = random_spectrum(16, 1.0, RateTag::Fast, 9);
        let y = Spectrum::new(
            u.coefficients.iter().map(|c| c * g_true).collect(),
            1.0,
            RateTag::Slow,
        )
        .unwrap();
        let (k_w, y_lw) = build_regressor(&u, &y, 8, &cfg).unwrap();
        let solve = solve_window(&k_w, &y_lw, &cfg, 8).unwrap();
        assert!((solve.theta.frf(0) - g_true).norm() < 1e-12);
        assert!(solve.residual.norm() < 1e-12);
    }

    #[test]
    fn exactly_representable_window_is_recovered() {
        let cfg = table_config();
        let (n, m) = (1200, 400);
        let u = random_spectrum(n, 0.5e-3, RateTag::Fast, 10);
        let theta_true = random_theta(&cfg, 11);
        let k = 123;
        let y = exact_outputs(&theta_true, &u, k, &cfg, m);
        let (k_w, y_lw) = build_regressor(&u, &y, k, &cfg).unwrap();
        let solve = solve_window(&k_w, &y_lw, &cfg, k).unwrap();
        assert!(
            solve.residual.norm() < 1e-8 * y_lw.norm(),
            "residual {}",
            solve.residual.norm()
        );
        for (found, expected) in solve.theta.values().iter().zip(theta_true.values()) {
            assert!((found - expected).norm() < 1e-6, "{found} vs {expected}");
        }
        // The solved parameters reproduce the window outputs.
        for r in band_window(k, cfg.window_half_width, m) {
            let y_hat = eval_estimated_output(&solve.theta, &u, k, r).unwrap();
            let y_ref = y.bin(k as i64 + r);
            assert!((y_hat - y_ref).norm() < 1e-8 * y_ref.norm().max(1.0));
        }
    }

    #[test]
    fn degenerate_window_reports_rank_deficiency() {
        // A near-saturated window with duplicated columns cannot have full
        // row rank.
        let cfg = EstimatorConfig::new(1, 1, 0, 0, 0).unwrap();
        let u = random_spectrum(8, 1.0, RateTag::Fast, 12);
        let y = random_spectrum(8, 1.0, RateTag::Slow, 13);
        let (mut k_w, y_lw) = build_regressor(&u, &y, 4, &cfg).unwrap();
        let duplicate = k_w.column(0).into_owned();
        k_w.column_mut(1).copy_from(&duplicate);
        k_w.column_mut(2).copy_from(&duplicate);
        match solve_window(&k_w, &y_lw, &cfg, 4) {
            Err(Error::RankDeficientWindow { bin: 4, .. }) => {}
            other => panic!("expected rank deficiency, got {other:?}"),
        }
    }

    #[test]
    fn zero_input_spectrum_is_rank_deficient() {
        let cfg = table_config();
        let u =
            Spectrum::new(vec![Complex64::new(0.0, 0.0); 1200], 0.5e-3, RateTag::Fast).unwrap();
        let y = random_spectrum(400, 1.5e-3, RateTag::Slow, 14);
        let (k_w, y_lw) = build_regressor(&u, &y, 100, &cfg).unwrap();
        assert!(matches!(
            solve_window(&k_w, &y_lw, &cfg, 100),
            Err(Error::RankDeficientWindow { bin: 100, .. })
        ));
    }

    #[test]
    fn extract_scales_frf_block_by_factor() {
        let cfg = EstimatorConfig::new(3, 4, 0, 0, 0).unwrap();
        let g = [
            Complex64::new(1.0, 0.5),
            Complex64::new(-2.0, 0.1),
            Complex64::new(0.3, -0.9),
        ];
        let mut values = vec![Complex64::new(0.0, 0.0); cfg.n_parameters()];
        values[..3].copy_from_slice(&g.map(|c| c / 3.0));
        values[3] = Complex64::new(0.2, 0.0);
        let theta = ParameterVector::new(values, &cfg).unwrap();
        let (frf, transient) = extract_frf(&theta);
        for (found, expected) in frf.iter().zip(&g) {
            assert!((found - expected).norm() < 1e-15);
        }
        assert!((transient - Complex64::new(0.6, 0.0)).norm() < 1e-15);

        let single = EstimatorConfig::new(1, 4, 0, 0, 0).unwrap();
        let theta = ParameterVector::new(
            vec![Complex64::new(0.7, 0.1), Complex64::new(0.0, 0.0)],
            &single,
        )
        .unwrap();
        assert_eq!(extract_frf(&theta).0, vec![Complex64::new(0.7, 0.1)]);
    }

    #[test]
    fn noise_variance_from_residual() {
        let zero = DVector::<Complex64>::zeros(10);
        assert_eq!(estimate_noise_variance(&zero, 10).unwrap(), 0.0);
        assert!(matches!(
            estimate_noise_variance(&zero, 0),
            Err(Error::NoDegreesOfFreedom)
        ));
        // Table geometry leaves q = 37 - 27 = 10 degrees of freedom.
        let cfg = table_config();
        assert_eq!(cfg.window_points() - cfg.n_parameters(), 10);
    }

    #[test]
    fn noise_variance_is_unbiased_over_trials() {
        // White complex noise of known variance through a zero system; the
        // residual-based estimate must average to the true variance.
        let cfg = EstimatorConfig::new(1, 6, 1, 1, 0).unwrap();
        let m = 32;
        let u = random_spectrum(m, 1.0, RateTag::Fast, 15);
        let sigma_sq = 0.37;
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        let scale = (sigma_sq / 2.0).sqrt();
        let mut total = 0.0;
        let trials = 1000;
        for _ in 0..trials {
            let noise: Vec<Complex64> = (0..m)
                .map(|_| {
                    Complex64::new(
                        scale * rng.sample::<f64, _>(rand_distr::StandardNormal),
                        scale * rng.sample::<f64, _>(rand_distr::StandardNormal),
                    )
                })
                .collect();
            let y = Spectrum::new(noise, 1.0, RateTag::Slow).unwrap();
            let (k_w, y_lw) = build_regressor(&u, &y, 16, &cfg).unwrap();
            let solve = solve_window(&k_w, &y_lw, &cfg, 16).unwrap();
            total += estimate_noise_variance(&solve.residual, solve.dof).unwrap();
        }
        let mean = total / trials as f64;
        assert!(
            (mean - sigma_sq).abs() < 0.05 * sigma_sq,
            "mean {mean}, expected {sigma_sq}"
        );
    }

    #[test]
    fn frf_variance_zero_noise_and_single_rate_cross_check() {
        let cfg = EstimatorConfig::new(1, 4, 1, 1, 0).unwrap();
        let u = random_spectrum(32, 1.0, RateTag::Fast, 17);
        let y = random_spectrum(32, 1.0, RateTag::Slow, 18);
        let (k_w, _) = build_regressor(&u, &y, 16, &cfg).unwrap();
        assert_eq!(
            estimate_frf_variance(&k_w, 0.0, &cfg, 16).unwrap(),
            vec![0.0]
        );

        // Independent route: explicit inverse of K K^H on the raw regressor.
        let c_v = 0.8;
        let normal = &k_w * k_w.adjoint();
        let inv = normal.try_inverse().unwrap();
        let reference = inv[(0, 0)].re * c_v;
        let computed = estimate_frf_variance(&k_w, c_v, &cfg, 16).unwrap()[0];
        assert_relative_eq!(computed, reference, max_relative = 1e-8);
    }

    #[test]
    fn frf_variance_calibrates_against_monte_carlo() {
        // Small-scale repetition of one experiment: empirical variance of
        // the FRF estimate against the mean predicted variance.
        let cfg = EstimatorConfig::new(2, 8, 2, 2, 2).unwrap();
        let (n, m, k) = (128usize, 64usize, 30usize);
        let u = dft(
            &generate_multisine(&MultisineSpec::flat_band(n, 1.0, 1.0, 19).unwrap()).unwrap(),
        )
        .unwrap();
        let g_flat = Complex64::new(0.8, -0.3);
        let clean: Vec<Complex64> = (0..m)
            .map(|bin| {
                (0..2)
                    .map(|f| u.bin((bin + f * m) as i64))
                    .sum::<Complex64>()
                    * g_flat
                    / 2.0
            })
            .collect();
        let sigma_sq = 1e-4;
        let scale = (sigma_sq / 2.0).sqrt();
        let mut rng = ChaCha8Rng::seed_from_u64(20);
        let mut estimates = Vec::new();
        let mut predicted = Vec::new();
        for _ in 0..500 {
            let noisy: Vec<Complex64> = clean
                .iter()
                .map(|c| {
                    c + Complex64::new(
                        scale * rng.sample::<f64, _>(rand_distr::StandardNormal),
                        scale * rng.sample::<f64, _>(rand_distr::StandardNormal),
                    )
                })
                .collect();
            let y = Spectrum::new(noisy, 2.0, RateTag::Slow).unwrap();
            let (k_w, y_lw) = build_regressor(&u, &y, k, &cfg).unwrap();
            let solve = solve_window(&k_w, &y_lw, &cfg, k).unwrap();
            let c_v = estimate_noise_variance(&solve.residual, solve.dof).unwrap();
            predicted.push(estimate_frf_variance(&k_w, c_v, &cfg, k).unwrap()[0]);
            estimates.push(solve.theta.frf(0));
        }
        let mean: Complex64 = estimates.iter().sum::<Complex64>() / estimates.len() as f64;
        let empirical = estimates.iter().map(|g| (g - mean).norm_sqr()).sum::<f64>()
            / (estimates.len() - 1) as f64;
        let mean_predicted = predicted.iter().sum::<f64>() / predicted.len() as f64;
        let ratio = empirical / mean_predicted;
        assert!(
            (0.75..=1.33).contains(&ratio),
            "variance ratio {ratio} outside [0.75, 1.33]"
        );
    }

    #[test]
    fn eval_center_reduces_to_band_sum() {
        let cfg = table_config();
        let u = random_spectrum(1200, 0.5e-3, RateTag::Fast, 21);
        let theta = random_theta(&cfg, 22);
        let k = 57;
        let value = eval_estimated_output(&theta, &u, k, 0).unwrap();
        let mut expected = Complex64::new(0.0, 0.0);
        for band in 0..3usize {
            expected += theta.frf(band) * u.bin((k + band * 400) as i64);
        }
        expected += theta.transient();
        expected /= 3.0;
        assert!((value - expected).norm() < 1e-12 * expected.norm());

        let zero = ParameterVector::zeros(&cfg);
        assert_eq!(
            eval_estimated_output(&zero, &u, k, 5).unwrap(),
            Complex64::new(0.0, 0.0)
        );
    }

    #[test]
    fn eval_detects_local_pole() {
        let cfg = EstimatorConfig::new(1, 4, 0, 0, 1).unwrap();
        let mut values = vec![Complex64::new(0.0, 0.0); cfg.n_parameters()];
        // Denominator 1 + e_1 r vanishes at r = -2.
        values[2] = Complex64::new(0.5, 0.0);
        let theta = ParameterVector::new(values, &cfg).unwrap();
        let u = random_spectrum(16, 1.0, RateTag::Fast, 23);
        assert!(matches!(
            eval_estimated_output(&theta, &u, 8, -2),
            Err(Error::LocalPole { offset: -2 })
        ));
    }

    #[test]
    fn validate_reports_each_condition() {
        let m = 400;
        let u = dft(
            &generate_multisine(&MultisineSpec::flat_band(1200, 0.5e-3, 1.0, 24).unwrap())
                .unwrap(),
        )
        .unwrap();
        assert!(validate_config(&table_config(), m, Some(&u)).is_empty());

        let small = EstimatorConfig::new(3, 12, 4, 4, 7).unwrap();
        let violations = validate_config(&small, m, Some(&u));
        assert!(violations
            .iter()
            .any(|v| matches!(v, Violation::WindowTooSmall { .. })));

        let zero =
            Spectrum::new(vec![Complex64::new(0.0, 0.0); 1200], 0.5e-3, RateTag::Fast).unwrap();
        let violations = validate_config(&table_config(), m, Some(&zero));
        assert!(violations
            .iter()
            .any(|v| matches!(v, Violation::InputNotRough { bin: 0 })));
    }

    #[test]
    fn band_map_covers_every_fast_bin_once() {
        let (n, m, f) = (96usize, 32usize, 3usize);
        let mut seen = vec![0usize; n];
        for k in 0..m {
            for band in 0..f {
                seen[k + band * m] += 1;
            }
        }
        assert!(seen.iter().all(|&c| c == 1));
    }

    #[test]
    fn identify_recovers_smooth_plant() {
        // Medium-size noiseless run on a well-damped plant; every band bin
        // must match the analytic response closely.
        let t_h = 1e-3;
        let (n, f) = (300usize, 3usize);
        let plant = make_resonant_plant(
            &[Mode {
                frequency_hz: 120.0,
                damping: 0.15,
                gain: 1.0,
            }],
            t_h,
        )
        .unwrap();
        let spec = MultisineSpec::flat_band(n, t_h, 1.0, 25).unwrap();
        let u_time = generate_multisine(&spec).unwrap();
        let y_time = simulate(&plant, &u_time, None).unwrap();
        let y_l = downsample(&y_time, f).unwrap();
        let u = dft(&u_time).unwrap();
        let y = dft(&y_l).unwrap();
        let cfg = EstimatorConfig::new(3, 14, 2, 2, 3).unwrap();
        let estimate = identify_frf(&u, &y, &cfg).unwrap();
        assert!(estimate.failures.is_empty());
        let truth = freqresp(&plant, &frequency_grid(n, t_h).unwrap()).unwrap();
        for k in 1..n / 2 {
            let err =
                (estimate.g[k] - truth.coefficients[k]).norm() / truth.coefficients[k].norm();
            assert!(err < 1e-5, "bin {k} error {err}");
            assert!(estimate.variance[k] >= 0.0);
            assert_eq!(estimate.status[k], BinStatus::Ok);
        }
    }

    #[test]
    fn identify_marks_bad_windows_without_aborting() {
        // Excite only part of the band so a few windows lose rank while the
        // rest of the sweep still succeeds.
        let (n, m, f) = (240usize, 80usize, 3usize);
        let t_h = 1.0;
        let excited: Vec<usize> = (1..n / 2).filter(|k| !(40..=60).contains(k)).collect();
        let spec = MultisineSpec::new(n, t_h, 1.0, excited, 26).unwrap();
        let u_time = generate_multisine(&spec).unwrap();
        let y_l = downsample(&u_time, f).unwrap();
        let u = dft(&u_time).unwrap();
        let y = dft(&y_l).unwrap();
        let cfg = EstimatorConfig::new(3, 10, 1, 1, 1).unwrap();
        let estimate = identify_frf(&u, &y, &cfg).unwrap();
        assert!(!estimate.failures.is_empty());
        assert!(estimate.failures.len() < m / 2);
        for failure in &estimate.failures {
            assert!(matches!(failure.error, Error::RankDeficientWindow { .. }));
            for band in 0..f {
                assert_eq!(
                    estimate.status[failure.bin + band * m],
                    BinStatus::Failed
                );
            }
        }
        let ok_bins = estimate
            .status
            .iter()
            .filter(|s| **s == BinStatus::Ok)
            .count();
        assert_eq!(ok_bins, n - f * estimate.failures.len());
    }

    #[test]
    fn method_names_round_trip() {
        for method in Method::ALL {
            assert_eq!(method.to_string().parse::<Method>().unwrap(), method);
            assert_eq!(method.slug().parse::<Method>().unwrap(), method);
        }
        assert!("nope".parse::<Method>().is_err());
    }
}
