//! Iterative refinement of the closed-form window solves: Sanathanan-Koerner
//! reweighting, which counteracts the denominator weighting of the linear
//! cost, and a damped Gauss-Newton pass on the original non-linear cost.

use nalgebra::{Cholesky, DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::estimator::{
    band_window, build_regressor, check_sweep_inputs, empty_estimate, eval_estimated_output,
    merge_outcome, solve_one_bin, solve_window, sweep_bins, BinFailure, EstimatorConfig,
    FrfEstimate, Method, ParameterVector,
};
use crate::signals::Spectrum;

/// Iteration limits and stopping behavior for the refinement passes.
#[derive(Debug, Clone, PartialEq)]
pub struct RefineConfig {
    pub sk_max_iter: usize,
    pub lm_max_iter: usize,
    /// Stop when the relative cost change drops below this.
    pub rel_tol: f64,
    pub lm_damping_init: f64,
    pub lm_damping_up: f64,
    pub lm_damping_down: f64,
}

impl Default for RefineConfig {
    fn default() -> Self {
        Self {
            sk_max_iter: 30,
            lm_max_iter: 300,
            rel_tol: 1e-9,
            lm_damping_init: 1e-3,
            lm_damping_up: 10.0,
            lm_damping_down: 0.1,
        }
    }
}

impl RefineConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0) {
            return Err(Error::InvalidInput(format!(
                "rel_tol must be positive, got {}",
                self.rel_tol
            )));
        }
        if !(self.lm_damping_init > 0.0) {
            return Err(Error::InvalidInput(format!(
                "lm_damping_init must be positive, got {}",
                self.lm_damping_init
            )));
        }
        if !(self.lm_damping_up > 1.0) {
            return Err(Error::InvalidInput(format!(
                "lm_damping_up must exceed 1, got {}",
                self.lm_damping_up
            )));
        }
        if !(self.lm_damping_down > 0.0 && self.lm_damping_down < 1.0) {
            return Err(Error::InvalidInput(format!(
                "lm_damping_down must lie in (0, 1), got {}",
                self.lm_damping_down
            )));
        }
        Ok(())
    }
}

/// Per-iteration costs, index 0 being the initial point. `j_sk` is populated
/// by the SK pass; the Gauss-Newton pass records `j_ls` only.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CostTrace {
    pub j_sk: Vec<f64>,
    pub j_ls: Vec<f64>,
}

/// Early-exit conditions of a refinement pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RefineWarning {
    /// The reweighting denominator vanished inside the window.
    ReweightPole { iteration: usize },
    /// The SK cost rose for three consecutive iterations; the best iterate
    /// was returned.
    Diverged,
    /// Gauss-Newton damping exceeded its ceiling without an acceptable step.
    DampingExceeded,
    /// A window solve failed during reweighting.
    SolveFailed,
}

/// Result of one refinement pass on one window.
#[derive(Debug, Clone, PartialEq)]
pub struct RefineOutcome {
    pub theta: ParameterVector,
    pub trace: CostTrace,
    pub converged: bool,
    pub warning: Option<RefineWarning>,
}

/// Original non-linear least-squares cost of the local model over the window
/// around bin `k`: `sum_r |Y_l(k+r) - Yhat_l(k+r, theta)|^2`.
pub fn eval_nonlinear_cost(
    theta: &ParameterVector,
    u: &Spectrum,
    y_l: &Spectrum,
    k: usize,
    cfg: &EstimatorConfig,
) -> Result<f64> {
    let m = y_l.n_points();
    let mut cost = 0.0;
    for r in band_window(k, cfg.window_half_width, m) {
        let y_hat = eval_estimated_output(theta, u, k, r)?;
        cost += (y_l.bin(k as i64 + r) - y_hat).norm_sqr();
    }
    Ok(cost)
}

/// Sanathanan-Koerner iterations: divide the window outputs and regressor
/// columns by the previous iteration's denominator and re-solve the linear
/// problem, starting from the closed-form solution.
pub fn sk_iterate(
    theta0: &ParameterVector,
    u: &Spectrum,
    y_l: &Spectrum,
    k: usize,
    cfg: &EstimatorConfig,
    refine_cfg: &RefineConfig,
) -> Result<RefineOutcome> {
    refine_cfg.validate()?;
    let m = y_l.n_points();
    let (regressor, outputs) = build_regressor(u, y_l, k, cfg)?;
    let offsets: Vec<i64> = band_window(k, cfg.window_half_width, m).collect();

    let theta0_vec = DVector::from_column_slice(theta0.values());
    let j_w0 = (&outputs - regressor.transpose() * theta0_vec).norm_squared();
    let mut trace = CostTrace {
        j_sk: vec![j_w0],
        j_ls: vec![eval_nonlinear_cost(theta0, u, y_l, k, cfg)?],
    };

    let mut current = theta0.clone();
    let mut best = (j_w0, current.clone());
    let mut consecutive_rises = 0usize;
    let mut converged = false;
    let mut warning = None;

    for iteration in 1..=refine_cfg.sk_max_iter {
        let mut weights = Vec::with_capacity(offsets.len());
        for &r in &offsets {
            let den = current.denominator_at(r as f64);
            if den.norm() < 1e-14 {
                warning = Some(RefineWarning::ReweightPole { iteration });
                break;
            }
            weights.push(den.inv());
        }
        if warning.is_some() {
            break;
        }

        let mut weighted_regressor = regressor.clone();
        let mut weighted_outputs = outputs.clone();
        for (col, &w) in weights.iter().enumerate() {
            weighted_regressor.column_mut(col).apply(|v| *v *= w);
            weighted_outputs[col] *= w;
        }
        let solve = match solve_window(&weighted_regressor, &weighted_outputs, cfg, k) {
            Ok(solve) => solve,
            Err(_) => {
                warning = Some(RefineWarning::SolveFailed);
                break;
            }
        };
        let j_sk = solve.residual.norm_squared();
        let j_ls = match eval_nonlinear_cost(&solve.theta, u, y_l, k, cfg) {
            Ok(cost) => cost,
            Err(_) => {
                warning = Some(RefineWarning::ReweightPole { iteration });
                break;
            }
        };
        let previous = *trace.j_sk.last().unwrap();
        trace.j_sk.push(j_sk);
        trace.j_ls.push(j_ls);
        current = solve.theta;

        if j_sk < best.0 {
            best = (j_sk, current.clone());
        }
        if j_sk > previous {
            consecutive_rises += 1;
            if consecutive_rises >= 3 {
                return Ok(RefineOutcome {
                    theta: best.1,
                    trace,
                    converged: false,
                    warning: Some(RefineWarning::Diverged),
                });
            }
        } else {
            consecutive_rises = 0;
        }
        if (previous - j_sk).abs() <= refine_cfg.rel_tol * previous.max(f64::MIN_POSITIVE) {
            converged = true;
            break;
        }
    }

    Ok(RefineOutcome {
        theta: current,
        trace,
        converged,
        warning,
    })
}

/// Real-stacked residual of the local model over the window: entries
/// `[Re rho_0, Im rho_0, Re rho_1, ..]` with `rho_j = Y_l(k+r_j) - Yhat_j`.
pub fn window_residual(
    theta: &ParameterVector,
    u: &Spectrum,
    y_l: &Spectrum,
    k: usize,
    cfg: &EstimatorConfig,
) -> Result<DVector<f64>> {
    let m = y_l.n_points();
    let offsets: Vec<i64> = band_window(k, cfg.window_half_width, m).collect();
    let mut residual = DVector::zeros(2 * offsets.len());
    for (j, &r) in offsets.iter().enumerate() {
        let rho = y_l.bin(k as i64 + r) - eval_estimated_output(theta, u, k, r)?;
        residual[2 * j] = rho.re;
        residual[2 * j + 1] = rho.im;
    }
    Ok(residual)
}

/// Analytic Jacobian of [`window_residual`] with respect to the real and
/// imaginary parts of the stored parameters, columns ordered
/// `[Re theta_0, Im theta_0, Re theta_1, ..]`.
pub fn residual_and_jacobian(
    theta: &ParameterVector,
    u: &Spectrum,
    y_l: &Spectrum,
    k: usize,
    cfg: &EstimatorConfig,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let factor = cfg.downsampling_factor;
    let m = y_l.n_points();
    let offsets: Vec<i64> = band_window(k, cfg.window_half_width, m).collect();
    let n_params = cfg.n_parameters();
    let mut residual = DVector::zeros(2 * offsets.len());
    let mut jacobian = DMatrix::zeros(2 * offsets.len(), 2 * n_params);

    for (j, &r) in offsets.iter().enumerate() {
        let r_f = r as f64;
        let denominator = theta.denominator_at(r_f);
        if denominator.norm() < 1e-14 {
            return Err(Error::LocalPole { offset: r });
        }
        let y_hat = eval_estimated_output(theta, u, k, r)?;
        let rho = y_l.bin(k as i64 + r) - y_hat;
        residual[2 * j] = rho.re;
        residual[2 * j + 1] = rho.im;

        let mut write = |param: usize, derivative: Complex64| {
            // rho is holomorphic in each parameter, so the real 2x2 block is
            // the usual complex-multiplication pattern.
            jacobian[(2 * j, 2 * param)] = derivative.re;
            jacobian[(2 * j, 2 * param + 1)] = -derivative.im;
            jacobian[(2 * j + 1, 2 * param)] = derivative.im;
            jacobian[(2 * j + 1, 2 * param + 1)] = derivative.re;
        };

        // Numerator blocks: d rho / d theta = -basis / e(r).
        let mut param = 0;
        let mut r_pow = 1.0;
        for _s in 0..=cfg.system_numerator_degree {
            for band in 0..factor {
                let u_val = u.bin(k as i64 + r + (band * m) as i64);
                write(param, -u_val * r_pow / denominator);
                param += 1;
            }
            r_pow *= r_f;
        }
        let mut r_pow = 1.0;
        for _s in 0..=cfg.transient_numerator_degree {
            write(param, -Complex64::new(r_pow, 0.0) / denominator);
            param += 1;
            r_pow *= r_f;
        }
        // Denominator block: d rho / d e_s = Yhat * r^s / e(r).
        let mut r_pow = r_f;
        for _s in 1..=cfg.denominator_degree {
            write(param, y_hat * r_pow / denominator);
            param += 1;
            r_pow *= r_f;
        }
    }
    Ok((residual, jacobian))
}

/// Damped Gauss-Newton minimization of the original non-linear cost over the
/// complex parameters, split into real pairs. Accepted steps strictly
/// decrease the cost; the damping factor adapts multiplicatively.
pub fn lm_refine(
    theta_init: &ParameterVector,
    u: &Spectrum,
    y_l: &Spectrum,
    k: usize,
    cfg: &EstimatorConfig,
    refine_cfg: &RefineConfig,
) -> Result<RefineOutcome> {
    refine_cfg.validate()?;
    const DAMPING_CEILING: f64 = 1e12;

    // Optimize in the scaled basis (r/n_w)^s to keep the normal equations
    // well conditioned; columns are scaled per complex parameter.
    let base = cfg.window_half_width.max(1) as f64;
    let scales: Vec<f64> = cfg
        .row_powers()
        .iter()
        .map(|&s| base.powi(-(s as i32)))
        .collect();

    let mut theta = theta_init.clone();
    let (mut residual, mut jacobian) = residual_and_jacobian(&theta, u, y_l, k, cfg)?;
    let mut cost = residual.norm_squared();
    let mut trace = CostTrace {
        j_sk: Vec::new(),
        j_ls: vec![cost],
    };
    let mut damping = refine_cfg.lm_damping_init;
    let mut converged = false;
    let mut warning = None;

    'outer: for _ in 0..refine_cfg.lm_max_iter {
        for (i, &scale) in scales.iter().enumerate() {
            jacobian.column_mut(2 * i).apply(|v| *v *= scale);
            jacobian.column_mut(2 * i + 1).apply(|v| *v *= scale);
        }
        let gradient = jacobian.transpose() * &residual;
        if gradient.norm() <= 1e-14 * (1.0 + cost) {
            converged = true;
            break;
        }
        let hessian = jacobian.transpose() * &jacobian;
        let diag_floor = 1e-12 * hessian.diagonal().max();

        loop {
            let mut damped = hessian.clone();
            for i in 0..damped.nrows() {
                damped[(i, i)] += damping * damped[(i, i)].max(diag_floor);
            }
            let step = Cholesky::new(damped).map(|chol| chol.solve(&(-&gradient)));
            let accepted = step.and_then(|delta| {
                let mut candidate = theta.clone();
                for (i, value) in candidate.values_mut().iter_mut().enumerate() {
                    *value += Complex64::new(delta[2 * i], delta[2 * i + 1]) * scales[i];
                }
                match window_residual(&candidate, u, y_l, k, cfg) {
                    Ok(candidate_residual) => {
                        let candidate_cost = candidate_residual.norm_squared();
                        (candidate_cost < cost).then_some((candidate, candidate_cost))
                    }
                    // A step onto a local pole is just a bad step.
                    Err(_) => None,
                }
            });
            match accepted {
                Some((candidate, candidate_cost)) => {
                    let relative_drop = (cost - candidate_cost) / cost.max(f64::MIN_POSITIVE);
                    theta = candidate;
                    cost = candidate_cost;
                    trace.j_ls.push(cost);
                    damping = (damping * refine_cfg.lm_damping_down).max(1e-15);
                    if relative_drop < refine_cfg.rel_tol {
                        converged = true;
                        break 'outer;
                    }
                    let updated = residual_and_jacobian(&theta, u, y_l, k, cfg)?;
                    residual = updated.0;
                    jacobian = updated.1;
                    continue 'outer;
                }
                None => {
                    damping *= refine_cfg.lm_damping_up;
                    if damping > DAMPING_CEILING {
                        warning = Some(RefineWarning::DampingExceeded);
                        break 'outer;
                    }
                }
            }
        }
    }

    Ok(RefineOutcome {
        theta,
        trace,
        converged,
        warning,
    })
}

/// Mean SK and mean least-squares cost over per-bin final costs.
pub fn mean_costs(final_costs: &[(f64, f64)]) -> (f64, f64) {
    if final_costs.is_empty() {
        return (0.0, 0.0);
    }
    let n = final_costs.len() as f64;
    let (sk, ls) = final_costs
        .iter()
        .fold((0.0, 0.0), |(a, b), &(sk, ls)| (a + sk, b + ls));
    (sk / n, ls / n)
}

/// Per-bin cost traces of a refined sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct BinTrace {
    pub slow_bin: usize,
    pub sk: CostTrace,
    /// Gauss-Newton cost trace; empty when the LM pass was not requested.
    pub lm: Vec<f64>,
}

/// Mean costs per iteration across all bins; bins that stopped early carry
/// their last value forward.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AggregateTrace {
    /// Mean SK cost per SK iteration.
    pub mu_sk: Vec<f64>,
    /// Mean least-squares cost per iteration across the SK pass followed by
    /// the LM pass.
    pub mu_oe: Vec<f64>,
    /// Number of SK entries at the head of `mu_oe`.
    pub sk_iterations: usize,
}

/// A full refined identification sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct RefinedSweep {
    pub estimate: FrfEstimate,
    pub traces: Vec<BinTrace>,
    pub aggregate: AggregateTrace,
    /// Mean least-squares cost of the closed-form initialization.
    pub mu_oe_closed_form: f64,
    /// Final mean SK and least-squares costs.
    pub mu_sk: f64,
    pub mu_oe: f64,
}

fn padded_mean(traces: &[&[f64]]) -> Vec<f64> {
    let longest = traces.iter().map(|t| t.len()).max().unwrap_or(0);
    (0..longest)
        .map(|i| {
            let mut sum = 0.0;
            let mut count = 0usize;
            for t in traces {
                if t.is_empty() {
                    continue;
                }
                sum += t[i.min(t.len() - 1)];
                count += 1;
            }
            if count == 0 {
                0.0
            } else {
                sum / count as f64
            }
        })
        .collect()
}

/// Run the full refinement schedule over every slow-rate bin: closed-form
/// solve, SK iterations, and optionally the damped Gauss-Newton pass seeded
/// from whichever of the closed-form and SK iterates has the lower cost.
///
/// The reported variance is the closed-form estimate; refinement replaces
/// only the FRF and transient values.
pub fn refine_sweep(
    u: &Spectrum,
    y_l: &Spectrum,
    cfg: &EstimatorConfig,
    refine_cfg: &RefineConfig,
    use_lm: bool,
) -> Result<FrfEstimate> {
    refine_sweep_with_traces(u, y_l, cfg, refine_cfg, use_lm).map(|sweep| sweep.estimate)
}

/// As [`refine_sweep`], returning the cost traces and aggregates as well.
pub fn refine_sweep_with_traces(
    u: &Spectrum,
    y_l: &Spectrum,
    cfg: &EstimatorConfig,
    refine_cfg: &RefineConfig,
    use_lm: bool,
) -> Result<RefinedSweep> {
    refine_cfg.validate()?;
    let m = check_sweep_inputs(u, y_l, cfg)?;

    struct BinResult {
        outcome: crate::estimator::WindowOutcome,
        trace: BinTrace,
        final_sk: f64,
        final_ls: f64,
        closed_form_ls: f64,
    }

    let worker = |k: usize| -> Result<BinResult> {
        let (mut outcome, theta0) = solve_one_bin(u, y_l, k, cfg)?;
        let sk = sk_iterate(&theta0, u, y_l, k, cfg, refine_cfg)?;
        let closed_form_ls = sk.trace.j_ls[0];
        let (mut theta, mut final_ls) = (sk.theta.clone(), *sk.trace.j_ls.last().unwrap());
        let mut lm_trace = Vec::new();
        if use_lm {
            // Seed from the better of the closed-form and SK iterates; the
            // accepted-step rule then keeps the cost non-increasing.
            let init = if closed_form_ls < final_ls {
                &theta0
            } else {
                &sk.theta
            };
            let lm = lm_refine(init, u, y_l, k, cfg, refine_cfg)?;
            final_ls = *lm.trace.j_ls.last().unwrap();
            theta = lm.theta;
            lm_trace = lm.trace.j_ls;
        }
        let g: Vec<Complex64> = (0..cfg.downsampling_factor).map(|f| theta.frf(f)).collect();
        outcome.g = g;
        outcome.transient = theta.transient();
        Ok(BinResult {
            outcome,
            final_sk: *sk.trace.j_sk.last().unwrap(),
            final_ls,
            closed_form_ls,
            trace: BinTrace {
                slow_bin: k,
                sk: sk.trace,
                lm: lm_trace,
            },
        })
    };

    let results = sweep_bins(m, worker);

    let method = if use_lm { Method::LrmSkLm } else { Method::LrmSk };
    let mut estimate = empty_estimate(method, u.n_points(), m, u.sampling_time);
    let mut traces = Vec::new();
    let mut final_costs = Vec::new();
    let mut closed_form_costs = Vec::new();
    for (k, result) in results.into_iter().enumerate() {
        match result {
            Ok(bin) => {
                merge_outcome(&mut estimate, k, m, &bin.outcome);
                final_costs.push((bin.final_sk, bin.final_ls));
                closed_form_costs.push(bin.closed_form_ls);
                traces.push(bin.trace);
            }
            Err(error) => estimate.failures.push(BinFailure { bin: k, error }),
        }
    }

    let (mu_sk, mu_oe) = mean_costs(&final_costs);
    let mu_oe_closed_form = if closed_form_costs.is_empty() {
        0.0
    } else {
        closed_form_costs.iter().sum::<f64>() / closed_form_costs.len() as f64
    };
    let sk_slices: Vec<&[f64]> = traces.iter().map(|t| t.sk.j_sk.as_slice()).collect();
    let sk_ls_slices: Vec<&[f64]> = traces.iter().map(|t| t.sk.j_ls.as_slice()).collect();
    let mu_sk_trace = padded_mean(&sk_slices);
    let mut mu_oe_trace = padded_mean(&sk_ls_slices);
    let sk_iterations = mu_oe_trace.len();
    if use_lm {
        let lm_slices: Vec<&[f64]> = traces.iter().map(|t| t.lm.as_slice()).collect();
        let lm_means = padded_mean(&lm_slices);
        // The LM trace starts at the SK result, already present at the tail.
        mu_oe_trace.extend(lm_means.into_iter().skip(1));
    }

    Ok(RefinedSweep {
        estimate,
        traces,
        aggregate: AggregateTrace {
            mu_sk: mu_sk_trace,
            mu_oe: mu_oe_trace,
            sk_iterations,
        },
        mu_oe_closed_form,
        mu_sk,
        mu_oe,
    })
}
