//! Weighted least-squares fit of `baseline + amplitude·exp(−rate·t)`.
//!
//! Times are rescaled by the last sample time before fitting so the rate
//! parameter is O(1); results are mapped back to the caller's units.
//! Primary solver: damped Gauss–Newton (Levenberg–Marquardt damping) with
//! the analytic Jacobian. If it fails to converge within the iteration
//! budget, a Nelder–Mead simplex restarts from the best point found.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::{FitResult, DEFAULT_COVERAGE};
use crate::experiment::Trace;
use crate::{Error, Result};

const MIN_POINTS: usize = 5;
const MAX_ITERATIONS: usize = 200;
const STEP_TOLERANCE: f64 = 1e-10;
const SIMPLEX_MAX_ITERATIONS: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Solver {
    GaussNewton,
    NelderMead,
    /// Data consistent with a constant; no decay fitted.
    Flat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentialFit {
    /// Decay rate, inverse time units of the trace.
    pub rate: FitResult,
    pub amplitude: FitResult,
    pub baseline: FitResult,
    /// χ² = Σ((y − model)/σ)².
    pub chi_squared: f64,
    pub iterations: usize,
    pub solver: Solver,
}

impl ExponentialFit {
    /// 1/rate with its standard error propagated to first order.
    pub fn decay_time(&self) -> (f64, f64) {
        let r = self.rate.estimate;
        (1.0 / r, self.rate.std_error / (r * r))
    }
}

struct Problem<'a> {
    t: Vec<f64>,
    y: &'a [f64],
    sigma: &'a [f64],
}

impl Problem<'_> {
    fn chi2(&self, p: &Vector3<f64>) -> f64 {
        self.t
            .iter()
            .zip(self.y)
            .zip(self.sigma)
            .map(|((&t, &y), &s)| {
                let r = (y - (p[0] + p[1] * (-p[2] * t).exp())) / s;
                r * r
            })
            .sum()
    }

    /// Normal matrix JᵀJ and gradient vector Jᵀr of the whitened residuals.
    fn normal_equations(&self, p: &Vector3<f64>) -> (Matrix3<f64>, Vector3<f64>) {
        let mut jtj = Matrix3::zeros();
        let mut jtr = Vector3::zeros();
        for ((&t, &y), &s) in self.t.iter().zip(self.y).zip(self.sigma) {
            let e = (-p[2] * t).exp();
            let r = (y - (p[0] + p[1] * e)) / s;
            let j = Vector3::new(1.0, e, -p[1] * t * e) / s;
            jtj += j * j.transpose();
            jtr += j * r;
        }
        (jtj, jtr)
    }
}

fn validate(trace: &Trace) -> Result<()> {
    let n = trace.times.len();
    if n < MIN_POINTS {
        return Err(Error::invalid(format!(
            "exponential fit needs at least {MIN_POINTS} points, got {n}"
        )));
    }
    if trace.populations.len() != n || trace.sigmas.len() != n {
        return Err(Error::invalid("trace columns differ in length"));
    }
    if trace.times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid("trace times must be strictly increasing"));
    }
    if trace.sigmas.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
        return Err(Error::invalid("trace uncertainties must be > 0"));
    }
    if trace.populations.iter().chain(&trace.times).any(|v| !v.is_finite()) {
        return Err(Error::invalid("trace contains non-finite values"));
    }
    Ok(())
}

/// Weighted mean and χ² of the constant model.
fn constant_model(y: &[f64], sigma: &[f64]) -> (f64, f64, f64) {
    let w_sum: f64 = sigma.iter().map(|s| 1.0 / (s * s)).sum();
    let mean = y.iter().zip(sigma).map(|(y, s)| y / (s * s)).sum::<f64>() / w_sum;
    let chi2 = y.iter().zip(sigma).map(|(y, s)| ((y - mean) / s).powi(2)).sum();
    (mean, chi2, (1.0 / w_sum).sqrt())
}

/// Start values: baseline from the tail, rate from a log-linear regression
/// of the baseline-subtracted data.
fn initial_guess(prob: &Problem) -> Vector3<f64> {
    let n = prob.t.len();
    let tail = (n / 10).max(1);
    let baseline = prob.y[n - tail..].iter().sum::<f64>() / tail as f64;
    let amplitude = prob.y[0] - baseline;
    let sign = if amplitude >= 0.0 { 1.0 } else { -1.0 };
    // (t, ln|y − b|, weight) for points clearly above the baseline
    let pts: Vec<(f64, f64, f64)> = prob
        .t
        .iter()
        .zip(prob.y)
        .zip(prob.sigma)
        .filter_map(|((&t, &y), &s)| {
            let d = sign * (y - baseline);
            (d > 3.0 * s && d > 1e-3 * amplitude.abs()).then(|| (t, d.ln(), (d / s).powi(2)))
        })
        .collect();
    let t_last = prob.t[n - 1];
    let mut rate = 3.0 / t_last;
    if pts.len() >= 2 {
        let sw: f64 = pts.iter().map(|p| p.2).sum();
        let tm = pts.iter().map(|p| p.2 * p.0).sum::<f64>() / sw;
        let lm = pts.iter().map(|p| p.2 * p.1).sum::<f64>() / sw;
        let sxx: f64 = pts.iter().map(|p| p.2 * (p.0 - tm).powi(2)).sum();
        let sxy: f64 = pts.iter().map(|p| p.2 * (p.0 - tm) * (p.1 - lm)).sum();
        if sxx > 0.0 {
            let slope = -sxy / sxx;
            if slope.is_finite() && slope > 0.0 {
                rate = slope;
            }
        }
    }
    let amp = sign * (pts.first().map(|p| p.1.exp()).unwrap_or(amplitude.abs())) * (rate * prob.t[0]).exp();
    Vector3::new(baseline, if amp.is_finite() { amp } else { amplitude }, rate)
}

fn step_is_small(step: &Vector3<f64>, p: &Vector3<f64>) -> bool {
    step.norm() <= STEP_TOLERANCE * p.norm().max(f64::MIN_POSITIVE)
}

/// Levenberg–Marquardt iterations; returns (params, iterations, converged).
fn gauss_newton(prob: &Problem, start: Vector3<f64>) -> (Vector3<f64>, usize, bool) {
    let mut p = start;
    let mut chi2 = prob.chi2(&p);
    let mut lambda = 1e-3;
    for it in 1..=MAX_ITERATIONS {
        let (jtj, jtr) = prob.normal_equations(&p);
        let mut damped = jtj;
        for i in 0..3 {
            damped[(i, i)] += lambda * jtj[(i, i)].max(1e-300);
        }
        let Some(step) = damped.lu().solve(&jtr) else {
            lambda *= 10.0;
            continue;
        };
        let trial = p + step;
        let trial_chi2 = prob.chi2(&trial);
        if trial_chi2.is_finite() && trial_chi2 <= chi2 {
            p = trial;
            chi2 = trial_chi2;
            lambda = (lambda / 10.0).max(1e-12);
            if step_is_small(&step, &p) || chi2 == 0.0 {
                return (p, it, true);
            }
        } else {
            lambda *= 10.0;
            if step_is_small(&step, &p) {
                return (p, it, true);
            }
            if lambda > 1e16 {
                return (p, it, false);
            }
        }
    }
    (p, MAX_ITERATIONS, false)
}

/// Nelder–Mead on χ²; returns (params, iterations, converged).
fn nelder_mead(prob: &Problem, start: Vector3<f64>) -> (Vector3<f64>, usize, bool) {
    let mut simplex: Vec<Vector3<f64>> = vec![start];
    for i in 0..3 {
        let mut v = start;
        v[i] += if v[i].abs() > 1e-8 { 0.05 * v[i] } else { 1e-3 };
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| prob.chi2(v)).collect();
    for it in 1..=SIMPLEX_MAX_ITERATIONS {
        let mut order: Vec<usize> = (0..4).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i]).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let size = (1..4).map(|i| (simplex[i] - simplex[0]).norm()).fold(0.0, f64::max);
        if size <= STEP_TOLERANCE * simplex[0].norm().max(f64::MIN_POSITIVE) {
            return (simplex[0], it, true);
        }

        let centroid = (simplex[0] + simplex[1] + simplex[2]) / 3.0;
        let reflect = centroid + (centroid - simplex[3]);
        let fr = prob.chi2(&reflect);
        if fr < values[0] {
            let expand = centroid + 2.0 * (centroid - simplex[3]);
            let fe = prob.chi2(&expand);
            if fe < fr {
                simplex[3] = expand;
                values[3] = fe;
            } else {
                simplex[3] = reflect;
                values[3] = fr;
            }
        } else if fr < values[2] {
            simplex[3] = reflect;
            values[3] = fr;
        } else {
            let contract = centroid + 0.5 * (simplex[3] - centroid);
            let fc = prob.chi2(&contract);
            if fc < values[3] {
                simplex[3] = contract;
                values[3] = fc;
            } else {
                for i in 1..4 {
                    simplex[i] = simplex[0] + 0.5 * (simplex[i] - simplex[0]);
                    values[i] = prob.chi2(&simplex[i]);
                }
            }
        }
    }
    let best = (0..4).min_by(|&a, &b| values[a].total_cmp(&values[b])).unwrap_or(0);
    (simplex[best], SIMPLEX_MAX_ITERATIONS, false)
}

/// Fits `baseline + amplitude·exp(−rate·t)` to a trace, weighting each
/// point by 1/σ². Parameter intervals are ±z·σ from the inverse normal
/// matrix at the optimum (not rescaled by the reduced χ²).
///
/// A trace whose spread is consistent with its error bars is reported as
/// flat: rate 0 with interval [0, ∞).
pub fn fit_exponential(trace: &Trace) -> Result<ExponentialFit> {
    validate(trace)?;
    let n = trace.times.len();
    let scale = trace.times[n - 1].abs().max(trace.times[0].abs());
    let prob = Problem {
        t: trace.times.iter().map(|t| t / scale).collect(),
        y: &trace.populations,
        sigma: &trace.sigmas,
    };

    let (mean, chi2_const, mean_err) = constant_model(prob.y, prob.sigma);
    let dof = (n - 1) as f64;
    if chi2_const <= dof + 3.0 * (2.0 * dof).sqrt() {
        let residual_norm = chi2_const.sqrt();
        return Ok(ExponentialFit {
            rate: FitResult {
                estimate: 0.0,
                ci_low: 0.0,
                ci_high: f64::INFINITY,
                coverage: DEFAULT_COVERAGE,
                std_error: f64::INFINITY,
                residual_norm,
                n_bootstrap: 0,
                seed: None,
            },
            amplitude: FitResult::from_std_error(0.0, f64::INFINITY, DEFAULT_COVERAGE, residual_norm)?,
            baseline: FitResult::from_std_error(mean, mean_err, DEFAULT_COVERAGE, residual_norm)?,
            chi_squared: chi2_const,
            iterations: 0,
            solver: Solver::Flat,
        });
    }

    let start = initial_guess(&prob);
    let (mut p, mut iterations, converged) = gauss_newton(&prob, start);
    let mut solver = Solver::GaussNewton;
    if !converged {
        log::debug!("Gauss-Newton stalled after {iterations} iterations; trying simplex");
        let from = if prob.chi2(&p).is_finite() { p } else { start };
        let (q, it, ok) = nelder_mead(&prob, from);
        iterations += it;
        if !ok {
            return Err(Error::NonConvergence(format!(
                "exponential fit: chi2 = {:e} after {iterations} iterations, params (scaled) = [{:e}, {:e}, {:e}], n = {n}",
                prob.chi2(&q),
                q[0],
                q[1],
                q[2]
            )));
        }
        p = q;
        solver = Solver::NelderMead;
    }

    let chi2 = prob.chi2(&p);
    let residual_norm = chi2.sqrt();
    let (jtj, _) = prob.normal_equations(&p);
    let cov = jtj.try_inverse().unwrap_or_else(|| Matrix3::from_element(f64::INFINITY));
    let err = |i: usize| {
        let v = cov[(i, i)];
        if v >= 0.0 { v.sqrt() } else { f64::INFINITY }
    };
    Ok(ExponentialFit {
        rate: FitResult::from_std_error(p[2] / scale, err(2) / scale, DEFAULT_COVERAGE, residual_norm)?,
        amplitude: FitResult::from_std_error(p[1], err(1), DEFAULT_COVERAGE, residual_norm)?,
        baseline: FitResult::from_std_error(p[0], err(0), DEFAULT_COVERAGE, residual_norm)?,
        chi_squared: chi2,
        iterations,
        solver,
    })
}
