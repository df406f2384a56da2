//! The four iterative solvers: plain Kaczmarz epochs (KZ), iterative hard
//! thresholding (IHT), Kaczmarz IHT (KZIHT, one thresholding per epoch),
//! and Kaczmarz with periodic thresholding (KZPT, thresholding every p
//! inner steps with a separate gradient step size).
//!
//! A run is strictly sequential; independent trials parallelize in the
//! harness. Traces are bit-reproducible given the same operator,
//! measurements, parameters, rule and seed (timing columns aside).

use std::time::Instant;

use crate::error::{KzError, Result};
use crate::schedules::{validate_schedule, RowSchedule, ScheduleRule, ScheduleStream};
use crate::sensing::SensingOperator;
use crate::signal::{hard_threshold_in_place, norm2, SignalVector, SparsityLevel};

/// Parameters shared by the solver family.
///
/// `gamma` drives the Kaczmarz inner steps, `lambda` the periodic gradient
/// step of KZPT, `period` how many inner steps sit between thresholdings
/// (KZPT only), `epochs` the outer-iteration budget. A run stops early when
/// the relative error drops to `target_error` (0 disables) and aborts as
/// diverged when it exceeds `divergence_threshold` or the iterate stops
/// being finite.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverParams {
    pub sparsity: SparsityLevel,
    pub gamma: f64,
    pub lambda: f64,
    pub period: usize,
    pub epochs: usize,
    pub divergence_threshold: f64,
    pub target_error: f64,
}

impl SolverParams {
    pub fn new(sparsity: SparsityLevel) -> Self {
        SolverParams {
            sparsity,
            gamma: 1.0,
            lambda: 1.0,
            period: 1,
            epochs: 100,
            divergence_threshold: 1e6,
            target_error: 0.0,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.gamma.is_finite() && self.gamma > 0.0) {
            return Err(KzError::invalid("gamma must be finite and positive"));
        }
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return Err(KzError::invalid("lambda must be finite and positive"));
        }
        if self.epochs == 0 {
            return Err(KzError::invalid("epoch budget must be at least 1"));
        }
        if self.divergence_threshold.is_nan() || self.divergence_threshold <= 0.0 {
            return Err(KzError::invalid("divergence threshold must be positive"));
        }
        if self.target_error < 0.0 {
            return Err(KzError::invalid("target error must be nonnegative"));
        }
        Ok(())
    }
}

/// How a run ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Converged,
    BudgetExhausted,
    Diverged,
}

/// Per-epoch measurements taken after the epoch finished.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpochRecord {
    pub relative_error: f64,
    pub elapsed_seconds: f64,
    pub iterate_norm: f64,
}

/// Full record of one solver run.
#[derive(Clone, Debug, PartialEq)]
pub struct IterateTrace {
    pub epochs: Vec<EpochRecord>,
    pub final_iterate: SignalVector,
    pub status: SolveStatus,
}

impl IterateTrace {
    pub fn final_relative_error(&self) -> f64 {
        self.epochs
            .last()
            .map(|r| r.relative_error)
            .unwrap_or(f64::INFINITY)
    }

    /// Number of epochs needed to reach `tol`, if the run ever did.
    pub fn epochs_to_tolerance(&self, tol: f64) -> Option<usize> {
        self.epochs
            .iter()
            .position(|r| r.relative_error <= tol)
            .map(|idx| idx + 1)
    }

    /// Epoch (1-based) at which divergence was declared, if any.
    pub fn diverged_at(&self) -> Option<usize> {
        match self.status {
            SolveStatus::Diverged => Some(self.epochs.len()),
            _ => None,
        }
    }
}

/// One Kaczmarz step: `x + gamma * (b_i - a^T x) / ||a||^2 * a`.
///
/// With `gamma = 1` this is the orthogonal projection of `x` onto the
/// hyperplane `a^T z = b_i`.
pub fn kz_step(x: &SignalVector, a: &SignalVector, b_i: f64, gamma: f64) -> Result<SignalVector> {
    if x.dim() != a.dim() {
        return Err(KzError::invalid(format!(
            "dimension mismatch: x has {}, a has {}",
            x.dim(),
            a.dim()
        )));
    }
    let norm_sq = a.dot(a);
    if norm_sq == 0.0 {
        return Err(KzError::invalid("cannot project onto a zero row"));
    }
    let coef = gamma * (b_i - a.dot(x)) / norm_sq;
    let entries = x
        .as_slice()
        .iter()
        .zip(a.as_slice())
        .map(|(xi, ai)| xi + coef * ai)
        .collect();
    Ok(SignalVector::new(entries))
}

fn kz_sweep(
    x: &mut [f64],
    a: &SensingOperator,
    b: &[f64],
    order: &[usize],
    gamma: f64,
) -> Result<()> {
    for &i in order {
        let norm_sq = a.row_norm_sq(i)?;
        if norm_sq == 0.0 {
            return Err(KzError::invalid(format!("row {} has zero norm", i)));
        }
        let coef = gamma * (b[i] - a.row_dot(i, x)?) / norm_sq;
        a.row_axpy(i, coef, x);
    }
    Ok(())
}

/// Runs one epoch of Kaczmarz steps in schedule order, no thresholding.
pub fn kz_epoch(
    x: &SignalVector,
    a: &SensingOperator,
    b: &[f64],
    schedule: &RowSchedule,
    gamma: f64,
) -> Result<SignalVector> {
    if schedule.len() != a.rows() {
        return Err(KzError::invalid(format!(
            "schedule has {} entries, operator has {} rows",
            schedule.len(),
            a.rows()
        )));
    }
    if !validate_schedule(schedule, a.rows()) {
        return Err(KzError::invalid("schedule violates its rule invariant"));
    }
    if b.len() != a.rows() {
        return Err(KzError::invalid("measurement length does not match rows"));
    }
    if x.dim() != a.cols() {
        return Err(KzError::invalid("iterate dimension does not match columns"));
    }
    let mut out = x.clone();
    kz_sweep(out.as_mut_slice(), a, b, schedule.order(), gamma)?;
    Ok(out)
}

fn check_problem(
    a: &SensingOperator,
    b: &[f64],
    truth: &SignalVector,
    x0: Option<&SignalVector>,
) -> Result<()> {
    if b.len() != a.rows() {
        return Err(KzError::invalid(format!(
            "measurements have length {}, operator has {} rows",
            b.len(),
            a.rows()
        )));
    }
    if truth.dim() != a.cols() {
        return Err(KzError::invalid(
            "reference signal dimension does not match operator columns",
        ));
    }
    if truth.norm2() == 0.0 {
        return Err(KzError::invalid("reference signal has zero norm"));
    }
    if let Some(x0) = x0 {
        if x0.dim() != a.cols() {
            return Err(KzError::invalid(
                "starting iterate dimension does not match operator columns",
            ));
        }
    }
    Ok(())
}

fn rel_err_to(x: &[f64], truth: &SignalVector) -> f64 {
    let diff: f64 = x
        .iter()
        .zip(truth.as_slice())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    diff.sqrt() / truth.norm2()
}

fn run_loop(
    a: &SensingOperator,
    truth: &SignalVector,
    params: &SolverParams,
    x0: Option<&SignalVector>,
    mut epoch_body: impl FnMut(u64, &mut Vec<f64>) -> Result<()>,
    mut observer: impl FnMut(usize, &SignalVector),
) -> Result<IterateTrace> {
    params.validate()?;
    let mut x: Vec<f64> = match x0 {
        Some(v) => v.as_slice().to_vec(),
        None => vec![0.0; a.cols()],
    };
    let start = Instant::now();
    let mut records = Vec::with_capacity(params.epochs);
    let mut status = SolveStatus::BudgetExhausted;
    for k in 0..params.epochs {
        epoch_body(k as u64, &mut x)?;
        let finite = x.iter().all(|v| v.is_finite());
        let rel = if finite {
            rel_err_to(&x, truth)
        } else {
            f64::INFINITY
        };
        records.push(EpochRecord {
            relative_error: rel,
            elapsed_seconds: start.elapsed().as_secs_f64(),
            iterate_norm: norm2(&x),
        });
        observer(k, &SignalVector::new(x.clone()));
        if !finite || rel > params.divergence_threshold {
            status = SolveStatus::Diverged;
            break;
        }
        if params.target_error > 0.0 && rel <= params.target_error {
            status = SolveStatus::Converged;
            break;
        }
    }
    Ok(IterateTrace {
        epochs: records,
        final_iterate: SignalVector::new(x),
        status,
    })
}

/// Plain Kaczmarz epochs without any thresholding.
pub fn kz_run(
    a: &SensingOperator,
    b: &[f64],
    params: &SolverParams,
    rule: ScheduleRule,
    schedule_seed: u64,
    truth: &SignalVector,
    x0: Option<&SignalVector>,
) -> Result<IterateTrace> {
    check_problem(a, b, truth, x0)?;
    let stream = ScheduleStream::new(rule, a.rows(), schedule_seed);
    run_loop(
        a,
        truth,
        params,
        x0,
        |k, x| kz_sweep(x, a, b, stream.epoch(k).order(), params.gamma),
        |_, _| {},
    )
}

/// IHT with the fixed gradient step `1/m`: each epoch computes
/// `x + (1/m) A^T (b - A x)` and hard-thresholds to `s` entries.
pub fn iht_run(
    a: &SensingOperator,
    b: &[f64],
    params: &SolverParams,
    truth: &SignalVector,
    x0: Option<&SignalVector>,
) -> Result<IterateTrace> {
    iht_run_observed(a, b, params, truth, x0, |_, _| {})
}

/// `iht_run` with a per-epoch observer over the post-thresholding iterate.
pub fn iht_run_observed(
    a: &SensingOperator,
    b: &[f64],
    params: &SolverParams,
    truth: &SignalVector,
    x0: Option<&SignalVector>,
    observer: impl FnMut(usize, &SignalVector),
) -> Result<IterateTrace> {
    check_problem(a, b, truth, x0)?;
    let s = params.sparsity.get();
    if s > a.cols() {
        return Err(KzError::invalid("sparsity exceeds signal dimension"));
    }
    let inv_m = 1.0 / a.rows() as f64;
    run_loop(
        a,
        truth,
        params,
        x0,
        |_, x| {
            let ax = a.apply(&SignalVector::new(x.clone()))?;
            let residual: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
            let grad = a.apply_adjoint(&residual)?;
            for (xi, gi) in x.iter_mut().zip(grad.as_slice()) {
                *xi += inv_m * gi;
            }
            hard_threshold_in_place(x, s);
            Ok(())
        },
        observer,
    )
}

/// KZIHT: one full Kaczmarz pass per epoch followed by one hard
/// thresholding. Equivalent to KZPT with `period = m`, `lambda = 1`.
pub fn kziht_run(
    a: &SensingOperator,
    b: &[f64],
    params: &SolverParams,
    rule: ScheduleRule,
    schedule_seed: u64,
    truth: &SignalVector,
    x0: Option<&SignalVector>,
) -> Result<IterateTrace> {
    kziht_run_observed(a, b, params, rule, schedule_seed, truth, x0, |_, _| {})
}

#[allow(clippy::too_many_arguments)]
pub fn kziht_run_observed(
    a: &SensingOperator,
    b: &[f64],
    params: &SolverParams,
    rule: ScheduleRule,
    schedule_seed: u64,
    truth: &SignalVector,
    x0: Option<&SignalVector>,
    observer: impl FnMut(usize, &SignalVector),
) -> Result<IterateTrace> {
    check_problem(a, b, truth, x0)?;
    let s = params.sparsity.get();
    if s > a.cols() {
        return Err(KzError::invalid("sparsity exceeds signal dimension"));
    }
    let stream = ScheduleStream::new(rule, a.rows(), schedule_seed);
    run_loop(
        a,
        truth,
        params,
        x0,
        |k, x| {
            kz_sweep(x, a, b, stream.epoch(k).order(), params.gamma)?;
            hard_threshold_in_place(x, s);
            Ok(())
        },
        observer,
    )
}

/// KZPT: Kaczmarz steps with a thresholding stage after every `period`
/// steps. Each stage measures the displacement from the window's anchor,
/// scales it by `lambda`, thresholds, and the anchor advances to the
/// thresholded iterate. When `period` does not divide `m`, the trailing
/// `m mod period` schedule entries of the epoch are unused.
pub fn kzpt_run(
    a: &SensingOperator,
    b: &[f64],
    params: &SolverParams,
    rule: ScheduleRule,
    schedule_seed: u64,
    truth: &SignalVector,
    x0: Option<&SignalVector>,
) -> Result<IterateTrace> {
    kzpt_run_observed(a, b, params, rule, schedule_seed, truth, x0, |_, _| {})
}

#[allow(clippy::too_many_arguments)]
pub fn kzpt_run_observed(
    a: &SensingOperator,
    b: &[f64],
    params: &SolverParams,
    rule: ScheduleRule,
    schedule_seed: u64,
    truth: &SignalVector,
    x0: Option<&SignalVector>,
    observer: impl FnMut(usize, &SignalVector),
) -> Result<IterateTrace> {
    check_problem(a, b, truth, x0)?;
    let s = params.sparsity.get();
    if s > a.cols() {
        return Err(KzError::invalid("sparsity exceeds signal dimension"));
    }
    let m = a.rows();
    let p = params.period;
    if p < 1 || p > m {
        return Err(KzError::invalid(format!(
            "period must satisfy 1 <= p <= m, got p = {}, m = {}",
            p, m
        )));
    }
    let windows = m / p;
    let stream = ScheduleStream::new(rule, m, schedule_seed);
    let mut anchor = vec![0.0; a.cols()];
    run_loop(
        a,
        truth,
        params,
        x0,
        |k, x| {
            let schedule = stream.epoch(k);
            let order = schedule.order();
            anchor.copy_from_slice(x);
            for w in 0..windows {
                kz_sweep(x, a, b, &order[w * p..(w + 1) * p], params.gamma)?;
                for (xi, ai) in x.iter_mut().zip(&anchor) {
                    *xi = ai + params.lambda * (*xi - ai);
                }
                hard_threshold_in_place(x, s);
                anchor.copy_from_slice(x);
            }
            Ok(())
        },
        observer,
    )
}

/// Step sizes from the sub-Gaussian convergence guarantee.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SubgaussianPreset {
    pub gamma: f64,
    pub lambda: f64,
    pub delta: f64,
}

/// The contraction parameter `delta = sqrt(3 s ln(N/s) (K ln m)^2 / m)`.
pub fn subgaussian_delta(m: usize, n: usize, s: usize, k_subg: f64) -> f64 {
    let log_ratio = (n as f64 / s as f64).ln();
    let k_log_m = k_subg * (m as f64).ln();
    (3.0 * s as f64 * log_ratio * k_log_m * k_log_m / m as f64).sqrt()
}

/// The `(gamma, lambda)` pair of the sub-Gaussian guarantee:
/// `gamma = delta / (2 m (K ln m)^2 sqrt(N))` and
/// `lambda = 2 N^{3/2} (K ln m)^2 / delta`, so `gamma * lambda = N / m`.
///
/// Feasibility requires `m > ln_margin * 48 s ln(N/s) (K ln m)^2`, which
/// pins `delta < 1/4` for `ln_margin = 1`; larger margins demand more
/// rows. Infeasible inputs return the minimal feasible `m`.
pub fn subgaussian_step_preset(
    m: usize,
    n: usize,
    s: usize,
    k_subg: f64,
    ln_margin: f64,
) -> Result<SubgaussianPreset> {
    if s == 0 || s > n {
        return Err(KzError::invalid("need 1 <= s <= N"));
    }
    if !(k_subg > 0.0 && k_subg.is_finite()) {
        return Err(KzError::invalid("sub-Gaussian norm bound must be positive"));
    }
    if !(ln_margin > 0.0 && ln_margin.is_finite()) {
        return Err(KzError::invalid("ln margin must be positive"));
    }
    let delta = subgaussian_delta(m.max(1), n, s, k_subg);
    let required = required_rows(m.max(2), n, s, k_subg, ln_margin);
    if m < 2 || (m as f64) <= required {
        return Err(KzError::InfeasibleParameters {
            m,
            minimal_m: minimal_feasible_m(n, s, k_subg, ln_margin),
            delta,
        });
    }
    let k_log_m = k_subg * (m as f64).ln();
    let n_f = n as f64;
    let gamma = delta / (2.0 * m as f64 * k_log_m * k_log_m * n_f.sqrt());
    let lambda = 2.0 * n_f.powf(1.5) * k_log_m * k_log_m / delta;
    Ok(SubgaussianPreset {
        gamma,
        lambda,
        delta,
    })
}

fn required_rows(m: usize, n: usize, s: usize, k_subg: f64, ln_margin: f64) -> f64 {
    let k_log_m = k_subg * (m as f64).ln();
    ln_margin * 48.0 * s as f64 * (n as f64 / s as f64).ln() * k_log_m * k_log_m
}

/// Smallest `m` accepted by `subgaussian_step_preset` for these inputs.
pub fn minimal_feasible_m(n: usize, s: usize, k_subg: f64, ln_margin: f64) -> usize {
    let mut m = 3usize;
    for _ in 0..128 {
        let req = required_rows(m, n, s, k_subg, ln_margin);
        let next = (req.floor() as usize + 1).max(3);
        if next <= m {
            return m;
        }
        m = next;
    }
    m
}
