//! Batch experiment runner: error-decay curves, phase-transition grids,
//! schedule ablations and thresholding-period sweeps, all seeded and
//! reproducible.
//!
//! Trials run on a rayon pool. Trial seeds derive from
//! `(base_seed, trial_index)` only, and every trial consumes four
//! independent sub-streams (matrix, signal, noise, schedule), so paired
//! experiments can share instances while varying a single ingredient.

pub mod config;
pub mod output;

pub use config::{
    load_config, resolve_solver, ExperimentConfig, GammaSpec, MatrixKind, ResolvedSolver, RunMode,
    SolverName,
};
pub use output::{persist_ablation, persist_curves, persist_phase, persist_sweep, Manifest};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{KzError, Result};
use crate::schedules::ScheduleRule;
use crate::seeds::{rng_from, substream_seed, trial_seed, SubStream};
use crate::sensing::{
    gen_bernoulli, gen_gaussian_fixed_norm, gen_subsampled_bos, make_measurements, SensingOperator,
};
use crate::signal::{random_sparse_signal, SignalVector, SparsityLevel};
use crate::solvers::{
    iht_run, kz_run, kziht_run, kzpt_run, IterateTrace, SolveStatus, SolverParams,
};

/// Tolerance used by the period-sweep epochs-to-tolerance table.
pub const SWEEP_TOLERANCE: f64 = 1e-6;

/// One finished trial.
#[derive(Clone, Debug)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    pub m: usize,
    pub s: usize,
    pub trace: IterateTrace,
}

/// One row of an aggregated mean curve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CurvePoint {
    pub epoch: usize,
    pub mean_rel_err: f64,
    pub std_rel_err: f64,
    pub n_trials: usize,
    pub n_diverged: usize,
}

/// Mean curve plus the per-trial records behind it, for one sparsity level.
#[derive(Clone, Debug)]
pub struct ErrorCurve {
    pub s: usize,
    pub points: Vec<CurvePoint>,
    pub trials: Vec<TrialRecord>,
}

impl ErrorCurve {
    /// Trials whose relative error reached `tol` at some epoch.
    pub fn successes(&self, tol: f64) -> usize {
        self.trials
            .iter()
            .filter(|t| t.trace.epochs_to_tolerance(tol).is_some())
            .count()
    }

    /// Mean over trials of epochs-to-`tol`; infinite if any trial missed.
    pub fn mean_epochs_to_tolerance(&self, tol: f64) -> f64 {
        let mut total = 0.0;
        for t in &self.trials {
            match t.trace.epochs_to_tolerance(tol) {
                Some(e) => total += e as f64,
                None => return f64::INFINITY,
            }
        }
        total / self.trials.len() as f64
    }
}

/// Empirical recovery-probability grid over (m, s) cells.
#[derive(Clone, Debug, Serialize)]
pub struct PhaseGrid {
    pub s_values: Vec<usize>,
    pub m_values: Vec<usize>,
    /// `success_prob[i][j]` is the success frequency at
    /// `(m_values[i], s_values[j])`.
    pub success_prob: Vec<Vec<f64>>,
    pub trials: usize,
    pub success_threshold: f64,
}

impl PhaseGrid {
    pub fn cell(&self, m: usize, s: usize) -> Option<f64> {
        let i = self.m_values.iter().position(|&v| v == m)?;
        let j = self.s_values.iter().position(|&v| v == s)?;
        Some(self.success_prob[i][j])
    }
}

/// Paired curves from the schedule ablation.
#[derive(Clone, Debug)]
pub struct AblationResult {
    pub reshuffle: Vec<ErrorCurve>,
    pub replacement: Vec<ErrorCurve>,
}

/// Curves and the epochs-to-tolerance table for one sweep period.
#[derive(Clone, Debug)]
pub struct PeriodSweepEntry {
    pub period: usize,
    pub gamma: f64,
    pub curves: Vec<ErrorCurve>,
    /// One row per sparsity level: mean epochs to `SWEEP_TOLERANCE`.
    pub mean_epochs_to_tolerance: Vec<(usize, f64)>,
    pub kziht_rate_bound: f64,
    pub kzpt_rate_bound: f64,
}

#[derive(Clone, Debug)]
pub struct PeriodSweepResult {
    pub entries: Vec<PeriodSweepEntry>,
}

fn build_operator(kind: MatrixKind, m: usize, n: usize, seed: u64) -> Result<SensingOperator> {
    let mut rng = rng_from(seed);
    match kind {
        MatrixKind::Hadamard => gen_subsampled_bos(n, m, &mut rng),
        MatrixKind::Bernoulli => gen_bernoulli(m, n, &mut rng),
        MatrixKind::Gaussian => gen_gaussian_fixed_norm(m, n, &mut rng),
    }
}

fn run_one_trial(
    config: &ExperimentConfig,
    solver: &ResolvedSolver,
    m: usize,
    s: usize,
    trial: usize,
) -> Result<TrialRecord> {
    let seed = trial_seed(config.base_seed, trial as u64);
    let op = build_operator(
        config.matrix.kind,
        m,
        config.matrix.n,
        substream_seed(seed, SubStream::Matrix),
    )?;
    let sparsity = SparsityLevel::new(s)?;
    let x_star = random_sparse_signal(
        config.matrix.n,
        sparsity,
        &mut rng_from(substream_seed(seed, SubStream::Signal)),
    )?;
    let meas = make_measurements(
        &op,
        &x_star,
        config.noise.to_model(),
        &mut rng_from(substream_seed(seed, SubStream::Noise)),
    )?;
    let schedule_seed = substream_seed(seed, SubStream::Schedule);
    let params = SolverParams {
        sparsity,
        gamma: solver.gamma,
        lambda: solver.lambda,
        period: solver.period.min(m),
        epochs: solver.epochs,
        divergence_threshold: solver.divergence_threshold,
        target_error: solver.target_error,
    };
    let trace = match solver.name {
        SolverName::Kz => kz_run(&op, &meas.b, &params, solver.rule, schedule_seed, &x_star, None)?,
        SolverName::Iht => iht_run(&op, &meas.b, &params, &x_star, None)?,
        SolverName::Kziht => kziht_run(
            &op,
            &meas.b,
            &params,
            solver.rule,
            schedule_seed,
            &x_star,
            None,
        )?,
        SolverName::Kzpt => kzpt_run(
            &op,
            &meas.b,
            &params,
            solver.rule,
            schedule_seed,
            &x_star,
            None,
        )?,
    };
    Ok(TrialRecord {
        trial,
        seed,
        m,
        s,
        trace,
    })
}

/// Relative error a trace contributes at `epoch_idx` (0-based) when curves
/// are aligned to a common budget: diverged trials contribute the
/// divergence threshold from their divergence epoch on, early-converged
/// trials extend their final value.
fn padded_value(trace: &IterateTrace, epoch_idx: usize, divergence_threshold: f64) -> f64 {
    let len = trace.epochs.len();
    if trace.status == SolveStatus::Diverged && epoch_idx + 1 >= len {
        return divergence_threshold;
    }
    if epoch_idx < len {
        trace.epochs[epoch_idx].relative_error
    } else {
        trace
            .epochs
            .last()
            .map(|r| r.relative_error)
            .unwrap_or(divergence_threshold)
    }
}

fn aggregate(trials: &[TrialRecord], budget: usize, divergence_threshold: f64) -> Vec<CurvePoint> {
    let n = trials.len();
    (0..budget)
        .map(|idx| {
            let values: Vec<f64> = trials
                .iter()
                .map(|t| padded_value(&t.trace, idx, divergence_threshold))
                .collect();
            let mean = values.iter().sum::<f64>() / n as f64;
            let std = if n > 1 {
                (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64)
                    .sqrt()
            } else {
                0.0
            };
            let n_diverged = trials
                .iter()
                .filter(|t| {
                    t.trace.status == SolveStatus::Diverged && idx + 1 >= t.trace.epochs.len()
                })
                .count();
            CurvePoint {
                epoch: idx + 1,
                mean_rel_err: mean,
                std_rel_err: std,
                n_trials: n,
                n_diverged,
            }
        })
        .collect()
}

fn run_curves_with(
    config: &ExperimentConfig,
    solver: &ResolvedSolver,
    m: usize,
) -> Result<Vec<ErrorCurve>> {
    config
        .signal
        .s
        .iter()
        .map(|&s| {
            let trials: Result<Vec<TrialRecord>> = (0..config.trials)
                .into_par_iter()
                .map(|trial| run_one_trial(config, solver, m, s, trial))
                .collect();
            let trials = trials?;
            let points = aggregate(&trials, solver.epochs, solver.divergence_threshold);
            Ok(ErrorCurve { s, points, trials })
        })
        .collect()
}

/// Error-decay curves: one mean curve per sparsity level in the config.
pub fn run_error_curve(config: &ExperimentConfig) -> Result<Vec<ErrorCurve>> {
    config.validate(RunMode::Curve)?;
    let solver = resolve_solver(config, RunMode::Curve, config.matrix.m)?;
    run_curves_with(config, &solver, config.matrix.m)
}

/// Phase-transition grid over `(phase.m_values, signal.s)`.
///
/// Success means the trace reached `success_threshold` within the epoch
/// budget; runs stop at the threshold, so a cell costs only as many epochs
/// as its trials need.
pub fn run_phase_transition(config: &ExperimentConfig) -> Result<PhaseGrid> {
    config.validate(RunMode::Phase)?;
    let m_values = config.phase.as_ref().expect("validated").m_values.clone();
    let s_values = config.signal.s.clone();
    let mut success_prob = Vec::with_capacity(m_values.len());
    for &m in &m_values {
        let mut solver = resolve_solver(config, RunMode::Phase, m)?;
        if solver.target_error == 0.0 {
            solver.target_error = config.success_threshold;
        }
        let mut row = Vec::with_capacity(s_values.len());
        for &s in &s_values {
            let outcomes: Result<Vec<TrialRecord>> = (0..config.trials)
                .into_par_iter()
                .map(|trial| run_one_trial(config, &solver, m, s, trial))
                .collect();
            let outcomes = outcomes?;
            let successes = outcomes
                .iter()
                .filter(|t| {
                    t.trace
                        .epochs_to_tolerance(config.success_threshold)
                        .is_some()
                })
                .count();
            row.push(successes as f64 / config.trials as f64);
        }
        success_prob.push(row);
    }
    Ok(PhaseGrid {
        s_values,
        m_values,
        success_prob,
        trials: config.trials,
        success_threshold: config.success_threshold,
    })
}

/// Reshuffling vs with-replacement KZIHT under shared matrix, signal and
/// noise streams; only the consumed schedule rule differs.
pub fn run_schedule_ablation(config: &ExperimentConfig) -> Result<AblationResult> {
    config.validate(RunMode::Ablation)?;
    let base = resolve_solver(config, RunMode::Ablation, config.matrix.m)?;
    let reshuffle = run_curves_with(
        config,
        &ResolvedSolver {
            rule: ScheduleRule::Reshuffle,
            ..base
        },
        config.matrix.m,
    )?;
    let replacement = run_curves_with(
        config,
        &ResolvedSolver {
            rule: ScheduleRule::WithReplacement,
            ..base
        },
        config.matrix.m,
    )?;
    Ok(AblationResult {
        reshuffle,
        replacement,
    })
}

/// Runs KZPT once per period in `sweep.p_list`, resolving `gamma = "auto"`
/// as `N/p`, and tabulates mean epochs to `SWEEP_TOLERANCE` alongside the
/// closed-form rate bounds.
pub fn run_period_sweep(config: &ExperimentConfig) -> Result<PeriodSweepResult> {
    config.validate(RunMode::PeriodSweep)?;
    let sweep = config.sweep.as_ref().expect("validated");
    let mut entries = Vec::with_capacity(sweep.p_list.len());
    for &p in &sweep.p_list {
        let mut per_period = config.clone();
        per_period.solver.period = Some(p);
        let solver = resolve_solver(&per_period, RunMode::PeriodSweep, config.matrix.m)?;
        let curves = run_curves_with(&per_period, &solver, config.matrix.m)?;
        let mean_epochs = curves
            .iter()
            .map(|c| (c.s, c.mean_epochs_to_tolerance(SWEEP_TOLERANCE)))
            .collect();
        let s_max = config.signal.s.iter().copied().max().unwrap_or(1);
        let bounds = crate::analysis::theorem_rate_bounds(
            config.matrix.m,
            config.matrix.n,
            s_max,
            sweep.c_rip,
            p,
        )?;
        entries.push(PeriodSweepEntry {
            period: p,
            gamma: solver.gamma,
            curves,
            mean_epochs_to_tolerance: mean_epochs,
            kziht_rate_bound: bounds.kziht_rate,
            kzpt_rate_bound: bounds.kzpt_rate,
        });
    }
    Ok(PeriodSweepResult { entries })
}

/// Single-instance solve used by the CLI `solve` command: one seeded trial
/// with the trace returned alongside the instance pieces.
pub struct SolveOutcome {
    pub record: TrialRecord,
    pub resolved: ResolvedSolver,
    pub x_star: SignalVector,
    pub operator: SensingOperator,
    pub noise: Vec<f64>,
}

pub fn run_single_solve(config: &ExperimentConfig, trial: usize) -> Result<SolveOutcome> {
    config.validate(RunMode::Curve)?;
    if config.signal.s.len() != 1 {
        return Err(KzError::Config(
            "signal.s: single solves take exactly one sparsity level".to_string(),
        ));
    }
    let solver = resolve_solver(config, RunMode::Curve, config.matrix.m)?;
    let s = config.signal.s[0];
    let record = run_one_trial(config, &solver, config.matrix.m, s, trial)?;
    // Rebuild the instance pieces for reporting; same sub-streams, so this
    // matches what the trial consumed.
    let op = build_operator(
        config.matrix.kind,
        config.matrix.m,
        config.matrix.n,
        substream_seed(record.seed, SubStream::Matrix),
    )?;
    let x_star = random_sparse_signal(
        config.matrix.n,
        SparsityLevel::new(s)?,
        &mut rng_from(substream_seed(record.seed, SubStream::Signal)),
    )?;
    let meas = make_measurements(
        &op,
        &x_star,
        config.noise.to_model(),
        &mut rng_from(substream_seed(record.seed, SubStream::Noise)),
    )?;
    Ok(SolveOutcome {
        record,
        resolved: solver,
        x_star,
        operator: op,
        noise: meas.noise,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::config_from_str;

    fn curve_config(extra: &str) -> ExperimentConfig {
        let text = format!(
            r#"
trials = 3
base_seed = 11

[matrix]
kind = "hadamard"
m = 32
n = 64

[signal]
s = [3]

[solver]
name = "kziht"
epochs = 40
{}
"#,
            extra
        );
        config_from_str(&text, false, &[]).unwrap()
    }

    #[test]
    fn curves_are_reproducible_and_trial_order_free() {
        let config = curve_config("");
        let a = run_error_curve(&config).unwrap();
        let b = run_error_curve(&config).unwrap();
        assert_eq!(a.len(), 1);
        for (ca, cb) in a.iter().zip(&b) {
            assert_eq!(ca.points, cb.points);
            for (ta, tb) in ca.trials.iter().zip(&cb.trials) {
                assert_eq!(ta.seed, tb.seed);
                assert_eq!(ta.trace.final_iterate, tb.trace.final_iterate);
            }
        }
        // Trial seeds depend only on the index.
        let solver = resolve_solver(&config, RunMode::Curve, 32).unwrap();
        let t2 = run_one_trial(&config, &solver, 32, 3, 2).unwrap();
        assert_eq!(t2.seed, a[0].trials[2].seed);
        assert_eq!(t2.trace.final_iterate, a[0].trials[2].trace.final_iterate);
    }

    #[test]
    fn kziht_converges_on_a_small_hadamard_instance() {
        let config = curve_config("");
        let curves = run_error_curve(&config).unwrap();
        let final_mean = curves[0].points.last().unwrap().mean_rel_err;
        assert!(final_mean < 1e-6, "final mean error = {}", final_mean);
        assert_eq!(curves[0].successes(1e-6), 3);
    }

    #[test]
    fn diverged_trials_pad_with_the_threshold() {
        use crate::solvers::EpochRecord;
        let diverged = IterateTrace {
            epochs: vec![
                EpochRecord {
                    relative_error: 1.0,
                    elapsed_seconds: 0.0,
                    iterate_norm: 1.0,
                },
                EpochRecord {
                    relative_error: 2e6,
                    elapsed_seconds: 0.0,
                    iterate_norm: 1.0,
                },
            ],
            final_iterate: SignalVector::zeros(2),
            status: SolveStatus::Diverged,
        };
        assert_eq!(padded_value(&diverged, 0, 1e6), 1.0);
        assert_eq!(padded_value(&diverged, 1, 1e6), 1e6);
        assert_eq!(padded_value(&diverged, 5, 1e6), 1e6);
        let record = TrialRecord {
            trial: 0,
            seed: 0,
            m: 2,
            s: 1,
            trace: diverged,
        };
        let points = aggregate(&[record], 4, 1e6);
        assert_eq!(points[0].n_diverged, 0);
        assert_eq!(points[1].n_diverged, 1);
        assert_eq!(points[3].mean_rel_err, 1e6);
    }

    #[test]
    fn phase_grid_fails_for_s_at_least_m() {
        let text = r#"
trials = 4
base_seed = 3
success_threshold = 0.1

[matrix]
kind = "bernoulli"
m = 8
n = 32

[signal]
s = [16]

[solver]
name = "kziht"
epochs = 30

[phase]
m_values = [8]
"#;
        let config = config_from_str(text, false, &[]).unwrap();
        let grid = run_phase_transition(&config).unwrap();
        assert_eq!(grid.cell(8, 16), Some(0.0));
    }

    #[test]
    fn ablation_shares_instances_across_rules() {
        let text = r#"
trials = 2
base_seed = 5

[matrix]
kind = "hadamard"
m = 16
n = 32

[signal]
s = [2]

[solver]
name = "kziht"
epochs = 10
gamma = 1.0
"#;
        let config = config_from_str(text, false, &[]).unwrap();
        let result = run_schedule_ablation(&config).unwrap();
        // Same seeds, same trial instances: the runs differ only through
        // the schedules they consume.
        for (a, b) in result.reshuffle[0]
            .trials
            .iter()
            .zip(&result.replacement[0].trials)
        {
            assert_eq!(a.seed, b.seed);
        }
        // Identical rule and seeds reproduce identical curves.
        let again = run_schedule_ablation(&config).unwrap();
        assert_eq!(result.reshuffle[0].points, again.reshuffle[0].points);
        assert_eq!(result.replacement[0].points, again.replacement[0].points);
    }

    #[test]
    fn period_sweep_with_full_period_matches_kziht() {
        let text = r#"
trials = 2
base_seed = 9

[matrix]
kind = "hadamard"
m = 16
n = 32

[signal]
s = [2]

[solver]
name = "kzpt"
epochs = 25

[sweep]
p_list = [16]
"#;
        let config = config_from_str(text, false, &[]).unwrap();
        let sweep = run_period_sweep(&config).unwrap();
        assert_eq!(sweep.entries.len(), 1);
        assert_eq!(sweep.entries[0].gamma, 2.0);

        let mut kziht_cfg = config.clone();
        kziht_cfg.solver.name = SolverName::Kziht;
        kziht_cfg.sweep = None;
        let curves = run_error_curve(&kziht_cfg).unwrap();
        let sweep_curve = &sweep.entries[0].curves[0];
        for (a, b) in curves[0].points.iter().zip(&sweep_curve.points) {
            assert!((a.mean_rel_err - b.mean_rel_err).abs() <= 1e-10 * a.mean_rel_err.max(1e-30));
        }
        assert_eq!(
            sweep.entries[0].kziht_rate_bound,
            sweep.entries[0].kzpt_rate_bound
        );
    }
}
