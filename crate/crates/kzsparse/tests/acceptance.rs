//! Acceptance suite: one test per criterion, each printing a PASS/FAIL
//! line (run with `--nocapture` to see them stream).
//!
//! `cargo test -p kzsparse --test acceptance` runs the standard suite;
//! the full phase-transition grids are a long nightly job behind
//! `--ignored`.

use std::time::Instant;

use kzsparse::analysis::{
    admissible_gamma, bias_term, cross_term_report, rip_constant_bruteforce, scaled_dense,
    verify_identity_suite,
};
use kzsparse::harness::config::{
    ExperimentConfig, GammaSpec, MatrixConfig, MatrixKind, NoiseConfig, PhaseConfig, SignalConfig,
    SolverConfig, SolverName,
};
use kzsparse::harness::{
    run_error_curve, run_period_sweep, run_phase_transition, run_schedule_ablation,
};
use kzsparse::schedules::{next_epoch_schedule, ScheduleRule};
use kzsparse::seeds::{mix, rng_from, substream_seed, trial_seed, SubStream};
use kzsparse::sensing::{gen_bernoulli, gen_subsampled_bos, make_measurements, NoiseModel};
use kzsparse::signal::{hard_threshold, project_support, random_sparse_signal, SupportSet};
use kzsparse::solvers::{
    iht_run, iht_run_observed, kziht_run, kziht_run_observed, kzpt_run_observed,
};
use kzsparse::{SignalVector, SolveStatus, SolverParams, SparsityLevel};
use rayon::prelude::*;

fn check(name: &str, start: Instant, pass: bool, detail: String) {
    println!(
        "ACCEPTANCE {}: {} ({:.1}s) {}",
        name,
        if pass { "PASS" } else { "FAIL" },
        start.elapsed().as_secs_f64(),
        detail
    );
    assert!(pass, "{} failed: {}", name, detail);
}

fn s(level: usize) -> SparsityLevel {
    SparsityLevel::new(level).unwrap()
}

fn base_config(kind: MatrixKind, m: usize, n: usize, s_list: Vec<usize>) -> ExperimentConfig {
    ExperimentConfig {
        matrix: MatrixConfig { kind, m, n },
        signal: SignalConfig { s: s_list },
        noise: NoiseConfig::default(),
        solver: SolverConfig {
            name: SolverName::Kziht,
            rule: ScheduleRule::Reshuffle,
            gamma: GammaSpec::default(),
            lambda: 1.0,
            period: None,
            epochs: None,
            target_error: 0.0,
            divergence_threshold: 1e6,
            preset: None,
            k_subg: 1.0,
        },
        trials: 30,
        base_seed: 20_240_001,
        success_threshold: 1e-1,
        outputs: None,
        phase: None,
        sweep: None,
    }
}

/// Criterion 1: the multi-step epoch identity over 100 random instances
/// (all three ensembles, m, N <= 64, gamma in (0, 2), random noise).
#[test]
fn c01_multi_step_identity_suite() {
    let start = Instant::now();
    let report = verify_identity_suite(64, 64, 100, 20_240_101).unwrap();
    check(
        "C1 multi-step-identity",
        start,
        report.max_relative_deviation <= 1e-9,
        format!("max relative deviation = {:.3e}", report.max_relative_deviation),
    );
}

/// Criterion 2: on a subsampled Hadamard operator with gamma = N/m the
/// KZIHT epoch map equals the IHT epoch map, iterate for iterate.
#[test]
fn c02_bos_kziht_iht_equivalence() {
    let start = Instant::now();
    let (n, m, sparsity, epochs) = (256usize, 64usize, 5usize, 25usize);
    let mut worst = 0.0f64;
    for seed in 0..20u64 {
        let base = mix(20_240_202, seed);
        let mut rng = rng_from(base);
        let a = gen_subsampled_bos(n, m, &mut rng).unwrap();
        let x_star = random_sparse_signal(n, s(sparsity), &mut rng).unwrap();
        let b = a.apply(&x_star).unwrap();
        let params = SolverParams {
            gamma: n as f64 / m as f64,
            epochs,
            ..SolverParams::new(s(sparsity))
        };
        let mut kziht_iterates = Vec::new();
        kziht_run_observed(
            &a,
            &b,
            &params,
            ScheduleRule::Reshuffle,
            mix(base, 1),
            &x_star,
            None,
            |_, x| kziht_iterates.push(x.clone()),
        )
        .unwrap();
        let mut iht_iterates = Vec::new();
        iht_run_observed(&a, &b, &params, &x_star, None, |_, x| {
            iht_iterates.push(x.clone())
        })
        .unwrap();
        assert_eq!(kziht_iterates.len(), iht_iterates.len());
        for (u, v) in kziht_iterates.iter().zip(&iht_iterates) {
            worst = worst.max(u.sub(v).norm2() / v.norm2().max(1.0));
        }
    }
    check(
        "C2 bos-kziht-iht-equivalence",
        start,
        worst <= 1e-10,
        format!("max per-epoch iterate deviation = {:.3e}", worst),
    );
}

/// Criterion 3: cross terms of subsampled-BOS epoch products vanish for
/// every schedule.
#[test]
fn c03_bos_cross_terms_vanish() {
    let start = Instant::now();
    let instances = [(64usize, 16usize), (128, 32), (256, 64), (256, 128), (512, 128)];
    let norms: Vec<f64> = instances
        .par_iter()
        .enumerate()
        .flat_map(|(idx, &(n, m))| {
            let mut rng = rng_from(mix(20_240_303, idx as u64));
            let a = gen_subsampled_bos(n, m, &mut rng).unwrap();
            (0..10u64)
                .map(|i| {
                    let schedule =
                        next_epoch_schedule(ScheduleRule::Reshuffle, m, i, mix(idx as u64, i));
                    let gamma = if i % 2 == 0 { n as f64 / m as f64 } else { 1.3 };
                    cross_term_report(&a, &schedule, gamma, 1.0)
                        .unwrap()
                        .operator_norm
                })
                .collect::<Vec<f64>>()
        })
        .collect();
    let worst = norms.iter().cloned().fold(0.0f64, f64::max);
    check(
        "C3 bos-cross-terms-vanish",
        start,
        norms.len() == 50 && worst <= 1e-10,
        format!("{} schedules, max operator norm = {:.3e}", norms.len(), worst),
    );
}

/// Criterion 4: the cross-term bound holds for a Bernoulli operator with
/// an admissible step size in at least 49 of 50 random schedules.
#[test]
fn c04_bernoulli_cross_term_bound() {
    let start = Instant::now();
    let (m, n) = (32usize, 1024usize);
    let mut rng = rng_from(20_240_404);
    let a = gen_bernoulli(m, n, &mut rng).unwrap();
    let gamma = 0.999 * admissible_gamma(m, n, 1.0);
    let reports: Vec<_> = (0..50u64)
        .into_par_iter()
        .map(|i| {
            let schedule = next_epoch_schedule(ScheduleRule::Reshuffle, m, i, mix(7, i));
            cross_term_report(&a, &schedule, gamma, 1.0).unwrap()
        })
        .collect();
    assert!(reports.iter().all(|r| r.gamma_admissible));
    let below = reports
        .iter()
        .filter(|r| r.operator_norm < r.bound)
        .count();
    let max_norm = reports.iter().map(|r| r.operator_norm).fold(0.0, f64::max);
    check(
        "C4 bernoulli-cross-term-bound",
        start,
        below >= 49,
        format!(
            "{}/50 below bound; max norm {:.3e} vs bound {:.3e}",
            below, max_norm, reports[0].bound
        ),
    );
}

/// Criterion 5: KZIHT error decay on the subsampled Hadamard setting
/// (m=256, N=1024, s in {5,10,15,20}, gamma=4, reshuffling, 30 trials).
#[test]
fn c05_hadamard_kziht_curves() {
    let start = Instant::now();
    let mut config = base_config(MatrixKind::Hadamard, 256, 1024, vec![5, 10, 15, 20]);
    config.solver.epochs = Some(50);
    config.base_seed = 1;
    let curves = run_error_curve(&config).unwrap();
    let mut pass = true;
    let mut detail = String::new();
    for curve in &curves {
        let best_mean = curve
            .points
            .iter()
            .map(|p| p.mean_rel_err)
            .fold(f64::INFINITY, f64::min);
        let successes = curve.successes(1e-6);
        pass &= best_mean < 1e-6 && successes >= 27;
        detail.push_str(&format!(
            "s={}: mean {:.2e}, {}/30 converged; ",
            curve.s, best_mean, successes
        ));
    }
    check("C5 hadamard-kziht-curves", start, pass, detail);
}

/// Criterion 6: on Bernoulli 800x1024 IHT handles s=50 but diverges at
/// s=150, while KZIHT still recovers s=150.
#[test]
fn c06_bernoulli_sparsity_advantage() {
    let start = Instant::now();
    let trials = 10usize;
    let base_seed = 20_240_606u64;
    let run = |solver: SolverName, sparsity: usize| -> Vec<kzsparse::IterateTrace> {
        (0..trials)
            .into_par_iter()
            .map(|t| {
                let seed = trial_seed(base_seed, t as u64);
                let mut mrng = rng_from(substream_seed(seed, SubStream::Matrix));
                let a = gen_bernoulli(800, 1024, &mut mrng).unwrap();
                let x_star = random_sparse_signal(
                    1024,
                    s(sparsity),
                    &mut rng_from(substream_seed(seed, SubStream::Signal)),
                )
                .unwrap();
                let b = a.apply(&x_star).unwrap();
                let params = SolverParams {
                    gamma: 1024.0 / 800.0,
                    epochs: 300,
                    target_error: 1e-3,
                    ..SolverParams::new(s(sparsity))
                };
                match solver {
                    SolverName::Iht => iht_run(&a, &b, &params, &x_star, None).unwrap(),
                    _ => kziht_run(
                        &a,
                        &b,
                        &params,
                        ScheduleRule::Reshuffle,
                        substream_seed(seed, SubStream::Schedule),
                        &x_star,
                        None,
                    )
                    .unwrap(),
                }
            })
            .collect()
    };
    let iht_small = run(SolverName::Iht, 50);
    let iht_large = run(SolverName::Iht, 150);
    let kziht_large = run(SolverName::Kziht, 150);
    let iht_small_ok = iht_small
        .iter()
        .filter(|t| t.epochs_to_tolerance(1e-3).is_some())
        .count();
    let iht_large_diverged = iht_large
        .iter()
        .filter(|t| t.status == SolveStatus::Diverged)
        .count();
    let kziht_large_ok = kziht_large
        .iter()
        .filter(|t| t.epochs_to_tolerance(1e-3).is_some())
        .count();
    check(
        "C6 bernoulli-sparsity-advantage",
        start,
        iht_small_ok >= 9 && iht_large_diverged >= 9 && kziht_large_ok >= 8,
        format!(
            "IHT s=50 converged {}/10; IHT s=150 diverged {}/10; KZIHT s=150 converged {}/10",
            iht_small_ok, iht_large_diverged, kziht_large_ok
        ),
    );
}

/// Criterion 7: KZPT with period 128 reaches 1e-6 in strictly fewer mean
/// epochs than KZIHT (the p = m run) on Hadamard N=512, m=256, s=10.
#[test]
fn c07_kzpt_period_advantage() {
    let start = Instant::now();
    let mut config = base_config(MatrixKind::Hadamard, 256, 512, vec![10]);
    config.solver.name = SolverName::Kzpt;
    config.solver.epochs = Some(150);
    config.base_seed = 20_240_707;
    config.sweep = Some(kzsparse::harness::config::SweepConfig {
        p_list: vec![128, 256],
        c_rip: 1.0,
    });
    let sweep = run_period_sweep(&config).unwrap();
    let epochs_p128 = sweep.entries[0].mean_epochs_to_tolerance[0].1;
    let epochs_p256 = sweep.entries[1].mean_epochs_to_tolerance[0].1;
    check(
        "C7 kzpt-period-advantage",
        start,
        epochs_p128.is_finite() && epochs_p256.is_finite() && epochs_p128 < epochs_p256,
        format!(
            "mean epochs to 1e-6: p=128 -> {}, p=256 (kziht) -> {}",
            epochs_p128, epochs_p256
        ),
    );
}

/// Criterion 8: reshuffling KZIHT converges at gamma = 4 where
/// with-replacement KZIHT diverges (Hadamard m=256, N=1024, s=5).
#[test]
fn c08_reshuffling_vs_replacement() {
    let start = Instant::now();
    let mut config = base_config(MatrixKind::Hadamard, 256, 1024, vec![5]);
    config.solver.epochs = Some(150);
    config.base_seed = 20_240_808;
    let result = run_schedule_ablation(&config).unwrap();
    let reshuffle_ok = result.reshuffle[0]
        .trials
        .iter()
        .filter(|t| matches!(t.trace.epochs_to_tolerance(1e-6), Some(e) if e <= 100))
        .count();
    let replacement_diverged = result.replacement[0]
        .trials
        .iter()
        .filter(|t| t.trace.status == SolveStatus::Diverged)
        .count();
    check(
        "C8 reshuffling-vs-replacement",
        start,
        reshuffle_ok >= 27 && replacement_diverged >= 27,
        format!(
            "reshuffle converged {}/30 within 100 epochs; replacement diverged {}/30",
            reshuffle_ok, replacement_diverged
        ),
    );
}

/// Criterion 9: under Gaussian noise the KZIHT plateau stays within
/// 4x the statistical bias floor in every trial.
#[test]
fn c09_noisy_plateau_vs_bias_floor() {
    let start = Instant::now();
    let (n, m, sparsity) = (1024usize, 256usize, 5usize);
    let base_seed = 20_240_909u64;
    let outcomes: Vec<(f64, f64)> = (0..30u64)
        .into_par_iter()
        .map(|t| {
            let seed = trial_seed(base_seed, t);
            let mut mrng = rng_from(substream_seed(seed, SubStream::Matrix));
            let a = gen_subsampled_bos(n, m, &mut mrng).unwrap();
            let x_star = random_sparse_signal(
                n,
                s(sparsity),
                &mut rng_from(substream_seed(seed, SubStream::Signal)),
            )
            .unwrap();
            let meas = make_measurements(
                &a,
                &x_star,
                NoiseModel::Gaussian { sigma: 0.01 },
                &mut rng_from(substream_seed(seed, SubStream::Noise)),
            )
            .unwrap();
            let params = SolverParams {
                gamma: n as f64 / m as f64,
                epochs: 200,
                ..SolverParams::new(s(sparsity))
            };
            let trace = kziht_run(
                &a,
                &meas.b,
                &params,
                ScheduleRule::Reshuffle,
                substream_seed(seed, SubStream::Schedule),
                &x_star,
                None,
            )
            .unwrap();
            let tail = &trace.epochs[trace.epochs.len() - 20..];
            let plateau_abs = tail
                .iter()
                .map(|r| r.relative_error * x_star.norm2())
                .fold(0.0f64, f64::max);
            let floor = bias_term(&a, &meas.noise, s(sparsity)).unwrap();
            (plateau_abs, floor)
        })
        .collect();
    let violations = outcomes
        .iter()
        .filter(|(plateau, floor)| *plateau > 4.0 * floor)
        .count();
    let worst_ratio = outcomes
        .iter()
        .map(|(p, f)| p / f)
        .fold(0.0f64, f64::max);
    check(
        "C9 noisy-plateau-vs-bias",
        start,
        violations == 0,
        format!(
            "0 allowed, {} trials above 4x bias; worst plateau/bias ratio = {:.2}",
            violations, worst_ratio
        ),
    );
}

/// Criterion 10: property bundle — thresholding best-approximation by
/// brute force, RIP hand cases, bias enumeration, bit-identical reruns,
/// and the KZPT(p=m, lambda=1) = KZIHT reduction.
#[test]
fn c10_property_suites() {
    let start = Instant::now();
    let mut detail = String::new();

    // Hard thresholding beats every same-size support projection.
    let mut rng = rng_from(20_241_010);
    let mut best_approx_ok = true;
    for _ in 0..40 {
        use rand::Rng;
        let n = rng.gen_range(2..=10usize);
        let v = SignalVector::new((0..n).map(|_| rng.gen_range(-2.0..2.0)).collect());
        for level in 1..=n {
            let t = hard_threshold(&v, s(level)).unwrap();
            let err_t = v.sub(&t).norm2();
            let mut combo: Vec<usize> = (0..level).collect();
            loop {
                let support = SupportSet::new(combo.clone(), n).unwrap();
                let w = project_support(&v, &support).unwrap();
                best_approx_ok &= err_t <= v.sub(&w).norm2() + 1e-12;
                if !advance(&mut combo, n) {
                    break;
                }
            }
        }
    }
    detail.push_str(&format!("best-approx {}; ", ok_str(best_approx_ok)));

    // RIP hand cases.
    let eye = nalgebra::DMatrix::<f64>::identity(8, 8);
    let rip_identity = rip_constant_bruteforce(&eye, s(3)).unwrap().delta <= 1e-14;
    let ones = nalgebra::DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
    let rip_ones_1 = rip_constant_bruteforce(&ones, s(1)).unwrap().delta.abs() <= 1e-14;
    let rip_ones_2 =
        (rip_constant_bruteforce(&ones, s(2)).unwrap().delta - 1.0).abs() <= 1e-14;
    let mut rng2 = rng_from(77);
    let bos = gen_subsampled_bos(32, 32, &mut rng2).unwrap();
    let rip_bos = rip_constant_bruteforce(&scaled_dense(&bos, 1.0 / 32f64.sqrt()), s(3))
        .unwrap()
        .delta
        <= 1e-10;
    let rip_ok = rip_identity && rip_ones_1 && rip_ones_2 && rip_bos;
    detail.push_str(&format!("rip-hand-cases {}; ", ok_str(rip_ok)));

    // Bias term equals brute-force support enumeration at N=12, s=2.
    let mut bias_ok = true;
    {
        use rand::Rng;
        let a = gen_bernoulli(9, 12, &mut rng).unwrap();
        for _ in 0..5 {
            let e: Vec<f64> = (0..9).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let fast = bias_term(&a, &e, s(2)).unwrap();
            let w = a.apply_adjoint(&e).unwrap();
            let w: Vec<f64> = w.as_slice().iter().map(|v| v / 9.0).collect();
            let mut best = 0.0f64;
            for mask in 0u32..(1 << 12) {
                if mask.count_ones() > 4 {
                    continue;
                }
                let norm_sq: f64 = (0..12)
                    .filter(|i| mask & (1 << i) != 0)
                    .map(|i| w[i] * w[i])
                    .sum();
                best = best.max(norm_sq.sqrt());
            }
            bias_ok &= (fast - best).abs() <= 1e-12;
        }
    }
    detail.push_str(&format!("bias-enumeration {}; ", ok_str(bias_ok)));

    // Bit-identical reruns.
    let determinism_ok = {
        let mut rng = rng_from(31);
        let a = gen_bernoulli(40, 64, &mut rng).unwrap();
        let x_star = random_sparse_signal(64, s(6), &mut rng).unwrap();
        let meas =
            make_measurements(&a, &x_star, NoiseModel::Gaussian { sigma: 0.02 }, &mut rng).unwrap();
        let params = SolverParams {
            gamma: 1.1,
            epochs: 30,
            ..SolverParams::new(s(6))
        };
        let run = || {
            kziht_run(
                &a,
                &meas.b,
                &params,
                ScheduleRule::Reshuffle,
                99,
                &x_star,
                None,
            )
            .unwrap()
        };
        let (t1, t2) = (run(), run());
        t1.final_iterate == t2.final_iterate
            && t1
                .epochs
                .iter()
                .zip(&t2.epochs)
                .all(|(a, b)| a.relative_error.to_bits() == b.relative_error.to_bits())
    };
    detail.push_str(&format!("bit-determinism {}; ", ok_str(determinism_ok)));

    // KZPT with p = m and lambda = 1 reproduces KZIHT iterate for iterate.
    let reduction_ok = {
        let mut rng = rng_from(55);
        let a = gen_bernoulli(24, 48, &mut rng).unwrap();
        let x_star = random_sparse_signal(48, s(5), &mut rng).unwrap();
        let b = a.apply(&x_star).unwrap();
        let params = SolverParams {
            gamma: 0.8,
            lambda: 1.0,
            period: 24,
            epochs: 20,
            ..SolverParams::new(s(5))
        };
        let mut xs1 = Vec::new();
        kziht_run_observed(
            &a,
            &b,
            &params,
            ScheduleRule::Reshuffle,
            4242,
            &x_star,
            None,
            |_, x| xs1.push(x.clone()),
        )
        .unwrap();
        let mut xs2 = Vec::new();
        kzpt_run_observed(
            &a,
            &b,
            &params,
            ScheduleRule::Reshuffle,
            4242,
            &x_star,
            None,
            |_, x| xs2.push(x.clone()),
        )
        .unwrap();
        xs1.len() == xs2.len()
            && xs1
                .iter()
                .zip(&xs2)
                .all(|(u, v)| u.sub(v).norm2() <= 1e-10 * u.norm2().max(1.0))
    };
    detail.push_str(&format!("kzpt-reduction {}", ok_str(reduction_ok)));

    check(
        "C10 property-suites",
        start,
        best_approx_ok && rip_ok && bias_ok && determinism_ok && reduction_ok,
        detail,
    );
}

fn ok_str(b: bool) -> &'static str {
    if b {
        "ok"
    } else {
        "FAIL"
    }
}

fn advance(combo: &mut [usize], n: usize) -> bool {
    let k = combo.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if combo[i] < n - (k - i) {
            combo[i] += 1;
            for j in (i + 1)..k {
                combo[j] = combo[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Nightly: phase-transition grids at N=256 with 10 trials. On Bernoulli
/// the KZIHT success region contains IHT's cellwise (within 0.1); on
/// Hadamard the two grids agree cellwise (within 0.1).
#[test]
#[ignore]
fn n01_nightly_phase_grid_containment() {
    let start = Instant::now();
    let s_values = vec![4usize, 8, 12, 16, 20, 24];
    let m_values = vec![32usize, 64, 96, 128, 160, 192];
    let grid = |kind: MatrixKind, solver: SolverName| {
        let mut config = base_config(kind, 192, 256, s_values.clone());
        config.trials = 10;
        config.base_seed = 20_241_101;
        config.solver.name = solver;
        config.solver.gamma = GammaSpec::default();
        config.phase = Some(PhaseConfig {
            m_values: m_values.clone(),
        });
        run_phase_transition(&config).unwrap()
    };

    let bern_iht = grid(MatrixKind::Bernoulli, SolverName::Iht);
    let bern_kziht = grid(MatrixKind::Bernoulli, SolverName::Kziht);
    let had_iht = grid(MatrixKind::Hadamard, SolverName::Iht);
    let had_kziht = grid(MatrixKind::Hadamard, SolverName::Kziht);

    let mut containment_ok = true;
    let mut equality_ok = true;
    for i in 0..m_values.len() {
        for j in 0..s_values.len() {
            containment_ok &=
                bern_kziht.success_prob[i][j] >= bern_iht.success_prob[i][j] - 0.1 - 1e-12;
            equality_ok &=
                (had_kziht.success_prob[i][j] - had_iht.success_prob[i][j]).abs() <= 0.1 + 1e-12;
        }
    }
    check(
        "N1 nightly-phase-grids",
        start,
        containment_ok && equality_ok,
        format!(
            "bernoulli containment {}; hadamard equality {}",
            ok_str(containment_ok),
            ok_str(equality_ok)
        ),
    );
}
