//! Property tests over the core invariants.

use proptest::prelude::*;

use kzsparse::schedules::{next_epoch_schedule, validate_schedule, ScheduleRule};
use kzsparse::seeds::rng_from;
use kzsparse::sensing::{fwht, gen_gaussian_fixed_norm};
use kzsparse::signal::{hard_threshold, relative_error};
use kzsparse::{SignalVector, SparsityLevel};

fn finite_vec(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-100.0f64..100.0, 1..max_len)
}

proptest! {
    #[test]
    fn hard_threshold_is_idempotent_and_s_sparse(
        entries in finite_vec(48),
        s_raw in 1usize..48,
    ) {
        let v = SignalVector::new(entries);
        let s = SparsityLevel::new(s_raw.min(v.dim())).unwrap();
        let once = hard_threshold(&v, s).unwrap();
        prop_assert!(once.nnz() <= s.get());
        let twice = hard_threshold(&once, s).unwrap();
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn fwht_is_an_involution_up_to_scale(
        log_n in 0u32..8,
        seed in any::<u64>(),
    ) {
        use rand::Rng;
        let n = 1usize << log_n;
        let mut rng = rng_from(seed);
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect();
        let twice = fwht(&fwht(&v).unwrap()).unwrap();
        for (t, x) in twice.iter().zip(&v) {
            prop_assert!((t - n as f64 * x).abs() <= 1e-9 * (n as f64 * x.abs()).max(1.0));
        }
    }

    #[test]
    fn adjoint_pairing_holds_on_random_operators(
        seed in any::<u64>(),
        m in 1usize..12,
        n in 1usize..24,
    ) {
        use rand::Rng;
        let mut rng = rng_from(seed);
        let a = gen_gaussian_fixed_norm(m, n, &mut rng).unwrap();
        let x = SignalVector::new((0..n).map(|_| rng.gen_range(-1.0..1.0)).collect());
        let y: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let ax = a.apply(&x).unwrap();
        let aty = a.apply_adjoint(&y).unwrap();
        let lhs: f64 = ax.iter().zip(&y).map(|(p, q)| p * q).sum();
        let rhs = x.dot(&aty);
        prop_assert!((lhs - rhs).abs() <= 1e-9 * lhs.abs().max(1.0));
    }

    #[test]
    fn every_rule_emits_valid_schedules(
        m in 1usize..128,
        epoch in 0u64..64,
        seed in any::<u64>(),
    ) {
        for rule in [
            ScheduleRule::Reshuffle,
            ScheduleRule::ReshuffleOnce,
            ScheduleRule::Cyclic,
            ScheduleRule::WithReplacement,
        ] {
            let schedule = next_epoch_schedule(rule, m, epoch, seed);
            prop_assert!(validate_schedule(&schedule, m));
        }
    }

    #[test]
    fn relative_error_scales_with_the_residual(
        entries in finite_vec(24),
        scale in 0.25f64..4.0,
    ) {
        // relative_error(x*, c x*) depends only on |1 - c|.
        let x_star = SignalVector::new(entries);
        prop_assume!(x_star.norm2() > 1e-9);
        let scaled = SignalVector::new(x_star.as_slice().iter().map(|v| scale * v).collect());
        let err = relative_error(&scaled, &x_star).unwrap();
        prop_assert!((err - (scale - 1.0).abs()).abs() <= 1e-9);
    }
}
