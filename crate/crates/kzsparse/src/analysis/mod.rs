//! Numerical oracles for the convergence analysis: the multi-step epoch
//! identity, cross-term matrices of the Kaczmarz product expansion,
//! brute-force restricted-isometry constants, the statistical bias floor,
//! and closed-form per-epoch contraction bounds.
//!
//! Everything here works at desk scale behind explicit size guards; these
//! routines verify identities and bounds, they are not solver hot paths.

mod spectral;

pub use spectral::spectral_norm;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{KzError, Result};
use crate::schedules::RowSchedule;
use crate::sensing::SensingOperator;
use crate::signal::{SignalVector, SparsityLevel, SupportSet};

/// Dense-product guard: row count times column count.
const MAX_DENSE_ELEMS: usize = 1_000_000;
/// Cross-term matrices are N x N; cap N so they stay in memory.
const MAX_CROSS_DIM: usize = 4096;

fn check_dense_guard(a: &SensingOperator) -> Result<()> {
    let elems = a.rows().saturating_mul(a.cols());
    if elems > MAX_DENSE_ELEMS {
        return Err(KzError::GuardExceeded(format!(
            "m * N = {} exceeds the dense-product guard {}",
            elems, MAX_DENSE_ELEMS
        )));
    }
    Ok(())
}

/// Applies `(I - gamma * a_i a_i^T / ||a_i||^2)` to `v` in place.
fn apply_projection_factor(a: &SensingOperator, i: usize, gamma: f64, v: &mut [f64]) -> Result<()> {
    let norm_sq = a.row_norm_sq(i)?;
    if norm_sq == 0.0 {
        return Err(KzError::invalid(format!("row {} has zero norm", i)));
    }
    let coef = -gamma * a.row_dot(i, v)? / norm_sq;
    a.row_axpy(i, coef, v);
    Ok(())
}

/// Evaluates the closed-form end-of-epoch error: the ordered product of
/// projection factors applied to the starting error, plus the noise sum
///
/// `gamma * sum_i e_{tau(m-i)} prod_{j<i} (I - gamma A_{tau(m-j)}/||.||^2)
///  a_{tau(m-i)} / ||a_{tau(m-i)}||^2`,
///
/// with empty products read as the identity. Evaluated literally from the
/// formula, independent of the solver's residual recursion, so the two
/// sides make a meaningful cross-check.
pub fn multi_step_rhs(
    a: &SensingOperator,
    schedule: &RowSchedule,
    gamma: f64,
    x_start_err: &SignalVector,
    e: &[f64],
) -> Result<SignalVector> {
    check_dense_guard(a)?;
    let m = a.rows();
    let n = a.cols();
    if schedule.len() != m {
        return Err(KzError::invalid("schedule length does not match rows"));
    }
    if e.len() != m {
        return Err(KzError::invalid("noise length does not match rows"));
    }
    if x_start_err.dim() != n {
        return Err(KzError::invalid("error vector dimension does not match columns"));
    }
    let order = schedule.order();

    // Product term: factors tau(1), ..., tau(m) hit the vector in turn.
    let mut product_term = x_start_err.as_slice().to_vec();
    for &row in order {
        apply_projection_factor(a, row, gamma, &mut product_term)?;
    }

    // Noise term: the i-th summand starts from the scaled row tau(m-i) and
    // passes through the factors for schedule positions m-i+1, ..., m.
    let mut acc = vec![0.0; n];
    for i in 0..m {
        let source = order[m - 1 - i];
        let norm_sq = a.row_norm_sq(source)?;
        if norm_sq == 0.0 {
            return Err(KzError::invalid(format!("row {} has zero norm", source)));
        }
        let mut w = a.row(source)?.into_vec();
        for v in w.iter_mut() {
            *v /= norm_sq;
        }
        for &row in &order[m - i..] {
            apply_projection_factor(a, row, gamma, &mut w)?;
        }
        let weight = gamma * e[source];
        for (acc_j, w_j) in acc.iter_mut().zip(&w) {
            *acc_j += weight * w_j;
        }
    }

    for (p, q) in product_term.iter_mut().zip(&acc) {
        *p += q;
    }
    Ok(SignalVector::new(product_term))
}

/// The full ordered epoch product `prod_{j=m..1} (I - gamma A_{tau(j)} /
/// ||a_{tau(j)}||^2)` as a dense matrix.
pub fn ordered_epoch_product(
    a: &SensingOperator,
    schedule: &RowSchedule,
    gamma: f64,
) -> Result<DMatrix<f64>> {
    check_dense_guard(a)?;
    let n = a.cols();
    if n > MAX_CROSS_DIM {
        return Err(KzError::GuardExceeded(format!(
            "N = {} exceeds the dense matrix guard {}",
            n, MAX_CROSS_DIM
        )));
    }
    if schedule.len() != a.rows() {
        return Err(KzError::invalid("schedule length does not match rows"));
    }
    let mut product = DMatrix::<f64>::identity(n, n);
    // Left-multiply factor by factor: row tau(1) first, tau(m) last.
    let mut scratch = vec![0.0; n];
    for &row in schedule.order() {
        let norm_sq = a.row_norm_sq(row)?;
        if norm_sq == 0.0 {
            return Err(KzError::invalid(format!("row {} has zero norm", row)));
        }
        let a_row = a.row(row)?.into_vec();
        // scratch = a^T * product
        for c in 0..n {
            let mut acc = 0.0;
            for r in 0..n {
                acc += a_row[r] * product[(r, c)];
            }
            scratch[c] = acc;
        }
        let coef = gamma / norm_sq;
        for r in 0..n {
            let ar = coef * a_row[r];
            if ar != 0.0 {
                for c in 0..n {
                    product[(r, c)] -= ar * scratch[c];
                }
            }
        }
    }
    Ok(product)
}

/// Cross-term report for one epoch product.
#[derive(Clone, Debug, Serialize)]
pub struct CrossTermReport {
    pub operator_norm: f64,
    pub bound: f64,
    pub gamma_admissible: bool,
    pub m: usize,
    pub n: usize,
    pub gamma: f64,
    pub k_subg: f64,
    pub schedule_hash: u64,
}

/// Hash of a schedule order, recorded in reports for replay bookkeeping.
pub fn schedule_hash(schedule: &RowSchedule) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for &i in schedule.order() {
        h ^= i as u64;
        h = h.wrapping_mul(0x1000_0000_01b3);
        h = crate::seeds::mix(h, 0x5eed);
    }
    h
}

/// Computes the cross-term matrix `B_tau` of one epoch product and checks
/// it against the closed-form bound `2 gamma^2 m^2 sqrt(K^4 ln^4 m / N)`.
///
/// `B_tau` is the ordered product minus its zeroth- and first-order terms:
/// `B_tau = prod - I + (gamma/N) sum_j a_j a_j^T`. That rearrangement is
/// exact only when every row has squared norm `N`, so rows are checked to
/// 1e-9 relative first.
pub fn cross_term_report(
    a: &SensingOperator,
    schedule: &RowSchedule,
    gamma: f64,
    k_subg: f64,
) -> Result<CrossTermReport> {
    let m = a.rows();
    let n = a.cols();
    let n_f = n as f64;
    for i in 0..m {
        let norm_sq = a.row_norm_sq(i)?;
        if (norm_sq / n_f - 1.0).abs() > 1e-9 {
            return Err(KzError::invalid(format!(
                "row {} has squared norm {}, expected N = {}",
                i, norm_sq, n
            )));
        }
    }
    let mut b = ordered_epoch_product(a, schedule, gamma)?;
    for i in 0..n {
        b[(i, i)] -= 1.0;
    }
    let coef = gamma / n_f;
    for row in 0..m {
        let a_row = a.row(row)?.into_vec();
        for r in 0..n {
            let ar = coef * a_row[r];
            if ar != 0.0 {
                for c in 0..n {
                    b[(r, c)] += ar * a_row[c];
                }
            }
        }
    }

    let log_m = (m as f64).ln();
    let k_sq_log_sq = (k_subg * k_subg) * (log_m * log_m);
    let bound = 2.0 * gamma * gamma * (m as f64) * (m as f64) * (k_sq_log_sq / n_f.sqrt());
    let gamma_limit = (n_f.sqrt() / k_sq_log_sq) / (2.0 * m as f64);
    Ok(CrossTermReport {
        operator_norm: spectral_norm(&b),
        bound,
        gamma_admissible: gamma <= gamma_limit,
        m,
        n,
        gamma,
        k_subg,
        schedule_hash: schedule_hash(schedule),
    })
}

/// Largest step size admitted by the cross-term bound for an `m x N`
/// operator with sub-Gaussian norm `k_subg`.
pub fn admissible_gamma(m: usize, n: usize, k_subg: f64) -> f64 {
    let log_m = (m as f64).ln();
    let k_sq_log_sq = (k_subg * k_subg) * (log_m * log_m);
    ((n as f64).sqrt() / k_sq_log_sq) / (2.0 * m as f64)
}

/// Brute-force restricted isometry report.
#[derive(Clone, Debug, Serialize)]
pub struct RipReport {
    pub s: usize,
    pub delta: f64,
    pub argmax_support: SupportSet,
    pub m: usize,
    pub n: usize,
}

fn binomial_exceeds(n: usize, k: usize, cap: u128) -> bool {
    let k = k.min(n - k.min(n));
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u128) / (i as u128 + 1);
        if acc > cap {
            return true;
        }
    }
    false
}

/// The restricted isometry constant `delta_s` of `a_scaled` by exhaustive
/// enumeration of all supports of size `s` in lexicographic order:
/// `delta_s = max_Omega max(lambda_max(G) - 1, 1 - lambda_min(G))` over the
/// `s x s` column Gram matrices `G`. The caller supplies the operator
/// already scaled (for an m-row ensemble that is usually `A / sqrt(m)`).
pub fn rip_constant_bruteforce(a_scaled: &DMatrix<f64>, s: SparsityLevel) -> Result<RipReport> {
    let n = a_scaled.ncols();
    let m = a_scaled.nrows();
    let s = s.get();
    if s > n {
        return Err(KzError::invalid("sparsity exceeds column count"));
    }
    if binomial_exceeds(n, s, MAX_DENSE_ELEMS as u128) {
        return Err(KzError::GuardExceeded(format!(
            "C({}, {}) supports exceed the brute-force guard {}",
            n, s, MAX_DENSE_ELEMS
        )));
    }

    let mut support: Vec<usize> = (0..s).collect();
    let mut best_delta = -1.0f64;
    let mut best_support = support.clone();
    let mut gram = DMatrix::<f64>::zeros(s, s);
    loop {
        for (gi, &ci) in support.iter().enumerate() {
            for (gj, &cj) in support.iter().enumerate().skip(gi) {
                let dot = a_scaled.column(ci).dot(&a_scaled.column(cj));
                gram[(gi, gj)] = dot;
                gram[(gj, gi)] = dot;
            }
        }
        let eigen = gram.clone().symmetric_eigen();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &ev in eigen.eigenvalues.iter() {
            lo = lo.min(ev);
            hi = hi.max(ev);
        }
        let delta = (hi - 1.0).max(1.0 - lo);
        if delta > best_delta {
            best_delta = delta;
            best_support = support.clone();
        }
        if !next_combination(&mut support, n) {
            break;
        }
    }
    Ok(RipReport {
        s,
        delta: best_delta.max(0.0),
        argmax_support: SupportSet::new(best_support, n)?,
        m,
        n,
    })
}

/// Advances `combo` to the next combination of `{0..n}` in lexicographic
/// order; returns false when exhausted.
fn next_combination(combo: &mut [usize], n: usize) -> bool {
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

/// Dense matrix view of an operator with every entry multiplied by `scale`.
pub fn scaled_dense(a: &SensingOperator, scale: f64) -> DMatrix<f64> {
    let rows = a.to_dense_rows();
    DMatrix::from_fn(a.rows(), a.cols(), |r, c| scale * rows[r * a.cols() + c])
}

/// The statistical bias floor `sup_{|Omega| <= 2s} ||P_Omega(A^T e / m)||`:
/// the l2 norm of the `2s` largest-magnitude entries of `A^T e / m`, which
/// attains the supremum over all supports of size at most `2s`.
pub fn bias_term(a: &SensingOperator, e: &[f64], s: SparsityLevel) -> Result<f64> {
    if e.len() != a.rows() {
        return Err(KzError::invalid("noise length does not match rows"));
    }
    let m = a.rows() as f64;
    let mut w = a.apply_adjoint(e)?.into_vec();
    for v in w.iter_mut() {
        *v = (*v / m).abs();
    }
    w.sort_unstable_by(|x, y| y.total_cmp(x));
    let keep = (2 * s.get()).min(w.len());
    Ok(w[..keep].iter().map(|v| v * v).sum::<f64>().sqrt())
}

/// Closed-form per-epoch contraction factors with a user-supplied RIP
/// constant multiplier; annotation only, not a guarantee.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct RateBounds {
    pub kziht_rate: f64,
    pub kzpt_rate: f64,
}

/// `kziht = 2 sqrt(C s ln^4 N / m)` and
/// `kzpt = (m/p)^{m/(2p)} * kziht^{m/p}`; with `p = m` the two agree.
pub fn theorem_rate_bounds(
    m: usize,
    n: usize,
    s: usize,
    c_rip: f64,
    p: usize,
) -> Result<RateBounds> {
    if m == 0 || n == 0 || s == 0 || p == 0 {
        return Err(KzError::invalid("all arguments must be positive"));
    }
    if !(c_rip > 0.0 && c_rip.is_finite()) {
        return Err(KzError::invalid("C must be positive and finite"));
    }
    let log_n = (n as f64).ln();
    let ratio = c_rip * s as f64 * log_n.powi(4) / m as f64;
    let kziht_rate = 2.0 * ratio.sqrt();
    let blocks = m as f64 / p as f64;
    let kzpt_rate = blocks.powf(blocks / 2.0) * kziht_rate.powf(blocks);
    Ok(RateBounds {
        kziht_rate,
        kzpt_rate,
    })
}

/// Result of a randomized identity-verification suite.
#[derive(Clone, Debug, Serialize)]
pub struct IdentityReport {
    pub trials: usize,
    pub max_m: usize,
    pub max_n: usize,
    pub seed: u64,
    pub max_relative_deviation: f64,
}

/// Runs `trials` random instances across all three ensembles and measures
/// how far `multi_step_rhs` lands from the actual end-of-epoch error of a
/// real Kaczmarz sweep. Deviations are measured relative to the end
/// error's magnitude (floored at a small fraction of the input scale so a
/// fully contracted epoch cannot divide by zero).
pub fn verify_identity_suite(
    max_m: usize,
    max_n: usize,
    trials: usize,
    seed: u64,
) -> Result<IdentityReport> {
    use crate::schedules::{next_epoch_schedule, ScheduleRule};
    use crate::sensing::{gen_bernoulli, gen_gaussian_fixed_norm, gen_subsampled_bos};
    use crate::signal::random_sparse_signal;
    use rand::Rng;

    if max_m < 1 || max_n < 4 {
        return Err(KzError::invalid("need max_m >= 1 and max_n >= 4"));
    }
    if max_m.saturating_mul(max_n) > MAX_DENSE_ELEMS {
        return Err(KzError::GuardExceeded(
            "identity suite dimensions exceed the dense guard".to_string(),
        ));
    }
    let mut rng = crate::seeds::rng_from(seed);
    let mut worst = 0.0f64;
    for trial in 0..trials {
        let (a, m, n) = match trial % 3 {
            0 => {
                let m = rng.gen_range(1..=max_m);
                let n = rng.gen_range(2..=max_n);
                (gen_bernoulli(m, n, &mut rng)?, m, n)
            }
            1 => {
                let m = rng.gen_range(1..=max_m);
                let n = rng.gen_range(2..=max_n);
                (gen_gaussian_fixed_norm(m, n, &mut rng)?, m, n)
            }
            _ => {
                let max_pow = (max_n as f64).log2().floor() as u32;
                let n = 1usize << rng.gen_range(2..=max_pow);
                let m = rng.gen_range(1..=n.min(max_m));
                (gen_subsampled_bos(n, m, &mut rng)?, m, n)
            }
        };
        let s = SparsityLevel::new(n.min(3))?;
        let x_star = random_sparse_signal(n, s, &mut rng)?;
        let x1 = SignalVector::new((0..n).map(|_| rng.gen_range(-1.0..1.0)).collect());
        let e: Vec<f64> = (0..m)
            .map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal))
            .collect();
        let clean = a.apply(&x_star)?;
        let b: Vec<f64> = clean.iter().zip(&e).map(|(c, noise)| c + noise).collect();
        let gamma = rng.gen_range(0.000_001..2.0);
        let schedule = next_epoch_schedule(
            ScheduleRule::Reshuffle,
            m,
            trial as u64,
            crate::seeds::mix(seed, trial as u64),
        );
        let end = crate::solvers::kz_epoch(&x1, &a, &b, &schedule, gamma)?;
        let actual = end.sub(&x_star);
        let rhs = multi_step_rhs(&a, &schedule, gamma, &x1.sub(&x_star), &e)?;
        let input_scale = x1.sub(&x_star).norm2() + crate::signal::SignalVector::new(e.clone()).norm2();
        let deviation =
            rhs.sub(&actual).norm2() / actual.norm2().max(1e-4 * input_scale.max(1e-12));
        worst = worst.max(deviation);
    }
    Ok(IdentityReport {
        trials,
        max_m,
        max_n,
        seed,
        max_relative_deviation: worst,
    })
}
