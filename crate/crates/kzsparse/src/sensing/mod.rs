//! Sensing-matrix ensembles and their matrix-vector products.
//!
//! Three ensembles ship: randomly subsampled Hadamard rows (a bounded
//! orthonormal system), Rademacher (+-1) matrices, and Gaussian matrices
//! with rows rescaled to length sqrt(N). Subsampled operators store only
//! the selected row indices, so large structured instances stay cheap.

mod descriptor;
mod fwht;

pub use descriptor::{seeded_descriptor, OperatorDescriptor};
pub use fwht::{fwht, fwht_in_place, hadamard_entry};

use rand::seq::index::sample;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{KzError, Result};
use crate::signal::{dot, SignalVector};

/// Which ensemble an operator was drawn from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OperatorKind {
    SubsampledBos,
    Bernoulli,
    GaussianFixedNorm,
    ExplicitDense,
}

#[derive(Clone, Debug, PartialEq)]
enum Repr {
    /// Rows of the N x N Sylvester Hadamard matrix picked by index.
    SubsampledBos { row_indices: Vec<usize> },
    /// Row-major dense storage with precomputed squared row norms.
    Dense {
        kind: OperatorKind,
        rows: Vec<f64>,
        row_norms_sq: Vec<f64>,
    },
}

/// An `m x N` measurement operator with uniform row access and fast
/// forward/adjoint products.
#[derive(Clone, Debug, PartialEq)]
pub struct SensingOperator {
    m: usize,
    n: usize,
    repr: Repr,
}

impl SensingOperator {
    pub fn rows(&self) -> usize {
        self.m
    }

    pub fn cols(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> OperatorKind {
        match &self.repr {
            Repr::SubsampledBos { .. } => OperatorKind::SubsampledBos,
            Repr::Dense { kind, .. } => *kind,
        }
    }

    /// Selected Hadamard row indices, if this is a subsampled BOS.
    pub fn bos_row_indices(&self) -> Option<&[usize]> {
        match &self.repr {
            Repr::SubsampledBos { row_indices } => Some(row_indices),
            Repr::Dense { .. } => None,
        }
    }

    /// Builds an explicit dense operator from row-major entries.
    pub fn from_dense_rows(m: usize, n: usize, rows: Vec<f64>) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(KzError::invalid("operator dimensions must be positive"));
        }
        if rows.len() != m * n {
            return Err(KzError::invalid(format!(
                "expected {} entries for a {}x{} operator, got {}",
                m * n,
                m,
                n,
                rows.len()
            )));
        }
        if !rows.iter().all(|v| v.is_finite()) {
            return Err(KzError::invalid("operator entries must be finite"));
        }
        let row_norms_sq = (0..m)
            .map(|i| dot(&rows[i * n..(i + 1) * n], &rows[i * n..(i + 1) * n]))
            .collect();
        Ok(SensingOperator {
            m,
            n,
            repr: Repr::Dense {
                kind: OperatorKind::ExplicitDense,
                rows,
                row_norms_sq,
            },
        })
    }

    /// Row `i` as a dense vector.
    pub fn row(&self, i: usize) -> Result<SignalVector> {
        self.check_row(i)?;
        let mut out = vec![0.0; self.n];
        match &self.repr {
            Repr::SubsampledBos { row_indices } => {
                let r = row_indices[i];
                for (c, o) in out.iter_mut().enumerate() {
                    *o = hadamard_entry(r, c);
                }
            }
            Repr::Dense { rows, .. } => {
                out.copy_from_slice(&rows[i * self.n..(i + 1) * self.n]);
            }
        }
        Ok(SignalVector::new(out))
    }

    /// Squared l2 norm of row `i`.
    pub fn row_norm_sq(&self, i: usize) -> Result<f64> {
        self.check_row(i)?;
        Ok(match &self.repr {
            Repr::SubsampledBos { .. } => self.n as f64,
            Repr::Dense { row_norms_sq, .. } => row_norms_sq[i],
        })
    }

    /// Inner product of row `i` with `x`.
    pub fn row_dot(&self, i: usize, x: &[f64]) -> Result<f64> {
        self.check_row(i)?;
        self.check_cols(x.len())?;
        Ok(match &self.repr {
            Repr::SubsampledBos { row_indices } => {
                let r = row_indices[i];
                x.iter()
                    .enumerate()
                    .map(|(c, v)| hadamard_entry(r, c) * v)
                    .sum()
            }
            Repr::Dense { rows, .. } => dot(&rows[i * self.n..(i + 1) * self.n], x),
        })
    }

    /// `x += coef * row(i)`, the Kaczmarz update kernel.
    pub(crate) fn row_axpy(&self, i: usize, coef: f64, x: &mut [f64]) {
        match &self.repr {
            Repr::SubsampledBos { row_indices } => {
                let r = row_indices[i];
                for (c, v) in x.iter_mut().enumerate() {
                    *v += coef * hadamard_entry(r, c);
                }
            }
            Repr::Dense { rows, .. } => {
                for (v, a) in x.iter_mut().zip(&rows[i * self.n..(i + 1) * self.n]) {
                    *v += coef * a;
                }
            }
        }
    }

    /// `A x` as a length-m vector.
    pub fn apply(&self, x: &SignalVector) -> Result<Vec<f64>> {
        self.check_cols(x.dim())?;
        match &self.repr {
            Repr::SubsampledBos { row_indices } => {
                let transformed = fwht(x.as_slice())?;
                Ok(row_indices.iter().map(|&r| transformed[r]).collect())
            }
            Repr::Dense { rows, .. } => Ok((0..self.m)
                .map(|i| dot(&rows[i * self.n..(i + 1) * self.n], x.as_slice()))
                .collect()),
        }
    }

    /// `A^T y` as a length-N signal.
    pub fn apply_adjoint(&self, y: &[f64]) -> Result<SignalVector> {
        if y.len() != self.m {
            return Err(KzError::invalid(format!(
                "adjoint input has length {}, operator has {} rows",
                y.len(),
                self.m
            )));
        }
        match &self.repr {
            Repr::SubsampledBos { row_indices } => {
                let mut padded = vec![0.0; self.n];
                for (i, &r) in row_indices.iter().enumerate() {
                    padded[r] += y[i];
                }
                fwht_in_place(&mut padded)?;
                Ok(SignalVector::new(padded))
            }
            Repr::Dense { rows, .. } => {
                let mut out = vec![0.0; self.n];
                for (i, &yi) in y.iter().enumerate() {
                    for (o, a) in out.iter_mut().zip(&rows[i * self.n..(i + 1) * self.n]) {
                        *o += yi * a;
                    }
                }
                Ok(SignalVector::new(out))
            }
        }
    }

    /// Materializes the operator as row-major dense entries.
    pub fn to_dense_rows(&self) -> Vec<f64> {
        match &self.repr {
            Repr::SubsampledBos { row_indices } => {
                let mut out = Vec::with_capacity(self.m * self.n);
                for &r in row_indices {
                    for c in 0..self.n {
                        out.push(hadamard_entry(r, c));
                    }
                }
                out
            }
            Repr::Dense { rows, .. } => rows.clone(),
        }
    }

    fn check_row(&self, i: usize) -> Result<()> {
        if i >= self.m {
            return Err(KzError::invalid(format!(
                "row index {} out of range for {} rows",
                i, self.m
            )));
        }
        Ok(())
    }

    fn check_cols(&self, len: usize) -> Result<()> {
        if len != self.n {
            return Err(KzError::invalid(format!(
                "vector has dimension {}, operator has {} columns",
                len, self.n
            )));
        }
        Ok(())
    }
}

/// Draws `m` distinct rows of the `N x N` Hadamard matrix uniformly
/// without replacement. `N` must be a power of two and `m <= N`.
pub fn gen_subsampled_bos<R: Rng>(n: usize, m: usize, rng: &mut R) -> Result<SensingOperator> {
    if n == 0 || !n.is_power_of_two() {
        return Err(KzError::invalid(format!("N = {} is not a power of two", n)));
    }
    if m == 0 || m > n {
        return Err(KzError::invalid(format!("need 1 <= m <= N, got m = {}, N = {}", m, n)));
    }
    let row_indices: Vec<usize> = sample(rng, n, m).into_iter().collect();
    Ok(SensingOperator {
        m,
        n,
        repr: Repr::SubsampledBos { row_indices },
    })
}

/// Rebuilds a subsampled BOS from explicit row indices (replay path).
pub fn subsampled_bos_from_indices(n: usize, row_indices: Vec<usize>) -> Result<SensingOperator> {
    if n == 0 || !n.is_power_of_two() {
        return Err(KzError::invalid(format!("N = {} is not a power of two", n)));
    }
    if row_indices.is_empty() || row_indices.len() > n {
        return Err(KzError::invalid("need 1 <= m <= N row indices"));
    }
    let mut seen = vec![false; n];
    for &r in &row_indices {
        if r >= n {
            return Err(KzError::invalid(format!("row index {} out of range", r)));
        }
        if seen[r] {
            return Err(KzError::invalid(format!("duplicate row index {}", r)));
        }
        seen[r] = true;
    }
    Ok(SensingOperator {
        m: row_indices.len(),
        n,
        repr: Repr::SubsampledBos { row_indices },
    })
}

/// Draws an `m x N` matrix with i.i.d. Rademacher (+-1) entries.
pub fn gen_bernoulli<R: Rng>(m: usize, n: usize, rng: &mut R) -> Result<SensingOperator> {
    if m == 0 || n == 0 {
        return Err(KzError::invalid("operator dimensions must be positive"));
    }
    let rows: Vec<f64> = (0..m * n)
        .map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 })
        .collect();
    let row_norms_sq = vec![n as f64; m];
    Ok(SensingOperator {
        m,
        n,
        repr: Repr::Dense {
            kind: OperatorKind::Bernoulli,
            rows,
            row_norms_sq,
        },
    })
}

/// Draws an `m x N` matrix with independent standard-normal rows, each
/// rescaled to l2 norm sqrt(N).
pub fn gen_gaussian_fixed_norm<R: Rng>(m: usize, n: usize, rng: &mut R) -> Result<SensingOperator> {
    if m == 0 || n == 0 {
        return Err(KzError::invalid("operator dimensions must be positive"));
    }
    let mut rows = vec![0.0; m * n];
    let target = (n as f64).sqrt();
    for i in 0..m {
        let row = &mut rows[i * n..(i + 1) * n];
        loop {
            for v in row.iter_mut() {
                *v = rng.sample(StandardNormal);
            }
            let norm = dot(row, row).sqrt();
            if norm > 0.0 {
                let scale = target / norm;
                for v in row.iter_mut() {
                    *v *= scale;
                }
                break;
            }
        }
    }
    let row_norms_sq = (0..m)
        .map(|i| dot(&rows[i * n..(i + 1) * n], &rows[i * n..(i + 1) * n]))
        .collect();
    Ok(SensingOperator {
        m,
        n,
        repr: Repr::Dense {
            kind: OperatorKind::GaussianFixedNorm,
            rows,
            row_norms_sq,
        },
    })
}

/// Additive noise applied to the clean measurements.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case")]
pub enum NoiseModel {
    #[default]
    None,
    Gaussian { sigma: f64 },
}

/// Measurements `b = A x + e` with the noise vector kept alongside.
#[derive(Clone, Debug, PartialEq)]
pub struct Measurements {
    pub b: Vec<f64>,
    pub noise: Vec<f64>,
    pub clean: Vec<f64>,
}

/// Forms `b = A x_star + e` under the requested noise model.
pub fn make_measurements<R: Rng>(
    a: &SensingOperator,
    x_star: &SignalVector,
    noise_model: NoiseModel,
    rng: &mut R,
) -> Result<Measurements> {
    let clean = a.apply(x_star)?;
    let noise: Vec<f64> = match noise_model {
        NoiseModel::None => vec![0.0; a.rows()],
        NoiseModel::Gaussian { sigma } => {
            if sigma < 0.0 {
                return Err(KzError::invalid("noise sigma must be nonnegative"));
            }
            (0..a.rows())
                .map(|_| sigma * rng.sample::<f64, _>(StandardNormal))
                .collect()
        }
    };
    let b = clean.iter().zip(&noise).map(|(c, e)| c + e).collect();
    Ok(Measurements { b, noise, clean })
}
