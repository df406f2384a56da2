//! Dense signal vectors, supports, sparsity levels and the hard-thresholding
//! operator.
//!
//! Indices are 0-based everywhere in this crate, including CSV output.

use rand::seq::index::sample;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{KzError, Result};

/// A dense real vector of dimension `N`: the iterate `x`, the ground truth,
/// or any intermediate quantity of the same shape.
#[derive(Clone, Debug, PartialEq)]
pub struct SignalVector {
    entries: Vec<f64>,
}

impl SignalVector {
    pub fn new(entries: Vec<f64>) -> Self {
        SignalVector { entries }
    }

    pub fn zeros(dim: usize) -> Self {
        SignalVector {
            entries: vec![0.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.entries
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.entries
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.entries
    }

    pub fn norm2(&self) -> f64 {
        norm2(&self.entries)
    }

    pub fn dot(&self, other: &SignalVector) -> f64 {
        dot(&self.entries, &other.entries)
    }

    /// Number of nonzero entries (the l0 "norm").
    pub fn nnz(&self) -> usize {
        self.entries.iter().filter(|v| **v != 0.0).count()
    }

    pub fn all_finite(&self) -> bool {
        self.entries.iter().all(|v| v.is_finite())
    }

    /// Entrywise difference `self - other`.
    pub fn sub(&self, other: &SignalVector) -> SignalVector {
        assert_eq!(self.dim(), other.dim());
        SignalVector::new(
            self.entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a - b)
                .collect(),
        )
    }
}

impl std::ops::Index<usize> for SignalVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.entries[i]
    }
}

impl From<Vec<f64>> for SignalVector {
    fn from(entries: Vec<f64>) -> Self {
        SignalVector::new(entries)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// A sorted set of indices in `[0, ambient_dim)`.
#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize)]
pub struct SupportSet {
    indices: Vec<usize>,
    ambient_dim: usize,
}

impl SupportSet {
    /// Builds a support from arbitrary indices; sorts them and rejects
    /// duplicates or indices outside `[0, ambient_dim)`.
    pub fn new(mut indices: Vec<usize>, ambient_dim: usize) -> Result<Self> {
        indices.sort_unstable();
        for w in indices.windows(2) {
            if w[0] == w[1] {
                return Err(KzError::invalid(format!("duplicate support index {}", w[0])));
            }
        }
        if let Some(&last) = indices.last() {
            if last >= ambient_dim {
                return Err(KzError::invalid(format!(
                    "support index {} out of range for dimension {}",
                    last, ambient_dim
                )));
            }
        }
        Ok(SupportSet {
            indices,
            ambient_dim,
        })
    }

    pub fn empty(ambient_dim: usize) -> Self {
        SupportSet {
            indices: Vec::new(),
            ambient_dim,
        }
    }

    pub fn full(ambient_dim: usize) -> Self {
        SupportSet {
            indices: (0..ambient_dim).collect(),
            ambient_dim,
        }
    }

    /// The support of a vector: indices of its nonzero entries.
    pub fn of(v: &SignalVector) -> Self {
        SupportSet {
            indices: v
                .as_slice()
                .iter()
                .enumerate()
                .filter(|(_, x)| **x != 0.0)
                .map(|(i, _)| i)
                .collect(),
            ambient_dim: v.dim(),
        }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn union(&self, other: &SupportSet) -> Result<Self> {
        if self.ambient_dim != other.ambient_dim {
            return Err(KzError::invalid("support union over different dimensions"));
        }
        let mut merged: Vec<usize> = self
            .indices
            .iter()
            .chain(other.indices.iter())
            .copied()
            .collect();
        merged.sort_unstable();
        merged.dedup();
        Ok(SupportSet {
            indices: merged,
            ambient_dim: self.ambient_dim,
        })
    }
}

/// The sparsity level `s`: how many entries hard thresholding keeps.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SparsityLevel(usize);

impl SparsityLevel {
    pub fn new(s: usize) -> Result<Self> {
        if s == 0 {
            return Err(KzError::invalid("sparsity level must be at least 1"));
        }
        Ok(SparsityLevel(s))
    }

    pub fn get(self) -> usize {
        self.0
    }
}

/// Keeps the `s` largest-magnitude entries of `v` and zeroes the rest.
///
/// Among equal magnitudes the smallest index wins, so the result is
/// deterministic. The output is a best s-term approximation of `v` in the
/// l2 norm.
pub fn hard_threshold(v: &SignalVector, s: SparsityLevel) -> Result<SignalVector> {
    let s = s.get();
    if s > v.dim() {
        return Err(KzError::invalid(format!(
            "sparsity {} exceeds dimension {}",
            s,
            v.dim()
        )));
    }
    let mut out = v.clone();
    hard_threshold_in_place(out.as_mut_slice(), s);
    Ok(out)
}

/// In-place variant used by the solver inner loops. `s` must be <= `v.len()`.
pub(crate) fn hard_threshold_in_place(v: &mut [f64], s: usize) {
    debug_assert!(s >= 1 && s <= v.len());
    if s == v.len() {
        return;
    }
    let mut order: Vec<usize> = (0..v.len()).collect();
    // Descending magnitude, ties broken towards the smaller index.
    order.sort_unstable_by(|&i, &j| {
        v[j].abs()
            .total_cmp(&v[i].abs())
            .then_with(|| i.cmp(&j))
    });
    for &i in &order[s..] {
        v[i] = 0.0;
    }
}

/// Indices that `hard_threshold` would keep, in ascending order.
pub fn top_magnitude_indices(v: &[f64], s: usize) -> Vec<usize> {
    let s = s.min(v.len());
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_unstable_by(|&i, &j| {
        v[j].abs()
            .total_cmp(&v[i].abs())
            .then_with(|| i.cmp(&j))
    });
    let mut kept = order[..s].to_vec();
    kept.sort_unstable();
    kept
}

/// Orthogonal projection onto the coordinates in `support`: keeps `v_i` for
/// `i` in the support, zeroes everything else.
pub fn project_support(v: &SignalVector, support: &SupportSet) -> Result<SignalVector> {
    if support.ambient_dim() != v.dim() {
        return Err(KzError::invalid(format!(
            "support dimension {} does not match vector dimension {}",
            support.ambient_dim(),
            v.dim()
        )));
    }
    let mut out = vec![0.0; v.dim()];
    for &i in support.indices() {
        out[i] = v[i];
    }
    Ok(SignalVector::new(out))
}

/// Relative l2 error `||x - x_star|| / ||x_star||`.
pub fn relative_error(x: &SignalVector, x_star: &SignalVector) -> Result<f64> {
    if x.dim() != x_star.dim() {
        return Err(KzError::invalid(format!(
            "dimension mismatch: {} vs {}",
            x.dim(),
            x_star.dim()
        )));
    }
    let denom = x_star.norm2();
    if denom == 0.0 {
        return Err(KzError::invalid("reference vector has zero norm"));
    }
    let diff: f64 = x
        .as_slice()
        .iter()
        .zip(x_star.as_slice())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(diff.sqrt() / denom)
}

/// Draws an s-sparse signal: `s` positions uniform without replacement,
/// values i.i.d. standard normal.
pub fn random_sparse_signal<R: Rng>(
    dim: usize,
    s: SparsityLevel,
    rng: &mut R,
) -> Result<SignalVector> {
    let s = s.get();
    if s > dim {
        return Err(KzError::invalid(format!(
            "sparsity {} exceeds dimension {}",
            s, dim
        )));
    }
    let mut entries = vec![0.0; dim];
    let positions = sample(rng, dim, s);
    for i in positions.iter() {
        entries[i] = loop {
            let g: f64 = rng.sample(StandardNormal);
            if g != 0.0 {
                break g;
            }
        };
    }
    Ok(SignalVector::new(entries))
}
