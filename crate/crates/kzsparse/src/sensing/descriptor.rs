//! Self-describing replay format for sensing operators.
//!
//! A descriptor is enough to rebuild an operator bit-exactly: structured
//! operators record their selected rows, random dense ensembles record the
//! generator seed, and anything else falls back to explicit entries.

use serde::{Deserialize, Serialize};

use crate::error::{KzError, Result};
use crate::seeds::rng_from;
use crate::sensing::{
    gen_bernoulli, gen_gaussian_fixed_norm, subsampled_bos_from_indices, OperatorKind,
    SensingOperator,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum OperatorDescriptor {
    SubsampledBos {
        n: usize,
        row_indices: Vec<usize>,
    },
    Bernoulli {
        m: usize,
        n: usize,
        seed: u64,
    },
    GaussianFixedNorm {
        m: usize,
        n: usize,
        seed: u64,
    },
    ExplicitDense {
        m: usize,
        n: usize,
        rows: Vec<f64>,
    },
}

impl OperatorDescriptor {
    /// Rebuilds the described operator. Seeded kinds regenerate from the
    /// recorded seed and reproduce the original entries exactly.
    pub fn build(&self) -> Result<SensingOperator> {
        match self {
            OperatorDescriptor::SubsampledBos { n, row_indices } => {
                subsampled_bos_from_indices(*n, row_indices.clone())
            }
            OperatorDescriptor::Bernoulli { m, n, seed } => {
                gen_bernoulli(*m, *n, &mut rng_from(*seed))
            }
            OperatorDescriptor::GaussianFixedNorm { m, n, seed } => {
                gen_gaussian_fixed_norm(*m, *n, &mut rng_from(*seed))
            }
            OperatorDescriptor::ExplicitDense { m, n, rows } => {
                SensingOperator::from_dense_rows(*m, *n, rows.clone())
            }
        }
    }

    pub fn rows(&self) -> usize {
        match self {
            OperatorDescriptor::SubsampledBos { row_indices, .. } => row_indices.len(),
            OperatorDescriptor::Bernoulli { m, .. }
            | OperatorDescriptor::GaussianFixedNorm { m, .. }
            | OperatorDescriptor::ExplicitDense { m, .. } => *m,
        }
    }

    pub fn cols(&self) -> usize {
        match self {
            OperatorDescriptor::SubsampledBos { n, .. }
            | OperatorDescriptor::Bernoulli { n, .. }
            | OperatorDescriptor::GaussianFixedNorm { n, .. }
            | OperatorDescriptor::ExplicitDense { n, .. } => *n,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("descriptor serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| KzError::Config(format!("operator descriptor: {}", e)))
    }
}

impl SensingOperator {
    /// Descriptor that replays this operator exactly. Dense random
    /// ensembles built without a recorded seed serialize their entries.
    pub fn descriptor(&self) -> OperatorDescriptor {
        match self.bos_row_indices() {
            Some(indices) => OperatorDescriptor::SubsampledBos {
                n: self.cols(),
                row_indices: indices.to_vec(),
            },
            None => OperatorDescriptor::ExplicitDense {
                m: self.rows(),
                n: self.cols(),
                rows: self.to_dense_rows(),
            },
        }
    }
}

/// Builds a seeded operator and the descriptor that replays it.
pub fn seeded_descriptor(
    kind: OperatorKind,
    m: usize,
    n: usize,
    seed: u64,
) -> Result<(SensingOperator, OperatorDescriptor)> {
    let descriptor = match kind {
        OperatorKind::SubsampledBos => {
            let op = crate::sensing::gen_subsampled_bos(n, m, &mut rng_from(seed))?;
            let desc = op.descriptor();
            return Ok((op, desc));
        }
        OperatorKind::Bernoulli => OperatorDescriptor::Bernoulli { m, n, seed },
        OperatorKind::GaussianFixedNorm => OperatorDescriptor::GaussianFixedNorm { m, n, seed },
        OperatorKind::ExplicitDense => {
            return Err(KzError::invalid(
                "explicit dense operators carry entries, not a seed",
            ))
        }
    };
    let op = descriptor.build()?;
    Ok((op, descriptor))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeds::rng_from;
    use crate::sensing::gen_subsampled_bos;

    #[test]
    fn bos_roundtrip_is_bit_exact() {
        let op = gen_subsampled_bos(64, 16, &mut rng_from(4)).unwrap();
        let json = op.descriptor().to_json();
        let back = OperatorDescriptor::from_json(&json).unwrap().build().unwrap();
        assert_eq!(op, back);
    }

    #[test]
    fn seeded_dense_roundtrip_is_bit_exact() {
        for kind in [OperatorKind::Bernoulli, OperatorKind::GaussianFixedNorm] {
            let (op, desc) = seeded_descriptor(kind, 12, 20, 31).unwrap();
            let json = desc.to_json();
            let back = OperatorDescriptor::from_json(&json).unwrap().build().unwrap();
            assert_eq!(op, back);
        }
    }

    #[test]
    fn explicit_dense_roundtrip_is_bit_exact() {
        let op = SensingOperator::from_dense_rows(2, 3, vec![1.0, -2.5, 0.0, 4.0, 0.125, 9.0])
            .unwrap();
        let json = op.descriptor().to_json();
        let back = OperatorDescriptor::from_json(&json).unwrap().build().unwrap();
        assert_eq!(op, back);
    }

    #[test]
    fn malformed_descriptors_are_rejected() {
        assert!(OperatorDescriptor::from_json("{\"kind\":\"unknown\"}").is_err());
        let bad = OperatorDescriptor::SubsampledBos {
            n: 8,
            row_indices: vec![1, 1],
        };
        assert!(bad.build().is_err());
        let bad_dims = OperatorDescriptor::ExplicitDense {
            m: 2,
            n: 2,
            rows: vec![1.0],
        };
        assert!(bad_dims.build().is_err());
    }
}
