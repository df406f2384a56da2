//! Fast Walsh-Hadamard transform.
//!
//! The transform realizes the unnormalized Sylvester-ordered Hadamard
//! matrix `H_N` with entries +-1, so `fwht(fwht(v)) == N * v`.

use crate::error::{KzError, Result};

/// Applies the unnormalized Walsh-Hadamard transform in place.
/// The length must be a power of two.
pub fn fwht_in_place(v: &mut [f64]) -> Result<()> {
    let n = v.len();
    if n == 0 || !n.is_power_of_two() {
        return Err(KzError::invalid(format!(
            "fwht length {} is not a power of two",
            n
        )));
    }
    let mut h = 1;
    while h < n {
        let step = h * 2;
        let mut i = 0;
        while i < n {
            for j in i..i + h {
                let a = v[j];
                let b = v[j + h];
                v[j] = a + b;
                v[j + h] = a - b;
            }
            i += step;
        }
        h = step;
    }
    Ok(())
}

/// Returns `H_N * v` for the unnormalized +-1 Hadamard matrix.
pub fn fwht(v: &[f64]) -> Result<Vec<f64>> {
    let mut out = v.to_vec();
    fwht_in_place(&mut out)?;
    Ok(out)
}

/// Entry `(row, col)` of the Sylvester Hadamard matrix:
/// `(-1)^{popcount(row & col)}`.
#[inline]
pub fn hadamard_entry(row: usize, col: usize) -> f64 {
    if (row & col).count_ones() & 1 == 0 {
        1.0
    } else {
        -1.0
    }
}
