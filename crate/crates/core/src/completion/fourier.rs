//! Fourier basis `φ_m(θ) = e^{imθ}/√(2π)` and the `m + J` storage map.

use nalgebra::DMatrix;
use num_complex::Complex64;

/// Storage offset of mode `m ∈ -J..=J`.
pub fn mode_offset(m: i64, j: usize) -> usize {
    debug_assert!(m.unsigned_abs() as usize <= j);
    (m + j as i64) as usize
}

/// Mode stored at offset `idx`.
pub fn offset_mode(idx: usize, j: usize) -> i64 {
    idx as i64 - j as i64
}

pub fn phi(m: i64, theta: f64) -> Complex64 {
    Complex64::from_polar(1.0 / (2.0 * std::f64::consts::PI).sqrt(), m as f64 * theta)
}

/// `Φ[(a, idx)] = φ_{m}(θ_a)` with `m = offset_mode(idx)`.
pub fn basis_matrix(angles: &[f64], j: usize) -> DMatrix<Complex64> {
    DMatrix::from_fn(angles.len(), 2 * j + 1, |a, idx| phi(offset_mode(idx, j), angles[a]))
}
