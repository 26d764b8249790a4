//! Separation-of-variables solution for a disk centred at the origin.

use num_complex::Complex64;

use super::FarFieldMatrix;
use crate::error::{Error, Result};
use crate::scene::{ApertureGrid, BoundaryCondition};
use crate::specfun::CylTable;

/// Far-field prefactor under `u^s ≈ e^{iπ/4}/√(8πk) · e^{ikr}/√r · u^∞`.
pub const DISK_FAR_FIELD_SCALE: Complex64 = Complex64::new(0.0, 4.0);

/// Smallest admissible series truncation for `k·radius`.
pub fn min_truncation(k: f64, radius: f64) -> usize {
    (k * radius).ceil() as usize + 20
}

/// Modal far-field coefficients `c·ρ_n` for `n = -T..=T`, so that
/// `u^∞(θ_x̂; θ_d) = sum_n c ρ_n e^{in(θ_x̂ - θ_d)}`.
pub fn disk_modal_coefficients(
    radius: f64,
    bc: BoundaryCondition,
    k: f64,
    truncation: usize,
) -> Result<Vec<Complex64>> {
    if !(radius > 0.0) || !(k > 0.0) {
        return Err(Error::domain("disk radius and wavenumber must be positive"));
    }
    if truncation < min_truncation(k, radius) {
        return Err(Error::domain(format!(
            "truncation {truncation} below ceil(k a) + 20 = {}",
            min_truncation(k, radius)
        )));
    }
    let table = CylTable::new(truncation, k * radius)?;
    let t = truncation as i32;
    (-t..=t)
        .map(|n| {
            let (num, den) = match bc {
                BoundaryCondition::Dirichlet => (Complex64::from(table.j(n)), table.h1(n)),
                BoundaryCondition::Neumann => (Complex64::from(table.dj(n)), table.dh1(n)),
            };
            if den.norm() < f64::MIN_POSITIVE {
                return Err(Error::numerical(format!("Hankel denominator underflow at n={n}")));
            }
            Ok(DISK_FAR_FIELD_SCALE * num / den)
        })
        .collect()
}

/// Full `M × M` MSR matrix of a disk on the paired grid.
pub fn solve_disk_series(
    radius: f64,
    bc: BoundaryCondition,
    k: f64,
    grid: &ApertureGrid,
    truncation: usize,
) -> Result<FarFieldMatrix> {
    let coef = disk_modal_coefficients(radius, bc, k, truncation)?;
    let t = truncation as i64;
    let m = grid.full();
    let h = grid.spacing();
    // Entries depend on j - i only: θ_x̂_j - θ_d_i = (j - i) h - π.
    let by_offset: Vec<Complex64> = (0..2 * m - 1)
        .map(|s| {
            let phi = (s as f64 - (m as f64 - 1.0)) * h - std::f64::consts::PI;
            coef.iter()
                .enumerate()
                .map(|(idx, c)| c * Complex64::from_polar(1.0, (idx as i64 - t) as f64 * phi))
                .sum()
        })
        .collect();
    let mut out = FarFieldMatrix::from_fn(grid.clone(), k, true, |i, j| by_offset[j + m - 1 - i])?;
    out.set_meta("source", "disk-series");
    Ok(out)
}
