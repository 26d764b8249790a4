use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use super::{ImagingField, ImagingMethod, SamplingGrid};
use crate::error::{Error, Result};
use crate::exec::{map_indices, Execution};
use crate::forward::FarFieldMatrix;
use crate::prolate::RegularizationSpec;
use crate::scene::unit;

/// Modes of `F♯` below this fraction of the largest eigenvalue are dropped
/// under every regularization.
pub const FM_MODE_FLOOR: f64 = 1e-8;

/// Default FM regularization: truncation at `FM_MODE_FLOOR`.
pub const FM_DEFAULT_REG: RegularizationSpec = RegularizationSpec::Tsvd { cutoff: FM_MODE_FLOOR };

/// Discrete far-field operator on the `M` observation directions:
/// `A[a][b] = w · u^∞(x̂_a; d = x̂_b)`, `w = 2π/M`.
///
/// Incidence row `i` has `θ_d = θ_x̂_i + π`, so the incidence along `x̂_b`
/// is row `b + M/2 (mod M)`.
pub fn far_field_operator(f: &FarFieldMatrix) -> Result<DMatrix<Complex64>> {
    if !f.is_full() {
        return Err(Error::mismatch(
            "factorization method needs the full M x M matrix on the paired grid",
        ));
    }
    let m = f.size();
    if !m.is_multiple_of(2) {
        return Err(Error::mismatch(format!(
            "factorization method needs an even number of directions, got M={m}"
        )));
    }
    let w = f.grid().spacing();
    let d = f.data();
    Ok(DMatrix::from_fn(m, m, |a, b| d[((b + m / 2) % m, a)] * w))
}

/// `|H|` of a Hermitian matrix through its eigendecomposition.
fn hermitian_abs(h: DMatrix<Complex64>) -> DMatrix<Complex64> {
    let eig = SymmetricEigen::new(h);
    let u = &eig.eigenvectors;
    let n = u.nrows();
    let scaled = DMatrix::from_fn(n, n, |i, j| u[(i, j)] * eig.eigenvalues[j].abs());
    scaled * u.adjoint()
}

/// `F♯ = |Re A| + |Im A|` with `Re A = (A + A*)/2`, `Im A = (A - A*)/2i`.
pub fn f_sharp(a: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let adj = a.adjoint();
    let re = (a + &adj) * Complex64::new(0.5, 0.0);
    let im = (a - &adj) * Complex64::new(0.0, -0.5);
    let s = hermitian_abs(re) + hermitian_abs(im);
    (&s + s.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Eigenpairs of `F♯`, eigenvalues in decreasing order.
pub struct FSharpSpectrum {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DMatrix<Complex64>,
}

pub fn f_sharp_spectrum(f: &FarFieldMatrix) -> Result<FSharpSpectrum> {
    let a = far_field_operator(f)?;
    if a.iter().all(|z| *z == Complex64::new(0.0, 0.0)) {
        return Err(Error::domain("far-field matrix is identically zero"));
    }
    let eig = SymmetricEigen::new(f_sharp(&a));
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&x, &y| eig.eigenvalues[y].total_cmp(&eig.eigenvalues[x]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let n = order.len();
    let eigenvectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok(FSharpSpectrum {
        eigenvalues,
        eigenvectors,
    })
}

/// Per-mode weights `q_n` with `‖g_z‖² = sum_n q_n |⟨r_z, v_n⟩|²`.
fn mode_weights(lambda: &[f64], reg: &RegularizationSpec) -> Vec<f64> {
    let lmax = lambda[0];
    let smax = lmax.sqrt();
    lambda
        .iter()
        .map(|&l| {
            if !(l >= FM_MODE_FLOOR * lmax) {
                return 0.0;
            }
            match *reg {
                RegularizationSpec::Tsvd { cutoff } => {
                    if l >= cutoff * lmax {
                        1.0 / l
                    } else {
                        0.0
                    }
                }
                RegularizationSpec::Tikhonov { epsilon } => {
                    let e = epsilon * lmax;
                    l / ((l + e) * (l + e))
                }
                RegularizationSpec::Spectral { epsilon } => {
                    let s = l.sqrt();
                    1.0 / ((s + epsilon * smax) * (s + epsilon * smax))
                }
            }
        })
        .collect()
}

/// Tikhonov parameter `e` (absolute) with
/// `‖F♯^{1/2} g - r‖ = δ s_max ‖g‖`, `g = s/(s² + e) ⟨r, v⟩`.
fn morozov(lambda: &[f64], c2: &[f64], delta: f64) -> f64 {
    let lmax = lambda[0];
    let smax = lmax.sqrt();
    let discrepancy = |e: f64| {
        let mut res = 0.0;
        let mut g = 0.0;
        for (&l, &c) in lambda.iter().zip(c2) {
            if l >= FM_MODE_FLOOR * lmax {
                let r = e / (l + e);
                res += r * r * c;
                g += l / ((l + e) * (l + e)) * c;
            } else {
                res += c;
            }
        }
        res.sqrt() - delta * smax * g.sqrt()
    };
    let (mut lo, mut hi) = ((1e-16 * lmax).ln(), (1e4 * lmax).ln());
    if discrepancy(lo.exp()) >= 0.0 {
        return lo.exp();
    }
    if discrepancy(hi.exp()) <= 0.0 {
        return hi.exp();
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if discrepancy(mid.exp()) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    (0.5 * (lo + hi)).exp()
}

/// Factorization-method indicator `I(z) = 1/‖g_z‖²` for the regularized
/// solution of `F♯^{1/2} g_z = r_z`, `r_z(x̂) = e^{-ik x̂·z}`.
///
/// With Tikhonov regularization and `noise_level > 0` the parameter is
/// chosen per sampling point by the Morozov discrepancy principle and the
/// given `epsilon` is ignored.
pub fn fm(
    f: &FarFieldMatrix,
    grid: &SamplingGrid,
    reg: &RegularizationSpec,
    noise_level: f64,
) -> Result<ImagingField> {
    fm_with(f, grid, reg, noise_level, Execution::default())
}

pub fn fm_with(
    f: &FarFieldMatrix,
    grid: &SamplingGrid,
    reg: &RegularizationSpec,
    noise_level: f64,
    exec: Execution,
) -> Result<ImagingField> {
    grid.validate()?;
    reg.validate()?;
    if !(noise_level >= 0.0) {
        return Err(Error::domain(format!("noise level must be >= 0, got {noise_level}")));
    }
    let spec = f_sharp_spectrum(f)?;
    let lambda = &spec.eigenvalues;
    if !(lambda[0] > 0.0) {
        return Err(Error::numerical("F♯ has no positive eigenvalue"));
    }
    let use_morozov = noise_level > 0.0 && matches!(reg, RegularizationSpec::Tikhonov { .. });
    let q = mode_weights(lambda, reg);
    let k = f.wavenumber();
    let dirs: Vec<[f64; 2]> = f.obs_angles().into_iter().map(unit).collect();
    let vh = spec.eigenvectors.adjoint();
    let res = grid.resolution;
    let rows: Vec<Vec<f64>> = map_indices(exec, res, |iy| {
        (0..res)
            .map(|ix| {
                let z = grid.point(ix, iy);
                let r = DVector::from_iterator(
                    dirs.len(),
                    dirs.iter().map(|x| Complex64::from_polar(1.0, -k * (x[0] * z[0] + x[1] * z[1]))),
                );
                let c2: Vec<f64> = (&vh * r).iter().map(|c| c.norm_sqr()).collect();
                let norm2: f64 = if use_morozov {
                    let e = morozov(lambda, &c2, noise_level);
                    let qm = mode_weights(lambda, &RegularizationSpec::Tikhonov { epsilon: e / lambda[0] });
                    qm.iter().zip(&c2).map(|(a, b)| a * b).sum()
                } else {
                    q.iter().zip(&c2).map(|(a, b)| a * b).sum()
                };
                if norm2 > 0.0 {
                    1.0 / norm2
                } else {
                    0.0
                }
            })
            .collect()
    });
    let values = DMatrix::from_fn(res, res, |r, c| rows[r][c]);
    let mut meta = BTreeMap::new();
    meta.insert("k".into(), k.to_string());
    meta.insert("reg".into(), reg.to_string());
    meta.insert("morozov".into(), use_morozov.to_string());
    meta.insert("noise_level".into(), noise_level.to_string());
    for key in ["source", "completed_by"] {
        if let Some(v) = f.meta(key) {
            meta.insert(key.into(), v.into());
        }
    }
    Ok(ImagingField {
        grid: grid.clone(),
        values,
        method: ImagingMethod::Fm,
        meta,
    })
}
