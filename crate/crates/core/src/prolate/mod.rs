//! The prolate matrix `P(α)`, its eigensystem and regularized inverses.
//!
//! `P(α)` is the Gram matrix of `φ_m(θ) = e^{imθ}/√(2π)`, `|m| ≤ J`, on
//! `[-α, α]`. Mode `m` is stored at offset `m + J` everywhere in this crate.

mod precise;

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use precise::{precise_eigenvalues, PreciseEigenvalue};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProlateVariant {
    /// `P_x̂ = (p_mn)`.
    Observation,
    /// `P_d = ((-1)^{m-n} p_mn)`, the Gram matrix on `[π-α, π+α]`.
    Incidence,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProlateMatrix {
    alpha: f64,
    j: usize,
    variant: ProlateVariant,
    entries: DMatrix<f64>,
}

impl ProlateMatrix {
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Highest mode `J`; the matrix is `(2J+1) × (2J+1)`.
    pub fn modes(&self) -> usize {
        self.j
    }

    pub fn dim(&self) -> usize {
        2 * self.j + 1
    }

    pub fn variant(&self) -> ProlateVariant {
        self.variant
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    /// Entry `(m, n)` for `m, n ∈ -J..=J`.
    pub fn entry(&self, m: i64, n: i64) -> f64 {
        let j = self.j as i64;
        self.entries[((m + j) as usize, (n + j) as usize)]
    }
}

/// `∫_{-α}^{α} φ_m conj(φ_n) dθ` as a function of `d = m - n`.
pub fn prolate_entry(alpha: f64, d: i64) -> f64 {
    if d == 0 {
        alpha / std::f64::consts::PI
    } else {
        let df = d as f64;
        (df * alpha).sin() / (std::f64::consts::PI * df)
    }
}

pub fn build_prolate(alpha: f64, j: usize, variant: ProlateVariant) -> Result<ProlateMatrix> {
    if !(alpha > 0.0 && alpha <= std::f64::consts::PI) {
        return Err(Error::domain(format!("alpha must lie in (0, π], got {alpha}")));
    }
    let n = 2 * j + 1;
    let by_offset: Vec<f64> = (0..n as i64)
        .map(|d| {
            let v = if alpha == std::f64::consts::PI {
                // sin(dπ) is not exactly zero in floating point.
                if d == 0 {
                    1.0
                } else {
                    0.0
                }
            } else {
                prolate_entry(alpha, d)
            };
            match variant {
                ProlateVariant::Incidence if d % 2 == 1 => -v,
                _ => v,
            }
        })
        .collect();
    let entries = DMatrix::from_fn(n, n, |a, b| by_offset[a.abs_diff(b)]);
    Ok(ProlateMatrix {
        alpha,
        j,
        variant,
        entries,
    })
}

/// Eigenvalues in decreasing order with orthonormal eigenvector columns.
#[derive(Clone, Debug)]
pub struct ProlateSpectrum {
    pub eigenvalues: DVector<f64>,
    pub eigenvectors: DMatrix<f64>,
}

const RESIDUAL_TOL: f64 = 1e-10;

pub fn spectrum(p: &ProlateMatrix) -> Result<ProlateSpectrum> {
    symmetric_spectrum(p.entries())
}

/// Cyclic Jacobi sweeps on `VᵀAV` until it is diagonal to working
/// precision. The QR solver alone leaves residuals near 1e-9 when
/// eigenvalues cluster near 1.
fn jacobi_polish(a: &DMatrix<f64>, mut v: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let mut b = v.transpose() * a * &v;
    let scale = a.norm().max(f64::MIN_POSITIVE);
    let mut prev = f64::INFINITY;
    for _ in 0..20 {
        let mut off = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off += b[(p, q)] * b[(p, q)];
            }
        }
        let off = off.sqrt();
        if off <= 1e-16 * scale || off >= 0.5 * prev {
            break;
        }
        prev = off;
        for p in 0..n {
            for q in p + 1..n {
                let bpq = b[(p, q)];
                if bpq == 0.0 {
                    continue;
                }
                let theta = (b[(q, q)] - b[(p, p)]) / (2.0 * bpq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (bkp, bkq) = (b[(k, p)], b[(k, q)]);
                    b[(k, p)] = c * bkp - s * bkq;
                    b[(k, q)] = s * bkp + c * bkq;
                }
                for k in 0..n {
                    let (bpk, bqk) = (b[(p, k)], b[(q, k)]);
                    b[(p, k)] = c * bpk - s * bqk;
                    b[(q, k)] = s * bpk + c * bqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    ((0..n).map(|i| b[(i, i)]).collect(), v)
}

/// Decreasing eigen-decomposition of a real symmetric matrix; each
/// eigenvector's first component above `1e-14·max` is made positive.
pub(crate) fn symmetric_spectrum(a: &DMatrix<f64>) -> Result<ProlateSpectrum> {
    let n = a.nrows();
    let eig = SymmetricEigen::try_new(a.clone(), f64::EPSILON, 0)
        .ok_or_else(|| Error::numerical("symmetric eigensolver did not converge"))?;
    let (values, vectors) = jacobi_polish(a, eig.eigenvectors);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| values[y].total_cmp(&values[x]));
    let eigenvalues = DVector::from_iterator(n, order.iter().map(|&i| values[i]));
    let mut eigenvectors = DMatrix::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        let v = vectors.column(i);
        let vmax = v.amax();
        let lead = v.iter().find(|x| x.abs() > 1e-14 * vmax).copied().unwrap_or(1.0);
        let s = if lead < 0.0 { -1.0 } else { 1.0 };
        eigenvectors.set_column(col, &(v * s));
    }
    for k in 0..n {
        let v = eigenvectors.column(k);
        let r = (a * v - v * eigenvalues[k]).norm();
        if r > RESIDUAL_TOL * a.norm().max(1.0) {
            return Err(Error::numerical(format!(
                "eigenpair {k} residual {r:e} exceeds {RESIDUAL_TOL:e}"
            )));
        }
    }
    Ok(ProlateSpectrum {
        eigenvalues,
        eigenvectors,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "lowercase")]
pub enum RegularizationSpec {
    /// Keep `1/σ` for `σ ≥ cutoff`, zero otherwise.
    Tsvd { cutoff: f64 },
    /// `1 / (σ + ε)`.
    Spectral { epsilon: f64 },
    /// `σ / (σ² + ε)`.
    Tikhonov { epsilon: f64 },
}

impl Default for RegularizationSpec {
    fn default() -> Self {
        RegularizationSpec::Tsvd { cutoff: 0.1 }
    }
}

impl RegularizationSpec {
    pub const DEFAULT_EPSILON: f64 = 1e-3;

    pub fn validate(&self) -> Result<()> {
        let (name, v) = match *self {
            RegularizationSpec::Tsvd { cutoff } => ("cutoff", cutoff),
            RegularizationSpec::Spectral { epsilon } | RegularizationSpec::Tikhonov { epsilon } => {
                ("epsilon", epsilon)
            }
        };
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::domain(format!("regularization {name} must be > 0, got {v}")));
        }
        Ok(())
    }

    pub fn parameter(&self) -> f64 {
        match *self {
            RegularizationSpec::Tsvd { cutoff } => cutoff,
            RegularizationSpec::Spectral { epsilon } | RegularizationSpec::Tikhonov { epsilon } => {
                epsilon
            }
        }
    }

    /// Filter value replacing `1/σ`; 0 for modes TSVD drops.
    pub fn filter(&self, sigma: f64) -> f64 {
        match *self {
            RegularizationSpec::Tsvd { cutoff } => {
                if sigma >= cutoff {
                    1.0 / sigma
                } else {
                    0.0
                }
            }
            RegularizationSpec::Spectral { epsilon } => 1.0 / (sigma + epsilon),
            RegularizationSpec::Tikhonov { epsilon } => sigma / (sigma * sigma + epsilon),
        }
    }
}

impl fmt::Display for RegularizationSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RegularizationSpec::Tsvd { cutoff } => write!(f, "tsvd:{cutoff}"),
            RegularizationSpec::Spectral { epsilon } => write!(f, "spectral:{epsilon}"),
            RegularizationSpec::Tikhonov { epsilon } => write!(f, "tikhonov:{epsilon}"),
        }
    }
}

/// Parses `tsvd:0.1`, `spectral:1e-3`, `tikhonov:1e-3`; the parameter may
/// be omitted to take the default.
impl FromStr for RegularizationSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, value) = match s.split_once(':') {
            Some((n, v)) => (n.trim(), Some(v.trim())),
            None => (s.trim(), None),
        };
        let num = |default: f64| -> Result<f64> {
            match value {
                None => Ok(default),
                Some(v) => v
                    .parse()
                    .map_err(|_| Error::Config(format!("bad regularization parameter '{v}'"))),
            }
        };
        let spec = match name.to_ascii_lowercase().as_str() {
            "tsvd" => RegularizationSpec::Tsvd { cutoff: num(0.1)? },
            "spectral" => RegularizationSpec::Spectral {
                epsilon: num(Self::DEFAULT_EPSILON)?,
            },
            "tikhonov" => RegularizationSpec::Tikhonov {
                epsilon: num(Self::DEFAULT_EPSILON)?,
            },
            other => return Err(Error::Config(format!("unknown regularization '{other}'"))),
        };
        spec.validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(spec)
    }
}

impl ProlateSpectrum {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Number of eigenvalues `≥ cutoff` (the effective dimension `J_α`).
    pub fn retained(&self, cutoff: f64) -> usize {
        self.eigenvalues.iter().filter(|&&s| s >= cutoff).count()
    }

    /// `U diag(f(σ)) Uᵀ`.
    pub fn regularized_inverse(&self, reg: &RegularizationSpec) -> Result<DMatrix<f64>> {
        reg.validate()?;
        if let RegularizationSpec::Tsvd { cutoff } = *reg {
            if self.retained(cutoff) == 0 {
                return Err(Error::EmptyRetainedSubspace { cutoff });
            }
        }
        let f = DVector::from_iterator(self.dim(), self.eigenvalues.iter().map(|&s| reg.filter(s)));
        let u = &self.eigenvectors;
        let scaled = DMatrix::from_fn(self.dim(), self.dim(), |i, j| u[(i, j)] * f[j]);
        let inv = &scaled * u.transpose();
        // Symmetrize exactly.
        Ok((&inv + inv.transpose()) * 0.5)
    }
}

pub fn pseudo_inverse(p: &ProlateMatrix, reg: &RegularizationSpec) -> Result<DMatrix<f64>> {
    spectrum(p)?.regularized_inverse(reg)
}

/// Slope `-γ` of `ln σ_min` against `N`:
/// `γ = ln((√2 + √(1 - cos α)) / (√2 - √(1 - cos α)))`.
pub fn decay_rate(alpha: f64) -> f64 {
    let s = (1.0 - alpha.cos()).sqrt();
    let r = std::f64::consts::SQRT_2;
    ((r + s) / (r - s)).ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn full_aperture_is_identity() {
        for j in [0, 4, 9, 39] {
            let p = build_prolate(PI, j, ProlateVariant::Observation).unwrap();
            let n = 2 * j + 1;
            assert_eq!(p.entries(), &DMatrix::identity(n, n));
        }
    }

    #[test]
    fn closed_form_entries() {
        let p = build_prolate(PI / 2.0, 3, ProlateVariant::Observation).unwrap();
        for m in -3..=3 {
            assert_eq!(p.entry(m, m), 0.5);
        }
        assert!((p.entry(1, 0) - 1.0 / PI).abs() < 1e-16);
        let q = build_prolate(PI / 2.0, 3, ProlateVariant::Incidence).unwrap();
        assert!((q.entry(1, 0) + 1.0 / PI).abs() < 1e-16);
        assert_eq!(q.entry(2, 0), p.entry(2, 0));
    }

    #[test]
    fn exactly_symmetric() {
        let p = build_prolate(0.37, 12, ProlateVariant::Incidence).unwrap();
        assert_eq!(p.entries(), &p.entries().transpose());
    }

    #[test]
    fn rejects_bad_alpha() {
        assert!(build_prolate(0.0, 3, ProlateVariant::Observation).is_err());
        assert!(build_prolate(3.2, 3, ProlateVariant::Observation).is_err());
    }

    #[test]
    fn spectrum_sign_convention_and_order() {
        let p = build_prolate(1.1, 10, ProlateVariant::Observation).unwrap();
        let s = spectrum(&p).unwrap();
        for k in 1..s.dim() {
            assert!(s.eigenvalues[k - 1] >= s.eigenvalues[k]);
        }
        for k in 0..s.dim() {
            let v = s.eigenvectors.column(k);
            let lead = v.iter().find(|x| x.abs() > 1e-14 * v.amax()).unwrap();
            assert!(*lead > 0.0);
        }
        let utu = s.eigenvectors.transpose() * &s.eigenvectors;
        assert!((utu - DMatrix::identity(21, 21)).amax() < 1e-12);
    }

    #[test]
    fn symmetry_law() {
        let a = spectrum(&build_prolate(0.3 * PI, 39, ProlateVariant::Observation).unwrap()).unwrap();
        let b = spectrum(&build_prolate(0.7 * PI, 39, ProlateVariant::Observation).unwrap()).unwrap();
        let n = a.dim();
        for i in 0..n {
            let dev = (a.eigenvalues[i] + b.eigenvalues[n - 1 - i] - 1.0).abs();
            assert!(dev < 1e-8, "{i}: {dev:e}");
        }
    }

    #[test]
    fn spectrum_clusters() {
        let s = spectrum(&build_prolate(PI / 2.0, 39, ProlateVariant::Observation).unwrap()).unwrap();
        let mid = s.eigenvalues.iter().filter(|&&x| x > 0.1 && x < 0.9).count();
        // Reference run gives 3.
        assert!(mid <= 12, "{mid}");
        assert!(s.eigenvalues.iter().all(|&x| x > -1e-12 && x < 1.0 + 1e-12));
    }

    #[test]
    fn slepian_functions_are_doubly_orthogonal() {
        let alpha = 0.9;
        let j = 20i64;
        let p = build_prolate(alpha, j as usize, ProlateVariant::Observation).unwrap();
        let s = spectrum(&p).unwrap();
        let n = s.dim();
        // Simpson's rule on 4097 points over [-α, α].
        let pts = 4096;
        let h = 2.0 * alpha / pts as f64;
        let mut gram = DMatrix::<f64>::zeros(n, n);
        let mut vals = vec![num_complex::Complex64::new(0.0, 0.0); n];
        for q in 0..=pts {
            let th = -alpha + q as f64 * h;
            let w = h / 3.0
                * if q == 0 || q == pts {
                    1.0
                } else if q % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
            for (m, v) in vals.iter_mut().enumerate() {
                *v = (0..n)
                    .map(|jj| {
                        s.eigenvectors[(jj, m)]
                            * num_complex::Complex64::from_polar(
                                1.0 / (2.0 * PI).sqrt(),
                                (jj as i64 - j) as f64 * th,
                            )
                    })
                    .sum();
            }
            for a in 0..n {
                for b in 0..n {
                    gram[(a, b)] += w * (vals[a] * vals[b].conj()).re;
                }
            }
        }
        for a in 0..n {
            for b in 0..n {
                let want = if a == b { s.eigenvalues[a] } else { 0.0 };
                assert!((gram[(a, b)] - want).abs() < 1e-6, "({a},{b})");
            }
        }
    }

    #[test]
    fn pseudo_inverse_schemes() {
        let id = build_prolate(PI, 4, ProlateVariant::Observation).unwrap();
        for reg in [
            RegularizationSpec::Tsvd { cutoff: 0.5 },
            RegularizationSpec::Spectral { epsilon: 1e-12 },
            RegularizationSpec::Tikhonov { epsilon: 1e-12 },
        ] {
            let inv = pseudo_inverse(&id, &reg).unwrap();
            assert!((inv - DMatrix::identity(9, 9)).amax() < 1e-6);
        }

        let p = build_prolate(0.8 * PI, 9, ProlateVariant::Observation).unwrap();
        let inv = pseudo_inverse(&p, &RegularizationSpec::Tsvd { cutoff: 1e-6 }).unwrap();
        assert!((&inv * p.entries() - DMatrix::identity(19, 19)).amax() < 1e-6);
        assert!((&inv * p.entries() - p.entries() * &inv).amax() < 1e-8);
        assert_eq!(inv, inv.transpose());

        let eps = 1e-3;
        let s = spectrum(&p).unwrap();
        let inv = pseudo_inverse(&p, &RegularizationSpec::Spectral { epsilon: eps }).unwrap();
        let si = spectrum(&ProlateMatrix {
            entries: inv,
            ..p.clone()
        })
        .unwrap();
        // 1/(σ+ε) reverses the order.
        for k in 0..19 {
            let want = 1.0 / (s.eigenvalues[18 - k] + eps);
            assert!((si.eigenvalues[k] - want).abs() < 1e-10 * want);
        }
    }

    #[test]
    fn empty_retained_subspace() {
        let p = build_prolate(0.5, 4, ProlateVariant::Observation).unwrap();
        match pseudo_inverse(&p, &RegularizationSpec::Tsvd { cutoff: 0.99999 }) {
            Err(Error::EmptyRetainedSubspace { .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn incidence_variant_is_conjugated_observation() {
        let p = build_prolate(1.3, 6, ProlateVariant::Observation).unwrap();
        let q = build_prolate(1.3, 6, ProlateVariant::Incidence).unwrap();
        let d = DMatrix::from_fn(13, 13, |i, j| {
            if i != j {
                0.0
            } else if i % 2 == 0 {
                1.0
            } else {
                -1.0
            }
        });
        assert_eq!(&d * p.entries() * &d, *q.entries());
    }

    #[test]
    fn regularization_text_round_trip() {
        for s in ["tsvd:0.1", "spectral:0.001", "tikhonov:1e-6"] {
            let r: RegularizationSpec = s.parse().unwrap();
            assert_eq!(r.to_string().parse::<RegularizationSpec>().unwrap(), r);
        }
        assert!("tsvd:0".parse::<RegularizationSpec>().is_err());
        assert!("foo".parse::<RegularizationSpec>().is_err());
    }

    #[test]
    fn decay_rate_at_half_aperture() {
        assert!((decay_rate(PI / 2.0) - 1.762_747).abs() < 1e-5);
    }
}
