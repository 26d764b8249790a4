//! Limited-aperture data completion.
//!
//! DC-FS works on the double Fourier coefficients of the measured block,
//! `B^α = P_x̂ B P_d`, inverted with two regularized prolate inverses. DC-IE
//! works one incidence at a time on `C = P Γ` and fills the remaining
//! blocks of the MSR matrix through reciprocity.

mod fourier;
mod quadrature;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{try_map_indices, Execution};
use crate::forward::FarFieldMatrix;
use crate::prolate::{build_prolate, pseudo_inverse, ProlateVariant, RegularizationSpec};
use crate::scene::ApertureGrid;

pub use fourier::{basis_matrix, mode_offset, offset_mode, phi};
pub use quadrature::{aperture_weights, MomentRule};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompletionConfig {
    /// Highest Fourier mode `J`.
    #[serde(rename = "J")]
    pub j: usize,
    #[serde(default)]
    pub reg: RegularizationSpec,
    /// Entries larger than `threshold_factor · max|measured|` are zeroed
    /// after completion; `None` disables the clamp.
    #[serde(default = "default_threshold")]
    pub threshold_factor: Option<f64>,
    /// Radius of the auxiliary ball of the DC-IE representation. Only
    /// recorded: the Bessel factors it enters cancel in the reconstruction.
    #[serde(default = "default_radius")]
    pub r: f64,
    #[serde(default)]
    pub rule: MomentRule,
}

fn default_threshold() -> Option<f64> {
    Some(2.0)
}

fn default_radius() -> f64 {
    4.0
}

impl Default for CompletionConfig {
    fn default() -> Self {
        Self {
            j: 9,
            reg: RegularizationSpec::default(),
            threshold_factor: default_threshold(),
            r: default_radius(),
            rule: MomentRule::default(),
        }
    }
}

impl CompletionConfig {
    pub fn validate(&self, l: usize) -> Result<()> {
        if self.j < 1 {
            return Err(Error::domain("J must be >= 1"));
        }
        if 2 * self.j + 1 > l {
            return Err(Error::domain(format!(
                "2J+1 = {} exceeds the {l} measured directions",
                2 * self.j + 1
            )));
        }
        self.reg.validate()?;
        if let Some(t) = self.threshold_factor {
            if !(t > 0.0) {
                return Err(Error::domain(format!("threshold_factor must be > 0, got {t}")));
            }
        }
        if !(self.r > 0.0) {
            return Err(Error::domain(format!("ball radius must be > 0, got {}", self.r)));
        }
        let ratio = 2.0 * l as f64 / self.j as f64;
        if ratio < 6.0 {
            log::warn!("2L/J = {ratio:.2} < 6: too few nodes per oscillation of the highest mode");
        }
        Ok(())
    }

    fn stamp(&self, out: &mut FarFieldMatrix, method: &str) {
        out.set_meta("completed_by", method);
        out.set_meta("J", self.j.to_string());
        out.set_meta("reg", self.reg.to_string());
        out.set_meta(
            "threshold_factor",
            self.threshold_factor.map_or("none".to_string(), |t| t.to_string()),
        );
        out.set_meta("moment_rule", self.rule.label());
    }
}

/// Measured `L × L` block, whichever shape `f` has.
fn measured(f: &FarFieldMatrix) -> DMatrix<Complex64> {
    if f.is_full() && !f.grid().is_full_aperture() {
        f.measured_block().into_data()
    } else {
        f.data().clone()
    }
}

fn weights(grid: &ApertureGrid, cfg: &CompletionConfig) -> Result<Vec<f64>> {
    aperture_weights(grid.alpha(), grid.spacing(), grid.measured(), cfg.rule, cfg.j)
}

/// `B^α_{pq} = ∫∫ u^∞ conj(φ_p(θ_x̂) φ_q(θ_d))` over the measured block.
pub fn limited_moments(f: &FarFieldMatrix, j: usize, rule: MomentRule) -> Result<DMatrix<Complex64>> {
    let grid = f.grid();
    let l = grid.measured();
    if 2 * j + 1 > l {
        return Err(Error::domain(format!(
            "2J+1 = {} exceeds the {l} measured directions",
            2 * j + 1
        )));
    }
    let data = measured(f);
    let w = aperture_weights(grid.alpha(), grid.spacing(), l, rule, j)?;
    let px = basis_matrix(&grid.measured_obs_angles(), j);
    let pd = basis_matrix(&grid.measured_inc_angles(), j);
    // Rows of `data` are incidences: B^α = Φ_x̂ᴴ W Fᵀ W conj(Φ_d).
    let wf = DMatrix::from_fn(l, l, |a, b| data[(b, a)] * (w[a] * w[b]));
    Ok(px.adjoint() * wf * pd.map(|z| z.conj()))
}

fn clamp(data: &mut DMatrix<Complex64>, limit: Option<f64>) -> usize {
    let Some(limit) = limit else { return 0 };
    let mut n = 0;
    for z in data.iter_mut() {
        if z.norm() > limit {
            *z = Complex64::new(0.0, 0.0);
            n += 1;
        }
    }
    n
}

fn clamp_limit(cfg: &CompletionConfig, reference: &DMatrix<Complex64>) -> Option<f64> {
    let max = reference.iter().map(|z| z.norm()).fold(0.0, f64::max);
    cfg.threshold_factor.map(|t| t * max)
}

fn to_complex(m: &DMatrix<f64>) -> DMatrix<Complex64> {
    m.map(Complex64::from)
}

/// Double-Fourier completion of the measured block to the full grid.
pub fn dc_fs(f: &FarFieldMatrix, cfg: &CompletionConfig) -> Result<FarFieldMatrix> {
    let grid = f.grid().clone();
    cfg.validate(grid.measured())?;
    let b_alpha = limited_moments(f, cfg.j, cfg.rule)?;
    let px = to_complex(&pseudo_inverse(
        &build_prolate(grid.alpha(), cfg.j, ProlateVariant::Observation)?,
        &cfg.reg,
    )?);
    let pd = to_complex(&pseudo_inverse(
        &build_prolate(grid.alpha(), cfg.j, ProlateVariant::Incidence)?,
        &cfg.reg,
    )?);
    let b = px * b_alpha * pd;
    let fx = basis_matrix(&grid.obs_angles(), cfg.j);
    let fd = basis_matrix(&grid.inc_angles(), cfg.j);
    // F[i][j] = sum_mn b_mn φ_m(θ_x̂_j) φ_n(θ_d_i).
    let mut data = fd * b.transpose() * fx.transpose();
    let clamped = clamp(&mut data, clamp_limit(cfg, &measured(f)));
    let mut out = FarFieldMatrix::new(data, grid, f.wavenumber())?;
    out = out.with_noise_level(f.noise_level());
    for (k, v) in f.meta_entries() {
        out.set_meta(k, v);
    }
    cfg.stamp(&mut out, "DC-FS");
    out.set_meta("clamped", clamped.to_string());
    Ok(out)
}

/// Precomputed pieces of the single-incidence completion.
struct RowCompleter {
    weights: Vec<f64>,
    /// `φ_{-n}(θ_j)` on measured observations, `L × (2J+1)`.
    moments: DMatrix<Complex64>,
    pinv: DMatrix<Complex64>,
    /// `φ_m(θ_j)` on all observations, `M × (2J+1)`.
    synth: DMatrix<Complex64>,
}

impl RowCompleter {
    fn new(grid: &ApertureGrid, cfg: &CompletionConfig) -> Result<Self> {
        let weights = weights(grid, cfg)?;
        let obs = grid.measured_obs_angles();
        let j = cfg.j;
        let moments = DMatrix::from_fn(obs.len(), 2 * j + 1, |a, idx| phi(-offset_mode(idx, j), obs[a]));
        let pinv = to_complex(&pseudo_inverse(
            &build_prolate(grid.alpha(), j, ProlateVariant::Observation)?,
            &cfg.reg,
        )?);
        let synth = basis_matrix(&grid.obs_angles(), j);
        Ok(Self {
            weights,
            moments,
            pinv,
            synth,
        })
    }

    /// `2πΓ̃ = P† C` with `c_n = ∫ u^∞ φ_{-n}`.
    fn gamma(&self, row: &[Complex64]) -> DVector<Complex64> {
        let wrow = DVector::from_iterator(
            row.len(),
            row.iter().zip(&self.weights).map(|(u, w)| u * *w),
        );
        let c = self.moments.transpose() * wrow;
        &self.pinv * c
    }

    fn complete(&self, row: &[Complex64]) -> DVector<Complex64> {
        &self.synth * self.gamma(row)
    }
}

/// Completes one incidence's measured observations to the full circle.
/// The clamp is relative to the row's own largest measured magnitude.
pub fn dc_ie_single(row: &[Complex64], grid: &ApertureGrid, cfg: &CompletionConfig) -> Result<Vec<Complex64>> {
    if row.len() != grid.measured() {
        return Err(Error::mismatch(format!(
            "row has {} samples, grid measures {}",
            row.len(),
            grid.measured()
        )));
    }
    cfg.validate(grid.measured())?;
    let rc = RowCompleter::new(grid, cfg)?;
    let mut out = DMatrix::from_column_slice(grid.full(), 1, rc.complete(row).as_slice());
    let reference = DMatrix::from_column_slice(row.len(), 1, row);
    clamp(&mut out, clamp_limit(cfg, &reference));
    Ok(out.iter().copied().collect())
}

/// The single-incidence form of DC-FS: `b = P_x̂† b^α` with
/// `b^α_p = ∫ u^∞ conj(φ_p)`, then `sum_m b_m φ_m`. No clamp.
pub fn dc_fs_row(row: &[Complex64], grid: &ApertureGrid, cfg: &CompletionConfig) -> Result<Vec<Complex64>> {
    if row.len() != grid.measured() {
        return Err(Error::mismatch(format!(
            "row has {} samples, grid measures {}",
            row.len(),
            grid.measured()
        )));
    }
    cfg.validate(grid.measured())?;
    let w = weights(grid, cfg)?;
    let px = basis_matrix(&grid.measured_obs_angles(), cfg.j);
    let wrow = DVector::from_iterator(row.len(), row.iter().zip(&w).map(|(u, wi)| u * *wi));
    let b_alpha = px.adjoint() * wrow;
    let pinv = to_complex(&pseudo_inverse(
        &build_prolate(grid.alpha(), cfg.j, ProlateVariant::Observation)?,
        &cfg.reg,
    )?);
    let b = pinv * b_alpha;
    Ok((basis_matrix(&grid.obs_angles(), cfg.j) * b).iter().copied().collect())
}

/// DC-IE completion of the full MSR matrix.
///
/// `extended_rows`, when given, holds measurements for the `M - L`
/// incidences outside the aperture, observed on the measured observation
/// directions (`(M-L) × L`). Without it the `F₂₂` block is extrapolated
/// from `F₂₁ = F₁₂ᵀ`.
pub fn dc_ie(
    f: &FarFieldMatrix,
    cfg: &CompletionConfig,
    extended_rows: Option<&DMatrix<Complex64>>,
) -> Result<FarFieldMatrix> {
    dc_ie_with(f, cfg, extended_rows, Execution::default())
}

pub fn dc_ie_with(
    f: &FarFieldMatrix,
    cfg: &CompletionConfig,
    extended_rows: Option<&DMatrix<Complex64>>,
    exec: Execution,
) -> Result<FarFieldMatrix> {
    let grid = f.grid().clone();
    let (l, m) = (grid.measured(), grid.full());
    cfg.validate(l)?;
    if let Some(ext) = extended_rows {
        if ext.nrows() != m - l || ext.ncols() != l {
            return Err(Error::mismatch(format!(
                "extended rows are {}x{}, expected {}x{}",
                ext.nrows(),
                ext.ncols(),
                m - l,
                l
            )));
        }
    }
    let f11 = measured(f);
    let rc = RowCompleter::new(&grid, cfg)?;

    // Step I: every measured incidence over all observations.
    let top = try_map_indices(exec, l, |i| {
        let row: Vec<Complex64> = f11.row(i).iter().copied().collect();
        Ok::<_, Error>(rc.complete(&row))
    })?;
    let mut data = DMatrix::<Complex64>::zeros(m, m);
    for (i, r) in top.iter().enumerate() {
        for jj in 0..m {
            data[(i, jj)] = r[jj];
        }
    }
    // Step II: F₂₁ = F₁₂ᵀ.
    for i in l..m {
        for jj in 0..l {
            data[(i, jj)] = data[(jj, i)];
        }
    }
    // Step III: F₂₂ from rows over the measured observations.
    let mode = if extended_rows.is_some() { "measured_rows" } else { "reciprocity_extension" };
    let bottom = try_map_indices(exec, m - l, |r| {
        let row: Vec<Complex64> = match extended_rows {
            Some(ext) => ext.row(r).iter().copied().collect(),
            None => (0..l).map(|jj| data[(l + r, jj)]).collect(),
        };
        Ok::<_, Error>(rc.complete(&row))
    })?;
    for (r, v) in bottom.iter().enumerate() {
        for jj in l..m {
            data[(l + r, jj)] = v[jj];
        }
    }
    let clamped = clamp(&mut data, clamp_limit(cfg, &f11));
    let mut out = FarFieldMatrix::new(data, grid, f.wavenumber())?.with_noise_level(f.noise_level());
    for (k, v) in f.meta_entries() {
        out.set_meta(k, v);
    }
    cfg.stamp(&mut out, "DC-IE");
    out.set_meta("r", cfg.r.to_string());
    out.set_meta("f22_mode", mode);
    out.set_meta("clamped", clamped.to_string());
    Ok(out)
}
