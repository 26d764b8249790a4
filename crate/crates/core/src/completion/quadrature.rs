//! Quadrature over the measured aperture.
//!
//! The rectangle rule on `L` uniform nodes covering `[-α, α)` is only
//! first-order accurate for integrands that are not periodic on the
//! aperture, which limits moments to about `1e-2` relative error. The
//! default rule instead uses the minimum-norm real weights that integrate
//! every trigonometric polynomial of degree `≤ Q` exactly over `[-α, α]`,
//! found by a truncated SVD of the `(2Q+1) × L` moment system. On the full
//! circle this reduces to the uniform weights `2π/M`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative singular-value cutoff for the weight system.
const RCOND: f64 = 1e-13;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "lowercase")]
pub enum MomentRule {
    /// Exact for trigonometric polynomials of degree `2J` on the aperture.
    #[default]
    Bandlimited,
    /// Degree given explicitly.
    BandlimitedDegree { degree: usize },
    /// Uniform weight equal to the grid spacing.
    Rectangle,
}

impl MomentRule {
    pub fn label(&self) -> String {
        match self {
            MomentRule::Bandlimited => "bandlimited".into(),
            MomentRule::BandlimitedDegree { degree } => format!("bandlimited:{degree}"),
            MomentRule::Rectangle => "rectangle".into(),
        }
    }
}

/// Weights for nodes `θ_j = j·h - α`, `j < L`, integrating over `[-α, α]`.
/// Shifted by any constant the same weights integrate over the shifted
/// interval.
pub fn aperture_weights(alpha: f64, h: f64, l: usize, rule: MomentRule, j: usize) -> Result<Vec<f64>> {
    if l == 0 {
        return Err(Error::domain("no measured nodes"));
    }
    let degree = match rule {
        MomentRule::Rectangle => return Ok(vec![h; l]),
        MomentRule::Bandlimited => 2 * j,
        MomentRule::BandlimitedDegree { degree } => degree,
    };
    let rows = 2 * degree + 1;
    let nodes: Vec<f64> = (0..l).map(|i| i as f64 * h - alpha).collect();
    let a = DMatrix::from_fn(rows, l, |r, c| {
        if r == 0 {
            1.0
        } else if r <= degree {
            (r as f64 * nodes[c]).cos()
        } else {
            ((r - degree) as f64 * nodes[c]).sin()
        }
    });
    let b = DVector::from_fn(rows, |r, _| {
        if r == 0 {
            2.0 * alpha
        } else if r <= degree {
            2.0 * (r as f64 * alpha).sin() / r as f64
        } else {
            0.0
        }
    });
    let svd = a.svd(true, true);
    let smax = svd.singular_values.max();
    let w = svd
        .solve(&b, RCOND * smax)
        .map_err(|e| Error::numerical(format!("quadrature weight solve: {e}")))?;
    let amplification = w.iter().map(|x| x.abs()).sum::<f64>() / (2.0 * alpha);
    if amplification > 10.0 {
        log::warn!(
            "aperture quadrature of degree {degree} on {l} nodes amplifies noise by {amplification:.1}"
        );
    }
    Ok(w.iter().copied().collect())
}
