use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{ImagingField, ImagingMethod, SamplingGrid};
use crate::error::Result;
use crate::exec::{map_indices, Execution};
use crate::forward::FarFieldMatrix;

/// Direct sampling indicator
/// `I(z) = |w² sum_i sum_j u^∞(x̂_j; d_i) e^{-ik d_i·z} e^{ik x̂_j·z}|`
/// over whatever directions `f` holds, `w` being the angular spacing.
pub fn dsm(f: &FarFieldMatrix, grid: &SamplingGrid) -> Result<ImagingField> {
    dsm_with(f, grid, Execution::default())
}

pub fn dsm_with(f: &FarFieldMatrix, grid: &SamplingGrid, exec: Execution) -> Result<ImagingField> {
    grid.validate()?;
    let k = f.wavenumber();
    let w = f.grid().spacing();
    let obs = f.obs_angles();
    let inc = f.inc_angles();
    let n = f.size();
    let res = grid.resolution;
    let xs = grid.xs();
    let ys = grid.ys();
    // e^{ik x̂·z} = e^{ik x cos θ} e^{ik y sin θ}, one factor per axis.
    let axis = |vals: &[f64], angles: &[f64], trig: fn(f64) -> f64, sign: f64| {
        DMatrix::from_fn(vals.len(), angles.len(), |a, b| {
            Complex64::from_polar(1.0, sign * k * vals[a] * trig(angles[b]))
        })
    };
    let ox = axis(&xs, &obs, f64::cos, 1.0);
    let oy = axis(&ys, &obs, f64::sin, 1.0);
    let ix = axis(&xs, &inc, f64::cos, -1.0);
    let iy = axis(&ys, &inc, f64::sin, -1.0);
    let data = f.data();
    let w2 = w * w;
    let rows: Vec<Vec<f64>> = map_indices(exec, res, |row| {
        // Columns: observation exponentials for every x on this row.
        let b = DMatrix::from_fn(n, res, |j, c| ox[(c, j)] * oy[(row, j)]);
        let t = data * b;
        (0..res)
            .map(|c| {
                let s: Complex64 = (0..n).map(|i| ix[(c, i)] * iy[(row, i)] * t[(i, c)]).sum();
                w2 * s.norm()
            })
            .collect()
    });
    let values = DMatrix::from_fn(res, res, |r, c| rows[r][c]);
    let mut meta = BTreeMap::new();
    meta.insert("k".into(), k.to_string());
    meta.insert("directions".into(), n.to_string());
    for key in ["source", "completed_by"] {
        if let Some(v) = f.meta(key) {
            meta.insert(key.into(), v.into());
        }
    }
    Ok(ImagingField {
        grid: grid.clone(),
        values,
        method: ImagingMethod::Dsm,
        meta,
    })
}
