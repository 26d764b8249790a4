use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

use super::FarFieldMatrix;
use crate::error::{Error, Result};

/// `F + δ ‖F‖ (R₁ + iR₂) / ‖R₁ + iR₂‖` in the Frobenius norm, with `R₁`,
/// `R₂` standard normal. All of `R₁` is drawn row-major, then all of `R₂`,
/// from a ChaCha20 stream seeded with `seed`.
pub fn add_noise(f: &FarFieldMatrix, delta: f64, seed: u64) -> Result<FarFieldMatrix> {
    if !(delta >= 0.0) || !delta.is_finite() {
        return Err(Error::domain(format!("noise level must be >= 0, got {delta}")));
    }
    if delta == 0.0 {
        return Ok(f.clone());
    }
    let n = f.size();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let re: Vec<f64> = (0..n * n).map(|_| StandardNormal.sample(&mut rng)).collect();
    let im: Vec<f64> = (0..n * n).map(|_| StandardNormal.sample(&mut rng)).collect();
    let r = DMatrix::from_fn(n, n, |i, j| Complex64::new(re[i * n + j], im[i * n + j]));
    let rnorm = r.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let scale = delta * f.frobenius_norm() / rnorm;
    let data = f.data() + r * Complex64::from(scale);
    let mut out = f.with_data(data)?.with_noise_level(delta);
    out.set_meta("noise_seed", seed.to_string());
    Ok(out)
}
