use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::scene::ApertureGrid;

/// Multi-static response matrix: entry `(i, j)` is `u^∞(θ_x̂_j; θ_d_i)`.
///
/// The matrix is either the `L × L` measured block or the full `M × M`
/// matrix on the paired grid. Rows index incidence, columns observation.
#[derive(Clone, Debug, PartialEq)]
pub struct FarFieldMatrix {
    data: DMatrix<Complex64>,
    grid: ApertureGrid,
    k: f64,
    noise_level: f64,
    meta: BTreeMap<String, String>,
}

impl FarFieldMatrix {
    pub fn new(data: DMatrix<Complex64>, grid: ApertureGrid, k: f64) -> Result<Self> {
        let n = data.nrows();
        if data.ncols() != n || (n != grid.measured() && n != grid.full()) {
            return Err(Error::mismatch(format!(
                "far-field data is {}x{}, grid has L={} M={}",
                n,
                data.ncols(),
                grid.measured(),
                grid.full()
            )));
        }
        if !(k > 0.0) {
            return Err(Error::domain(format!("wavenumber must be > 0, got {k}")));
        }
        Ok(Self {
            data,
            grid,
            k,
            noise_level: 0.0,
            meta: BTreeMap::new(),
        })
    }

    /// Builds the matrix entry by entry from `f(i, j)`.
    pub fn from_fn(
        grid: ApertureGrid,
        k: f64,
        full: bool,
        f: impl FnMut(usize, usize) -> Complex64,
    ) -> Result<Self> {
        let n = if full { grid.full() } else { grid.measured() };
        Self::new(DMatrix::from_fn(n, n, f), grid, k)
    }

    pub fn data(&self) -> &DMatrix<Complex64> {
        &self.data
    }

    pub fn into_data(self) -> DMatrix<Complex64> {
        self.data
    }

    pub fn grid(&self) -> &ApertureGrid {
        &self.grid
    }

    pub fn wavenumber(&self) -> f64 {
        self.k
    }

    pub fn noise_level(&self) -> f64 {
        self.noise_level
    }

    pub fn size(&self) -> usize {
        self.data.nrows()
    }

    /// True when the matrix spans all `M` directions.
    pub fn is_full(&self) -> bool {
        self.size() == self.grid.full()
    }

    pub fn obs_angles(&self) -> Vec<f64> {
        (0..self.size()).map(|j| self.grid.theta_obs(j)).collect()
    }

    pub fn inc_angles(&self) -> Vec<f64> {
        (0..self.size()).map(|j| self.grid.theta_inc(j)).collect()
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.meta.get(key).map(String::as_str)
    }

    pub fn meta_entries(&self) -> impl Iterator<Item = (&str, &str)> {
        self.meta.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn set_meta(&mut self, key: impl Into<String>, value: impl Into<String>) {
        self.meta.insert(key.into(), value.into());
    }

    pub(crate) fn with_noise_level(mut self, delta: f64) -> Self {
        self.noise_level = delta;
        self
    }

    /// Same metadata and grid, new entries.
    pub(crate) fn with_data(&self, data: DMatrix<Complex64>) -> Result<Self> {
        let mut out = Self::new(data, self.grid.clone(), self.k)?;
        out.noise_level = self.noise_level;
        out.meta = self.meta.clone();
        Ok(out)
    }

    /// The `L × L` measured block.
    pub fn measured_block(&self) -> Self {
        let l = self.grid.measured();
        let mut out = self.clone();
        out.data = self.data.view((0, 0), (l, l)).into_owned();
        out
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `‖F - Fᵀ‖_F / ‖F‖_F`.
    pub fn reciprocity_defect(&self) -> f64 {
        let diff = &self.data - self.data.transpose();
        let num: f64 = diff.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        num / self.frobenius_norm()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# k={}", self.k)?;
        writeln!(w, "# alpha={}", self.grid.alpha())?;
        writeln!(w, "# M={}", self.grid.full())?;
        writeln!(w, "# L={}", self.grid.measured())?;
        writeln!(w, "# delta={}", self.noise_level)?;
        for (k, v) in &self.meta {
            writeln!(w, "# {k}={v}")?;
        }
        let mut line = String::new();
        for i in 0..self.size() {
            line.clear();
            for j in 0..self.size() {
                if j > 0 {
                    line.push(',');
                }
                line.push_str(&format_complex(self.data[(i, j)]));
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut header = BTreeMap::new();
        let mut rows: Vec<Vec<Complex64>> = Vec::new();
        for (idx, line) in r.lines().enumerate() {
            let line = line?;
            let lineno = idx + 1;
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            if let Some(rest) = trimmed.strip_prefix('#') {
                let (key, value) = rest.trim().split_once('=').ok_or_else(|| Error::Parse {
                    line: lineno,
                    msg: format!("header line without '=': {trimmed}"),
                })?;
                header.insert(key.trim().to_string(), value.trim().to_string());
                continue;
            }
            let row = trimmed
                .split(',')
                .map(|s| {
                    parse_complex(s.trim()).ok_or_else(|| Error::Parse {
                        line: lineno,
                        msg: format!("bad complex literal '{s}'"),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        let take = |h: &mut BTreeMap<String, String>, key: &str| -> Result<String> {
            h.remove(key).ok_or_else(|| Error::Parse {
                line: 0,
                msg: format!("missing header '# {key}='"),
            })
        };
        let num = |s: String, key: &str| -> Result<f64> {
            s.parse::<f64>().map_err(|_| Error::Parse {
                line: 0,
                msg: format!("header {key} is not a number: {s}"),
            })
        };
        let k = num(take(&mut header, "k")?, "k")?;
        let alpha = num(take(&mut header, "alpha")?, "alpha")?;
        let m = num(take(&mut header, "M")?, "M")? as usize;
        let l = num(take(&mut header, "L")?, "L")? as usize;
        let delta = num(take(&mut header, "delta")?, "delta")?;
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Parse {
                line: 0,
                msg: "far-field matrix rows are not square".into(),
            });
        }
        let grid = ApertureGrid::from_parts(alpha, l, m)?;
        let data = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
        let mut out = Self::new(data, grid, k)?;
        out.noise_level = delta;
        out.meta = header;
        Ok(out)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_csv(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_csv(BufReader::new(File::open(path)?))
    }
}

/// `re+imi` with both parts in shortest round-trip exponent form.
pub fn format_complex(z: Complex64) -> String {
    let sign = if z.im.is_sign_negative() { '-' } else { '+' };
    format!("{:e}{}{:e}i", z.re, sign, z.im.abs())
}

pub fn parse_complex(s: &str) -> Option<Complex64> {
    let body = s.strip_suffix('i')?;
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&p| (bytes[p] == b'+' || bytes[p] == b'-') && !matches!(bytes[p - 1], b'e' | b'E'))?;
    let re: f64 = body[..split].parse().ok()?;
    let im: f64 = body[split..].parse().ok()?;
    Some(Complex64::new(re, im))
}
