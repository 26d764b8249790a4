use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scene::Point;

/// Rectangular grid of sampling points, `resolution` per axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingGrid {
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    pub resolution: usize,
}

impl Default for SamplingGrid {
    fn default() -> Self {
        Self {
            x_range: (-4.0, 4.0),
            y_range: (-4.0, 4.0),
            resolution: 101,
        }
    }
}

impl SamplingGrid {
    pub fn square(half_width: f64, resolution: usize) -> Self {
        Self {
            x_range: (-half_width, half_width),
            y_range: (-half_width, half_width),
            resolution,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.resolution < 2 {
            return Err(Error::domain(format!(
                "sampling resolution must be >= 2, got {}",
                self.resolution
            )));
        }
        for (name, (a, b)) in [("x", self.x_range), ("y", self.y_range)] {
            if !(a < b) || !a.is_finite() || !b.is_finite() {
                return Err(Error::domain(format!("degenerate {name} range [{a}, {b}]")));
            }
        }
        Ok(())
    }

    fn axis(&self, (a, b): (f64, f64), i: usize) -> f64 {
        a + (b - a) * i as f64 / (self.resolution - 1) as f64
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.resolution).map(|i| self.axis(self.x_range, i)).collect()
    }

    pub fn ys(&self) -> Vec<f64> {
        (0..self.resolution).map(|i| self.axis(self.y_range, i)).collect()
    }

    pub fn point(&self, ix: usize, iy: usize) -> Point {
        [self.axis(self.x_range, ix), self.axis(self.y_range, iy)]
    }

    /// `(dx, dy)`.
    pub fn cell(&self) -> (f64, f64) {
        let n = (self.resolution - 1) as f64;
        (
            (self.x_range.1 - self.x_range.0) / n,
            (self.y_range.1 - self.y_range.0) / n,
        )
    }

    pub fn len(&self) -> usize {
        self.resolution * self.resolution
    }

    pub fn is_empty(&self) -> bool {
        self.resolution == 0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ImagingMethod {
    Dsm,
    Fm,
}

impl ImagingMethod {
    pub fn label(&self) -> &'static str {
        match self {
            ImagingMethod::Dsm => "DSM",
            ImagingMethod::Fm => "FM",
        }
    }
}

/// Indicator values on a sampling grid; `values[(iy, ix)]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ImagingField {
    pub grid: SamplingGrid,
    pub values: DMatrix<f64>,
    pub method: ImagingMethod,
    pub meta: BTreeMap<String, String>,
}

impl ImagingField {
    pub fn value(&self, ix: usize, iy: usize) -> f64 {
        self.values[(iy, ix)]
    }

    pub fn max(&self) -> f64 {
        self.values.max()
    }

    /// Grid indices `(ix, iy)` of the largest value (first in row-major
    /// order on ties).
    pub fn argmax(&self) -> (usize, usize) {
        let mut best = (0, 0);
        let mut v = f64::NEG_INFINITY;
        for iy in 0..self.grid.resolution {
            for ix in 0..self.grid.resolution {
                if self.values[(iy, ix)] > v {
                    v = self.values[(iy, ix)];
                    best = (ix, iy);
                }
            }
        }
        best
    }

    /// Values divided by the maximum (unchanged when the maximum is 0).
    pub fn normalized(&self) -> DMatrix<f64> {
        let m = self.max();
        if m > 0.0 {
            &self.values / m
        } else {
            self.values.clone()
        }
    }

    /// Mean value over the points for which `select(point)` holds.
    pub fn mean_where(&self, select: impl Fn(Point) -> bool) -> Option<f64> {
        let mut sum = 0.0;
        let mut n = 0usize;
        for iy in 0..self.grid.resolution {
            for ix in 0..self.grid.resolution {
                if select(self.grid.point(ix, iy)) {
                    sum += self.values[(iy, ix)];
                    n += 1;
                }
            }
        }
        (n > 0).then(|| sum / n as f64)
    }

    /// `# key=value` header lines, then `x,y,value` rows with `x` varying
    /// fastest.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# method={}", self.method.label())?;
        for (k, v) in &self.meta {
            writeln!(w, "# {k}={v}")?;
        }
        writeln!(w, "x,y,value")?;
        for iy in 0..self.grid.resolution {
            for ix in 0..self.grid.resolution {
                let [x, y] = self.grid.point(ix, iy);
                writeln!(w, "{x:e},{y:e},{:e}", self.values[(iy, ix)])?;
            }
        }
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_csv(&mut w)?;
        w.flush()?;
        Ok(())
    }

    /// Heat map, min-max normalized, `y` increasing upwards.
    pub fn to_image(&self) -> image::RgbImage {
        let n = self.grid.resolution as u32;
        let lo = self.values.min();
        let hi = self.values.max();
        let span = if hi > lo { hi - lo } else { 1.0 };
        image::RgbImage::from_fn(n, n, |px, py| {
            let iy = (n - 1 - py) as usize;
            let t = (self.values[(iy, px as usize)] - lo) / span;
            image::Rgb(colormap(t))
        })
    }

    pub fn save_png(&self, path: impl AsRef<Path>) -> Result<()> {
        self.to_image()
            .save_with_format(path, image::ImageFormat::Png)
            .map_err(|e| Error::Io(std::io::Error::other(e)))
    }
}

/// Anchors of the heat-map colour scale at `t = 0, 0.25, 0.5, 0.75, 1`:
/// dark blue, blue, teal, yellow, white. Linear in between.
const ANCHORS: [[f64; 3]; 5] = [
    [8.0, 16.0, 64.0],
    [32.0, 80.0, 200.0],
    [40.0, 170.0, 160.0],
    [250.0, 220.0, 50.0],
    [255.0, 255.0, 255.0],
];

pub fn colormap(t: f64) -> [u8; 3] {
    let t = if t.is_finite() { t.clamp(0.0, 1.0) } else { 0.0 };
    let s = t * 4.0;
    let i = (s.floor() as usize).min(3);
    let f = s - i as f64;
    let mut out = [0u8; 3];
    for c in 0..3 {
        let v = ANCHORS[i][c] + f * (ANCHORS[i + 1][c] - ANCHORS[i][c]);
        out[c] = v.round() as u8;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid() {
        let g = SamplingGrid::default();
        g.validate().unwrap();
        assert_eq!(g.point(0, 0), [-4.0, -4.0]);
        assert_eq!(g.point(100, 100), [4.0, 4.0]);
        assert_eq!(g.point(50, 50), [0.0, 0.0]);
        assert!((g.cell().0 - 0.08).abs() < 1e-15);
    }

    #[test]
    fn rejects_degenerate() {
        assert!(SamplingGrid::square(1.0, 1).validate().is_err());
        let g = SamplingGrid {
            x_range: (1.0, 1.0),
            ..Default::default()
        };
        assert!(g.validate().is_err());
    }

    #[test]
    fn colormap_endpoints() {
        assert_eq!(colormap(0.0), [8, 16, 64]);
        assert_eq!(colormap(1.0), [255, 255, 255]);
        assert_eq!(colormap(f64::NAN), [8, 16, 64]);
    }

    #[test]
    fn csv_layout() {
        let grid = SamplingGrid::square(1.0, 2);
        let f = ImagingField {
            grid,
            values: DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 2.0, 3.0]),
            method: ImagingMethod::Dsm,
            meta: BTreeMap::new(),
        };
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "# method=DSM\nx,y,value\n-1e0,-1e0,0e0\n1e0,-1e0,1e0\n-1e0,1e0,2e0\n1e0,1e0,3e0\n"
        );
        assert_eq!(f.argmax(), (1, 1));
        let img = f.to_image();
        assert_eq!(img.get_pixel(1, 0).0, [255, 255, 255]);
    }
}
