//! Obstacle boundaries, boundary conditions and aperture grids.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point = [f64; 2];

/// Radius function of a star-shaped curve `x(t) = c + r(t) (cos t, sin t)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Shape {
    /// `r(t) = sqrt(3 cos²t + 1)`.
    Peanut,
    Disk { radius: f64 },
    /// `r(t) = a_0 + sum_k (a_k cos kt + b_k sin kt)`; `cos[0]` is `a_0`,
    /// `sin[0]` is ignored.
    Custom { cos: Vec<f64>, sin: Vec<f64> },
}

impl Shape {
    /// `(r, r', r'')` at `t`.
    fn radius(&self, t: f64) -> (f64, f64, f64) {
        match self {
            Shape::Peanut => {
                let (s, c) = t.sin_cos();
                let g = 3.0 * c * c + 1.0;
                let dg = -6.0 * s * c;
                let ddg = -6.0 * (c * c - s * s);
                let r = g.sqrt();
                let dr = dg / (2.0 * r);
                let ddr = ddg / (2.0 * r) - dg * dg / (4.0 * r * r * r);
                (r, dr, ddr)
            }
            Shape::Disk { radius } => (*radius, 0.0, 0.0),
            Shape::Custom { cos, sin } => {
                let mut r = cos.first().copied().unwrap_or(0.0);
                let mut dr = 0.0;
                let mut ddr = 0.0;
                let n = cos.len().max(sin.len());
                for k in 1..n {
                    let a = cos.get(k).copied().unwrap_or(0.0);
                    let b = sin.get(k).copied().unwrap_or(0.0);
                    let kf = k as f64;
                    let (s, c) = (kf * t).sin_cos();
                    r += a * c + b * s;
                    dr += kf * (-a * s + b * c);
                    ddr -= kf * kf * (a * c + b * s);
                }
                (r, dr, ddr)
            }
        }
    }
}

/// A smooth closed curve, traversed counter-clockwise for `t ∈ [0, 2π)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Boundary {
    pub shape: Shape,
    #[serde(default)]
    pub position: Point,
}

/// One quadrature node on a boundary.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundarySample {
    pub t: f64,
    pub point: Point,
    /// `x'(t)`.
    pub tangent: Point,
    /// `x''(t)`.
    pub accel: Point,
    /// Outward unit normal.
    pub normal: Point,
    /// `|x'(t)|`.
    pub speed: f64,
}

impl Boundary {
    pub fn peanut() -> Self {
        Self {
            shape: Shape::Peanut,
            position: [0.0, 0.0],
        }
    }

    pub fn disk(radius: f64) -> Self {
        Self {
            shape: Shape::Disk { radius },
            position: [0.0, 0.0],
        }
    }

    pub fn translated(mut self, h: Point) -> Self {
        self.position[0] += h[0];
        self.position[1] += h[1];
        self
    }

    pub fn sample(&self, t: f64) -> BoundarySample {
        let (r, dr, ddr) = self.shape.radius(t);
        let (s, c) = t.sin_cos();
        let point = [self.position[0] + r * c, self.position[1] + r * s];
        let tangent = [dr * c - r * s, dr * s + r * c];
        let accel = [
            ddr * c - 2.0 * dr * s - r * c,
            ddr * s + 2.0 * dr * c - r * s,
        ];
        let speed = tangent[0].hypot(tangent[1]);
        BoundarySample {
            t,
            point,
            tangent,
            accel,
            normal: [tangent[1] / speed, -tangent[0] / speed],
            speed,
        }
    }

    /// Samples at `t_i = 2πi/n`.
    pub fn boundary_points(&self, n: usize) -> Result<Vec<BoundarySample>> {
        if n < 4 || !n.is_multiple_of(2) {
            return Err(Error::domain(format!(
                "boundary sample count must be even and >= 4, got {n}"
            )));
        }
        let pts: Vec<_> = (0..n).map(|i| self.sample(TAU * i as f64 / n as f64)).collect();
        if pts.iter().any(|p| !(p.speed > 0.0) || !p.speed.is_finite()) {
            return Err(Error::domain("boundary parameterization is degenerate"));
        }
        Ok(pts)
    }

    /// Largest distance from the origin to the curve, over a dense sample.
    pub fn circumradius(&self) -> f64 {
        (0..1024)
            .map(|i| {
                let p = self.sample(TAU * i as f64 / 1024.0).point;
                p[0].hypot(p[1])
            })
            .fold(0.0, f64::max)
    }

    /// Winding-number test for a point inside the curve.
    pub fn contains(&self, z: Point) -> bool {
        let n = 1024;
        let mut winding = 0.0;
        let mut prev = self.sample(0.0).point;
        for i in 1..=n {
            let p = self.sample(TAU * i as f64 / n as f64).point;
            let a = (prev[1] - z[1]).atan2(prev[0] - z[0]);
            let b = (p[1] - z[1]).atan2(p[0] - z[0]);
            let mut d = b - a;
            if d > PI {
                d -= TAU;
            } else if d < -PI {
                d += TAU;
            }
            winding += d;
            prev = p;
        }
        winding.abs() > PI
    }

    /// Distance from `z` to the curve, over a dense sample.
    pub fn distance(&self, z: Point) -> f64 {
        (0..2048)
            .map(|i| {
                let p = self.sample(TAU * i as f64 / 2048.0).point;
                (p[0] - z[0]).hypot(p[1] - z[1])
            })
            .fold(f64::INFINITY, f64::min)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryCondition {
    /// Sound-soft.
    Dirichlet,
    /// Sound-hard.
    Neumann,
}

/// Observation and incidence angles on the uniform grid of `M` directions,
/// of which the first `L` are measured.
///
/// `θ_x̂_j = (j-1) 2π/M - α`, `θ_d_j = θ_x̂_j + π`.
#[derive(Clone, Debug, PartialEq)]
pub struct ApertureGrid {
    alpha: f64,
    l: usize,
    m: usize,
}

impl ApertureGrid {
    /// Grid with the smallest `M ≥ Lπ/α`, i.e. the `L` measured points fall
    /// inside `[-α, α - 2π/M]`.
    pub fn make(alpha: f64, l: usize) -> Result<Self> {
        check_alpha(alpha)?;
        if l < 2 {
            return Err(Error::Grid(format!("L must be >= 2, got {l}")));
        }
        let m = (l as f64 * PI / alpha - 1e-9).ceil() as usize;
        Self::from_parts(alpha, l, m.max(l))
    }

    /// Grid with explicit counts, as read back from a data file.
    pub fn from_parts(alpha: f64, l: usize, m: usize) -> Result<Self> {
        check_alpha(alpha)?;
        if l < 2 || l > m {
            return Err(Error::Grid(format!("need 2 <= L <= M, got L={l}, M={m}")));
        }
        let h = TAU / m as f64;
        if (l - 1) as f64 * h - alpha > alpha + 1e-9 {
            return Err(Error::Grid(format!(
                "L={l} points at spacing 2π/{m} do not fit in [-α, α] for α={alpha}"
            )));
        }
        Ok(Self { alpha, l, m })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn measured(&self) -> usize {
        self.l
    }

    pub fn full(&self) -> usize {
        self.m
    }

    pub fn is_full_aperture(&self) -> bool {
        self.l == self.m
    }

    pub fn spacing(&self) -> f64 {
        TAU / self.m as f64
    }

    pub fn theta_obs(&self, j: usize) -> f64 {
        j as f64 * self.spacing() - self.alpha
    }

    pub fn theta_inc(&self, j: usize) -> f64 {
        self.theta_obs(j) + PI
    }

    pub fn obs_angles(&self) -> Vec<f64> {
        (0..self.m).map(|j| self.theta_obs(j)).collect()
    }

    pub fn inc_angles(&self) -> Vec<f64> {
        (0..self.m).map(|j| self.theta_inc(j)).collect()
    }

    pub fn measured_obs_angles(&self) -> Vec<f64> {
        (0..self.l).map(|j| self.theta_obs(j)).collect()
    }

    pub fn measured_inc_angles(&self) -> Vec<f64> {
        (0..self.l).map(|j| self.theta_inc(j)).collect()
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha <= PI + 1e-15) {
        return Err(Error::domain(format!("aperture α must be in (0, π], got {alpha}")));
    }
    Ok(())
}

pub fn unit(theta: f64) -> Point {
    let (s, c) = theta.sin_cos();
    [c, s]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: Point, b: Point, tol: f64) -> bool {
        (a[0] - b[0]).abs() < tol && (a[1] - b[1]).abs() < tol
    }

    #[test]
    fn full_aperture_grid() {
        let g = ApertureGrid::make(PI, 64).unwrap();
        assert_eq!(g.full(), 64);
        assert!(g.is_full_aperture());
    }

    #[test]
    fn half_aperture_grid() {
        let g = ApertureGrid::make(PI / 2.0, 128).unwrap();
        assert_eq!(g.full(), 256);
        let obs = g.measured_obs_angles();
        assert!((obs[0] + PI / 2.0).abs() < 1e-15);
        assert!((obs[127] - (PI / 2.0 - TAU / 256.0)).abs() < 1e-12);
        for t in g.measured_inc_angles() {
            assert!((PI - PI / 2.0 - 1e-12..=PI + PI / 2.0 + 1e-12).contains(&t));
        }
    }

    #[test]
    fn third_aperture_grid() {
        let g = ApertureGrid::make(PI / 3.0, 30).unwrap();
        assert_eq!(g.full(), 90);
        assert!((g.spacing() - TAU / 90.0).abs() < 1e-15);
        assert!((g.theta_obs(0) + PI / 3.0).abs() < 1e-15);
    }

    #[test]
    fn rounded_grids_keep_points_inside() {
        for l in 2..60 {
            for &alpha in &[0.3, 1.0, 1.9, 2.5, 3.0] {
                let g = ApertureGrid::make(alpha, l).unwrap();
                let last = g.theta_obs(l - 1);
                assert!(last <= alpha - g.spacing() + 1e-9, "l={l} alpha={alpha}");
                assert!(g.full() >= l);
            }
        }
    }

    #[test]
    fn rejects_bad_alpha() {
        assert!(ApertureGrid::make(0.0, 10).is_err());
        assert!(ApertureGrid::make(-1.0, 10).is_err());
        assert!(ApertureGrid::make(3.2, 10).is_err());
        assert!(ApertureGrid::make(1.0, 1).is_err());
    }

    #[test]
    fn disk_samples() {
        let pts = Boundary::disk(2.0).boundary_points(4).unwrap();
        let want = [[2.0, 0.0], [0.0, 2.0], [-2.0, 0.0], [0.0, -2.0]];
        for (p, w) in pts.iter().zip(want) {
            assert!(close(p.point, w, 1e-14));
            assert!(close(p.normal, [w[0] / 2.0, w[1] / 2.0], 1e-14));
        }
    }

    #[test]
    fn rejects_odd_or_tiny_counts() {
        assert!(Boundary::disk(1.0).boundary_points(7).is_err());
        assert!(Boundary::disk(1.0).boundary_points(2).is_err());
    }

    #[test]
    fn peanut_samples() {
        let b = Boundary::peanut();
        assert!(close(b.sample(0.0).point, [2.0, 0.0], 1e-15));
        assert!(close(b.sample(PI / 2.0).point, [0.0, 1.0], 1e-15));
    }

    #[test]
    fn disk_perimeter() {
        let pts = Boundary::disk(2.0).boundary_points(64).unwrap();
        let len: f64 = pts.iter().map(|p| p.speed).sum::<f64>() * TAU / 64.0;
        assert!((len - 4.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn normals_point_outward_and_speed_positive() {
        let custom = Boundary {
            shape: Shape::Custom {
                cos: vec![1.5, 0.0, 0.3],
                sin: vec![0.0, 0.0, 0.0, 0.1],
            },
            position: [0.0, 0.0],
        };
        for b in [Boundary::peanut(), Boundary::disk(2.0), custom] {
            for p in b.boundary_points(1024).unwrap() {
                assert!(p.speed > 0.0);
                assert!(p.normal[0] * p.point[0] + p.normal[1] * p.point[1] > 0.0);
            }
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let b = Boundary::peanut().translated([0.3, -0.2]);
        let h = 1e-5;
        for i in 0..16 {
            let t = 0.37 * i as f64;
            let s = b.sample(t);
            let p = b.sample(t + h);
            let m = b.sample(t - h);
            for c in 0..2 {
                assert!(((p.point[c] - m.point[c]) / (2.0 * h) - s.tangent[c]).abs() < 1e-8);
                assert!(((p.tangent[c] - m.tangent[c]) / (2.0 * h) - s.accel[c]).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn containment() {
        let b = Boundary::peanut();
        assert!(b.contains([0.0, 0.0]));
        assert!(b.contains([1.5, 0.0]));
        assert!(!b.contains([0.0, 1.5]));
        assert!(!b.contains([3.0, 3.0]));
    }
}
