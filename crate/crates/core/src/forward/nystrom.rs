//! Nyström boundary-integral solver for smooth obstacles.
//!
//! Dirichlet obstacles use the combined-field ansatz
//! `u^s = ∫ (∂Φ/∂ν(y) - iη Φ) ψ ds` with `η = k`, giving
//! `ψ + Kψ - iη Sψ = -2 u^in`. Neumann obstacles use a single layer,
//! `u^s = ∫ Φ ψ ds`, whose exterior normal trace gives
//! `(-½ I + K') ψ = -∂_ν u^in`.
//!
//! Both kernels are split as `K₁(t,τ) ln(4 sin²((t-τ)/2)) + K₂(t,τ)`; the
//! logarithmic part is integrated with Kress's trigonometric weights and the
//! smooth part with the trapezoidal rule, which is spectrally accurate for
//! analytic boundaries.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::FarFieldMatrix;
use crate::error::{Error, Result};
use crate::exec::{try_map_indices, Execution};
use crate::scene::{unit, ApertureGrid, Boundary, BoundaryCondition, BoundarySample};
use crate::specfun::CylTable;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Condition number above which the Neumann formulation is flagged as
/// close to an irregular frequency.
pub const NEUMANN_CONDITION_WARNING: f64 = 1e8;

/// Plane wave `amplitude · e^{ik x·d}` with `d = (cos θ, sin θ)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlaneWave {
    pub theta: f64,
    pub amplitude: Complex64,
}

impl PlaneWave {
    pub fn unit(theta: f64) -> Self {
        Self {
            theta,
            amplitude: Complex64::new(1.0, 0.0),
        }
    }
}

/// Density values at the quadrature nodes.
#[derive(Clone, Debug)]
pub struct DensitySolve {
    pub density: DVector<Complex64>,
    pub n_quad: usize,
    /// `‖Aψ - b‖ / ‖b‖` of the discrete system (0 when `b = 0`).
    pub residual: f64,
}

pub struct NystromSolver {
    nodes: Vec<BoundarySample>,
    k: f64,
    bc: BoundaryCondition,
    matrix: DMatrix<Complex64>,
    lu: nalgebra::LU<Complex64, nalgebra::Dyn, nalgebra::Dyn>,
    condition: Option<f64>,
}

impl NystromSolver {
    /// Assembles and factors the system for `n_quad` equispaced nodes.
    pub fn new(boundary: &Boundary, bc: BoundaryCondition, k: f64, n_quad: usize) -> Result<Self> {
        if !(k > 0.0) {
            return Err(Error::domain(format!("wavenumber must be > 0, got {k}")));
        }
        if n_quad < 8 || !n_quad.is_multiple_of(2) {
            return Err(Error::domain(format!(
                "n_quad must be even and >= 8, got {n_quad}"
            )));
        }
        let nodes = boundary.boundary_points(n_quad)?;
        let matrix = match bc {
            BoundaryCondition::Dirichlet => assemble_dirichlet(&nodes, k)?,
            BoundaryCondition::Neumann => assemble_neumann(&nodes, k)?,
        };
        let condition = match bc {
            BoundaryCondition::Neumann => {
                let c = condition_number(&matrix);
                if c > NEUMANN_CONDITION_WARNING {
                    log::warn!(
                        "Neumann system condition number {c:.3e} exceeds {NEUMANN_CONDITION_WARNING:e}; \
                         k={k} is likely near an interior eigenvalue, consider perturbing k"
                    );
                }
                Some(c)
            }
            BoundaryCondition::Dirichlet => None,
        };
        let lu = matrix.clone().lu();
        if !lu.is_invertible() {
            return Err(Error::numerical(format!(
                "singular Nyström system (condition estimate {:.3e})",
                condition_number(&matrix)
            )));
        }
        Ok(Self {
            nodes,
            k,
            bc,
            matrix,
            lu,
            condition,
        })
    }

    pub fn boundary_condition(&self) -> BoundaryCondition {
        self.bc
    }

    pub fn n_quad(&self) -> usize {
        self.nodes.len()
    }

    /// 2-norm condition number, computed eagerly for Neumann systems.
    pub fn condition(&self) -> Option<f64> {
        self.condition
    }

    fn rhs(&self, wave: &PlaneWave) -> DVector<Complex64> {
        let d = unit(wave.theta);
        let k = self.k;
        DVector::from_iterator(
            self.nodes.len(),
            self.nodes.iter().map(|p| {
                let phase = k * (p.point[0] * d[0] + p.point[1] * d[1]);
                let uin = wave.amplitude * Complex64::from_polar(1.0, phase);
                match self.bc {
                    BoundaryCondition::Dirichlet => -2.0 * uin,
                    BoundaryCondition::Neumann => {
                        2.0 * I * k * (p.normal[0] * d[0] + p.normal[1] * d[1]) * uin
                    }
                }
            }),
        )
    }

    pub fn solve_density(&self, wave: &PlaneWave) -> Result<DensitySolve> {
        let b = self.rhs(wave);
        let density = self
            .lu
            .solve(&b)
            .ok_or_else(|| Error::numerical("LU solve failed"))?;
        let bnorm = b.norm();
        let residual = if bnorm > 0.0 {
            (&self.matrix * &density - &b).norm() / bnorm
        } else {
            (&self.matrix * &density).norm()
        };
        Ok(DensitySolve {
            density,
            n_quad: self.nodes.len(),
            residual,
        })
    }

    /// Far-field kernel row for one observation angle; `u^∞ = row · ψ`.
    fn far_field_row(&self, theta_obs: f64) -> Vec<Complex64> {
        let xh = unit(theta_obs);
        let w = 2.0 * PI / self.nodes.len() as f64;
        let k = self.k;
        self.nodes
            .iter()
            .map(|p| {
                let e = Complex64::from_polar(1.0, -k * (xh[0] * p.point[0] + xh[1] * p.point[1]));
                let factor = match self.bc {
                    BoundaryCondition::Dirichlet => {
                        // ν|x'| = (x₂', -x₁')
                        let nu_dot = p.tangent[1] * xh[0] - p.tangent[0] * xh[1];
                        -I * k * nu_dot - I * k * p.speed
                    }
                    BoundaryCondition::Neumann => Complex64::from(p.speed),
                };
                w * factor * e
            })
            .collect()
    }

    pub fn far_field(&self, density: &DensitySolve, obs: &[f64]) -> Vec<Complex64> {
        obs.iter()
            .map(|&t| {
                self.far_field_row(t)
                    .iter()
                    .zip(density.density.iter())
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }

    /// MSR matrix on `grid`: the full `M × M` matrix when `full`, otherwise
    /// the `L × L` measured block. Incidences are solved independently.
    pub fn msr(&self, grid: &ApertureGrid, full: bool, exec: Execution) -> Result<FarFieldMatrix> {
        let n = if full { grid.full() } else { grid.measured() };
        let rows: Vec<Vec<Complex64>> = (0..n).map(|j| self.far_field_row(grid.theta_obs(j))).collect();
        let solved = try_map_indices(exec, n, |i| {
            let sol = self.solve_density(&PlaneWave::unit(grid.theta_inc(i)))?;
            if sol.residual > 1e-10 {
                return Err(Error::numerical(format!(
                    "density residual {:.3e} at incidence {i}",
                    sol.residual
                )));
            }
            Ok(rows
                .iter()
                .map(|r| r.iter().zip(sol.density.iter()).map(|(a, b)| a * b).sum())
                .collect::<Vec<Complex64>>())
        })?;
        let mut out = FarFieldMatrix::from_fn(grid.clone(), self.k, full, |i, j| solved[i][j])?;
        out.set_meta(
            "source",
            match self.bc {
                BoundaryCondition::Dirichlet => "nystrom-dirichlet",
                BoundaryCondition::Neumann => "nystrom-neumann",
            },
        );
        Ok(out)
    }
}

pub fn solve_nystrom_dirichlet(
    boundary: &Boundary,
    k: f64,
    grid: &ApertureGrid,
    n_quad: usize,
) -> Result<FarFieldMatrix> {
    NystromSolver::new(boundary, BoundaryCondition::Dirichlet, k, n_quad)?.msr(
        grid,
        true,
        Execution::default(),
    )
}

pub fn solve_nystrom_neumann(
    boundary: &Boundary,
    k: f64,
    grid: &ApertureGrid,
    n_quad: usize,
) -> Result<FarFieldMatrix> {
    NystromSolver::new(boundary, BoundaryCondition::Neumann, k, n_quad)?.msr(
        grid,
        true,
        Execution::default(),
    )
}

/// `R_j` weights: `∫ ln(4 sin²((t_i-τ)/2)) f(τ) dτ ≈ sum_j R_{|i-j|} f(t_j)`
/// on `2n` equispaced nodes.
fn kress_weights(n_quad: usize) -> Vec<f64> {
    let n = n_quad / 2;
    let nf = n as f64;
    (0..n_quad)
        .map(|d| {
            let s: f64 = (1..n)
                .map(|m| (m as f64 * d as f64 * PI / nf).cos() / m as f64)
                .sum();
            let alt = if d % 2 == 0 { 1.0 } else { -1.0 };
            -2.0 * PI / nf * s - PI / (nf * nf) * alt
        })
        .collect()
}

fn log_sin2(ti: f64, tj: f64) -> f64 {
    let s = (0.5 * (ti - tj)).sin();
    (4.0 * s * s).ln()
}

fn curvature_term(p: &BoundarySample) -> f64 {
    (p.tangent[0] * p.accel[1] - p.tangent[1] * p.accel[0]) / (p.speed * p.speed)
}

fn assemble_dirichlet(nodes: &[BoundarySample], k: f64) -> Result<DMatrix<Complex64>> {
    let nq = nodes.len();
    let r_w = kress_weights(nq);
    let trap = 2.0 * PI / nq as f64;
    let eta = k;
    let mut a = DMatrix::<Complex64>::identity(nq, nq);
    for i in 0..nq {
        let xi = &nodes[i];
        for j in 0..nq {
            let yj = &nodes[j];
            let (k1, k2) = if i == j {
                let l2 = Complex64::from(-curvature_term(xi) / (2.0 * PI));
                let m1 = -yj.speed / (2.0 * PI);
                let m2 = Complex64::new(
                    -EULER_GAMMA / PI - (k * yj.speed / 2.0).ln() / PI,
                    0.5,
                ) * yj.speed;
                (-I * eta * m1, l2 - I * eta * m2)
            } else {
                let dx = xi.point[0] - yj.point[0];
                let dy = xi.point[1] - yj.point[1];
                let r = dx.hypot(dy);
                let t = CylTable::new(1, k * r)?;
                let stuff = yj.tangent[1] * dx - yj.tangent[0] * dy;
                let l = I * k / 2.0 * stuff * t.h1(1) / r;
                let l1 = -k / (2.0 * PI) * stuff * t.j(1) / r;
                let m = I / 2.0 * t.h1(0) * yj.speed;
                let m1 = -t.j(0) * yj.speed / (2.0 * PI);
                let lg = log_sin2(xi.t, yj.t);
                let k1 = l1 - I * eta * m1;
                let k2 = (l - l1 * lg) - I * eta * (m - m1 * lg);
                (k1, k2)
            };
            let d = (i as isize - j as isize).unsigned_abs();
            a[(i, j)] += r_w[d] * k1 + trap * k2;
        }
    }
    Ok(a)
}

fn assemble_neumann(nodes: &[BoundarySample], k: f64) -> Result<DMatrix<Complex64>> {
    let nq = nodes.len();
    let r_w = kress_weights(nq);
    let trap = 2.0 * PI / nq as f64;
    let mut a = DMatrix::<Complex64>::identity(nq, nq);
    for i in 0..nq {
        let xi = &nodes[i];
        for j in 0..nq {
            let yj = &nodes[j];
            let (k1, k2) = if i == j {
                (Complex64::from(0.0), Complex64::from(-curvature_term(xi) / (2.0 * PI)))
            } else {
                let dx = xi.point[0] - yj.point[0];
                let dy = xi.point[1] - yj.point[1];
                let r = dx.hypot(dy);
                let t = CylTable::new(1, k * r)?;
                let ratio = yj.speed / xi.speed;
                let stuff = xi.tangent[1] * dx - xi.tangent[0] * dy;
                let n = -I * k / 2.0 * stuff * t.h1(1) / r * ratio;
                let n1 = k / (2.0 * PI) * stuff * t.j(1) / r * ratio;
                let lg = log_sin2(xi.t, yj.t);
                (Complex64::from(n1), n - n1 * lg)
            };
            let d = (i as isize - j as isize).unsigned_abs();
            a[(i, j)] -= r_w[d] * k1 + trap * k2;
        }
    }
    Ok(a)
}

fn condition_number(a: &DMatrix<Complex64>) -> f64 {
    let s = a.clone().singular_values();
    let max = s.iter().cloned().fold(0.0, f64::max);
    let min = s.iter().cloned().fold(f64::INFINITY, f64::min);
    if min > 0.0 {
        max / min
    } else {
        f64::INFINITY
    }
}
