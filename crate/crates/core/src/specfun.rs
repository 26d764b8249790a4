//! Cylindrical Bessel and Hankel functions of integer order and real
//! positive argument.
//!
//! `J_n` comes from the ascending power series for small arguments and from
//! Miller's normalized backward recurrence otherwise. `Y_0` and `Y_1` come
//! from Neumann series over the same `J_k` values; higher `Y_n` follow by
//! forward recurrence, which is stable for the second kind.

use num_complex::Complex64;
use std::f64::consts::{FRAC_2_PI, PI};

use crate::error::{Error, Result};

/// Largest supported |order|.
pub const MAX_ORDER: usize = 200;

/// Largest supported argument.
pub const MAX_ARGUMENT: f64 = 1.0e4;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const SERIES_LIMIT: f64 = 2.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CylFunValue {
    pub order: i32,
    pub x: f64,
    pub j: f64,
    pub y: f64,
    pub h1: Complex64,
}

/// `J_m`, `Y_m` and `H¹_m` at a single order.
///
/// Negative orders use `J_{-m} = (-1)^m J_m`, `Y_{-m} = (-1)^m Y_m`.
pub fn bessel_jy(order: i32, x: f64) -> Result<CylFunValue> {
    let table = CylTable::new(order.unsigned_abs() as usize, x)?;
    let j = table.j(order);
    let y = table.y(order);
    Ok(CylFunValue {
        order,
        x,
        j,
        y,
        h1: Complex64::new(j, y),
    })
}

/// `J_n(x)` and `Y_n(x)` for `n = 0..=max_order`, plus one extra order so
/// derivatives are available up to `max_order`.
#[derive(Clone, Debug)]
pub struct CylTable {
    x: f64,
    j: Vec<f64>,
    y: Vec<f64>,
}

impl CylTable {
    pub fn new(max_order: usize, x: f64) -> Result<Self> {
        if !(x > 0.0) || !x.is_finite() {
            return Err(Error::domain(format!("Bessel argument must be > 0, got {x}")));
        }
        if x > MAX_ARGUMENT {
            return Err(Error::domain(format!(
                "Bessel argument {x} exceeds supported maximum {MAX_ARGUMENT}"
            )));
        }
        if max_order > MAX_ORDER {
            return Err(Error::domain(format!(
                "Bessel order {max_order} exceeds supported maximum {MAX_ORDER}"
            )));
        }
        let top = max_order + 1;
        let j = if x <= SERIES_LIMIT {
            // The Neumann sums for Y_0, Y_1 need J_k until it is negligible.
            series_j(top.max(40), x)
        } else {
            miller_j(top, x)
        };
        let (y0, y1) = neumann_y01(&j, x);
        let mut y = vec![0.0; top + 1];
        y[0] = y0;
        y[1] = y1;
        for n in 1..top {
            y[n + 1] = 2.0 * n as f64 / x * y[n] - y[n - 1];
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain(format!(
                "Y_n({x}) overflows for some n <= {top}"
            )));
        }
        let mut j = j;
        j.truncate(top + 1);
        Ok(Self { x, j, y })
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    /// Highest order with a derivative available.
    pub fn max_order(&self) -> usize {
        self.j.len() - 2
    }

    pub fn j(&self, m: i32) -> f64 {
        reflect(m, self.j[m.unsigned_abs() as usize])
    }

    pub fn y(&self, m: i32) -> f64 {
        reflect(m, self.y[m.unsigned_abs() as usize])
    }

    pub fn h1(&self, m: i32) -> Complex64 {
        Complex64::new(self.j(m), self.y(m))
    }

    /// `J'_m(x) = (J_{m-1} - J_{m+1}) / 2`.
    pub fn dj(&self, m: i32) -> f64 {
        0.5 * (self.j(m - 1) - self.j(m + 1))
    }

    pub fn dy(&self, m: i32) -> f64 {
        0.5 * (self.y(m - 1) - self.y(m + 1))
    }

    pub fn dh1(&self, m: i32) -> Complex64 {
        Complex64::new(self.dj(m), self.dy(m))
    }
}

fn reflect(m: i32, v: f64) -> f64 {
    if m < 0 && m % 2 != 0 {
        -v
    } else {
        v
    }
}

/// `J_0..=J_top` from the ascending series
/// `J_n(x) = sum_k (-1)^k (x/2)^{2k+n} / (k! (n+k)!)`.
fn series_j(top: usize, x: f64) -> Vec<f64> {
    let half = 0.5 * x;
    let q = -half * half;
    let mut out = Vec::with_capacity(top + 1);
    // (x/2)^n / n!
    let mut lead = 1.0;
    for n in 0..=top {
        if n > 0 {
            lead *= half / n as f64;
        }
        let mut term = lead;
        let mut sum = term;
        for k in 1..200 {
            term *= q / (k as f64 * (n + k) as f64);
            sum += term;
            if term.abs() <= 1e-17 * sum.abs() {
                break;
            }
        }
        out.push(sum);
    }
    out
}

/// Miller's backward recurrence normalized by `J_0 + 2 sum J_{2k} = 1`.
///
/// Returns values for every order from 0 up to the starting index, so the
/// Neumann sums for `Y` see all non-negligible terms.
fn miller_j(top: usize, x: f64) -> Vec<f64> {
    let reach = (top as f64).max(x);
    let mut start = (reach + 25.0 + (50.0 * reach).sqrt()).ceil() as usize;
    start += start % 2;
    let mut vals = vec![0.0; start + 2];
    vals[start + 1] = 0.0;
    vals[start] = 1e-300;
    for k in (1..=start).rev() {
        let next = 2.0 * k as f64 / x * vals[k] - vals[k + 1];
        vals[k - 1] = next;
        if next.abs() > 1e200 {
            for v in vals[k - 1..].iter_mut() {
                *v *= 1e-200;
            }
        }
    }
    let mut norm = vals[0];
    for k in (2..=start).step_by(2) {
        norm += 2.0 * vals[k];
    }
    vals.truncate(start + 1);
    for v in vals.iter_mut() {
        *v /= norm;
    }
    vals
}

/// Neumann series
/// `Y_0 = (2/π)[(ln(x/2)+γ) J_0 - 2 sum_{k>=1} (-1)^k J_{2k}/k]` and
/// `Y_1 = (2/π)[(ln(x/2)+γ-1) J_1 - J_0/x - 4 sum_{k odd>=3} (-1)^{(k-1)/2} k/(k²-1) J_k]`.
fn neumann_y01(j: &[f64], x: f64) -> (f64, f64) {
    let ec = (0.5 * x).ln() + EULER_GAMMA;
    let mut su = 0.0;
    let mut sv = 0.0;
    // Sum from the tail so small terms accumulate first.
    for k in (2..j.len()).rev() {
        let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        if k % 2 == 0 {
            su += sign * j[k] / k as f64;
        } else {
            let kf = k as f64;
            sv += sign * kf / (kf * kf - 1.0) * j[k];
        }
    }
    let y0 = FRAC_2_PI * (ec * j[0] - 4.0 * su);
    let y1 = FRAC_2_PI * ((ec - 1.0) * j[1] - j[0] / x - 4.0 * sv);
    (y0, y1)
}

/// `2 / (π x)`, the Wronskian `J_{m+1} Y_m - J_m Y_{m+1}`.
pub fn wronskian(x: f64) -> f64 {
    2.0 / (PI * x)
}
