//! Discretizations of the classical 1-D test problems and the 2-D blur.
//!
//! 1-D problems follow the usual Regularization Tools constructions:
//!
//! * `shaw`: Shaw's 1-D image restoration kernel
//!   `K(s,t) = (cos s + cos t)²·(sin u / u)²`, `u = π(sin s + sin t)`, on
//!   `[-π/2, π/2]²`, midpoint quadrature with `h = π/n`. Severely ill-posed.
//! * `deriv2`: Green's function of the second derivative,
//!   `K(s,t) = s(t-1)` for `s < t` and `t(s-1)` otherwise, Galerkin with box
//!   functions on `[0,1]`. Exact solution `f(t) = t`. Moderately ill-posed.
//! * `gravity`: vertical gravity surveying,
//!   `K(s,t) = d·(d² + (s-t)²)^(-3/2)` with `d = 0.25`, midpoint quadrature on
//!   `[0,1]`. Exact solution `sin(πt) + ½sin(2πt)`. Severely ill-posed.
//! * `heat`: inverse heat equation (Volterra, `κ = 1`), lower-triangular
//!   Toeplitz from midpoint quadrature. Moderately ill-posed.
//!
//! `blur2d` convolves a synthetic `N × N` test image with a Gaussian or disk
//! PSF under zero boundary conditions.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{BlurOperator, DenseMatrix, Operator};

/// PSF choice for `blur2d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "psf", rename_all = "snake_case")]
pub enum BlurParams {
    /// Isotropic Gaussian, truncated at `3σ`.
    Gaussian { sigma: f64 },
    /// Uniform disk (out-of-focus blur).
    Disk { radius: f64 },
}

impl BlurParams {
    /// Medium Gaussian blur used for the speckle-like preset: `σ = N/32`.
    pub fn speckle(side: usize) -> Self {
        BlurParams::Gaussian {
            sigma: side as f64 / 32.0,
        }
    }

    /// Severe defocus used for the defocus preset: radius `N/16`.
    pub fn defocus(side: usize) -> Self {
        BlurParams::Disk {
            radius: side as f64 / 16.0,
        }
    }

    /// Normalized PSF as `(values, rows, cols)`.
    pub fn psf(&self) -> Result<(Vec<f64>, usize, usize)> {
        let (half, weight): (usize, Box<dyn Fn(f64, f64) -> f64>) = match *self {
            BlurParams::Gaussian { sigma } => {
                if !(sigma > 0.0) {
                    return Err(Error::InvalidParameter(format!("Gaussian sigma {sigma}")));
                }
                let half = (3.0 * sigma).ceil() as usize;
                (
                    half,
                    Box::new(move |r, c| (-(r * r + c * c) / (2.0 * sigma * sigma)).exp()),
                )
            }
            BlurParams::Disk { radius } => {
                if !(radius >= 1.0) {
                    return Err(Error::InvalidParameter(format!("disk radius {radius}")));
                }
                let half = radius.floor() as usize;
                (
                    half,
                    Box::new(move |r, c| {
                        if r * r + c * c <= radius * radius {
                            1.0
                        } else {
                            0.0
                        }
                    }),
                )
            }
        };
        let side = 2 * half + 1;
        let mut h = Vec::with_capacity(side * side);
        for i in 0..side {
            for j in 0..side {
                h.push(weight(i as f64 - half as f64, j as f64 - half as f64));
            }
        }
        let total: f64 = h.iter().sum();
        h.iter_mut().for_each(|v| *v /= total);
        Ok((h, side, side))
    }
}

#[inline]
fn sinc(z: f64) -> f64 {
    if z.abs() < 1e-12 {
        1.0
    } else {
        z.sin() / z
    }
}

pub(crate) fn shaw(n: usize) -> (Operator, Vec<f64>) {
    let h = PI / n as f64;
    let s: Vec<f64> = (0..n).map(|i| -PI / 2.0 + (i as f64 + 0.5) * h).collect();
    let cos: Vec<f64> = s.iter().map(|v| v.cos()).collect();
    let psi: Vec<f64> = s.iter().map(|v| PI * v.sin()).collect();
    let a = DenseMatrix::from_fn(n, n, |i, j| {
        let v = (cos[i] + cos[j]) * sinc(psi[i] + psi[j]);
        h * v * v
    });
    let x = s
        .iter()
        .map(|&t| 2.0 * (-6.0 * (t - 0.8).powi(2)).exp() + (-2.0 * (t + 0.5).powi(2)).exp())
        .collect();
    (Operator::Dense(a), x)
}

pub(crate) fn deriv2(n: usize) -> (Operator, Vec<f64>) {
    let h = 1.0 / n as f64;
    let h2 = h * h;
    let h32 = h * h.sqrt();
    let a = DenseMatrix::from_fn(n, n, |i, j| {
        // 1-based indices as in the closed-form Galerkin entries.
        let (i, j) = ((i.max(j) + 1) as f64, (i.min(j) + 1) as f64);
        if i == j {
            h2 * ((i * i - i + 0.25) * h - (i - 2.0 / 3.0))
        } else {
            h2 * (j - 0.5) * ((i - 0.5) * h - 1.0)
        }
    });
    let x = (1..=n).map(|i| h32 * (i as f64 - 0.5)).collect();
    (Operator::Dense(a), x)
}

pub(crate) fn gravity(n: usize) -> (Operator, Vec<f64>) {
    let d = 0.25;
    let h = 1.0 / n as f64;
    let t: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) * h).collect();
    let a = DenseMatrix::from_fn(n, n, |i, j| {
        let diff = t[i] - t[j];
        h * d / (d * d + diff * diff).powf(1.5)
    });
    let x = t
        .iter()
        .map(|&t| (PI * t).sin() + 0.5 * (2.0 * PI * t).sin())
        .collect();
    (Operator::Dense(a), x)
}

pub(crate) fn heat(n: usize) -> (Operator, Vec<f64>) {
    let kappa = 1.0;
    let h = 1.0 / n as f64;
    let c = h / (2.0 * kappa * PI.sqrt());
    let d = 1.0 / (4.0 * kappa * kappa);
    let k: Vec<f64> = (0..n)
        .map(|i| {
            let t = (i as f64 + 0.5) * h;
            c * t.powf(-1.5) * (-d / t).exp()
        })
        .collect();
    let a = DenseMatrix::from_fn(n, n, |i, j| if i >= j { k[i - j] } else { 0.0 });
    let mut x = vec![0.0; n];
    for (i, xi) in x.iter_mut().enumerate().take(n / 2) {
        let ti = (i + 1) as f64 * 20.0 / n as f64;
        *xi = if ti < 2.0 {
            0.75 * ti * ti / 4.0
        } else if ti < 3.0 {
            0.75 + (ti - 2.0) * (3.0 - ti)
        } else {
            0.75 * (-(ti - 3.0) * 2.0).exp()
        };
    }
    (Operator::Dense(a), x)
}

/// Synthetic `side × side` test image with values in `[0, 1]`: a faint
/// smooth background, a filled ellipse, a bright bar and two small disks.
pub fn test_image(side: usize) -> Vec<f64> {
    let mut img = Vec::with_capacity(side * side);
    for r in 0..side {
        for c in 0..side {
            let y = (r as f64 + 0.5) / side as f64;
            let x = (c as f64 + 0.5) / side as f64;
            let mut v = 0.1 * (-((x - 0.5).powi(2) + (y - 0.5).powi(2)) / 0.08).exp();
            let (ex, ey) = ((x - 0.45) / 0.28, (y - 0.55) / 0.18);
            if ex * ex + ey * ey <= 1.0 {
                v += 0.5;
            }
            if (0.2..=0.8).contains(&x) && (0.18..=0.26).contains(&y) {
                v = 1.0;
            }
            for &(cx, cy, rad, val) in &[(0.78, 0.75, 0.06, 0.8), (0.22, 0.8, 0.04, 0.9)] {
                if (x - cx).powi(2) + (y - cy).powi(2) <= rad * rad {
                    v = val;
                }
            }
            img.push(v.min(1.0));
        }
    }
    img
}

pub(crate) fn blur2d(n: usize, params: Option<BlurParams>) -> Result<(Operator, Vec<f64>)> {
    let side = (n as f64).sqrt().round() as usize;
    if side * side != n {
        return Err(Error::InvalidSize(format!(
            "blur2d needs a perfect-square size, got {n}"
        )));
    }
    let params = params.unwrap_or_else(|| BlurParams::speckle(side));
    let (psf, pr, pc) = params.psf()?;
    let op = BlurOperator::new(side, side, pr, pc, psf)?;
    Ok((Operator::Blur(op), test_image(side)))
}
