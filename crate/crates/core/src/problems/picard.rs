//! Discrete Picard condition diagnostics from a dense SVD.
//!
//! The noisy coefficients `|uᵢᵀb|` follow the data model `ρ₀σᵢ^(1+β)` until
//! the white-noise floor `m^(-1/2)‖e‖` takes over at the transition index `k*`.
//! The fit recovers `β`, `ρ₀` and the singular-value decay law
//! (`ζρ^(-i)` or `ζi^(-α)`) from the leading `k*` terms.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::ProblemInstance;
use crate::error::{Error, Result};
use crate::operator::LinearOperator;

/// Guard factor applied to the noise floor when locating `k*`.
pub const TRANSITION_FACTOR: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecayType {
    /// `σᵢ = ζρ^(-i)`, `ρ > 1`.
    Severe,
    /// `σᵢ = ζi^(-α)`, `α > 1`.
    Moderate,
    /// `σᵢ = ζi^(-α)`, `½ < α ≤ 1`.
    Mild,
}

impl DecayType {
    pub fn name(self) -> &'static str {
        match self {
            DecayType::Severe => "severe",
            DecayType::Moderate => "moderate",
            DecayType::Mild => "mild",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PicardDiagnostics {
    /// Positive singular values, non-increasing.
    pub sigma: Vec<f64>,
    /// `|uᵢᵀb_ex|`
    pub coef_exact: Vec<f64>,
    /// `|uᵢᵀb|`
    pub coef_noisy: Vec<f64>,
    /// `TRANSITION_FACTOR · m^(-1/2) · ‖e‖`
    pub noise_floor: f64,
    pub k_star: usize,
    pub beta_model: f64,
    pub rho0: f64,
    pub decay_type: DecayType,
    /// `ρ` for severe decay, `α` otherwise.
    pub decay_param: f64,
    pub zeta: f64,
    /// False when fewer than three coefficients precede the noise floor.
    pub reliable: bool,
}

/// Least-squares line `y ≈ a + s·x`; returns `(a, s, residual sum of squares)`.
fn fit_line(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let icpt = my - slope * mx;
    let ssr = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - icpt - slope * a).powi(2))
        .sum();
    (icpt, slope, ssr)
}

pub fn picard_diagnostics(inst: &ProblemInstance) -> Result<PicardDiagnostics> {
    let a = inst.operator().to_dense();
    let m = a.nrows();
    let svd = a
        .try_svd(true, false, f64::EPSILON, 0)
        .ok_or_else(|| Error::Svd("dense SVD did not converge".to_string()))?;
    let u = svd
        .u
        .ok_or_else(|| Error::Svd("left singular vectors missing".to_string()))?;
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    // Exactly singular operators (heat at large n) contribute zero singular values.
    order.retain(|&i| svd.singular_values[i] > 0.0);
    if order.is_empty() {
        return Err(Error::Svd("operator is zero".to_string()));
    }

    let b_ex = DVector::from_column_slice(inst.b_ex());
    let b = DVector::from_column_slice(inst.b());
    let mut sigma = Vec::with_capacity(order.len());
    let mut coef_exact = Vec::with_capacity(order.len());
    let mut coef_noisy = Vec::with_capacity(order.len());
    for &i in &order {
        let ui = u.column(i);
        sigma.push(svd.singular_values[i]);
        coef_exact.push(ui.dot(&b_ex).abs());
        coef_noisy.push(ui.dot(&b).abs());
    }

    let noise_floor = TRANSITION_FACTOR * inst.noise_norm() / (m as f64).sqrt();
    let crossing = coef_noisy.iter().take_while(|&&c| c > noise_floor).count();
    let k_star = crossing.max(1);
    let reliable = crossing >= 3;

    let lead = k_star.max(2).min(sigma.len());
    let (mut lx, mut ly) = (Vec::new(), Vec::new());
    for i in 0..lead {
        if coef_exact[i] > 0.0 {
            lx.push(sigma[i].ln());
            ly.push(coef_exact[i].ln());
        }
    }
    let (beta_model, rho0) = if lx.len() >= 2 {
        let (icpt, slope, _) = fit_line(&lx, &ly);
        (slope - 1.0, icpt.exp())
    } else {
        (f64::NAN, f64::NAN)
    };

    let idx: Vec<f64> = (1..=lead).map(|i| i as f64).collect();
    let log_idx: Vec<f64> = idx.iter().map(|i| i.ln()).collect();
    let log_sigma: Vec<f64> = sigma[..lead].iter().map(|s| s.ln()).collect();
    let (a_sev, s_sev, r_sev) = fit_line(&idx, &log_sigma);
    let (a_pow, s_pow, r_pow) = fit_line(&log_idx, &log_sigma);
    let (decay_type, decay_param, zeta) = if r_sev <= r_pow {
        (DecayType::Severe, (-s_sev).exp(), a_sev.exp())
    } else {
        let alpha = -s_pow;
        let kind = if alpha > 1.0 {
            DecayType::Moderate
        } else {
            DecayType::Mild
        };
        (kind, alpha, a_pow.exp())
    };

    Ok(PicardDiagnostics {
        sigma,
        coef_exact,
        coef_noisy,
        noise_floor,
        k_star,
        beta_model,
        rho0,
        decay_type,
        decay_param,
        zeta,
        reliable,
    })
}
