//! Precision advisor for the bidiagonalization.
//!
//! Given the data model `|uᵢᵀb_ex| = ρ₀σᵢ^(1+β)` and the singular-value
//! decay law, the best regularized solution is unaffected by rounding as long
//! as the roundoff unit `u` of the bidiagonalization satisfies
//!
//! ```text
//! u ≪ ϱ·(m^(-1/2)·ε)^((2+β)/(1+β))
//! ϱ = min{1, ρ - 1}                   (σᵢ = ζρ^(-i))
//! ϱ = min{1, ((k*+1)/k*)^α - 1}       (σᵢ = ζi^(-α))
//! ```
//!
//! Noise is normalized, `ε = ‖e‖/‖b_ex‖`, so the resolution limit reads
//! `η_res = (m^(-1/2)·ε)^(β/(1+β))`. The accuracy floor `C₁·ε^(β/(1+β))` is
//! reported with `C₁ = 1`; the true constant is moderate but unknown.
//! The `≪` becomes a safety factor (default 10) on the recommended format.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::precision::Precision;
use crate::problems::{DecayType, PicardDiagnostics};

pub const DEFAULT_SAFETY: f64 = 10.0;

/// Constant of the accuracy floor.
pub const C1: f64 = 1.0;

/// Below this `ϱ` the bound is flagged as possibly too pessimistic.
pub const SLOW_DECAY_VARRHO: f64 = 0.05;

fn check_common(eps: f64, m: usize, beta: f64) -> Result<()> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidNoiseLevel(eps));
    }
    if m == 0 {
        return Err(Error::InvalidParameter("m must be positive".to_string()));
    }
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "beta must be positive, got {beta}"
        )));
    }
    Ok(())
}

fn scaled_noise(eps: f64, m: usize) -> f64 {
    eps / (m as f64).sqrt()
}

/// `η_res = (m^(-1/2)·ε)^(β/(1+β))`
pub fn resolution_limit(eps: f64, m: usize, beta: f64) -> f64 {
    scaled_noise(eps, m).powf(beta / (1.0 + beta))
}

/// `C₁·ε^(β/(1+β))`
pub fn accuracy_floor(eps: f64, beta: f64) -> f64 {
    C1 * eps.powf(beta / (1.0 + beta))
}

/// Looser bound `min{ε, (m^(-1/2)·ε)^(1/(1+β))}`.
pub fn sanity_bound(eps: f64, m: usize, beta: f64) -> f64 {
    eps.min(scaled_noise(eps, m).powf(1.0 / (1.0 + beta)))
}

/// Gap factor `ϱ` of the decay model.
pub fn varrho(decay_type: DecayType, decay_param: f64, k_star: usize) -> Result<f64> {
    match decay_type {
        DecayType::Severe => {
            if !(decay_param > 1.0 && decay_param.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "severe decay needs rho > 1, got {decay_param}"
                )));
            }
            Ok((decay_param - 1.0).min(1.0))
        }
        DecayType::Moderate | DecayType::Mild => {
            if !(decay_param > 0.0 && decay_param.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "polynomial decay needs alpha > 0, got {decay_param}"
                )));
            }
            if k_star == 0 {
                return Err(Error::InvalidParameter(
                    "k_star must be at least 1".to_string(),
                ));
            }
            let k = k_star as f64;
            Ok((((k + 1.0) / k).powf(decay_param) - 1.0).min(1.0))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UBound {
    pub varrho: f64,
    pub u_bound: f64,
    pub sanity: f64,
}

/// `ϱ·(m^(-1/2)·ε)^((2+β)/(1+β))` with its ingredients.
pub fn u_upper_bound(
    eps: f64,
    m: usize,
    beta: f64,
    decay_type: DecayType,
    decay_param: f64,
    k_star: usize,
) -> Result<UBound> {
    check_common(eps, m, beta)?;
    let varrho = varrho(decay_type, decay_param, k_star)?;
    Ok(UBound {
        varrho,
        u_bound: varrho * scaled_noise(eps, m).powf((2.0 + beta) / (1.0 + beta)),
        sanity: sanity_bound(eps, m, beta),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Recommendation {
    pub spec: Precision,
    /// `u_bound / spec.unit()`
    pub margin: f64,
    /// No candidate met the safety factor; `spec` falls back to binary64.
    pub marginal: bool,
}

/// Cheapest of binary32 and binary64 with `unit·safety ≤ u_bound`.
pub fn recommend(u_bound: f64, safety: f64) -> Recommendation {
    recommend_from(u_bound, safety, &[Precision::Native32, Precision::Native64])
}

/// Cheapest candidate (fewest significand bits) with `unit·safety ≤ u_bound`.
pub fn recommend_from(u_bound: f64, safety: f64, candidates: &[Precision]) -> Recommendation {
    let mut sorted = candidates.to_vec();
    sorted.sort_by_key(|p| p.significand_bits());
    match sorted.iter().find(|p| p.unit() * safety <= u_bound) {
        Some(&spec) => Recommendation {
            spec,
            margin: u_bound / spec.unit(),
            marginal: false,
        },
        None => Recommendation {
            spec: Precision::Native64,
            margin: u_bound / Precision::Native64.unit(),
            marginal: true,
        },
    }
}

/// Data-model parameters, fitted or supplied by the user.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub beta: f64,
    pub rho0: f64,
    pub decay_type: DecayType,
    pub decay_param: f64,
    pub k_star: usize,
    pub reliable: bool,
}

impl From<&PicardDiagnostics> for ModelParams {
    fn from(d: &PicardDiagnostics) -> Self {
        ModelParams {
            beta: d.beta_model,
            rho0: d.rho0,
            decay_type: d.decay_type,
            decay_param: d.decay_param,
            k_star: d.k_star,
            reliable: d.reliable,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdvisorReport {
    pub eps: f64,
    pub m: usize,
    pub beta_model: f64,
    pub rho0: f64,
    pub decay_type: DecayType,
    pub decay_param: f64,
    pub k_star: usize,
    pub eta_res: f64,
    pub floor: f64,
    pub c1: f64,
    pub varrho: f64,
    pub u_bound: f64,
    pub sanity_bound: f64,
    pub safety: f64,
    pub recommended: Precision,
    pub margin: f64,
    pub warnings: Vec<String>,
}

/// Full report for a noise level, row count and model.
pub fn advise(eps: f64, m: usize, model: &ModelParams, safety: f64) -> Result<AdvisorReport> {
    if !(safety >= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "safety must be >= 1, got {safety}"
        )));
    }
    let ub = u_upper_bound(
        eps,
        m,
        model.beta,
        model.decay_type,
        model.decay_param,
        model.k_star,
    )?;
    let rec = recommend(ub.u_bound, safety);
    let mut warnings = Vec::new();
    if rec.marginal {
        warnings.push(format!(
            "no candidate meets the bound with safety {safety}; even binary64 may be marginal"
        ));
    }
    if !model.reliable {
        warnings.push(
            "fewer than three coefficients above the noise floor; fit is unreliable".to_string(),
        );
    }
    if model.decay_type != DecayType::Severe && ub.varrho < SLOW_DECAY_VARRHO {
        warnings.push(format!(
            "slowly decaying spectrum (varrho = {:.3e}); the bound may be too small",
            ub.varrho
        ));
    }
    warnings.push(
        "singular value gaps are assumed large relative to the rounding perturbation; not verified"
            .to_string(),
    );
    Ok(AdvisorReport {
        eps,
        m,
        beta_model: model.beta,
        rho0: model.rho0,
        decay_type: model.decay_type,
        decay_param: model.decay_param,
        k_star: model.k_star,
        eta_res: resolution_limit(eps, m, model.beta),
        floor: accuracy_floor(eps, model.beta),
        c1: C1,
        varrho: ub.varrho,
        u_bound: ub.u_bound,
        sanity_bound: ub.sanity,
        safety,
        recommended: rec.spec,
        margin: rec.margin,
        warnings,
    })
}

/// [`advise`] with parameters fitted by the Picard diagnostics.
pub fn advise_from_diagnostics(
    eps: f64,
    m: usize,
    diag: &PicardDiagnostics,
    safety: f64,
) -> Result<AdvisorReport> {
    advise(eps, m, &ModelParams::from(diag), safety)
}

impl fmt::Display for AdvisorReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let param = match self.decay_type {
            DecayType::Severe => "rho",
            _ => "alpha",
        };
        writeln!(f, "precision advice")?;
        writeln!(f, "  noise level eps        {:.3e}", self.eps)?;
        writeln!(f, "  rows m                 {}", self.m)?;
        writeln!(f, "  model beta             {:.4}", self.beta_model)?;
        writeln!(f, "  model rho0             {:.4e}", self.rho0)?;
        writeln!(
            f,
            "  decay                  {} ({param} = {:.4})",
            self.decay_type.name(),
            self.decay_param
        )?;
        writeln!(f, "  transition k*          {}", self.k_star)?;
        writeln!(f, "  resolution limit       {:.3e}", self.eta_res)?;
        writeln!(
            f,
            "  accuracy floor         {:.3e} (C1 = {})",
            self.floor, self.c1
        )?;
        writeln!(f, "  varrho                 {:.4}", self.varrho)?;
        writeln!(f, "  bound on u             {:.3e}", self.u_bound)?;
        writeln!(f, "  looser bound           {:.3e}", self.sanity_bound)?;
        writeln!(f, "  safety factor          {}", self.safety)?;
        writeln!(
            f,
            "  recommended            {} (u = {:.3e}, margin {:.3e})",
            self.recommended,
            self.recommended.unit(),
            self.margin
        )?;
        for w in &self.warnings {
            writeln!(f, "  warning: {w}")?;
        }
        Ok(())
    }
}
