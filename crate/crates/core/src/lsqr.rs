//! Mixed-precision LSQR.
//!
//! Each iteration runs one bidiagonalization step in `spec_bidiag`, one
//! Givens rotation in binary64, and the solution update in `spec_update`:
//!
//! ```text
//! ρ_i = (ρ̄_i² + β_{i+1}²)^½   c_i = ρ̄_i/ρ_i   s_i = β_{i+1}/ρ_i
//! θ_{i+1} = s_i·α_{i+1}        ρ̄_{i+1} = -c_i·α_{i+1}
//! φ_i = c_i·φ̄_i               φ̄_{i+1} = s_i·φ̄_i
//! x_i = x_{i-1} + (φ_i/ρ_i)·w_i
//! w_{i+1} = q_{i+1} - (θ_{i+1}/ρ_i)·w_i
//! ```
//!
//! `φ̄_{i+1}` estimates the residual norm `‖b - A·x_i‖`. The two update ratios
//! are formed in binary64 and rounded once into `spec_update`.

use std::time::Instant;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::bidiag::{BidiagState, Termination};
use crate::error::{Error, Result};
use crate::operator::LinearOperator;
use crate::precision::{axpy_in_place, exact, Precision};
use crate::problems::ProblemInstance;
use crate::stopping::{self, StopDecision, StopRule, DEFAULT_TAU};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GivensState {
    pub rho_bar: f64,
    pub phi_bar: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation {
    pub rho: f64,
    pub c: f64,
    pub s: f64,
    pub theta_next: f64,
    pub phi: f64,
}

impl GivensState {
    /// `ρ̄₁ = α₁`, `φ̄₁ = β₁`.
    pub fn new(alpha1: f64, beta1: f64) -> Self {
        GivensState {
            rho_bar: alpha1,
            phi_bar: beta1,
        }
    }
}

/// One rotation, in binary64. Fails when `ρ̄_i = β_{i+1} = 0`.
pub fn givens_step(g: &mut GivensState, beta_next: f64, alpha_next: f64) -> Result<Rotation> {
    let rho = (g.rho_bar * g.rho_bar + beta_next * beta_next).sqrt();
    if rho == 0.0 {
        return Err(Error::DegenerateRotation);
    }
    let c = g.rho_bar / rho;
    let s = beta_next / rho;
    let theta_next = s * alpha_next;
    let phi = c * g.phi_bar;
    g.rho_bar = -c * alpha_next;
    g.phi_bar *= s;
    Ok(Rotation {
        rho,
        c,
        s,
        theta_next,
        phi,
    })
}

/// `x` and the search direction `w`, stored in `spec`.
#[derive(Debug, Clone)]
pub struct UpdateState {
    pub spec: Precision,
    pub x: Vec<f64>,
    pub w: Vec<f64>,
}

impl UpdateState {
    /// `x₀ = 0`, `w₁ = q₁`.
    pub fn new(q1: &[f64], spec: Precision) -> Self {
        UpdateState {
            spec,
            x: vec![0.0; q1.len()],
            w: spec.round_vec(q1),
        }
    }

    /// Advances `x` and, when `q_next` is given, `w`.
    pub fn step(&mut self, rot: &Rotation, q_next: Option<&[f64]>) {
        let spec = self.spec;
        let a = spec.round(rot.phi / rot.rho);
        axpy_in_place(a, &self.w, &mut self.x, spec);
        if let Some(q) = q_next {
            let b = spec.round(rot.theta_next / rot.rho);
            let mut w = spec.round_vec(q);
            axpy_in_place(-b, &self.w, &mut w, spec);
            self.w = w;
        }
    }
}

/// 2-norm condition number of the unit upper bidiagonal matrix with the
/// given superdiagonal `θ_{i+1}/ρ_i`, `i = 1..k-1`.
pub fn kappa_rhat(superdiag: &[f64]) -> f64 {
    let k = superdiag.len() + 1;
    if k == 1 {
        return 1.0;
    }
    let r = DMatrix::from_fn(k, k, |i, j| {
        if i == j {
            1.0
        } else if j == i + 1 {
            superdiag[i]
        } else {
            0.0
        }
    });
    let sv = r.singular_values();
    sv.max() / sv.min()
}

/// Forward-error bound for the mixed-precision update:
/// `√k·(1 + (2 + 2√k + k)·κ)·u`.
pub fn update_error_bound(k: usize, kappa: f64, unit: f64) -> f64 {
    let sk = (k as f64).sqrt();
    sk * (1.0 + (2.0 + 2.0 * sk + k as f64) * kappa) * unit
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunLength {
    /// Stop as soon as every requested rule has committed.
    FirstStop,
    /// Continue past each rule's `k1` to `overshoot_target(k1)`.
    Overshoot,
    /// Always run `max_iter` iterations.
    Full,
}

/// `max(⌈1.5·k1⌉, k1 + 20)`.
pub fn overshoot_target(k1: usize) -> usize {
    (k1 * 3).div_ceil(2).max(k1 + 20)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub spec_bidiag: Precision,
    pub spec_update: Precision,
    pub reorth: bool,
    pub max_iter: usize,
    pub rules: Vec<StopRule>,
    pub tau: f64,
    pub run_length: RunLength,
    /// Keep every iterate `x_k` in the history.
    pub keep_iterates: bool,
    /// Record `κ(R̂_k)` each iteration (one small dense SVD per step).
    pub track_kappa: bool,
    /// Record `μ`, `ν` each iteration.
    pub track_orthogonality: bool,
}

impl SolverConfig {
    pub fn new(spec_bidiag: Precision, spec_update: Precision) -> Self {
        SolverConfig {
            spec_bidiag,
            spec_update,
            reorth: true,
            max_iter: 200,
            rules: vec![StopRule::Discrepancy],
            tau: DEFAULT_TAU,
            run_length: RunLength::Overshoot,
            keep_iterates: false,
            track_kappa: true,
            track_orthogonality: true,
        }
    }

    pub fn uniform(spec: Precision) -> Self {
        Self::new(spec, spec)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub k: usize,
    /// `φ̄_{k+1}`
    pub phi_bar: f64,
    /// `‖x_k‖` in binary64.
    pub norm_x: f64,
    /// `‖x_k - x_ex‖ / ‖x_ex‖` when `x_ex` is known.
    pub re: Option<f64>,
    pub kappa_rhat: Option<f64>,
    pub mu: f64,
    pub nu: f64,
    pub rho: f64,
    pub theta_next: f64,
    pub phi: f64,
    pub t_bidiag: f64,
    pub t_givens: f64,
    pub t_update: f64,
}

#[derive(Debug, Clone)]
pub struct SolverHistory {
    pub config: SolverConfig,
    pub records: Vec<IterationRecord>,
    pub decisions: Vec<StopDecision>,
    /// Iterate selected by each rule that produced a decision.
    pub solutions: Vec<(StopRule, Vec<f64>)>,
    /// `x₁..x_k` when `keep_iterates` is set.
    pub iterates: Vec<Vec<f64>>,
    pub final_x: Vec<f64>,
    pub termination: Option<Termination>,
    /// Message of the error that ended the recurrence early.
    pub breakdown: Option<String>,
    pub norm_b: f64,
    pub norm_e: Option<f64>,
}

impl SolverHistory {
    pub fn iterations(&self) -> usize {
        self.records.len()
    }

    pub fn decision(&self, rule: StopRule) -> Option<&StopDecision> {
        self.decisions.iter().find(|d| d.rule == rule)
    }

    pub fn solution(&self, rule: StopRule) -> Option<&[f64]> {
        self.solutions
            .iter()
            .find(|(r, _)| *r == rule)
            .map(|(_, x)| x.as_slice())
    }

    pub fn relative_errors(&self) -> Option<Vec<f64>> {
        self.records.iter().map(|r| r.re).collect()
    }

    pub fn phi_bars(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.phi_bar).collect()
    }

    pub fn norms_x(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.norm_x).collect()
    }
}

struct RuleTracker {
    rule: StopRule,
    decision: Option<StopDecision>,
}

/// Runs LSQR on an instance; `x_ex` and `‖e‖` come from the instance.
pub fn solve(inst: &ProblemInstance, cfg: &SolverConfig) -> Result<SolverHistory> {
    solve_system(
        inst.operator(),
        inst.b(),
        Some(inst.x_ex()),
        Some(inst.noise_norm()),
        cfg,
    )
}

/// Runs LSQR on `(A, b)`.
///
/// Without `norm_e` the discrepancy rule is unavailable; without `x_ex` the
/// optimal rule is skipped and no relative errors are recorded. Breakdown of
/// the recurrence ends the run with the history gathered so far.
pub fn solve_system(
    op: &dyn LinearOperator,
    b: &[f64],
    x_ex: Option<&[f64]>,
    norm_e: Option<f64>,
    cfg: &SolverConfig,
) -> Result<SolverHistory> {
    if cfg.max_iter == 0 {
        return Err(Error::InvalidParameter(
            "max_iter must be positive".to_string(),
        ));
    }
    if let Some(x) = x_ex {
        if x.len() != op.ncols() {
            return Err(Error::DimensionMismatch {
                expected: op.ncols(),
                got: x.len(),
            });
        }
    }
    let mut trackers: Vec<RuleTracker> = Vec::new();
    for &rule in &cfg.rules {
        if trackers.iter().any(|t| t.rule == rule) {
            continue;
        }
        match rule {
            StopRule::Discrepancy => {
                stopping::dp_check(0.0, norm_e.unwrap_or(f64::NAN), cfg.tau)?;
            }
            StopRule::Optimal if x_ex.is_none() => {
                return Err(Error::RuleUnavailable(
                    "optimal rule needs the exact solution".to_string(),
                ));
            }
            _ => {}
        }
        trackers.push(RuleTracker {
            rule,
            decision: None,
        });
    }
    let store_all = cfg.keep_iterates || trackers.iter().any(|t| t.rule == StopRule::LCurve);
    let norm_x_ex = x_ex.map(exact::norm);

    let t0 = Instant::now();
    let mut bd = BidiagState::init(op, b, cfg.spec_bidiag, cfg.reorth)?
        .with_orthogonality_tracking(cfg.track_orthogonality);
    let init_time = t0.elapsed().as_secs_f64();
    let norm_b = exact::norm(b);
    let mut hist = SolverHistory {
        config: cfg.clone(),
        records: Vec::new(),
        decisions: Vec::new(),
        solutions: Vec::new(),
        iterates: Vec::new(),
        final_x: vec![0.0; op.ncols()],
        termination: bd.terminated(),
        breakdown: None,
        norm_b,
        norm_e,
    };
    if bd.terminated().is_some() {
        return Ok(hist);
    }

    let mut givens = GivensState::new(bd.alpha()[0], bd.beta()[0]);
    let mut upd = UpdateState::new(&bd.q_vectors()[0], cfg.spec_update);
    let mut superdiag: Vec<f64> = Vec::new();
    let mut dp_snapshot: Option<Vec<f64>> = None;
    let mut best: Option<(f64, Vec<f64>)> = None;

    for k in 1..=cfg.max_iter {
        let t = Instant::now();
        bd.step()?;
        let mut t_bidiag = t.elapsed().as_secs_f64();
        if k == 1 {
            t_bidiag += init_time;
        }
        let beta_next = bd.beta()[k];
        let alpha_next = bd.alpha().get(k).copied().unwrap_or(0.0);

        let t = Instant::now();
        let rot = match givens_step(&mut givens, beta_next, alpha_next) {
            Ok(r) => r,
            Err(e) => {
                hist.breakdown = Some(e.to_string());
                break;
            }
        };
        let t_givens = t.elapsed().as_secs_f64();

        let t = Instant::now();
        let q_next = bd.q_vectors().get(k).map(Vec::as_slice);
        upd.step(&rot, q_next);
        let t_update = t.elapsed().as_secs_f64();

        let kappa = if cfg.track_kappa {
            Some(kappa_rhat(&superdiag))
        } else {
            None
        };
        superdiag.push(rot.theta_next / rot.rho);

        let re = x_ex.map(|xe| exact::dist(&upd.x, xe) / norm_x_ex.unwrap());
        hist.records.push(IterationRecord {
            k,
            phi_bar: givens.phi_bar,
            norm_x: exact::norm(&upd.x),
            re,
            kappa_rhat: kappa,
            mu: bd.mu(),
            nu: bd.nu(),
            rho: rot.rho,
            theta_next: rot.theta_next,
            phi: rot.phi,
            t_bidiag,
            t_givens,
            t_update,
        });
        if store_all {
            hist.iterates.push(upd.x.clone());
        }
        if let Some(r) = re {
            if best.as_ref().is_none_or(|(b, _)| r < *b) {
                best = Some((r, upd.x.clone()));
            }
        }

        for tr in trackers.iter_mut().filter(|t| t.decision.is_none()) {
            match tr.rule {
                StopRule::Discrepancy => {
                    if stopping::dp_check(givens.phi_bar, norm_e.unwrap(), cfg.tau)? {
                        tr.decision = Some(StopDecision {
                            rule: tr.rule,
                            k1: k,
                            fired_at: k,
                            tau: Some(cfg.tau),
                        });
                        dp_snapshot = Some(upd.x.clone());
                    }
                }
                StopRule::LCurve => {
                    if let Ok(c) = stopping::lcurve_corner(&hist.phi_bars(), &hist.norms_x()) {
                        if k >= overshoot_target(c) {
                            tr.decision = Some(StopDecision {
                                rule: tr.rule,
                                k1: c,
                                fired_at: k,
                                tau: None,
                            });
                        }
                    }
                }
                StopRule::Optimal => {
                    let res = hist.relative_errors().unwrap_or_default();
                    if let Some(c) = stopping::oracle_optimal(&res) {
                        if k >= overshoot_target(c) {
                            tr.decision = Some(StopDecision {
                                rule: tr.rule,
                                k1: c,
                                fired_at: k,
                                tau: None,
                            });
                        }
                    }
                }
            }
        }

        if bd.terminated().is_some() {
            break;
        }
        let all_decided = !trackers.is_empty() && trackers.iter().all(|t| t.decision.is_some());
        let done = match cfg.run_length {
            RunLength::Full => false,
            RunLength::FirstStop => all_decided,
            RunLength::Overshoot => {
                all_decided
                    && trackers
                        .iter()
                        .all(|t| k >= overshoot_target(t.decision.unwrap().k1))
            }
        };
        if done {
            break;
        }
    }
    hist.termination = bd.terminated();
    let last = hist.records.len();

    for tr in &mut trackers {
        match tr.rule {
            StopRule::LCurve if tr.decision.is_none() => {
                if let Ok(c) = stopping::lcurve_corner(&hist.phi_bars(), &hist.norms_x()) {
                    tr.decision = Some(StopDecision {
                        rule: tr.rule,
                        k1: c,
                        fired_at: last,
                        tau: None,
                    });
                }
            }
            StopRule::Optimal => {
                // The oracle always looks at the whole run.
                let res = hist.relative_errors().unwrap_or_default();
                if let Some(c) = stopping::oracle_optimal(&res) {
                    let fired_at = tr.decision.map_or(last, |d| d.fired_at);
                    tr.decision = Some(StopDecision {
                        rule: tr.rule,
                        k1: c,
                        fired_at,
                        tau: None,
                    });
                }
            }
            _ => {}
        }
        if let Some(d) = tr.decision {
            let x = match tr.rule {
                StopRule::Discrepancy => dp_snapshot.clone(),
                StopRule::LCurve => hist.iterates.get(d.k1 - 1).cloned(),
                StopRule::Optimal => best.as_ref().map(|(_, x)| x.clone()),
            };
            hist.decisions.push(d);
            if let Some(x) = x {
                hist.solutions.push((tr.rule, x));
            }
        }
    }
    if !cfg.keep_iterates {
        hist.iterates.clear();
    }
    hist.final_x = upd.x;
    Ok(hist)
}
