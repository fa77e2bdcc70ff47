//! Stopping rules for semi-convergent iterations.
//!
//! * Discrepancy principle: the first `k` with `φ̄_{k+1} ≤ τ‖e‖`.
//! * L-curve: the corner of `(log φ̄_{k+1}, log ‖x_k‖)`, located by the
//!   largest positive three-point (Menger) curvature.
//! * Optimal oracle: the `k` minimizing the relative error, given `x_ex`.
//!
//! All iteration indices are 1-based.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_TAU: f64 = 1.001;

/// The L-curve rule refuses to guess from fewer points than this.
pub const MIN_LCURVE_POINTS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StopRule {
    #[serde(rename = "dp")]
    Discrepancy,
    #[serde(rename = "lcurve")]
    LCurve,
    #[serde(rename = "optimal")]
    Optimal,
}

impl StopRule {
    pub fn name(self) -> &'static str {
        match self {
            StopRule::Discrepancy => "dp",
            StopRule::LCurve => "lcurve",
            StopRule::Optimal => "optimal",
        }
    }
}

impl std::fmt::Display for StopRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for StopRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dp" | "discrepancy" => Ok(StopRule::Discrepancy),
            "lcurve" | "l-curve" => Ok(StopRule::LCurve),
            "optimal" | "oracle" => Ok(StopRule::Optimal),
            _ => Err(Error::InvalidParameter(format!(
                "unknown stopping rule '{s}'"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StopDecision {
    pub rule: StopRule,
    /// Selected iteration.
    pub k1: usize,
    /// Iteration at which the rule could first commit to `k1`.
    pub fired_at: usize,
    pub tau: Option<f64>,
}

fn check_tau(tau: f64) -> Result<()> {
    if tau > 1.0 && tau.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "tau must exceed 1, got {tau}"
        )))
    }
}

fn check_noise(norm_e: f64) -> Result<()> {
    if norm_e > 0.0 && norm_e.is_finite() {
        Ok(())
    } else {
        Err(Error::RuleUnavailable(format!(
            "discrepancy principle needs a positive noise norm, got {norm_e}"
        )))
    }
}

/// `φ̄_{k+1} ≤ τ‖e‖`
pub fn dp_check(phi_bar_next: f64, norm_e: f64, tau: f64) -> Result<bool> {
    check_tau(tau)?;
    check_noise(norm_e)?;
    Ok(phi_bar_next <= tau * norm_e)
}

/// First `k` satisfying the discrepancy principle; `phi_bar[i]` is `φ̄_{i+2}`,
/// the residual estimate after iteration `i+1`.
pub fn dp_first(phi_bar: &[f64], norm_e: f64, tau: f64) -> Result<Option<usize>> {
    check_tau(tau)?;
    check_noise(norm_e)?;
    Ok(phi_bar
        .iter()
        .position(|&r| r <= tau * norm_e)
        .map(|i| i + 1))
}

/// Locates the corner of an L-curve.
pub trait CornerDetector {
    /// `points[i] = (log residual, log solution norm)` at iteration `i+1`;
    /// returns the 1-based iteration of the corner.
    fn corner(&self, points: &[(f64, f64)]) -> Result<usize>;
}

/// Largest positive three-point curvature after discarding points that break
/// the monotone shape (residual decreasing, norm increasing).
#[derive(Debug, Clone, Copy, Default)]
pub struct MengerCorner;

/// Signed curvature of the circle through `a, b, c`, positive for a
/// clockwise turn.
pub fn menger_curvature(a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> f64 {
    let (dx1, dy1) = (b.0 - a.0, b.1 - a.1);
    let (dx2, dy2) = (c.0 - b.0, c.1 - b.1);
    let cross = dx1 * dy2 - dy1 * dx2;
    let d = dx1.hypot(dy1) * dx2.hypot(dy2) * (c.0 - a.0).hypot(c.1 - a.1);
    if d == 0.0 {
        0.0
    } else {
        -2.0 * cross / d
    }
}

impl CornerDetector for MengerCorner {
    fn corner(&self, points: &[(f64, f64)]) -> Result<usize> {
        if points.len() < MIN_LCURVE_POINTS {
            return Err(Error::NoCorner(format!(
                "{} points, need at least {MIN_LCURVE_POINTS}",
                points.len()
            )));
        }
        // A zero residual at exact termination maps to -inf; such points are dropped.
        let mut kept: Vec<usize> = Vec::new();
        for (i, p) in points.iter().enumerate() {
            if !(p.0.is_finite() && p.1.is_finite()) {
                continue;
            }
            match kept.last() {
                Some(&j) if !(p.0 < points[j].0 && p.1 > points[j].1) => {}
                _ => kept.push(i),
            }
        }
        let mut best: Option<(usize, f64)> = None;
        for w in kept.windows(3) {
            let kappa = menger_curvature(points[w[0]], points[w[1]], points[w[2]]);
            if kappa > 0.0 && best.is_none_or(|(_, b)| kappa > b) {
                best = Some((w[1], kappa));
            }
        }
        best.map(|(i, _)| i + 1)
            .ok_or_else(|| Error::NoCorner("no positive curvature".to_string()))
    }
}

/// L-curve corner from residual estimates and solution norms (natural logs).
pub fn lcurve_corner(phi_bar: &[f64], norm_x: &[f64]) -> Result<usize> {
    if phi_bar.len() != norm_x.len() {
        return Err(Error::DimensionMismatch {
            expected: phi_bar.len(),
            got: norm_x.len(),
        });
    }
    let pts: Vec<(f64, f64)> = phi_bar
        .iter()
        .zip(norm_x)
        .map(|(r, x)| (r.ln(), x.ln()))
        .collect();
    MengerCorner.corner(&pts)
}

/// `argmin_k RE_k`, ties to the smaller `k`; NaNs are ignored.
pub fn oracle_optimal(re: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &r) in re.iter().enumerate() {
        if r.is_nan() {
            continue;
        }
        if best.is_none_or(|(_, b)| r < b) {
            best = Some((i, r));
        }
    }
    best.map(|(i, _)| i + 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dp_examples() {
        assert!(dp_check(1.0, 1.0, 1.001).unwrap());
        assert!(!dp_check(1.01, 1.0, 1.001).unwrap());
        assert!(dp_check(1.0, 1.0, 1.0).is_err());
        assert!(matches!(
            dp_check(1.0, 0.0, 1.1),
            Err(Error::RuleUnavailable(_))
        ));
        assert_eq!(
            dp_first(&[5.0, 3.0, 1.0, 0.9], 1.0, 1.001).unwrap(),
            Some(3)
        );
        assert_eq!(dp_first(&[5.0, 3.0], 1.0, 1.001).unwrap(), None);
    }

    #[test]
    fn synthetic_l_has_corner_at_joint() {
        let mut pts = Vec::new();
        for i in 0..10 {
            pts.push((-(i as f64), 0.01 * i as f64));
        }
        for i in 1..=10 {
            pts.push((-9.0 - 0.01 * i as f64, 0.09 + i as f64));
        }
        assert_eq!(MengerCorner.corner(&pts).unwrap(), 10);
    }

    #[test]
    fn infinite_points_are_skipped() {
        let mut pts = Vec::new();
        for i in 0..10 {
            pts.push((-(i as f64), 0.01 * i as f64));
        }
        for i in 1..=10 {
            pts.push((-9.0 - 0.01 * i as f64, 0.09 + i as f64));
        }
        pts.push((f64::NEG_INFINITY, 50.0));
        assert_eq!(MengerCorner.corner(&pts).unwrap(), 10);
    }

    #[test]
    fn too_few_or_straight() {
        let pts: Vec<_> = (0..4).map(|i| (-(i as f64), i as f64)).collect();
        assert!(matches!(MengerCorner.corner(&pts), Err(Error::NoCorner(_))));
        let line: Vec<_> = (0..10).map(|i| (-(i as f64), i as f64)).collect();
        assert!(matches!(
            MengerCorner.corner(&line),
            Err(Error::NoCorner(_))
        ));
    }

    #[test]
    fn curvature_sign() {
        assert!(menger_curvature((1.0, 0.0), (0.0, 0.0), (0.0, 1.0)) > 0.0);
        assert!(menger_curvature((0.0, 1.0), (0.0, 0.0), (1.0, 0.0)) < 0.0);
    }

    #[test]
    fn oracle_ties_go_low() {
        assert_eq!(oracle_optimal(&[3.0, 1.0, 1.0, 2.0]), Some(2));
        assert_eq!(oracle_optimal(&[]), None);
    }
}
