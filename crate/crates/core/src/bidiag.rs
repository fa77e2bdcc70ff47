//! Golub–Kahan (Lanczos) bidiagonalization of `(A, b)` under one precision.
//!
//! After `k` steps the state holds `p₁..p_{k+1}`, `q₁..q_{k+1}`,
//! `α₁..α_{k+1}` and `β₁..β_{k+1}` with `A·Q_k = P_{k+1}·B_k` up to rounding,
//! where `B_k` is the `(k+1) × k` lower bidiagonal matrix of the `α`s and `β`s.
//!
//! With full reorthogonalization every new vector is orthogonalized against
//! all previous ones by two passes of classical Gram–Schmidt. All of this
//! runs in the state's [`Precision`]; the orthogonality levels `μ`, `ν` are
//! measured separately in binary64.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::operator::LinearOperator;
use crate::precision::{axpy_in_place, exact, vec_div, vec_dot, vec_norm, Precision};

/// `α` or `β` at or below `TERMINATION_FACTOR · u · ‖A‖` counts as zero.
pub const TERMINATION_FACTOR: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// `Aᵀp₁ = 0`: `b` is orthogonal to the range of `A`.
    RangeOrthogonal,
    /// `β_{k+1}` vanished at step `k`.
    ZeroBeta(usize),
    /// `α_{k+1}` vanished at step `k`.
    ZeroAlpha(usize),
}

pub struct BidiagState<'a> {
    op: &'a dyn LinearOperator,
    spec: Precision,
    reorth: bool,
    track_orthogonality: bool,
    p: Vec<Vec<f64>>,
    q: Vec<Vec<f64>>,
    alpha: Vec<f64>,
    beta: Vec<f64>,
    k: usize,
    // Lower triangles of PᵀP and QᵀQ, in binary64.
    gram_p: Vec<Vec<f64>>,
    gram_q: Vec<Vec<f64>>,
    mu: f64,
    nu: f64,
    norm_estimate: f64,
    terminated: Option<Termination>,
}

impl std::fmt::Debug for BidiagState<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BidiagState")
            .field("spec", &self.spec)
            .field("k", &self.k)
            .field("mu", &self.mu)
            .field("nu", &self.nu)
            .field("terminated", &self.terminated)
            .finish_non_exhaustive()
    }
}

fn reorthogonalize(v: &mut [f64], basis: &[Vec<f64>], p: Precision) {
    for _ in 0..2 {
        let coeffs: Vec<f64> = basis.iter().map(|u| vec_dot(u, v, p)).collect();
        for (c, u) in coeffs.iter().zip(basis) {
            axpy_in_place(-c, u, v, p);
        }
    }
}

/// Spectral norm of the strictly upper triangular part of `I − G`, given the
/// lower triangle of the Gram matrix `G` row by row.
fn sut_level(gram: &[Vec<f64>]) -> f64 {
    let k = gram.len();
    if k < 2 {
        return 0.0;
    }
    let s = DMatrix::from_fn(k, k, |i, j| if i < j { -gram[j][i] } else { 0.0 });
    s.singular_values().max()
}

/// `‖SUT(I − MᵀM)‖₂` for the columns of `M`, computed in binary64.
pub fn orthogonality_level(m: &DMatrix<f64>) -> f64 {
    let g = m.transpose() * m;
    let k = g.nrows();
    if k < 2 {
        return 0.0;
    }
    let s = DMatrix::from_fn(k, k, |i, j| if i < j { -g[(i, j)] } else { 0.0 });
    s.singular_values().max()
}

impl<'a> BidiagState<'a> {
    /// `β₁ = ‖b‖`, `p₁ = b/β₁`, `α₁ = ‖Aᵀp₁‖`, `q₁ = Aᵀp₁/α₁`, all in `spec`.
    pub fn init(
        op: &'a dyn LinearOperator,
        b: &[f64],
        spec: Precision,
        reorth: bool,
    ) -> Result<Self> {
        if b.len() != op.nrows() {
            return Err(Error::DimensionMismatch {
                expected: op.nrows(),
                got: b.len(),
            });
        }
        let b = spec.round_vec(b);
        let beta1 = vec_norm(&b, spec);
        if beta1 == 0.0 {
            return Err(Error::ZeroRightHandSide);
        }
        let p1 = vec_div(&b, beta1, spec)?;
        let r = op.apply_transpose(&p1, spec);
        let alpha1 = vec_norm(&r, spec);
        let mut state = BidiagState {
            op,
            spec,
            reorth,
            track_orthogonality: true,
            p: Vec::new(),
            q: Vec::new(),
            alpha: vec![alpha1],
            beta: vec![beta1],
            k: 0,
            gram_p: Vec::new(),
            gram_q: Vec::new(),
            mu: 0.0,
            nu: 0.0,
            norm_estimate: alpha1,
            terminated: None,
        };
        state.push_p(p1);
        if alpha1 == 0.0 {
            state.terminated = Some(Termination::RangeOrthogonal);
        } else {
            let q1 = vec_div(&r, alpha1, spec)?;
            state.push_q(q1);
        }
        Ok(state)
    }

    /// Turns the per-step binary64 orthogonality measurement on or off.
    pub fn with_orthogonality_tracking(mut self, on: bool) -> Self {
        self.track_orthogonality = on;
        self
    }

    fn push_p(&mut self, v: Vec<f64>) {
        if self.track_orthogonality {
            let row = self
                .p
                .iter()
                .chain(std::iter::once(&v))
                .map(|u| exact::dot(u, &v))
                .collect();
            self.gram_p.push(row);
            self.mu = sut_level(&self.gram_p);
        }
        self.p.push(v);
    }

    fn push_q(&mut self, v: Vec<f64>) {
        if self.track_orthogonality {
            let row = self
                .q
                .iter()
                .chain(std::iter::once(&v))
                .map(|u| exact::dot(u, &v))
                .collect();
            self.gram_q.push(row);
            self.nu = sut_level(&self.gram_q);
        }
        self.q.push(v);
    }

    fn threshold(&self) -> f64 {
        TERMINATION_FACTOR * self.spec.unit() * self.norm_estimate
    }

    /// One bidiagonalization step, producing `β_{k+1}, p_{k+1}, α_{k+1}, q_{k+1}`.
    ///
    /// A `β` or `α` below `10·u·‖A‖` sets the termination flag. The computed
    /// value is kept, and so is its vector unless the value is exactly zero.
    pub fn step(&mut self) -> Result<()> {
        if self.terminated.is_some() {
            return Err(Error::InvalidParameter(
                "bidiagonalization has terminated".to_string(),
            ));
        }
        let spec = self.spec;
        let j = self.k;
        let alpha_j = self.alpha[j];

        let mut s = self.op.apply(&self.q[j], spec);
        axpy_in_place(-alpha_j, &self.p[j], &mut s, spec);
        if self.reorth {
            reorthogonalize(&mut s, &self.p, spec);
        }
        let beta_next = vec_norm(&s, spec);
        self.norm_estimate = self.norm_estimate.max(alpha_j.hypot(beta_next));
        self.k += 1;
        self.beta.push(beta_next);
        if beta_next <= self.threshold() {
            self.terminated = Some(Termination::ZeroBeta(self.k));
            if beta_next > 0.0 {
                self.push_p(vec_div(&s, beta_next, spec)?);
            }
            return Ok(());
        }
        let p_next = vec_div(&s, beta_next, spec)?;

        let mut r = self.op.apply_transpose(&p_next, spec);
        axpy_in_place(-beta_next, &self.q[j], &mut r, spec);
        self.push_p(p_next);
        if self.reorth {
            reorthogonalize(&mut r, &self.q, spec);
        }
        let alpha_next = vec_norm(&r, spec);
        self.norm_estimate = self.norm_estimate.max(beta_next.hypot(alpha_next));
        self.alpha.push(alpha_next);
        if alpha_next <= self.threshold() {
            self.terminated = Some(Termination::ZeroAlpha(self.k));
            if alpha_next == 0.0 {
                return Ok(());
            }
        }
        let q_next = vec_div(&r, alpha_next, spec)?;
        self.push_q(q_next);
        Ok(())
    }

    pub fn spec(&self) -> Precision {
        self.spec
    }
    /// Number of completed steps.
    pub fn k(&self) -> usize {
        self.k
    }
    /// `α₁..α_{k+1}`
    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }
    /// `β₁..β_{k+1}`
    pub fn beta(&self) -> &[f64] {
        &self.beta
    }
    pub fn p_vectors(&self) -> &[Vec<f64>] {
        &self.p
    }
    pub fn q_vectors(&self) -> &[Vec<f64>] {
        &self.q
    }
    /// Orthogonality level of the stored left vectors.
    pub fn mu(&self) -> f64 {
        self.mu
    }
    /// Orthogonality level of the stored right vectors.
    pub fn nu(&self) -> f64 {
        self.nu
    }
    /// Lower bound on `‖A‖` from the computed bidiagonal entries.
    pub fn norm_estimate(&self) -> f64 {
        self.norm_estimate
    }
    pub fn terminated(&self) -> Option<Termination> {
        self.terminated
    }

    /// The `(k+1) × k` lower bidiagonal `B_k`.
    pub fn bidiagonal(&self) -> DMatrix<f64> {
        let k = self.k;
        DMatrix::from_fn(k + 1, k, |i, j| {
            if i == j {
                self.alpha[j]
            } else if i == j + 1 {
                self.beta[j + 1]
            } else {
                0.0
            }
        })
    }

    /// Columns `0..count` of the given vectors as a dense matrix.
    pub fn basis_matrix(vectors: &[Vec<f64>], count: usize) -> DMatrix<f64> {
        let rows = vectors.first().map_or(0, Vec::len);
        DMatrix::from_fn(rows, count, |i, j| vectors[j][i])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::DenseMatrix;

    #[test]
    fn identity_operator_init() {
        let id = DenseMatrix::identity(5);
        let b = [3.0, 0.0, 0.0, 0.0, 0.0];
        let st = BidiagState::init(&id, &b, Precision::Native64, true).unwrap();
        assert_eq!(st.beta()[0], 3.0);
        assert_eq!(st.alpha()[0], 1.0);
        assert_eq!(st.p_vectors()[0], vec![1.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(st.q_vectors()[0], vec![1.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn zero_rhs_rejected() {
        let id = DenseMatrix::identity(3);
        assert!(matches!(
            BidiagState::init(&id, &[0.0; 3], Precision::Native64, true),
            Err(Error::ZeroRightHandSide)
        ));
    }

    #[test]
    fn identity_terminates_after_one_step() {
        let id = DenseMatrix::identity(4);
        let b = [1.0, -2.0, 0.5, 3.0];
        for spec in [
            Precision::Native64,
            Precision::Native32,
            Precision::Emulated(12),
        ] {
            let mut st = BidiagState::init(&id, &b, spec, true).unwrap();
            st.step().unwrap();
            assert_eq!(st.terminated(), Some(Termination::ZeroBeta(1)));
            assert!(st.beta()[1] <= 10.0 * spec.unit() * st.norm_estimate());
            assert!(st.step().is_err());
        }
    }

    #[test]
    fn range_orthogonal_rhs_terminates_at_init() {
        let a = DenseMatrix::from_row_major(3, 2, vec![1.0, 0.0, 0.0, 1.0, 0.0, 0.0]).unwrap();
        let st = BidiagState::init(&a, &[0.0, 0.0, 2.0], Precision::Native64, true).unwrap();
        assert_eq!(st.terminated(), Some(Termination::RangeOrthogonal));
    }

    #[test]
    fn level_examples() {
        let id = DMatrix::<f64>::identity(4, 3);
        assert!(orthogonality_level(&id) < 1e-15);
        let dup = DMatrix::from_column_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        assert!((orthogonality_level(&dup) - 1.0).abs() < 1e-15);
    }
}
