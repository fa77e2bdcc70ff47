//! Precision-parameterized scalar and vector arithmetic.
//!
//! Every stage of the solver runs under a [`Precision`]: native binary64,
//! native binary32, or a software-emulated format with a `t`-bit significand.
//! All three obey the standard model `fl(a op b) = (a op b)(1 + ε)` with
//! `|ε| ≤ u`, where `u` is the roundoff unit reported by [`Precision::unit`].
//!
//! Emulation works in host binary64: each scalar result is rounded to `t`
//! significand bits with round-half-to-even. The exponent range of binary64
//! is kept, so overflow and underflow of narrow formats are not modeled.
//! Subnormal inputs are rounded on their binary64 encoding and do not carry
//! the relative error guarantee.
//!
//! Reductions (dot products, norms) accumulate sequentially from left to
//! right, so results are deterministic.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Floating-point behavior used by one stage of the algorithm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Precision {
    /// IEEE binary64, `u = 2^-53`.
    Native64,
    /// IEEE binary32, `u = 2^-24`.
    Native32,
    /// Emulated format with a `t`-bit significand (hidden bit included), `u = 2^-t`.
    Emulated(u32),
}

pub const MIN_EMULATED_BITS: u32 = 2;
pub const MAX_EMULATED_BITS: u32 = 52;

impl Precision {
    /// Emulated precision with `t` significand bits, `2 <= t <= 52`.
    pub fn emulated(t: u32) -> Result<Self> {
        if !(MIN_EMULATED_BITS..=MAX_EMULATED_BITS).contains(&t) {
            return Err(Error::InvalidPrecision(format!(
                "emulated significand must have {MIN_EMULATED_BITS}..={MAX_EMULATED_BITS} bits, got {t}"
            )));
        }
        Ok(Precision::Emulated(t))
    }

    pub fn significand_bits(self) -> u32 {
        match self {
            Precision::Native64 => 53,
            Precision::Native32 => 24,
            Precision::Emulated(t) => t,
        }
    }

    /// Roundoff unit `u = ½·2^(1-t)`.
    pub fn unit(self) -> f64 {
        (-(self.significand_bits() as f64)).exp2()
    }

    pub fn round(self, x: f64) -> f64 {
        round_scalar(x, self)
    }

    /// Rounds every entry of `x` into this format.
    pub fn round_vec(self, x: &[f64]) -> Vec<f64> {
        match self {
            Precision::Native64 => x.to_vec(),
            _ => x.iter().map(|&v| round_scalar(v, self)).collect(),
        }
    }
}

impl fmt::Display for Precision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Precision::Native64 => f.write_str("f64"),
            Precision::Native32 => f.write_str("f32"),
            Precision::Emulated(t) => write!(f, "emu{t}"),
        }
    }
}

impl FromStr for Precision {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "f64" => Ok(Precision::Native64),
            "f32" => Ok(Precision::Native32),
            other => {
                let bits = other
                    .strip_prefix("emu")
                    .and_then(|t| t.parse::<u32>().ok())
                    .ok_or_else(|| Error::InvalidPrecision(format!("`{other}`")))?;
                Precision::emulated(bits)
            }
        }
    }
}

impl TryFrom<String> for Precision {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Precision> for String {
    fn from(p: Precision) -> String {
        p.to_string()
    }
}

/// Rounds a binary64 value to the nearest value with `t` significand bits,
/// ties to even. Only valid for `2 <= t <= 52`.
#[inline]
fn round_to_bits(x: f64, t: u32) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let drop = 53 - t;
    let bits = x.to_bits();
    let mask = (1u64 << drop) - 1;
    let half = 1u64 << (drop - 1);
    let rem = bits & mask;
    let mut kept = bits & !mask;
    // Sign-magnitude encoding: incrementing the magnitude bits rounds away
    // from zero and carries into the exponent when the significand overflows.
    if rem > half || (rem == half && (kept >> drop) & 1 == 1) {
        kept += 1u64 << drop;
    }
    f64::from_bits(kept)
}

/// Rounds `x` to the nearest value representable in `p`.
#[inline]
pub fn round_scalar(x: f64, p: Precision) -> f64 {
    match p {
        Precision::Native64 => x,
        Precision::Native32 => x as f32 as f64,
        Precision::Emulated(t) => round_to_bits(x, t),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Op {
    Add,
    Sub,
    Mul,
    Div,
}

/// `fl(a op b)` in precision `p`: the exact binary64 result rounded into `p`.
pub fn rounded_op(a: f64, b: f64, op: Op, p: Precision) -> Result<f64> {
    let exact = match op {
        Op::Add => a + b,
        Op::Sub => a - b,
        Op::Mul => a * b,
        Op::Div => {
            if b == 0.0 {
                return Err(Error::DivisionByZero);
            }
            a / b
        }
    };
    Ok(round_scalar(exact, p))
}

/// Scalar arithmetic of one format. `T` is the storage type of a value.
pub(crate) trait Arith: Copy {
    type T: Copy + Send + Sync;

    fn load(self, x: f64) -> Self::T;
    fn store(self, x: Self::T) -> f64;
    fn zero(self) -> Self::T;
    fn add(self, a: Self::T, b: Self::T) -> Self::T;
    fn mul(self, a: Self::T, b: Self::T) -> Self::T;
    fn div(self, a: Self::T, b: Self::T) -> Self::T;
    fn sqrt(self, a: Self::T) -> Self::T;
}

#[derive(Clone, Copy)]
pub(crate) struct F64Arith;

#[derive(Clone, Copy)]
pub(crate) struct F32Arith;

#[derive(Clone, Copy)]
pub(crate) struct EmuArith(pub u32);

impl Arith for F64Arith {
    type T = f64;

    #[inline(always)]
    fn load(self, x: f64) -> f64 {
        x
    }
    #[inline(always)]
    fn store(self, x: f64) -> f64 {
        x
    }
    #[inline(always)]
    fn zero(self) -> f64 {
        0.0
    }
    #[inline(always)]
    fn add(self, a: f64, b: f64) -> f64 {
        a + b
    }
    #[inline(always)]
    fn mul(self, a: f64, b: f64) -> f64 {
        a * b
    }
    #[inline(always)]
    fn div(self, a: f64, b: f64) -> f64 {
        a / b
    }
    #[inline(always)]
    fn sqrt(self, a: f64) -> f64 {
        a.sqrt()
    }
}

impl Arith for F32Arith {
    type T = f32;

    #[inline(always)]
    fn load(self, x: f64) -> f32 {
        x as f32
    }
    #[inline(always)]
    fn store(self, x: f32) -> f64 {
        x as f64
    }
    #[inline(always)]
    fn zero(self) -> f32 {
        0.0
    }
    #[inline(always)]
    fn add(self, a: f32, b: f32) -> f32 {
        a + b
    }
    #[inline(always)]
    fn mul(self, a: f32, b: f32) -> f32 {
        a * b
    }
    #[inline(always)]
    fn div(self, a: f32, b: f32) -> f32 {
        a / b
    }
    #[inline(always)]
    fn sqrt(self, a: f32) -> f32 {
        a.sqrt()
    }
}

impl Arith for EmuArith {
    type T = f64;

    #[inline(always)]
    fn load(self, x: f64) -> f64 {
        round_to_bits(x, self.0)
    }
    #[inline(always)]
    fn store(self, x: f64) -> f64 {
        x
    }
    #[inline(always)]
    fn zero(self) -> f64 {
        0.0
    }
    #[inline(always)]
    fn add(self, a: f64, b: f64) -> f64 {
        round_to_bits(a + b, self.0)
    }
    #[inline(always)]
    fn mul(self, a: f64, b: f64) -> f64 {
        round_to_bits(a * b, self.0)
    }
    #[inline(always)]
    fn div(self, a: f64, b: f64) -> f64 {
        round_to_bits(a / b, self.0)
    }
    #[inline(always)]
    fn sqrt(self, a: f64) -> f64 {
        round_to_bits(a.sqrt(), self.0)
    }
}

/// Runs `$body` with `$a` bound to the arithmetic of precision `$p`.
macro_rules! with_arith {
    ($p:expr, $a:ident => $body:expr) => {
        match $p {
            $crate::precision::Precision::Native64 => {
                let $a = $crate::precision::F64Arith;
                $body
            }
            $crate::precision::Precision::Native32 => {
                let $a = $crate::precision::F32Arith;
                $body
            }
            $crate::precision::Precision::Emulated(t) => {
                let $a = $crate::precision::EmuArith(t);
                $body
            }
        }
    };
}
pub(crate) use with_arith;

/// Inner product of two vectors already in storage format.
pub(crate) fn dot_kernel<A: Arith>(a: A, x: &[A::T], y: &[A::T]) -> A::T {
    debug_assert_eq!(x.len(), y.len());
    x.iter()
        .zip(y)
        .fold(a.zero(), |acc, (&xi, &yi)| a.add(acc, a.mul(xi, yi)))
}

pub(crate) fn load_vec<A: Arith>(a: A, x: &[f64]) -> Vec<A::T> {
    x.iter().map(|&v| a.load(v)).collect()
}

fn check_len(expected: usize, got: usize) {
    assert!(
        expected == got,
        "{}",
        Error::DimensionMismatch { expected, got }
    );
}

/// `xᵀy` in precision `p`.
pub fn vec_dot(x: &[f64], y: &[f64], p: Precision) -> f64 {
    check_len(x.len(), y.len());
    if p == Precision::Native64 {
        return dot_kernel(F64Arith, x, y);
    }
    with_arith!(p, a => {
        let xs = load_vec(a, x);
        let ys = load_vec(a, y);
        a.store(dot_kernel(a, &xs, &ys))
    })
}

/// `‖x‖₂` in precision `p`, as the rounded square root of `vec_dot(x, x)`.
pub fn vec_norm(x: &[f64], p: Precision) -> f64 {
    with_arith!(p, a => {
        let xs = load_vec(a, x);
        a.store(a.sqrt(dot_kernel(a, &xs, &xs)))
    })
}

/// `y + alpha·x` in precision `p`.
pub fn vec_axpy(alpha: f64, x: &[f64], y: &[f64], p: Precision) -> Vec<f64> {
    let mut out = y.to_vec();
    axpy_in_place(alpha, x, &mut out, p);
    out
}

/// `y ← y + alpha·x` in precision `p`.
pub fn axpy_in_place(alpha: f64, x: &[f64], y: &mut [f64], p: Precision) {
    check_len(y.len(), x.len());
    with_arith!(p, a => {
        let al = a.load(alpha);
        for (yi, &xi) in y.iter_mut().zip(x) {
            *yi = a.store(a.add(a.load(*yi), a.mul(al, a.load(xi))));
        }
    })
}

/// `x / d` entrywise in precision `p`.
pub fn vec_div(x: &[f64], d: f64, p: Precision) -> Result<Vec<f64>> {
    if d == 0.0 {
        return Err(Error::DivisionByZero);
    }
    Ok(with_arith!(p, a => {
        let dd = a.load(d);
        x.iter().map(|&xi| a.store(a.div(a.load(xi), dd))).collect()
    }))
}

/// `A·x` in precision `p`.
pub fn mat_vec<O: crate::operator::LinearOperator + ?Sized>(
    op: &O,
    x: &[f64],
    p: Precision,
) -> Vec<f64> {
    op.apply(x, p)
}

/// Binary64 helpers for diagnostics that are measurements, not part of a run.
pub mod exact {
    pub fn dot(x: &[f64], y: &[f64]) -> f64 {
        super::vec_dot(x, y, super::Precision::Native64)
    }

    pub fn norm(x: &[f64]) -> f64 {
        super::vec_norm(x, super::Precision::Native64)
    }

    /// `‖x - y‖₂`.
    pub fn dist(x: &[f64], y: &[f64]) -> f64 {
        x.iter()
            .zip(y)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const ALL: [Precision; 4] = [
        Precision::Native64,
        Precision::Native32,
        Precision::Emulated(24),
        Precision::Emulated(8),
    ];

    #[test]
    fn units() {
        assert_eq!(Precision::Native64.unit(), 2f64.powi(-53));
        assert_eq!(Precision::Native32.unit(), 2f64.powi(-24));
        assert_eq!(Precision::Emulated(12).unit(), 2f64.powi(-12));
        assert!(Precision::emulated(53).is_err());
        assert!(Precision::emulated(1).is_err());
    }

    #[test]
    fn parse_and_display() {
        for s in ["f64", "f32", "emu12", "emu2", "emu52"] {
            let p: Precision = s.parse().unwrap();
            assert_eq!(p.to_string(), s);
        }
        assert!("emu53".parse::<Precision>().is_err());
        assert!("f16".parse::<Precision>().is_err());
        assert!("emu".parse::<Precision>().is_err());
        let json = serde_json::to_string(&Precision::Emulated(12)).unwrap();
        assert_eq!(json, "\"emu12\"");
    }

    #[test]
    fn one_is_exact() {
        for p in ALL {
            assert_eq!(round_scalar(1.0, p), 1.0);
        }
    }

    #[test]
    fn below_half_ulp_is_absorbed() {
        let x = 1.0 + 2f64.powi(-30);
        assert_eq!(round_scalar(x, Precision::Emulated(24)), 1.0);
    }

    #[test]
    fn ties_go_to_even() {
        // With t = 3 the grid near 1 is 1, 1.25, 1.5, ...
        assert_eq!(round_scalar(1.125, Precision::Emulated(3)), 1.0);
        assert_eq!(round_scalar(1.375, Precision::Emulated(3)), 1.5);
        assert_eq!(round_scalar(-1.375, Precision::Emulated(3)), -1.5);
        // carry into the exponent
        assert_eq!(round_scalar(1.875, Precision::Emulated(3)), 2.0);
    }

    #[test]
    fn tenth_in_eight_bits_matches_brute_force() {
        // Candidates: every 8-bit significand scaled into 0.1's binade.
        let x = 0.1f64;
        let e = x.log2().floor() as i32; // 0.1 in [2^-4, 2^-3)
        let mut best = f64::INFINITY;
        for m in 128u32..256 {
            let v = m as f64 * 2f64.powi(e - 7);
            if (v - x).abs() < (best - x).abs() {
                best = v;
            }
        }
        let got = round_scalar(x, Precision::Emulated(8));
        assert_eq!(got, best);
        assert!((got - x).abs() / x <= 2f64.powi(-8));
    }

    #[test]
    fn rounded_op_examples() {
        assert_eq!(
            rounded_op(1.0, 1.0, Op::Add, Precision::Native32).unwrap(),
            2.0
        );
        assert_eq!(
            rounded_op(2f64.powi(-12), 1.0, Op::Add, Precision::Emulated(8)).unwrap(),
            1.0
        );
        let p = Precision::Emulated(16);
        let third = p.round(1.0 / 3.0);
        let r = rounded_op(third, third, Op::Add, p).unwrap();
        assert!((r - 2.0 / 3.0).abs() <= 2.0 / 3.0 * 3.0 * 2f64.powi(-16));
        assert!(matches!(
            rounded_op(1.0, 0.0, Op::Div, p),
            Err(Error::DivisionByZero)
        ));
    }

    #[test]
    fn small_kernels() {
        let e1 = [1.0, 0.0, 0.0];
        for p in ALL {
            assert_eq!(vec_dot(&e1, &e1, p), 1.0);
            assert_eq!(vec_norm(&[0.0; 7], p), 0.0);
        }
        assert_eq!(
            vec_axpy(2.0, &[1.0, 2.0], &[1.0, 1.0], Precision::Native64),
            vec![3.0, 5.0]
        );
        assert!(vec_div(&[1.0], 0.0, Precision::Native32).is_err());
    }

    #[test]
    #[should_panic(expected = "dimension mismatch")]
    fn dot_length_mismatch_panics() {
        vec_dot(&[1.0, 2.0], &[1.0], Precision::Native64);
    }

    #[test]
    fn dot_covers_every_entry() {
        for n in [1usize, 7, 8, 9, 63, 64, 65, 200, 1000] {
            let x: Vec<f64> = (1..=n).map(|i| i as f64).collect();
            let ones = vec![1.0; n];
            let expect = (n * (n + 1) / 2) as f64;
            assert_eq!(vec_dot(&x, &ones, Precision::Native64), expect);
        }
    }
}
