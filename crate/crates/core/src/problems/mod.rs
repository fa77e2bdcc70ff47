//! Test problems, noise injection and SVD-based regularization diagnostics.

mod generators;
mod picard;

use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{LinearOperator, Operator};
use crate::precision::{exact, Precision};

pub use generators::{test_image, BlurParams};
pub use picard::{picard_diagnostics, DecayType, PicardDiagnostics};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProblemKind {
    Shaw,
    Deriv2,
    Gravity,
    Heat,
    Blur2d,
}

impl ProblemKind {
    pub const ALL: [ProblemKind; 5] = [
        ProblemKind::Shaw,
        ProblemKind::Deriv2,
        ProblemKind::Gravity,
        ProblemKind::Heat,
        ProblemKind::Blur2d,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ProblemKind::Shaw => "shaw",
            ProblemKind::Deriv2 => "deriv2",
            ProblemKind::Gravity => "gravity",
            ProblemKind::Heat => "heat",
            ProblemKind::Blur2d => "blur2d",
        }
    }
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProblemKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ProblemKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::UnknownProblem(s.to_string()))
    }
}

/// Builds the operator and exact solution of a test problem.
///
/// For `blur2d`, `n` is the number of pixels of a square image.
pub fn generate(
    kind: ProblemKind,
    n: usize,
    blur: Option<BlurParams>,
) -> Result<(Operator, Vec<f64>)> {
    if n < 4 {
        return Err(Error::InvalidSize(format!("n must be at least 4, got {n}")));
    }
    Ok(match kind {
        ProblemKind::Shaw => generators::shaw(n),
        ProblemKind::Deriv2 => generators::deriv2(n),
        ProblemKind::Gravity => generators::gravity(n),
        ProblemKind::Heat => generators::heat(n),
        ProblemKind::Blur2d => generators::blur2d(n, blur)?,
    })
}

/// Adds white Gaussian noise scaled so that `‖e‖ / ‖b_ex‖ = eps`.
///
/// Returns `(b, e)`; the same seed always gives the same noise.
pub fn add_noise(b_ex: &[f64], eps: f64, seed: u64) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidNoiseLevel(eps));
    }
    let norm_b = exact::norm(b_ex);
    if norm_b == 0.0 {
        return Err(Error::ZeroRightHandSide);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g: Vec<f64> = (0..b_ex.len())
        .map(|_| StandardNormal.sample(&mut rng))
        .collect();
    let scale = eps * norm_b / exact::norm(&g);
    let b: Vec<f64> = b_ex
        .iter()
        .zip(&g)
        .map(|(bi, gi)| bi + scale * gi)
        .collect();
    // Store the noise actually present in b so that b - b_ex - e vanishes.
    let e = b.iter().zip(b_ex).map(|(bi, ei)| bi - ei).collect();
    Ok((b, e))
}

/// A noisy linear system `b = A·x_ex + e`. Immutable once built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemInstance {
    name: String,
    operator: Operator,
    x_ex: Vec<f64>,
    b_ex: Vec<f64>,
    b: Vec<f64>,
    e: Vec<f64>,
    eps: f64,
    seed: u64,
}

impl ProblemInstance {
    /// Generates a test problem and adds noise at level `eps`.
    pub fn build(
        kind: ProblemKind,
        n: usize,
        blur: Option<BlurParams>,
        eps: f64,
        seed: u64,
    ) -> Result<Self> {
        let (op, x_ex) = generate(kind, n, blur)?;
        Self::from_operator(kind.name(), op, x_ex, eps, seed)
    }

    /// Wraps an arbitrary operator: `b_ex = A·x_ex` in binary64, then noise.
    pub fn from_operator(
        name: impl Into<String>,
        operator: Operator,
        x_ex: Vec<f64>,
        eps: f64,
        seed: u64,
    ) -> Result<Self> {
        if operator.ncols() != x_ex.len() {
            return Err(Error::DimensionMismatch {
                expected: operator.ncols(),
                got: x_ex.len(),
            });
        }
        if operator.nrows() < operator.ncols() {
            return Err(Error::InvalidSize(format!(
                "need m >= n, got {}x{}",
                operator.nrows(),
                operator.ncols()
            )));
        }
        let b_ex = operator.apply(&x_ex, Precision::Native64);
        let (b, e) = add_noise(&b_ex, eps, seed)?;
        Ok(ProblemInstance {
            name: name.into(),
            operator,
            x_ex,
            b_ex,
            b,
            e,
            eps,
            seed,
        })
    }

    /// Same operator and exact data, fresh noise.
    pub fn with_noise(&self, eps: f64, seed: u64) -> Result<Self> {
        let (b, e) = add_noise(&self.b_ex, eps, seed)?;
        Ok(ProblemInstance {
            b,
            e,
            eps,
            seed,
            ..self.clone()
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn operator(&self) -> &Operator {
        &self.operator
    }
    pub fn x_ex(&self) -> &[f64] {
        &self.x_ex
    }
    pub fn b_ex(&self) -> &[f64] {
        &self.b_ex
    }
    pub fn b(&self) -> &[f64] {
        &self.b
    }
    pub fn e(&self) -> &[f64] {
        &self.e
    }
    pub fn eps(&self) -> f64 {
        self.eps
    }
    pub fn seed(&self) -> u64 {
        self.seed
    }
    pub fn m(&self) -> usize {
        self.operator.nrows()
    }
    pub fn n(&self) -> usize {
        self.operator.ncols()
    }
    pub fn noise_norm(&self) -> f64 {
        exact::norm(&self.e)
    }

    /// Writes the instance as JSON (operator, vectors, noise level, seed).
    pub fn save(&self, path: &Path) -> Result<()> {
        let f = File::create(path).map_err(|e| Error::io(path, e))?;
        serde_json::to_writer(BufWriter::new(f), self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = File::open(path).map_err(|e| Error::io(path, e))?;
        let inst: ProblemInstance = serde_json::from_reader(BufReader::new(f))
            .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        inst.validate()?;
        Ok(inst)
    }

    fn validate(&self) -> Result<()> {
        let (m, n) = (self.m(), self.n());
        for (what, len, want) in [
            ("x_ex", self.x_ex.len(), n),
            ("b_ex", self.b_ex.len(), m),
            ("b", self.b.len(), m),
            ("e", self.e.len(), m),
        ] {
            if len != want {
                return Err(Error::Parse(format!(
                    "{what} has length {len}, expected {want}"
                )));
            }
        }
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(Error::InvalidNoiseLevel(self.eps));
        }
        Ok(())
    }
}
