//! Linear operators applied under a chosen [`Precision`].

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::precision::{dot_kernel, load_vec, with_arith, Arith, Precision};

/// A real `m × n` operator that can be applied, with its transpose, in any precision.
pub trait LinearOperator: Send + Sync {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;

    /// `A·x` with every scalar operation rounded into `p`.
    fn apply(&self, x: &[f64], p: Precision) -> Vec<f64>;

    /// `Aᵀ·y` with every scalar operation rounded into `p`.
    fn apply_transpose(&self, y: &[f64], p: Precision) -> Vec<f64>;

    /// Materializes the operator in binary64. Costs `n` applications for
    /// matrix-free operators.
    fn to_dense(&self) -> DMatrix<f64> {
        let n = self.ncols();
        let mut out = DMatrix::zeros(self.nrows(), n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e[j] = 1.0;
            let col = self.apply(&e, Precision::Native64);
            out.column_mut(j).copy_from_slice(&col);
            e[j] = 0.0;
        }
        out
    }
}

enum Layout {
    F64 { rows: Vec<f64>, cols: Vec<f64> },
    F32 { rows: Vec<f32>, cols: Vec<f32> },
}

/// Dense row-major matrix.
///
/// Entries are rounded into the working precision once per precision and
/// cached, in both row-major and column-major order, so that `A·x` and `Aᵀ·y`
/// are both evaluated as inner products with the same reduction order.
#[derive(Serialize, Deserialize)]
#[serde(from = "DenseRepr", into = "DenseRepr")]
pub struct DenseMatrix {
    nrows: usize,
    ncols: usize,
    data: Vec<f64>,
    cache: Mutex<HashMap<Precision, Arc<Layout>>>,
}

#[derive(Serialize, Deserialize)]
struct DenseRepr {
    nrows: usize,
    ncols: usize,
    data: Vec<f64>,
}

impl From<DenseRepr> for DenseMatrix {
    fn from(r: DenseRepr) -> Self {
        DenseMatrix {
            nrows: r.nrows,
            ncols: r.ncols,
            data: r.data,
            cache: Mutex::default(),
        }
    }
}

impl From<DenseMatrix> for DenseRepr {
    fn from(m: DenseMatrix) -> Self {
        DenseRepr {
            nrows: m.nrows,
            ncols: m.ncols,
            data: m.data,
        }
    }
}

impl Clone for DenseMatrix {
    fn clone(&self) -> Self {
        DenseMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            data: self.data.clone(),
            cache: Mutex::default(),
        }
    }
}

impl std::fmt::Debug for DenseMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DenseMatrix")
            .field("nrows", &self.nrows)
            .field("ncols", &self.ncols)
            .finish_non_exhaustive()
    }
}

impl PartialEq for DenseMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.nrows == other.nrows && self.ncols == other.ncols && self.data == other.data
    }
}

impl DenseMatrix {
    pub fn from_row_major(nrows: usize, ncols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != nrows * ncols {
            return Err(Error::DimensionMismatch {
                expected: nrows * ncols,
                got: data.len(),
            });
        }
        Ok(DenseRepr { nrows, ncols, data }.into())
    }

    pub fn from_fn(nrows: usize, ncols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(nrows * ncols);
        for i in 0..nrows {
            for j in 0..ncols {
                data.push(f(i, j));
            }
        }
        DenseRepr { nrows, ncols, data }.into()
    }

    pub fn from_nalgebra(m: &DMatrix<f64>) -> Self {
        Self::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.ncols + j]
    }

    pub fn row_major(&self) -> &[f64] {
        &self.data
    }

    fn transposed(&self) -> Vec<f64> {
        let mut t = vec![0.0; self.data.len()];
        for i in 0..self.nrows {
            for j in 0..self.ncols {
                t[j * self.nrows + i] = self.data[i * self.ncols + j];
            }
        }
        t
    }

    fn layout(&self, p: Precision) -> Arc<Layout> {
        let mut cache = self.cache.lock().unwrap_or_else(|e| e.into_inner());
        cache
            .entry(p)
            .or_insert_with(|| {
                let cols = self.transposed();
                Arc::new(match p {
                    Precision::Native32 => Layout::F32 {
                        rows: self.data.iter().map(|&v| v as f32).collect(),
                        cols: cols.iter().map(|&v| v as f32).collect(),
                    },
                    _ => Layout::F64 {
                        rows: p.round_vec(&self.data),
                        cols: p.round_vec(&cols),
                    },
                })
            })
            .clone()
    }

    fn gemv(&self, transpose: bool, x: &[f64], p: Precision) -> Vec<f64> {
        let (nout, nin) = if transpose {
            (self.ncols, self.nrows)
        } else {
            (self.nrows, self.ncols)
        };
        if x.len() != nin {
            panic!(
                "{}",
                Error::DimensionMismatch {
                    expected: nin,
                    got: x.len()
                }
            );
        }
        let layout = self.layout(p);
        match (&*layout, p) {
            (Layout::F32 { rows, cols }, _) => {
                let a = crate::precision::F32Arith;
                rows_times(a, if transpose { cols } else { rows }, nout, nin, x)
            }
            (Layout::F64 { rows, cols }, Precision::Emulated(t)) => {
                let a = crate::precision::EmuArith(t);
                rows_times(a, if transpose { cols } else { rows }, nout, nin, x)
            }
            (Layout::F64 { rows, cols }, _) => {
                let a = crate::precision::F64Arith;
                rows_times(a, if transpose { cols } else { rows }, nout, nin, x)
            }
        }
    }
}

fn rows_times<A: Arith>(a: A, m: &[A::T], nout: usize, nin: usize, x: &[f64]) -> Vec<f64> {
    let xs = load_vec(a, x);
    m.chunks_exact(nin.max(1))
        .take(nout)
        .map(|row| a.store(dot_kernel(a, row, &xs)))
        .collect()
}

impl LinearOperator for DenseMatrix {
    fn nrows(&self) -> usize {
        self.nrows
    }

    fn ncols(&self) -> usize {
        self.ncols
    }

    fn apply(&self, x: &[f64], p: Precision) -> Vec<f64> {
        self.gemv(false, x, p)
    }

    fn apply_transpose(&self, y: &[f64], p: Precision) -> Vec<f64> {
        self.gemv(true, y, p)
    }

    fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.nrows, self.ncols, &self.data)
    }
}

/// Spatially invariant blur of an `rows × cols` image (row-major pixels) by a
/// point-spread function, with zero boundary conditions.
///
/// The PSF has odd dimensions and is centered; `(A·x)[r, c] = Σ h[dr, dc]·x[r − dr, c − dc]`
/// over taps inside the image. Taps are accumulated in row-major PSF order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlurOperator {
    rows: usize,
    cols: usize,
    psf_rows: usize,
    psf_cols: usize,
    psf: Vec<f64>,
}

impl BlurOperator {
    pub fn new(
        rows: usize,
        cols: usize,
        psf_rows: usize,
        psf_cols: usize,
        psf: Vec<f64>,
    ) -> Result<Self> {
        if psf_rows.is_multiple_of(2) || psf_cols.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!(
                "PSF dimensions must be odd, got {psf_rows}x{psf_cols}"
            )));
        }
        if psf.len() != psf_rows * psf_cols {
            return Err(Error::DimensionMismatch {
                expected: psf_rows * psf_cols,
                got: psf.len(),
            });
        }
        Ok(BlurOperator {
            rows,
            cols,
            psf_rows,
            psf_cols,
            psf,
        })
    }

    pub fn image_shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn psf(&self) -> (&[f64], usize, usize) {
        (&self.psf, self.psf_rows, self.psf_cols)
    }

    fn convolve<A: Arith>(&self, a: A, x: &[f64], transpose: bool) -> Vec<f64> {
        let xs = load_vec(a, x);
        let h = load_vec(a, &self.psf);
        let (pr, pc) = ((self.psf_rows / 2) as isize, (self.psf_cols / 2) as isize);
        let (rows, cols) = (self.rows as isize, self.cols as isize);
        let sign = if transpose { 1 } else { -1 };
        let mut out = Vec::with_capacity(xs.len());
        for r in 0..rows {
            for c in 0..cols {
                let mut acc = a.zero();
                for kr in 0..self.psf_rows as isize {
                    let sr = r + sign * (kr - pr);
                    if sr < 0 || sr >= rows {
                        continue;
                    }
                    let hrow = &h[(kr as usize) * self.psf_cols..][..self.psf_cols];
                    let xrow = &xs[(sr * cols) as usize..][..self.cols];
                    for (kc, &hv) in hrow.iter().enumerate() {
                        let sc = c + sign * (kc as isize - pc);
                        if sc < 0 || sc >= cols {
                            continue;
                        }
                        acc = a.add(acc, a.mul(hv, xrow[sc as usize]));
                    }
                }
                out.push(a.store(acc));
            }
        }
        out
    }

    fn check(&self, len: usize) {
        if len != self.rows * self.cols {
            panic!(
                "{}",
                Error::DimensionMismatch {
                    expected: self.rows * self.cols,
                    got: len
                }
            );
        }
    }
}

impl LinearOperator for BlurOperator {
    fn nrows(&self) -> usize {
        self.rows * self.cols
    }

    fn ncols(&self) -> usize {
        self.rows * self.cols
    }

    fn apply(&self, x: &[f64], p: Precision) -> Vec<f64> {
        self.check(x.len());
        with_arith!(p, a => self.convolve(a, x, false))
    }

    fn apply_transpose(&self, y: &[f64], p: Precision) -> Vec<f64> {
        self.check(y.len());
        with_arith!(p, a => self.convolve(a, y, true))
    }
}

/// The operator of a test problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Operator {
    Dense(DenseMatrix),
    Blur(BlurOperator),
}

impl Operator {
    pub fn is_dense(&self) -> bool {
        matches!(self, Operator::Dense(_))
    }
}

impl LinearOperator for Operator {
    fn nrows(&self) -> usize {
        match self {
            Operator::Dense(m) => m.nrows(),
            Operator::Blur(b) => b.nrows(),
        }
    }

    fn ncols(&self) -> usize {
        match self {
            Operator::Dense(m) => m.ncols(),
            Operator::Blur(b) => b.ncols(),
        }
    }

    fn apply(&self, x: &[f64], p: Precision) -> Vec<f64> {
        match self {
            Operator::Dense(m) => m.apply(x, p),
            Operator::Blur(b) => b.apply(x, p),
        }
    }

    fn apply_transpose(&self, y: &[f64], p: Precision) -> Vec<f64> {
        match self {
            Operator::Dense(m) => m.apply_transpose(y, p),
            Operator::Blur(b) => b.apply_transpose(y, p),
        }
    }

    fn to_dense(&self) -> DMatrix<f64> {
        match self {
            Operator::Dense(m) => m.to_dense(),
            Operator::Blur(b) => b.to_dense(),
        }
    }
}
