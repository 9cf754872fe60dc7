//! Thin dense linear-algebra layer over `faer`.
//!
//! Vectors are plain `Vec<Complex64>` slices; matrices are [`ComplexMatrix`].
//! All routines run sequentially.

use faer::diag::Diag;
use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::evd::{evd_cplx, evd_scratch, ComputeEigenvectors};
use faer::prelude::*;
use num_complex::Complex64;

use crate::{ComplexMatrix, Error, Result};

pub const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
pub const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// `<a|b>`, antilinear in the first argument.
pub fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

pub fn matvec(m: &ComplexMatrix, v: &[Complex64]) -> Vec<Complex64> {
    assert_eq!(m.ncols(), v.len());
    let mut out = vec![ZERO; m.nrows()];
    for (j, &vj) in v.iter().enumerate() {
        if vj == ZERO {
            continue;
        }
        let col = m.col_as_slice(j);
        for (o, &c) in out.iter_mut().zip(col) {
            *o += c * vj;
        }
    }
    out
}

/// `m† v`.
pub fn adjoint_matvec(m: &ComplexMatrix, v: &[Complex64]) -> Vec<Complex64> {
    assert_eq!(m.nrows(), v.len());
    (0..m.ncols())
        .map(|j| inner(m.col_as_slice(j), v))
        .collect()
}

pub fn column(m: &ComplexMatrix, j: usize) -> Vec<Complex64> {
    m.col_as_slice(j).to_vec()
}

pub fn from_columns(rows: usize, cols: &[Vec<Complex64>]) -> ComplexMatrix {
    Mat::from_fn(rows, cols.len(), |i, j| cols[j][i])
}

/// Largest entry modulus of `m† m - I`.
pub fn unitarity_defect(m: &ComplexMatrix) -> f64 {
    let gram = m.adjoint() * m;
    let mut worst = 0.0f64;
    for j in 0..gram.ncols() {
        for i in 0..gram.nrows() {
            let target = if i == j { ONE } else { ZERO };
            worst = worst.max((gram[(i, j)] - target).norm());
        }
    }
    worst
}

pub fn max_abs_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    assert_eq!((a.nrows(), a.ncols()), (b.nrows(), b.ncols()));
    let mut worst = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            worst = worst.max((a[(i, j)] - b[(i, j)]).norm());
        }
    }
    worst
}

pub fn frobenius_norm(m: &ComplexMatrix) -> f64 {
    m.norm_l2()
}

/// Eigendecomposition of a general complex matrix.
///
/// `right` columns satisfy `A r = z r`; `left` columns satisfy `l† A = z l†`.
/// Both families are unit-norm columns in the order of `values`.
pub struct Eigen {
    pub values: Vec<Complex64>,
    pub right: Option<ComplexMatrix>,
    pub left: Option<ComplexMatrix>,
}

pub fn eigen(a: &ComplexMatrix, vectors: bool) -> Result<Eigen> {
    let n = a.nrows();
    assert_eq!(n, a.ncols());
    if n == 0 {
        return Ok(Eigen {
            values: vec![],
            right: vectors.then(|| Mat::zeros(0, 0)),
            left: vectors.then(|| Mat::zeros(0, 0)),
        });
    }
    let par = Par::Seq;
    let want = if vectors {
        ComputeEigenvectors::Yes
    } else {
        ComputeEigenvectors::No
    };
    let mut s = Diag::<Complex64>::zeros(n);
    let mut ul = vectors.then(|| Mat::<Complex64>::zeros(n, n));
    let mut ur = vectors.then(|| Mat::<Complex64>::zeros(n, n));
    let mut buf = MemBuffer::new(evd_scratch::<Complex64>(n, want, want, par, default()));
    evd_cplx(
        a.as_ref(),
        s.as_mut(),
        ul.as_mut().map(|m| m.as_mut()),
        ur.as_mut().map(|m| m.as_mut()),
        par,
        MemStack::new(&mut buf),
        default(),
    )
    .map_err(|_| Error::NoConvergence)?;
    let values = (0..n).map(|i| s[i]).collect();
    for m in ul.iter_mut().chain(ur.iter_mut()) {
        for j in 0..n {
            let col = m.col_as_slice_mut(j);
            let nrm = norm(col);
            if nrm > 0.0 {
                col.iter_mut().for_each(|x| *x /= nrm);
            }
        }
    }
    Ok(Eigen {
        values,
        right: ur,
        left: ul,
    })
}

/// Full SVD `A = U diag(s) V†` with singular values in non-increasing order.
pub struct Svd {
    pub u: ComplexMatrix,
    pub s: Vec<f64>,
    pub v: ComplexMatrix,
}

pub fn svd(a: &ComplexMatrix) -> Result<Svd> {
    let dec = a.svd().map_err(|_| Error::NoConvergence)?;
    let k = a.nrows().min(a.ncols());
    let s = (0..k).map(|i| dec.S()[i].re).collect();
    Ok(Svd {
        u: dec.U().to_owned(),
        s,
        v: dec.V().to_owned(),
    })
}

pub fn singular_values(a: &ComplexMatrix) -> Result<Vec<f64>> {
    a.singular_values().map_err(|_| Error::NoConvergence)
}
