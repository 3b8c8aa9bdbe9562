//! Thin wrappers over faer kernels.
//!
//! Every kernel runs with `Par::Seq` so that results are bit-identical no
//! matter how many worker threads the caller uses around them.

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::cholesky::llt;
use faer::linalg::evd::{self, ComputeEigenvectors};
use faer::linalg::matmul::matmul;
use faer::diag::Diag;
use faer::linalg::solvers::DenseSolveCore;
use faer::{c64, Accum, Conj, Mat, MatMut, MatRef, Par};

use crate::error::{Error, Result};

const PAR: Par = Par::Seq;

pub const ONE: c64 = c64 { re: 1.0, im: 0.0 };
pub const ZERO: c64 = c64 { re: 0.0, im: 0.0 };

/// `a * b`.
pub fn mul(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> Mat<c64> {
    let mut out = Mat::<c64>::zeros(a.nrows(), b.ncols());
    matmul(out.as_mut(), Accum::Replace, a, b, ONE, PAR);
    out
}

/// `a^H * b`.
pub fn mul_adj(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> Mat<c64> {
    let mut out = Mat::<c64>::zeros(a.ncols(), b.ncols());
    matmul(out.as_mut(), Accum::Replace, a.adjoint(), b, ONE, PAR);
    out
}

/// `a * b^H`.
pub fn mul_by_adj(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> Mat<c64> {
    let mut out = Mat::<c64>::zeros(a.nrows(), b.nrows());
    matmul(out.as_mut(), Accum::Replace, a, b.adjoint(), ONE, PAR);
    out
}

/// `a * a^H`, with the diagonal forced real.
pub fn gram(a: MatRef<'_, c64>) -> Mat<c64> {
    let mut g = mul_by_adj(a, a);
    for i in 0..g.nrows() {
        g[(i, i)].im = 0.0;
    }
    g
}

/// Adds `shift` to every diagonal entry.
pub fn add_diagonal(mut a: MatMut<'_, c64>, shift: f64) {
    for i in 0..a.nrows().min(a.ncols()) {
        a[(i, i)].re += shift;
    }
}

pub fn frobenius_norm_sqr(a: MatRef<'_, c64>) -> f64 {
    let mut acc = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            acc += a[(i, j)].norm_sqr();
        }
    }
    acc
}

pub fn trace(a: MatRef<'_, c64>) -> c64 {
    (0..a.nrows().min(a.ncols())).map(|i| a[(i, i)]).sum()
}

/// Cholesky factor of a Hermitian positive-definite matrix.
#[derive(Debug, Clone)]
pub struct Hpd {
    l: Mat<c64>,
}

impl Hpd {
    /// Factors `a`, reading only its lower triangle.
    pub fn factor(a: MatRef<'_, c64>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::Shape(format!("expected square matrix, got {}x{}", n, a.ncols())));
        }
        let mut l = a.to_owned();
        let mut buf =
            MemBuffer::new(llt::factor::cholesky_in_place_scratch::<c64>(n, PAR, Default::default()));
        llt::factor::cholesky_in_place(
            l.as_mut(),
            Default::default(),
            PAR,
            MemStack::new(&mut buf),
            Default::default(),
        )
        .map_err(|e| match e {
            llt::factor::LltError::NonPositivePivot { index } => {
                Error::NotPositiveDefinite { pivot: index }
            }
        })?;
        for j in 0..n {
            for i in 0..j {
                l[(i, j)] = ZERO;
            }
        }
        Ok(Self { l })
    }

    pub fn dim(&self) -> usize {
        self.l.nrows()
    }

    pub fn factor_l(&self) -> MatRef<'_, c64> {
        self.l.as_ref()
    }

    pub fn solve_in_place(&self, rhs: MatMut<'_, c64>) {
        let mut buf = MemBuffer::new(llt::solve::solve_in_place_scratch::<c64>(
            self.dim(),
            rhs.ncols(),
            PAR,
        ));
        llt::solve::solve_in_place_with_conj(
            self.l.as_ref(),
            Conj::No,
            rhs,
            PAR,
            MemStack::new(&mut buf),
        );
    }

    pub fn solve(&self, rhs: MatRef<'_, c64>) -> Mat<c64> {
        let mut x = rhs.to_owned();
        self.solve_in_place(x.as_mut());
        x
    }

    /// Full (both triangles) inverse.
    pub fn inverse(&self) -> Mat<c64> {
        let n = self.dim();
        let mut out = Mat::<c64>::zeros(n, n);
        let mut buf = MemBuffer::new(llt::inverse::inverse_scratch::<c64>(n, PAR));
        llt::inverse::inverse(out.as_mut(), self.l.as_ref(), PAR, MemStack::new(&mut buf));
        for j in 0..n {
            for i in 0..j {
                out[(i, j)] = out[(j, i)].conj();
            }
        }
        out
    }
}

/// Inverse of a general square matrix by partially pivoted LU.
pub fn general_inverse(a: MatRef<'_, c64>) -> Result<Mat<c64>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::Shape(format!("expected square matrix, got {}x{}", n, a.ncols())));
    }
    let inv = a.partial_piv_lu().inverse();
    for j in 0..n {
        for i in 0..n {
            if !(inv[(i, j)].re.is_finite() && inv[(i, j)].im.is_finite()) {
                return Err(Error::Numerical("matrix is numerically singular".into()));
            }
        }
    }
    Ok(inv)
}

/// Eigenvalues of a Hermitian matrix in nondecreasing order.
pub fn hermitian_eigenvalues(a: MatRef<'_, c64>) -> Result<Vec<f64>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::Shape(format!("expected square matrix, got {}x{}", n, a.ncols())));
    }
    let mut s = Diag::<c64>::zeros(n);
    let mut buf = MemBuffer::new(evd::self_adjoint_evd_scratch::<c64>(
        n,
        ComputeEigenvectors::No,
        PAR,
        Default::default(),
    ));
    evd::self_adjoint_evd(
        a,
        s.as_mut(),
        None,
        PAR,
        MemStack::new(&mut buf),
        Default::default(),
    )
    .map_err(|e| Error::Numerical(format!("eigenvalue solver failed: {e:?}")))?;
    let mut vals: Vec<f64> = s.column_vector().iter().map(|z| z.re).collect();
    vals.sort_by(f64::total_cmp);
    Ok(vals)
}

/// Spectral condition number of a Hermitian positive semidefinite matrix.
/// Returns infinity when the smallest eigenvalue is not positive.
pub fn hpd_condition_number(a: MatRef<'_, c64>) -> Result<f64> {
    let vals = hermitian_eigenvalues(a)?;
    match (vals.first(), vals.last()) {
        (Some(&lo), Some(&hi)) if lo > 0.0 => Ok(hi / lo),
        (Some(_), Some(_)) => Ok(f64::INFINITY),
        _ => Ok(1.0),
    }
}
