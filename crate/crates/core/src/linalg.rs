//! Dense complex linear algebra on top of faer.

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::lu::partial_pivoting::{factor, solve};
use faer::perm::PermRef;
use faer::{Mat, MatMut, MatRef};

use crate::exec;
use crate::{Error, Result, C64};

pub type CMat = Mat<C64>;
pub type RMat = Mat<f64>;

/// In-place partial-pivot LU factorization `P A = L U`.
pub struct Lu {
    lu: CMat,
    fwd: Vec<usize>,
    inv: Vec<usize>,
    pivot_ratio: f64,
}

impl Lu {
    /// Factor `a`, taking ownership so no copy of the matrix is made.
    pub fn factor(a: CMat, context: &str) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::Dimension(format!(
                "LU of {}x{} matrix",
                n,
                a.ncols()
            )));
        }
        let mut lu = a;
        let mut fwd = vec![0usize; n];
        let mut inv = vec![0usize; n];
        let par = exec::faer_par();
        let mut buf = MemBuffer::new(factor::lu_in_place_scratch::<usize, C64>(
            n,
            n,
            par,
            Default::default(),
        ));
        factor::lu_in_place(
            lu.as_mut(),
            &mut fwd,
            &mut inv,
            par,
            MemStack::new(&mut buf),
            Default::default(),
        );

        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for i in 0..n {
            let d = lu[(i, i)].norm();
            if !d.is_finite() {
                return Err(Error::Singular {
                    context: context.into(),
                    condition: f64::INFINITY,
                });
            }
            lo = lo.min(d);
            hi = hi.max(d);
        }
        let pivot_ratio = if n == 0 {
            1.0
        } else if lo == 0.0 {
            f64::INFINITY
        } else {
            hi / lo
        };
        if !(pivot_ratio < 1e15) && n > 0 {
            return Err(Error::Singular {
                context: context.into(),
                condition: pivot_ratio,
            });
        }
        Ok(Self {
            lu,
            fwd,
            inv,
            pivot_ratio,
        })
    }

    pub fn dim(&self) -> usize {
        self.lu.nrows()
    }

    /// max|u_ii| / min|u_ii|, a cheap lower bound on the condition number.
    pub fn pivot_ratio(&self) -> f64 {
        self.pivot_ratio
    }

    pub fn solve_in_place(&self, rhs: MatMut<'_, C64>) {
        let n = self.dim();
        let par = exec::faer_par();
        let perm = unsafe { PermRef::new_unchecked(&self.fwd, &self.inv, n) };
        let mut buf = MemBuffer::new(solve::solve_in_place_scratch::<usize, C64>(
            n,
            rhs.ncols(),
            par,
        ));
        solve::solve_in_place(
            self.lu.as_ref(),
            self.lu.as_ref(),
            perm,
            rhs,
            par,
            MemStack::new(&mut buf),
        );
    }

    pub fn solve(&self, rhs: MatRef<'_, C64>) -> CMat {
        let mut x = rhs.to_owned();
        self.solve_in_place(x.as_mut());
        x
    }

    pub fn solve_vec(&self, rhs: &[C64]) -> Vec<C64> {
        let mut x = col_from_slice(rhs);
        self.solve_in_place(x.as_mut());
        col_to_vec(&x)
    }
}

/// Dense inverse via LU; fails with [`Error::Singular`] like [`Lu::factor`].
pub fn inverse(a: MatRef<'_, C64>, context: &str) -> Result<CMat> {
    let n = a.nrows();
    let lu = Lu::factor(a.to_owned(), context)?;
    let mut x = Mat::identity(n, n);
    lu.solve_in_place(x.as_mut());
    Ok(x)
}

pub fn col_from_slice(v: &[C64]) -> CMat {
    Mat::from_fn(v.len(), 1, |i, _| v[i])
}

pub fn col_to_vec(m: &CMat) -> Vec<C64> {
    (0..m.nrows()).map(|i| m[(i, 0)]).collect()
}

/// Dense `a * b` honoring the execution policy.
pub fn matmul(a: MatRef<'_, C64>, b: MatRef<'_, C64>) -> CMat {
    let mut c = Mat::zeros(a.nrows(), b.ncols());
    faer::linalg::matmul::matmul(
        c.as_mut(),
        faer::Accum::Replace,
        a,
        b,
        C64::new(1.0, 0.0),
        exec::faer_par(),
    );
    c
}

/// `dst -= a * b`
pub fn sub_matmul(dst: MatMut<'_, C64>, a: MatRef<'_, C64>, b: MatRef<'_, C64>) {
    faer::linalg::matmul::matmul(
        dst,
        faer::Accum::Add,
        a,
        b,
        C64::new(-1.0, 0.0),
        exec::faer_par(),
    );
}

pub fn matvec(a: MatRef<'_, C64>, x: &[C64]) -> Vec<C64> {
    assert_eq!(a.ncols(), x.len());
    let mut y = vec![C64::new(0.0, 0.0); a.nrows()];
    for j in 0..a.ncols() {
        let xj = x[j];
        if xj == C64::new(0.0, 0.0) {
            continue;
        }
        for (i, yi) in y.iter_mut().enumerate() {
            *yi += a[(i, j)] * xj;
        }
    }
    y
}

/// `(A + Aᴴ) / 2`
pub fn hermitian_part(a: MatRef<'_, C64>) -> CMat {
    let n = a.nrows();
    Mat::from_fn(n, n, |i, j| (a[(i, j)] + a[(j, i)].conj()) * 0.5)
}

/// `xᴴ A x`
pub fn quad_form(a: MatRef<'_, C64>, x: &[C64]) -> C64 {
    let ax = matvec(a, x);
    dot_conj(x, &ax)
}

/// `Σ conj(x_i) y_i`
pub fn dot_conj(x: &[C64], y: &[C64]) -> C64 {
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}

pub fn norm2(x: &[C64]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

pub fn frobenius(a: MatRef<'_, C64>) -> f64 {
    let mut s = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            s += a[(i, j)].norm_sqr();
        }
    }
    s.sqrt()
}

pub fn max_abs(a: MatRef<'_, C64>) -> f64 {
    let mut m = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max(a[(i, j)].norm());
        }
    }
    m
}

/// Relative difference `‖a − b‖₂ / ‖b‖₂` of two vectors (0 when both vanish).
pub fn rel_diff(a: &[C64], b: &[C64]) -> f64 {
    let d: Vec<C64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let nb = norm2(b).max(norm2(a));
    if nb == 0.0 {
        0.0
    } else {
        norm2(&d) / nb
    }
}

pub fn to_complex(a: MatRef<'_, f64>) -> CMat {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| C64::new(a[(i, j)], 0.0))
}
