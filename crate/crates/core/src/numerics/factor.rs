use super::{CMatrix, C64};
use crate::error::{Error, Result};

const HERMITIAN_TOL: f64 = 1e-10;
// Pivots below this fraction of the largest diagonal entry are treated as zero.
const PIVOT_TOL: f64 = 1e-13;

/// Cholesky factorization `Z = L·Lᴴ` of a Hermitian positive-definite matrix.
///
/// The returned `L` is lower triangular with a real positive diagonal.
pub fn cholesky(z: &CMatrix) -> Result<CMatrix> {
    if !z.is_square() {
        return Err(Error::DimensionMismatch {
            context: "cholesky",
            expected: z.rows(),
            found: z.cols(),
        });
    }
    let scale = z.max_abs().max(f64::MIN_POSITIVE);
    let asym = z.hermitian_asymmetry();
    if asym > HERMITIAN_TOL * scale.max(1.0) {
        return Err(Error::NotHermitian { asymmetry: asym });
    }
    let n = z.rows();
    let max_diag = (0..n).map(|i| z[(i, i)].re).fold(0.0, f64::max);
    let mut l = CMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = z[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if !(d > PIVOT_TOL * max_diag) {
            return Err(Error::NotPositiveDefinite { pivot: j });
        }
        let ljj = d.sqrt();
        l[(j, j)] = C64::new(ljj, 0.0);
        for i in j + 1..n {
            let mut s = z[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / ljj;
        }
    }
    Ok(l)
}

/// Solves `L x = v` for lower-triangular `L`.
pub fn forward_substitute(l: &CMatrix, v: &[C64]) -> Result<Vec<C64>> {
    let n = check_triangular_system(l, v, "forward_substitute")?;
    let mut x = vec![C64::new(0.0, 0.0); n];
    for i in 0..n {
        let mut s = v[i];
        for k in 0..i {
            s -= l[(i, k)] * x[k];
        }
        let d = l[(i, i)];
        if d == C64::new(0.0, 0.0) {
            return Err(Error::Singular { index: i });
        }
        x[i] = s / d;
    }
    Ok(x)
}

/// Solves `R x = v` for upper-triangular `R`.
pub fn back_substitute(r: &CMatrix, v: &[C64]) -> Result<Vec<C64>> {
    let n = check_triangular_system(r, v, "back_substitute")?;
    let mut x = vec![C64::new(0.0, 0.0); n];
    for i in (0..n).rev() {
        let mut s = v[i];
        for k in i + 1..n {
            s -= r[(i, k)] * x[k];
        }
        let d = r[(i, i)];
        if d == C64::new(0.0, 0.0) {
            return Err(Error::Singular { index: i });
        }
        x[i] = s / d;
    }
    Ok(x)
}

fn check_triangular_system(t: &CMatrix, v: &[C64], context: &'static str) -> Result<usize> {
    if !t.is_square() {
        return Err(Error::DimensionMismatch {
            context,
            expected: t.rows(),
            found: t.cols(),
        });
    }
    if v.len() != t.rows() {
        return Err(Error::DimensionMismatch {
            context,
            expected: t.rows(),
            found: v.len(),
        });
    }
    Ok(v.len())
}

/// Solves `Z x = b` for Hermitian positive-definite `Z` through its Cholesky factor.
pub fn hpd_solve(z: &CMatrix, b: &[C64]) -> Result<Vec<C64>> {
    let l = cholesky(z)?;
    solve_with_factor(&l, b)
}

pub(crate) fn solve_with_factor(l: &CMatrix, b: &[C64]) -> Result<Vec<C64>> {
    let w = forward_substitute(l, b)?;
    back_substitute(&l.adjoint(), &w)
}

/// Explicit inverse of a Hermitian positive-definite matrix.
pub fn hpd_inverse(z: &CMatrix) -> Result<CMatrix> {
    let l = cholesky(z)?;
    let lh = l.adjoint();
    let n = z.rows();
    let mut inv = CMatrix::zeros(n, n);
    let mut e = vec![C64::new(0.0, 0.0); n];
    for j in 0..n {
        e.iter_mut().for_each(|x| *x = C64::new(0.0, 0.0));
        e[j] = C64::new(1.0, 0.0);
        let col = back_substitute(&lh, &forward_substitute(&l, &e)?)?;
        for (i, v) in col.into_iter().enumerate() {
            inv[(i, j)] = v;
        }
    }
    Ok(inv)
}
