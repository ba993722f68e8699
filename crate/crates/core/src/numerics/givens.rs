//! Givens rotations and Givens-based QR decomposition.
//!
//! A rotation is stored as `(c, s)` and acts on a pair `(a, b)` through
//!
//! ```text
//! [ c*   s ] [a]
//! [ -s*  c ] [b]
//! ```
//!
//! With `c = a/r`, `s = b*/r`, `r = sqrt(|a|² + |b|²)` this maps `(a, b)` to
//! `(r, 0)` with `r` real, for complex `a` as well as real `a` (for real `a`
//! the conjugate on `c` is a no-op).
//!
//! The modified rotation replaces `r` by `|a|`, which drops the square root
//! and makes `c` a constant for a real pivot. It is only accurate while
//! `|a| ≫ |b|`, which holds for diagonally dominant Gram matrices.

use super::{CMatrix, C64};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GivensRotation {
    pub c: C64,
    pub s: C64,
    /// Rotated pivot magnitude (exact), or its `|a|` proxy (modified).
    pub r: f64,
}

impl GivensRotation {
    pub fn apply(&self, a: C64, b: C64) -> (C64, C64) {
        (self.c.conj() * a + self.s * b, -self.s.conj() * a + self.c * b)
    }
}

pub fn givens_exact(a: C64, b: C64) -> Result<GivensRotation> {
    let r = a.norm().hypot(b.norm());
    if r == 0.0 {
        return Err(Error::DegenerateRotation);
    }
    Ok(GivensRotation {
        c: a / r,
        s: b.conj() / r,
        r,
    })
}

/// Approximate rotation `c = c_const`, `s = b*/a` (stated here for a real
/// positive pivot; a complex pivot contributes its phase `a/|a|` to `c`).
pub fn givens_modified(a: C64, b: C64, c_const: f64) -> Result<GivensRotation> {
    let mag = a.norm();
    if mag == 0.0 {
        return Err(Error::ZeroPivot);
    }
    let phase = a / mag;
    Ok(GivensRotation {
        c: phase * c_const,
        s: b.conj() / mag,
        r: mag,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum QrMode {
    Exact,
    /// Modified rotations with constant `c`; pairs with `|a| < 2|b|` fall
    /// back to exact rotations.
    Modified { c_const: f64 },
}

impl QrMode {
    pub const DEFAULT_C_CONST: f64 = 1.0;
}

#[derive(Clone, Debug)]
pub struct QrResult {
    pub q: CMatrix,
    pub r: CMatrix,
    /// Accumulated left transform `Qᴴ` (satisfies `Qᴴ·Z = R` in both modes).
    pub qh: CMatrix,
    /// `‖QR − Z‖_F / ‖Z‖_F`.
    pub residual: f64,
    /// Number of rotations that used the exact fallback in modified mode.
    pub fallbacks: usize,
}

/// Givens QR decomposition `Z = QR` of a square matrix.
///
/// In modified mode the rotations are not unitary, so `Q = (Qᴴ)ᴴ` only
/// approximately reconstructs `Z`; the reconstruction error is reported in
/// [`QrResult::residual`]. Solving `R x = Qᴴ s` is exact in both modes
/// because `Qᴴ` is the transform that was actually applied.
pub fn qrd(z: &CMatrix, mode: QrMode) -> Result<QrResult> {
    if !z.is_square() {
        return Err(Error::DimensionMismatch {
            context: "qrd",
            expected: z.rows(),
            found: z.cols(),
        });
    }
    let n = z.rows();
    let mut r = z.clone();
    let mut qh = CMatrix::identity(n);
    let mut fallbacks = 0;
    for j in 0..n {
        for i in j + 1..n {
            let a = r[(j, j)];
            let b = r[(i, j)];
            if b == C64::new(0.0, 0.0) {
                continue;
            }
            let rot = match mode {
                QrMode::Exact => givens_exact(a, b)?,
                QrMode::Modified { c_const } => {
                    if a.norm() >= 2.0 * b.norm() {
                        givens_modified(a, b, c_const)?
                    } else {
                        fallbacks += 1;
                        givens_exact(a, b)?
                    }
                }
            };
            rotate_rows(&mut r, j, i, &rot);
            rotate_rows(&mut qh, j, i, &rot);
            // The annihilated entry is structurally zero.
            r[(i, j)] = C64::new(0.0, 0.0);
        }
    }
    let q = qh.adjoint();
    let norm_z = z.frobenius_norm();
    let residual = if norm_z > 0.0 {
        (&q.matmul(&r) - z).frobenius_norm() / norm_z
    } else {
        0.0
    };
    if !residual.is_finite() {
        log::warn!("qrd: non-finite reconstruction residual (overflow)");
    }
    Ok(QrResult {
        q,
        r,
        qh,
        residual,
        fallbacks,
    })
}

fn rotate_rows(m: &mut CMatrix, top: usize, bottom: usize, rot: &GivensRotation) {
    for col in 0..m.cols() {
        let (a, b) = rot.apply(m[(top, col)], m[(bottom, col)]);
        m[(top, col)] = a;
        m[(bottom, col)] = b;
    }
}
