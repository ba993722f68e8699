//! Detectors that solve the linear system without forming an inverse.

use crate::error::{Error, Result};
use crate::numerics::{back_substitute, cholesky, dot, forward_substitute, norm, qrd, CMatrix, QrMode, C64};

/// Regularized squared distance `‖y − Ĝx‖² + N0‖x‖²` minimized by CD.
pub fn cd_objective(g: &CMatrix, y: &[C64], n0: f64, x: &[C64]) -> f64 {
    let gx = g.mul_vec(x);
    let dist: f64 = y.iter().zip(&gx).map(|(a, b)| (a - b).norm_sqr()).sum();
    dist + n0 * norm(x).powi(2)
}

fn check_system(g: &CMatrix, y: &[C64]) -> Result<()> {
    if y.len() != g.rows() {
        return Err(Error::DimensionMismatch {
            context: "received vector",
            expected: g.rows(),
            found: y.len(),
        });
    }
    if g.cols() == 0 {
        return Err(Error::EmptyInput);
    }
    Ok(())
}

/// `L` round-robin coordinate-descent sweeps from `x̂ = 0`.
///
/// Each update sets coordinate `i` to the exact minimizer of the objective
/// with the others held fixed, `x̂_i ← ĝ_iᴴ(y − Σ_{j≠i} ĝ_j x̂_j) / (‖ĝ_i‖² + N0)`,
/// using a running residual `r = y − Ĝx̂`. The fixed point is the MMSE
/// solution `(ĜᴴĜ + N0 I)⁻¹ Ĝᴴ y`.
pub fn cd_detect(g: &CMatrix, y: &[C64], n0: f64, l: usize) -> Result<Vec<C64>> {
    check_system(g, y)?;
    if l < 1 {
        return Err(Error::config("L", "at least one sweep is required"));
    }
    if !(n0 > 0.0) {
        return Err(Error::config("N0", "must be positive"));
    }
    let (m, k) = (g.rows(), g.cols());
    let cols: Vec<Vec<C64>> = (0..k).map(|i| g.col(i)).collect();
    let energy: Vec<f64> = cols.iter().map(|c| norm(c).powi(2)).collect();
    let mut x = vec![C64::new(0.0, 0.0); k];
    let mut r = y.to_vec();
    #[cfg(debug_assertions)]
    let mut last = cd_objective(g, y, n0, &x);
    for _ in 0..l {
        for i in 0..k {
            let updated = (dot(&cols[i], &r) + energy[i] * x[i]) / (energy[i] + n0);
            let delta = updated - x[i];
            for row in 0..m {
                r[row] -= cols[i][row] * delta;
            }
            x[i] = updated;
            #[cfg(debug_assertions)]
            {
                let f = cd_objective(g, y, n0, &x);
                debug_assert!(f <= last * (1.0 + 1e-12) + 1e-12, "CD objective increased: {last} -> {f}");
                last = f;
            }
        }
    }
    Ok(x)
}

/// Target system of the Cholesky detector.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ChdMode {
    Zf,
    Mmse(f64),
}

/// Solves `Z x̂ = Ĝᴴ y` (`Z = ĜᴴĜ`, plus `N0 I` in MMSE mode) by Cholesky
/// factorization and forward/back substitution.
pub fn chd_detect(g: &CMatrix, y: &[C64], mode: ChdMode) -> Result<Vec<C64>> {
    check_system(g, y)?;
    let mut z = g.adjoint_mul(g);
    if let ChdMode::Mmse(n0) = mode {
        if !(n0 > 0.0) {
            return Err(Error::config("N0", "must be positive"));
        }
        for i in 0..z.rows() {
            z[(i, i)] += n0;
        }
    }
    let l = cholesky(&z)?;
    let mf = g.adjoint_mul_vec(y);
    let v = forward_substitute(&l, &mf)?;
    back_substitute(&l.adjoint(), &v)
}

#[derive(Clone, Debug)]
pub struct MqrdOutput {
    pub x: Vec<C64>,
    /// `‖QR − Z‖_F / ‖Z‖_F` of the modified factorization.
    pub residual: f64,
    /// Rotations that fell back to the exact form.
    pub fallbacks: usize,
}

/// ZF detection through a modified-Givens QR of `Z = ĜᴴĜ`: the applied
/// rotations act on `Ĝᴴy` and `R x̂ = Qᴴ Ĝᴴ y` is back-substituted.
pub fn mqrd_detect(g: &CMatrix, y: &[C64], c_const: f64) -> Result<MqrdOutput> {
    check_system(g, y)?;
    let z = g.adjoint_mul(g);
    let qr = qrd(&z, QrMode::Modified { c_const })?;
    let mf = g.adjoint_mul_vec(y);
    let x = back_substitute(&qr.r, &qr.qh.mul_vec(&mf))?;
    Ok(MqrdOutput {
        x,
        residual: qr.residual,
        fallbacks: qr.fallbacks,
    })
}
