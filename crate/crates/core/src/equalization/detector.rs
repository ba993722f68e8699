//! Per-realization detector with optional fixed-point arithmetic.
//!
//! Work splits as in hardware: everything that depends only on the channel
//! (Gram matrix, inverse, factorization, rotations) is prepared once per
//! coherence block, and each received vector then costs a matched filter
//! plus a multiplication or substitution.
//!
//! Internally the problem is rescaled by `1/√M` (`Ĝ/√M`, `y/√M`, `N0/M`),
//! which leaves the solution unchanged but keeps the Gram matrix near the
//! identity so that a handful of integer bits covers every intermediate.
//! Under an [`Overlay`], stored operators are rounded to the operator format
//! and signals to the signal format after each dot product, division or
//! square root, modelling wide accumulators with rounding on write-back.

use super::series::{nsa_inverse_with, wnsa_inverse_with, NsaConfig, WnsaConfig};
use super::{ChdKind, Method};
use crate::error::{Error, Result};
use crate::numerics::{hpd_inverse, qrd, CMatrix, Overlay, QrMode, C64};

#[derive(Clone, Debug)]
enum Prepared {
    /// `x̂ = W · Ĝᴴy`.
    Explicit(CMatrix),
    Cholesky { l: CMatrix, inv_diag: Vec<f64> },
    Qr { qh: CMatrix, r: CMatrix, inv_diag: Vec<C64> },
    Cd { energy: Vec<f64>, inv: Vec<f64>, sweeps: usize },
}

#[derive(Clone, Debug)]
pub struct Detector {
    method: Method,
    overlay: Overlay,
    scale: f64,
    gs: CMatrix,
    prepared: Prepared,
    /// Per-user gain of the raw estimate, removed before demapping.
    beta: Vec<f64>,
    noise_var: Vec<f64>,
    diverging: bool,
}

impl Detector {
    /// Prepares `method` for channel estimate `g` and noise variance `n0`.
    pub fn prepare(g: &CMatrix, method: Method, n0: f64, overlay: Overlay) -> Result<Self> {
        method.validate()?;
        let (m, k) = (g.rows(), g.cols());
        if k == 0 || m < k {
            return Err(Error::config("K", "need 1 <= K <= M"));
        }
        if !(n0 >= 0.0) {
            return Err(Error::config("N0", "must be non-negative"));
        }
        let scale = 1.0 / (m as f64).sqrt();
        let ns = n0 * scale * scale;
        let gs = overlay.op_mat(&g.scale(C64::new(scale, 0.0)));
        let mut z = gs.adjoint_mul(&gs);
        for i in 0..k {
            z[(i, i)] = C64::new(z[(i, i)].re, 0.0);
            for j in i + 1..k {
                z[(j, i)] = z[(i, j)].conj();
            }
        }
        let z = overlay.op_mat(&z);
        let energy: Vec<f64> = (0..k).map(|i| z[(i, i)].re).collect();
        let noise_var: Vec<f64> = energy.iter().map(|&e| ns / e.max(f64::MIN_POSITIVE)).collect();
        let mut diverging = false;
        let regularized = |lambda: f64| {
            let mut zr = z.clone();
            for i in 0..k {
                zr[(i, i)] += lambda;
            }
            zr
        };
        let explicit_inverse = |lambda: f64| -> Result<CMatrix> {
            Ok(overlay.op_mat(&hpd_inverse(&overlay.op_mat(&regularized(lambda)))?))
        };
        let needs_noise = |what: &str| -> Result<()> {
            if ns > 0.0 {
                Ok(())
            } else {
                Err(Error::config("N0", format!("{what} needs a positive noise variance")))
            }
        };
        let prepared = match method {
            Method::Mr => Prepared::Explicit(CMatrix::from_diag(
                &energy.iter().map(|&e| C64::new(overlay.op_real(1.0 / e), 0.0)).collect::<Vec<_>>(),
            )),
            Method::Zf => Prepared::Explicit(explicit_inverse(0.0)?),
            Method::Mmse => {
                needs_noise("MMSE")?;
                Prepared::Explicit(explicit_inverse(ns)?)
            }
            Method::Rzf { lambda } => Prepared::Explicit(explicit_inverse(lambda * scale * scale)?),
            Method::Nsa { iterations } => {
                let s = nsa_inverse_with(&z, &NsaConfig::new(iterations)?, &overlay)?;
                diverging = s.diverging;
                Prepared::Explicit(s.inverse)
            }
            Method::Wnsa { iterations } => {
                let cfg = WnsaConfig::fitted(&z, iterations)?;
                let s = wnsa_inverse_with(&z, &cfg, &overlay)?;
                Prepared::Explicit(s.inverse)
            }
            Method::Chd { mode } => {
                let lambda = match mode {
                    ChdKind::Zf => 0.0,
                    ChdKind::Mmse => {
                        needs_noise("MMSE Cholesky")?;
                        ns
                    }
                };
                let (l, inv_diag) = cholesky_overlay(&overlay.op_mat(&regularized(lambda)), &overlay)?;
                Prepared::Cholesky { l, inv_diag }
            }
            Method::Mqrd { c_const } => {
                let qr = qrd(&z, QrMode::Modified { c_const })?;
                let r = overlay.op_mat(&qr.r);
                let mut inv_diag = Vec::with_capacity(k);
                for i in 0..k {
                    if r[(i, i)].norm() == 0.0 {
                        return Err(Error::Singular { index: i });
                    }
                    inv_diag.push(overlay.op(1.0 / r[(i, i)]));
                }
                Prepared::Qr {
                    qh: overlay.op_mat(&qr.qh),
                    r,
                    inv_diag,
                }
            }
            Method::Cd { iterations } => {
                needs_noise("coordinate descent")?;
                let inv = energy.iter().map(|&e| overlay.op_real(1.0 / (e + ns))).collect();
                Prepared::Cd {
                    energy: energy.clone(),
                    inv,
                    sweeps: iterations,
                }
            }
        };
        let beta = match (&prepared, method) {
            (Prepared::Explicit(w), _) => (0..k)
                .map(|u| (0..k).map(|j| w[(u, j)] * z[(j, u)]).sum::<C64>().re)
                .collect(),
            (_, Method::Chd { mode: ChdKind::Mmse }) => {
                let inv = hpd_inverse(&regularized(ns))?;
                (0..k).map(|u| 1.0 - ns * inv[(u, u)].re).collect()
            }
            (Prepared::Cd { .. }, _) => energy.iter().map(|&e| e / (e + ns)).collect(),
            _ => vec![1.0; k],
        };
        Ok(Self {
            method,
            overlay,
            scale,
            gs,
            prepared,
            beta,
            noise_var,
            diverging,
        })
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn users(&self) -> usize {
        self.gs.cols()
    }

    /// Noise variance of the unbiased estimate used to scale soft outputs
    /// (`N0/‖ĝ_k‖²`; a per-user constant within a block).
    pub fn noise_var(&self) -> &[f64] {
        &self.noise_var
    }

    /// Whether the Neumann series was flagged as divergent.
    pub fn diverging(&self) -> bool {
        self.diverging
    }

    /// Unbiased symbol estimates for one received vector.
    pub fn detect(&self, y: &[C64]) -> Result<Vec<C64>> {
        if y.len() != self.gs.rows() {
            return Err(Error::DimensionMismatch {
                context: "received vector",
                expected: self.gs.rows(),
                found: y.len(),
            });
        }
        let ov = &self.overlay;
        let ys: Vec<C64> = y.iter().map(|&v| ov.sig(v * self.scale)).collect();
        let k = self.users();
        let raw = match &self.prepared {
            Prepared::Cd { energy, inv, sweeps } => self.cd(&ys, energy, inv, *sweeps),
            other => {
                let mf: Vec<C64> = self.gs.adjoint_mul_vec(&ys).into_iter().map(|v| ov.sig(v)).collect();
                match other {
                    Prepared::Explicit(w) => w.mul_vec(&mf).into_iter().map(|v| ov.sig(v)).collect(),
                    Prepared::Cholesky { l, inv_diag } => {
                        let mut v = vec![C64::new(0.0, 0.0); k];
                        for i in 0..k {
                            let acc: C64 = (0..i).map(|j| l[(i, j)] * v[j]).sum();
                            v[i] = ov.sig((mf[i] - acc) * inv_diag[i]);
                        }
                        let mut x = vec![C64::new(0.0, 0.0); k];
                        for i in (0..k).rev() {
                            let acc: C64 = (i + 1..k).map(|j| l[(j, i)].conj() * x[j]).sum();
                            x[i] = ov.sig((v[i] - acc) * inv_diag[i]);
                        }
                        x
                    }
                    Prepared::Qr { qh, r, inv_diag } => {
                        let t: Vec<C64> = qh.mul_vec(&mf).into_iter().map(|v| ov.sig(v)).collect();
                        let mut x = vec![C64::new(0.0, 0.0); k];
                        for i in (0..k).rev() {
                            let acc: C64 = (i + 1..k).map(|j| r[(i, j)] * x[j]).sum();
                            x[i] = ov.sig((t[i] - acc) * inv_diag[i]);
                        }
                        x
                    }
                    Prepared::Cd { .. } => unreachable!(),
                }
            }
        };
        Ok(raw.into_iter().zip(&self.beta).map(|(x, b)| x / *b).collect())
    }

    fn cd(&self, ys: &[C64], energy: &[f64], inv: &[f64], sweeps: usize) -> Vec<C64> {
        let ov = &self.overlay;
        let (m, k) = (self.gs.rows(), self.gs.cols());
        let mut x = vec![C64::new(0.0, 0.0); k];
        let mut r = ys.to_vec();
        for _ in 0..sweeps {
            for i in 0..k {
                let corr: C64 = (0..m).map(|row| self.gs[(row, i)].conj() * r[row]).sum();
                let updated = ov.sig((corr + energy[i] * x[i]) * inv[i]);
                let delta = updated - x[i];
                if delta != C64::new(0.0, 0.0) {
                    for (row, rv) in r.iter_mut().enumerate() {
                        *rv = ov.sig(*rv - self.gs[(row, i)] * delta);
                    }
                }
                x[i] = updated;
            }
        }
        x
    }
}

/// Cholesky factor with each entry rounded to the operator format as it is
/// produced; later entries are computed from the rounded ones.
fn cholesky_overlay(z: &CMatrix, ov: &Overlay) -> Result<(CMatrix, Vec<f64>)> {
    let n = z.rows();
    let mut l = CMatrix::zeros(n, n);
    let mut inv_diag = vec![0.0; n];
    for j in 0..n {
        let pivot = z[(j, j)].re - (0..j).map(|p| l[(j, p)].norm_sqr()).sum::<f64>();
        if !(pivot > 0.0) {
            return Err(Error::NotPositiveDefinite { pivot: j });
        }
        let d = ov.op_real(pivot.sqrt());
        if d <= 0.0 {
            return Err(Error::NotPositiveDefinite { pivot: j });
        }
        l[(j, j)] = C64::new(d, 0.0);
        inv_diag[j] = ov.op_real(1.0 / d);
        for i in j + 1..n {
            let acc: C64 = (0..j).map(|p| l[(i, p)] * l[(j, p)].conj()).sum();
            l[(i, j)] = ov.op((z[(i, j)] - acc) * inv_diag[j]);
        }
    }
    Ok((l, inv_diag))
}
