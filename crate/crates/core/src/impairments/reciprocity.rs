//! Non-reciprocal transceiver front-ends and reciprocity calibration.
//!
//! The propagation channel `G̃` is reciprocal, but the measured uplink and
//! the effective downlink include the transceiver responses:
//! `G_UL[m,k] = R_B[m]·g̃[m,k]·t_k` and `G_DL[m,k] = r_k·g̃[m,k]·T_B[m]`
//! (the downlink received vector is `G_DLᵀ·s`). Terminal responses only
//! scale rows of the effective matrix; base-station mismatch `T_B/R_B`
//! mixes users unless it is removed by calibration.

use rand::Rng;

use crate::channel::cn01;
use crate::equalization::LinearCombiner;
use crate::error::{Error, Result};
use crate::numerics::{CMatrix, C64};

use super::db_or_floor;

#[derive(Clone, Debug, PartialEq)]
pub struct FrontEndSet {
    pub r_b: Vec<C64>,
    pub t_b: Vec<C64>,
    /// Terminal receiver responses `r_k`.
    pub r_u: Vec<C64>,
    /// Terminal transmitter responses `t_k`.
    pub t_u: Vec<C64>,
}

/// Bounds for randomly drawn front-end responses.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MismatchBounds {
    pub gain_db: f64,
    pub phase_deg: f64,
}

impl Default for MismatchBounds {
    fn default() -> Self {
        Self {
            gain_db: 1.0,
            phase_deg: 5.0,
        }
    }
}

fn draw_response<R: Rng + ?Sized>(b: &MismatchBounds, rng: &mut R) -> C64 {
    let g_db = if b.gain_db > 0.0 { rng.random_range(-b.gain_db..=b.gain_db) } else { 0.0 };
    let ph = if b.phase_deg > 0.0 { rng.random_range(-b.phase_deg..=b.phase_deg) } else { 0.0 };
    C64::from_polar(10f64.powf(g_db / 20.0), ph.to_radians())
}

impl FrontEndSet {
    pub fn ideal(m: usize, k: usize) -> Self {
        let one = C64::new(1.0, 0.0);
        Self {
            r_b: vec![one; m],
            t_b: vec![one; m],
            r_u: vec![one; k],
            t_u: vec![one; k],
        }
    }

    /// Every response drawn independently, uniform in gain (dB) and phase
    /// within the bounds.
    pub fn random<R: Rng + ?Sized>(m: usize, k: usize, bounds: MismatchBounds, rng: &mut R) -> Self {
        Self {
            r_b: (0..m).map(|_| draw_response(&bounds, rng)).collect(),
            t_b: (0..m).map(|_| draw_response(&bounds, rng)).collect(),
            r_u: (0..k).map(|_| draw_response(&bounds, rng)).collect(),
            t_u: (0..k).map(|_| draw_response(&bounds, rng)).collect(),
        }
    }

    /// Mismatch at the terminals only; base-station chains are reciprocal.
    pub fn terminal_only<R: Rng + ?Sized>(m: usize, k: usize, bounds: MismatchBounds, rng: &mut R) -> Self {
        let mut fe = Self::random(m, k, bounds, rng);
        fe.t_b = fe.r_b.clone();
        fe
    }

    pub fn antennas(&self) -> usize {
        self.r_b.len()
    }

    pub fn users(&self) -> usize {
        self.r_u.len()
    }
}

/// `(G_UL, G_DL)` for propagation channel `g` (M×K).
pub fn build_nonreciprocal(g: &CMatrix, fe: &FrontEndSet) -> Result<(CMatrix, CMatrix)> {
    let (m, k) = (g.rows(), g.cols());
    for (len, expected, what) in [
        (fe.r_b.len(), m, "R_B"),
        (fe.t_b.len(), m, "T_B"),
        (fe.r_u.len(), k, "r_k"),
        (fe.t_u.len(), k, "t_k"),
    ] {
        if len != expected {
            return Err(Error::DimensionMismatch {
                context: what,
                expected,
                found: len,
            });
        }
    }
    let ul = CMatrix::from_fn(m, k, |i, j| fe.r_b[i] * g[(i, j)] * fe.t_u[j]);
    let dl = CMatrix::from_fn(m, k, |i, j| fe.r_u[j] * g[(i, j)] * fe.t_b[i]);
    Ok((ul, dl))
}

/// Calibration weights `c_m = T_B[m]/R_B[m]`, each multiplied by
/// `1 + e_m` with `e_m ~ CN(0, 10^(residual_db/10))`. A residual of `−∞`
/// gives the exact ratios.
pub fn calibrate<R: Rng + ?Sized>(fe: &FrontEndSet, residual_db: f64, rng: &mut R) -> Result<Vec<C64>> {
    if residual_db.is_nan() {
        return Err(Error::config("residual_db", "must be a number"));
    }
    let sigma = if residual_db == f64::NEG_INFINITY { 0.0 } else { 10f64.powf(residual_db / 20.0) };
    fe.r_b
        .iter()
        .zip(&fe.t_b)
        .enumerate()
        .map(|(m, (r, t))| {
            if r.norm() == 0.0 {
                return Err(Error::Calibration { antenna: m });
            }
            let ratio = t / r;
            Ok(if sigma > 0.0 { ratio * (1.0 + cn01(rng) * sigma) } else { ratio })
        })
        .collect()
}

/// `diag(c)·G_UL`: uplink estimate mapped into the downlink frame.
pub fn apply_calibration(g_ul: &CMatrix, weights: &[C64]) -> Result<CMatrix> {
    if weights.len() != g_ul.rows() {
        return Err(Error::DimensionMismatch {
            context: "calibration weights",
            expected: g_ul.rows(),
            found: weights.len(),
        });
    }
    Ok(CMatrix::from_fn(g_ul.rows(), g_ul.cols(), |i, j| weights[i] * g_ul[(i, j)]))
}

/// Effective downlink matrix `G_DLᵀ·A` (K×K); entry `(k, j)` is the gain
/// from user `j`'s symbol to user `k`'s receiver.
pub fn effective_downlink(g_dl: &CMatrix, precoder: &LinearCombiner) -> CMatrix {
    g_dl.transpose().matmul(&precoder.a)
}

/// Multi-user interference `mean_k Σ_{j≠k}|E_kj|² / |E_kk|²` in dB.
pub fn mui_db(e: &CMatrix) -> f64 {
    let k = e.rows();
    let total: f64 = (0..k)
        .map(|u| {
            let own = e[(u, u)].norm_sqr();
            let leak: f64 = (0..k).filter(|&j| j != u).map(|j| e[(u, j)].norm_sqr()).sum();
            if own > 0.0 {
                leak / own
            } else {
                f64::INFINITY
            }
        })
        .sum();
    db_or_floor(total / k as f64)
}
