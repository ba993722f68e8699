//! Channel realizations, pilot-based estimation and Gram statistics.
//!
//! Channels are block-static: one [`ChannelMatrix`] per coherence block.
//! Column `k` holds the M-vector of responses between terminal `k` and the
//! array.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::io::{BufRead, Write};

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::numerics::{CMatrix, C64};

#[derive(Clone, Debug, PartialEq)]
pub struct ChannelMatrix {
    g: CMatrix,
}

impl ChannelMatrix {
    pub fn new(g: CMatrix) -> Result<Self> {
        if g.rows() == 0 || g.cols() == 0 {
            return Err(Error::config("channel", "dimensions must be positive"));
        }
        if !g.is_finite() {
            return Err(Error::config("channel", "entries must be finite"));
        }
        Ok(Self { g })
    }

    /// Antenna count M.
    pub fn antennas(&self) -> usize {
        self.g.rows()
    }

    /// User count K.
    pub fn users(&self) -> usize {
        self.g.cols()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.g
    }

    pub fn into_matrix(self) -> CMatrix {
        self.g
    }

    pub fn column(&self, k: usize) -> Vec<C64> {
        self.g.col(k)
    }
}

/// Number of channel uses over which a realization is held fixed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CoherenceBlock {
    pub uses: usize,
    pub pilot_len: usize,
}

impl CoherenceBlock {
    pub fn new(uses: usize, pilot_len: usize, users: usize) -> Result<Self> {
        if uses < 1 {
            return Err(Error::config("coherence", "block must contain at least one channel use"));
        }
        if pilot_len < users {
            return Err(Error::config("pilot_len", "orthogonal pilots need pilot_len >= K"));
        }
        Ok(Self { uses, pilot_len })
    }
}

/// Hermitian Gram matrix `Z = GᴴG`.
#[derive(Clone, Debug, PartialEq)]
pub struct GramMatrix {
    z: CMatrix,
}

impl GramMatrix {
    pub fn matrix(&self) -> &CMatrix {
        &self.z
    }

    pub fn into_matrix(self) -> CMatrix {
        self.z
    }

    pub fn from_matrix(z: CMatrix) -> Self {
        Self { z }
    }
}

/// One circularly-symmetric `CN(0, 1)` sample.
pub fn cn01<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re * FRAC_1_SQRT_2, im * FRAC_1_SQRT_2)
}

/// i.i.d. Rayleigh block-fading channel with `CN(0, 1)` entries.
pub fn draw_iid_rayleigh<R: Rng + ?Sized>(m: usize, k: usize, rng: &mut R) -> Result<ChannelMatrix> {
    if k < 1 {
        return Err(Error::config("K", "at least one user is required"));
    }
    if m < k {
        return Err(Error::config("M", format!("M = {m} is smaller than K = {k}")));
    }
    ChannelMatrix::new(CMatrix::from_fn(m, k, |_, _| cn01(rng)))
}

/// Line-of-sight uniform linear array: column `k` is the steering vector
/// `exp(j·2π·spacing·m·sin(angle_k))`, spacing in wavelengths.
pub fn draw_los_ula(m: usize, angles: &[f64], spacing: f64) -> Result<ChannelMatrix> {
    if angles.is_empty() {
        return Err(Error::config("angles", "at least one user angle is required"));
    }
    if !(spacing > 0.0) {
        return Err(Error::config("spacing", "must be positive"));
    }
    ChannelMatrix::new(CMatrix::from_fn(m, angles.len(), |row, k| {
        C64::from_polar(1.0, 2.0 * PI * spacing * row as f64 * angles[k].sin())
    }))
}

/// Half-wavelength default element spacing.
pub const HALF_WAVELENGTH: f64 = 0.5;

/// Least-squares channel estimate from orthogonal (unitary DFT) pilots.
///
/// The pilot block is `Y = √ρ·G·Φ + W` with `ΦΦᴴ = I` and `W` white `CN(0,1)`,
/// so `Ĝ = YΦᴴ/√ρ = G + E` with `E ~ CN(0, 1/ρ)`. An infinite pilot SNR
/// returns `G` unchanged.
pub fn estimate_ls<R: Rng + ?Sized>(
    g_true: &ChannelMatrix,
    pilot_snr_db: f64,
    rng: &mut R,
) -> Result<ChannelMatrix> {
    if pilot_snr_db == f64::INFINITY {
        return Ok(g_true.clone());
    }
    if pilot_snr_db.is_nan() {
        return Err(Error::config("pilot_snr_db", "must be a number"));
    }
    let k = g_true.users();
    let m = g_true.antennas();
    let rho = 10f64.powf(pilot_snr_db / 10.0);
    let sqrt_rho = rho.sqrt();
    let pilots = dft_pilots(k);
    let mut y = g_true.matrix().matmul(&pilots).scale(C64::new(sqrt_rho, 0.0));
    for i in 0..m {
        for v in y.row_mut(i) {
            *v += cn01(rng);
        }
    }
    let est = y
        .matmul(&pilots.adjoint())
        .scale(C64::new(1.0 / sqrt_rho, 0.0));
    ChannelMatrix::new(est)
}

/// Unitary K×K DFT pilot matrix.
pub fn dft_pilots(k: usize) -> CMatrix {
    let norm = 1.0 / (k as f64).sqrt();
    CMatrix::from_fn(k, k, |u, t| {
        C64::from_polar(norm, -2.0 * PI * (u * t) as f64 / k as f64)
    })
}

pub fn gram(g: &ChannelMatrix) -> GramMatrix {
    let mut z = g.matrix().adjoint_mul(g.matrix());
    // Enforce exact Hermitian symmetry; the product is symmetric only up to rounding.
    let k = z.rows();
    for i in 0..k {
        z[(i, i)] = C64::new(z[(i, i)].re, 0.0);
        for j in i + 1..k {
            z[(j, i)] = z[(i, j)].conj();
        }
    }
    GramMatrix { z }
}

/// Diagonal-dominance ratio `max_{i≠j} |z_ij| / min_i |z_ii|`.
pub fn diag_dominance(z: &GramMatrix) -> f64 {
    let z = z.matrix();
    let k = z.rows();
    let min_diag = (0..k).map(|i| z[(i, i)].norm()).fold(f64::INFINITY, f64::min);
    let mut max_off = 0.0f64;
    for i in 0..k {
        for j in 0..k {
            if i != j {
                max_off = max_off.max(z[(i, j)].norm());
            }
        }
    }
    if max_off == 0.0 {
        0.0
    } else {
        max_off / min_diag
    }
}

/// Sample variance of `‖g‖²/M` over `trials` single-user Rayleigh draws.
pub fn hardening_variance<R: Rng + ?Sized>(m: usize, trials: usize, rng: &mut R) -> Result<f64> {
    if trials < 1000 {
        return Err(Error::config("trials", "at least 1000 draws are required"));
    }
    if m < 1 {
        return Err(Error::config("M", "must be positive"));
    }
    let samples: Vec<f64> = (0..trials)
        .map(|_| (0..m).map(|_| cn01(rng).norm_sqr()).sum::<f64>() / m as f64)
        .collect();
    let mean = samples.iter().sum::<f64>() / trials as f64;
    Ok(samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (trials - 1) as f64)
}

/// Received power `g_tx·g_rx·d^(−n)·p_tx` (unit proportionality constant).
pub fn rx_power(p_tx: f64, g_tx: f64, g_rx: f64, d: f64, n: f64) -> Result<f64> {
    if !(d > 0.0) {
        return Err(Error::config("d", "distance must be positive"));
    }
    if !(n >= 2.0) {
        return Err(Error::config("n", "path-loss exponent must be at least 2"));
    }
    Ok(g_tx * g_rx * d.powf(-n) * p_tx)
}

/// Writes a realization as CSV: a `M,K,seed` header line, then M rows of K
/// `re,im` pairs (row-major).
pub fn write_csv<W: Write>(out: &mut W, g: &ChannelMatrix, seed: u64) -> std::io::Result<()> {
    writeln!(out, "M,K,seed")?;
    writeln!(out, "{},{},{}", g.antennas(), g.users(), seed)?;
    for i in 0..g.antennas() {
        let line: Vec<String> = g
            .matrix()
            .row(i)
            .iter()
            .map(|z| format!("{:e},{:e}", z.re, z.im))
            .collect();
        writeln!(out, "{}", line.join(","))?;
    }
    Ok(())
}

/// Reads the format produced by [`write_csv`]; returns the matrix and seed.
pub fn read_csv<B: BufRead>(input: B) -> Result<(ChannelMatrix, u64)> {
    let bad = |why: &str| Error::config("channel csv", why.to_string());
    let mut lines = input.lines().map(|l| l.map_err(|e| bad(&e.to_string())));
    let header = lines.next().ok_or_else(|| bad("missing header"))??;
    if header.trim() != "M,K,seed" {
        return Err(bad("unexpected header"));
    }
    let dims = lines.next().ok_or_else(|| bad("missing dimensions"))??;
    let parts: Vec<&str> = dims.trim().split(',').collect();
    if parts.len() != 3 {
        return Err(bad("dimension line needs M,K,seed"));
    }
    let m: usize = parts[0].parse().map_err(|_| bad("M"))?;
    let k: usize = parts[1].parse().map_err(|_| bad("K"))?;
    let seed: u64 = parts[2].parse().map_err(|_| bad("seed"))?;
    let mut data = Vec::with_capacity(m * k);
    for _ in 0..m {
        let line = lines.next().ok_or_else(|| bad("missing row"))??;
        let vals: Vec<f64> = line
            .trim()
            .split(',')
            .map(|v| v.parse::<f64>().map_err(|_| bad("entry")))
            .collect::<Result<_>>()?;
        if vals.len() != 2 * k {
            return Err(bad("row length"));
        }
        data.extend(vals.chunks(2).map(|p| C64::new(p[0], p[1])));
    }
    Ok((ChannelMatrix::new(CMatrix::from_vec(m, k, data))?, seed))
}
