//! Gray-labelled square QAM with max-log soft demapping.
//!
//! Each symbol carries `2m` bits: the first `m` select the in-phase PAM
//! level and the last `m` the quadrature level. Within a dimension, bit
//! pattern `b` (MSB first) maps to amplitude `(2^m − 1) − 2·gray⁻¹(b)`, so
//! all-zero bits sit at the positive corner and neighbouring levels differ
//! in one bit. Constellations are scaled to unit average power.
//!
//! LLRs use the convention `log P(b = 0) / P(b = 1)`: positive values favour
//! a zero bit.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::C64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Modulation {
    #[serde(rename = "qpsk")]
    Qpsk,
    #[serde(rename = "16qam")]
    Qam16,
    #[serde(rename = "64qam")]
    Qam64,
    #[serde(rename = "256qam")]
    Qam256,
}

impl Modulation {
    pub fn bits_per_symbol(self) -> usize {
        match self {
            Modulation::Qpsk => 2,
            Modulation::Qam16 => 4,
            Modulation::Qam64 => 6,
            Modulation::Qam256 => 8,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Modulation::Qpsk => "QPSK",
            Modulation::Qam16 => "16-QAM",
            Modulation::Qam64 => "64-QAM",
            Modulation::Qam256 => "256-QAM",
        }
    }
}

fn gray_to_binary(mut g: usize) -> usize {
    let mut b = g;
    while g > 0 {
        g >>= 1;
        b ^= g;
    }
    b
}

#[derive(Clone, Debug, PartialEq)]
pub struct Constellation {
    modulation: Modulation,
    /// Normalized PAM amplitude for each per-dimension bit pattern.
    levels: Vec<f64>,
    /// All points, indexed by the symbol's bit pattern (MSB first).
    points: Vec<C64>,
}

impl Constellation {
    pub fn new(modulation: Modulation) -> Self {
        let m = modulation.bits_per_symbol() / 2;
        let n = 1usize << m;
        // Average energy of a square QAM with odd-integer coordinates.
        let scale = (2.0 * ((n * n) as f64 - 1.0) / 3.0).sqrt().recip();
        let levels: Vec<f64> = (0..n)
            .map(|b| ((n - 1) as f64 - 2.0 * gray_to_binary(b) as f64) * scale)
            .collect();
        let points = (0..n * n)
            .map(|s| C64::new(levels[s >> m], levels[s & (n - 1)]))
            .collect();
        Self {
            modulation,
            levels,
            points,
        }
    }

    pub fn modulation(&self) -> Modulation {
        self.modulation
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.modulation.bits_per_symbol()
    }

    /// Points indexed by label.
    pub fn points(&self) -> &[C64] {
        &self.points
    }

    pub fn average_power(&self) -> f64 {
        self.points.iter().map(|p| p.norm_sqr()).sum::<f64>() / self.points.len() as f64
    }
}

/// Maps bits (0/1, MSB first per symbol) to symbols.
pub fn map_bits(bits: &[u8], c: &Constellation) -> Result<Vec<C64>> {
    let q = c.bits_per_symbol();
    if bits.len() % q != 0 {
        return Err(Error::DimensionMismatch {
            context: "bits per symbol",
            expected: bits.len().div_ceil(q) * q,
            found: bits.len(),
        });
    }
    Ok(bits
        .chunks(q)
        .map(|chunk| {
            let label = chunk.iter().fold(0usize, |acc, &b| (acc << 1) | (b & 1) as usize);
            c.points[label]
        })
        .collect())
}

fn dimension_llrs(y: f64, levels: &[f64], inv_var: f64, out: &mut Vec<f64>) {
    let m = levels.len().trailing_zeros() as usize;
    let mut best = vec![[f64::INFINITY; 2]; m];
    for (pattern, &a) in levels.iter().enumerate() {
        let d = (y - a) * (y - a);
        for (bit, slot) in best.iter_mut().enumerate() {
            let v = (pattern >> (m - 1 - bit)) & 1;
            if d < slot[v] {
                slot[v] = d;
            }
        }
    }
    out.extend(best.iter().map(|[d0, d1]| (d1 - d0) * inv_var));
}

/// Max-log LLRs for each bit of each symbol, given the complex noise
/// variance of the estimate (`noise_var` per symbol, or one value for all).
pub fn demap_soft(symbols: &[C64], noise_var: &[f64], c: &Constellation) -> Result<Vec<f64>> {
    if noise_var.len() != 1 && noise_var.len() != symbols.len() {
        return Err(Error::DimensionMismatch {
            context: "noise variances",
            expected: symbols.len(),
            found: noise_var.len(),
        });
    }
    let mut out = Vec::with_capacity(symbols.len() * c.bits_per_symbol());
    for (i, y) in symbols.iter().enumerate() {
        let var = noise_var[if noise_var.len() == 1 { 0 } else { i }];
        // A vanishing variance only rescales the LLRs; keep them finite.
        let inv = 1.0 / var.max(1e-12);
        dimension_llrs(y.re, &c.levels, inv, &mut out);
        dimension_llrs(y.im, &c.levels, inv, &mut out);
    }
    Ok(out)
}

/// Nearest-point bit decisions.
pub fn demap_hard(symbols: &[C64], c: &Constellation) -> Vec<u8> {
    let llr = demap_soft(symbols, &[1.0], c).expect("single variance is always accepted");
    hard_decisions(&llr)
}

/// Sign decisions on LLRs (ties go to zero).
pub fn hard_decisions(llr: &[f64]) -> Vec<u8> {
    llr.iter().map(|&l| u8::from(l < 0.0)).collect()
}
