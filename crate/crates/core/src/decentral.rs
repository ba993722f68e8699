//! Group-based decentralized processing.
//!
//! The array is split into `B` groups of `C = M/B` contiguous antennas. Each
//! group forms its partial Gram matrix `Ĝ_bᴴĜ_b` and matched-filter output
//! `Ĝ_bᴴy_b` locally; the central unit only sums the `B` partials. Groups
//! are processed in parallel and summed in group order, so results do not
//! depend on the worker count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::GramMatrix;
use crate::error::{Error, Result};
use crate::numerics::{CMatrix, C64};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroupPartition {
    m: usize,
    b: usize,
}

impl GroupPartition {
    pub fn antennas(&self) -> usize {
        self.m
    }

    pub fn groups(&self) -> usize {
        self.b
    }

    /// Antennas per group, `C = M/B`.
    pub fn group_size(&self) -> usize {
        self.m / self.b
    }

    /// Group owning antenna `m`.
    pub fn group_of(&self, m: usize) -> usize {
        m / self.group_size()
    }

    /// Antenna index range of group `b`.
    pub fn range(&self, b: usize) -> std::ops::Range<usize> {
        let c = self.group_size();
        b * c..(b + 1) * c
    }
}

/// Contiguous partition of `m` antennas into `b` equal groups.
pub fn partition(m: usize, b: usize) -> Result<GroupPartition> {
    if m == 0 || b == 0 {
        return Err(Error::config("B", "antenna and group counts must be positive"));
    }
    if m % b != 0 {
        return Err(Error::config("B", format!("B = {b} does not divide M = {m}")));
    }
    Ok(GroupPartition { m, b })
}

fn check_rows(g: &CMatrix, part: &GroupPartition) -> Result<()> {
    if g.rows() != part.antennas() {
        return Err(Error::DimensionMismatch {
            context: "partition",
            expected: part.antennas(),
            found: g.rows(),
        });
    }
    Ok(())
}

fn group_rows(g: &CMatrix, part: &GroupPartition, b: usize) -> CMatrix {
    let rows: Vec<usize> = part.range(b).collect();
    g.select_rows(&rows)
}

/// Partial Gram matrices `Ĝ_bᴴĜ_b`, one per group (computed in parallel).
pub fn local_gram(g: &CMatrix, part: &GroupPartition) -> Result<Vec<CMatrix>> {
    check_rows(g, part)?;
    Ok((0..part.groups())
        .into_par_iter()
        .map(|b| {
            let gb = group_rows(g, part, b);
            gb.adjoint_mul(&gb)
        })
        .collect())
}

/// Sums partial Gram matrices in group order.
pub fn aggregate_gram(partials: &[CMatrix]) -> Result<GramMatrix> {
    let first = partials.first().ok_or(Error::EmptyInput)?;
    let mut acc = first.clone();
    for p in &partials[1..] {
        if p.rows() != acc.rows() || p.cols() != acc.cols() {
            return Err(Error::DimensionMismatch {
                context: "aggregate_gram",
                expected: acc.rows(),
                found: p.rows(),
            });
        }
        acc = &acc + p;
    }
    Ok(GramMatrix::from_matrix(acc))
}

/// Partial matched-filter outputs `Ĝ_bᴴy_b`, one per group.
pub fn local_mf(g: &CMatrix, y: &[C64], part: &GroupPartition) -> Result<Vec<Vec<C64>>> {
    check_rows(g, part)?;
    if y.len() != g.rows() {
        return Err(Error::DimensionMismatch {
            context: "received vector",
            expected: g.rows(),
            found: y.len(),
        });
    }
    Ok((0..part.groups())
        .into_par_iter()
        .map(|b| group_rows(g, part, b).adjoint_mul_vec(&y[part.range(b)]))
        .collect())
}

/// Sums partial matched-filter outputs in group order.
pub fn aggregate_mf(partials: &[Vec<C64>]) -> Result<Vec<C64>> {
    let first = partials.first().ok_or(Error::EmptyInput)?;
    let mut acc = first.clone();
    for p in &partials[1..] {
        if p.len() != acc.len() {
            return Err(Error::DimensionMismatch {
                context: "aggregate_mf",
                expected: acc.len(),
                found: p.len(),
            });
        }
        for (a, v) in acc.iter_mut().zip(p) {
            *a += v;
        }
    }
    Ok(acc)
}

/// OFDM front-end and fronthaul parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterconnectConfig {
    /// Baseband sampling rate in samples/s.
    pub r_samp: f64,
    /// Occupied (data) subcarriers.
    pub n_data: u32,
    /// FFT size.
    pub n_sub: u32,
    /// Cyclic-prefix length in samples, averaged over a slot (may be fractional).
    pub n_cp: f64,
    /// Bits per complex sample.
    pub w: u32,
    pub m: u32,
}

impl InterconnectConfig {
    /// Average cyclic prefix of an LTE normal-CP slot: one 160-sample prefix
    /// followed by six 144-sample prefixes.
    pub const LTE_AVERAGE_CP: f64 = (160.0 + 6.0 * 144.0) / 7.0;

    /// 20 MHz LTE numerology with 100 antennas and 24-bit samples.
    pub fn lte_20mhz() -> Self {
        Self {
            r_samp: 30.72e6,
            n_data: 1200,
            n_sub: 2048,
            n_cp: Self::LTE_AVERAGE_CP,
            w: 24,
            m: 100,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r_samp > 0.0) {
            return Err(Error::config("r_samp", "must be positive"));
        }
        if self.n_data == 0 || self.n_sub == 0 || self.w == 0 || self.m == 0 {
            return Err(Error::config("interconnect", "n_data, n_sub, w and m must be positive"));
        }
        if self.n_data > self.n_sub {
            return Err(Error::config("n_data", "cannot exceed n_sub"));
        }
        if !(self.n_cp >= 0.0) {
            return Err(Error::config("n_cp", "must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InterconnectRate {
    /// Frequency-domain sample rate per antenna (samples/s).
    pub r_ofdm: f64,
    /// Aggregate fronthaul rate (bits/s).
    pub r_total: f64,
}

/// `R_OFDM = R_samp·N_data/(N_sub + N_CP)` and `R_total = M·R_OFDM·W`.
pub fn interconnect_rate(cfg: &InterconnectConfig) -> Result<InterconnectRate> {
    cfg.validate()?;
    let r_ofdm = cfg.r_samp * cfg.n_data as f64 / (cfg.n_sub as f64 + cfg.n_cp);
    Ok(InterconnectRate {
        r_ofdm,
        r_total: cfg.m as f64 * r_ofdm * cfg.w as f64,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LoadPeriod {
    Realization,
    Use,
}

/// Bits sent from the groups to the central unit, with the centralized
/// alternative (forwarding the raw channel or received samples).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LinkLoad {
    pub decentralized: u64,
    /// Per realization: only the upper triangle of each Hermitian partial.
    pub decentralized_triangular: u64,
    pub centralized: u64,
}

pub fn group_link_load(part: &GroupPartition, k: usize, w: u32, per: LoadPeriod) -> LinkLoad {
    let (b, m, k, w) = (part.groups() as u64, part.antennas() as u64, k as u64, w as u64);
    match per {
        LoadPeriod::Realization => LinkLoad {
            decentralized: b * k * k * w,
            decentralized_triangular: b * k * (k + 1) / 2 * w,
            centralized: m * k * w,
        },
        LoadPeriod::Use => LinkLoad {
            decentralized: b * k * w,
            decentralized_triangular: b * k * w,
            centralized: m * w,
        },
    }
}
