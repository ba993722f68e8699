//! Downlink EVM with a nonlinear power amplifier behind every antenna.
//!
//! Symbols are precoded for the full array (`E‖Ax‖² = M`, unit average
//! power per antenna), each antenna's signal passes through its own PA, and
//! user `k` receives `[Gᵀ·PA(Ax)]_k`. The per-user EVM is measured after a
//! least-squares gain correction, so a pure gain error does not count.
//! PA distortion is spread over many spatial directions while the signal is
//! beamformed, which is why EVM improves with the array size.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::modulation::{Constellation, Modulation};
use crate::channel::{cn01, draw_iid_rayleigh};
use crate::equalization::{apply_precoder, precode, Method};
use crate::error::{Error, Result};
use crate::impairments::{evm_db, PaModel};
use crate::numerics::C64;
use crate::rng::{stream, tagged};
use rand::Rng;

const TAG_EVM: u16 = 10;

/// Amplifier operating point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
pub enum PaSpec {
    Linear,
    /// Third-order PA whose 1-dB compression point sits `backoff_db` above
    /// the per-antenna RMS input amplitude (0 dB: RMS at compression).
    Cubic { backoff_db: f64 },
}

impl PaSpec {
    /// Model for unit per-antenna RMS input.
    pub fn model(&self) -> Result<PaModel> {
        match *self {
            PaSpec::Linear => Ok(PaModel::linear()),
            PaSpec::Cubic { backoff_db } => {
                if !backoff_db.is_finite() {
                    return Err(Error::config("backoff_db", "must be finite"));
                }
                PaModel::from_compression_point(10f64.powf(backoff_db / 20.0))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvmConfig {
    pub m_list: Vec<usize>,
    pub k: usize,
    pub modulation: Modulation,
    pub precoder: Method,
    pub pa: PaSpec,
    /// Symbols per user per trial.
    pub uses: usize,
    pub trials: usize,
    pub seed: u64,
    /// Receiver SNR in dB; absent means noiseless.
    #[serde(default)]
    pub snr_db: Option<f64>,
}

impl EvmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k < 1 {
            return Err(Error::config("K", "at least one user is required"));
        }
        if self.m_list.is_empty() {
            return Err(Error::config("m_list", "is empty"));
        }
        if let Some(&m) = self.m_list.iter().find(|&&m| m < self.k) {
            return Err(Error::config("m_list", format!("M = {m} is smaller than K = {}", self.k)));
        }
        if self.uses < 1 || self.trials < 1 {
            return Err(Error::config("trials", "uses and trials must be at least 1"));
        }
        if !matches!(self.precoder, Method::Mr | Method::Zf | Method::Rzf { .. }) {
            return Err(Error::config("precoder", "must be mr, zf or rzf"));
        }
        self.precoder.validate()?;
        self.pa.model()?;
        if let Some(s) = self.snr_db {
            if s.is_nan() {
                return Err(Error::config("snr_db", "must be a number"));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvmPoint {
    pub m: usize,
    /// Mean over trials and users of the linear EVM, in dB.
    pub evm_db: f64,
    /// Standard error of the mean, propagated to dB.
    pub std_err_db: f64,
}

fn trial_evm(cfg: &EvmConfig, c: &Constellation, pa: &PaModel, m: usize, trial: u64) -> Result<f64> {
    let mut rng = stream(cfg.seed, tagged(TAG_EVM, trial));
    // Draw the largest array and keep the first m rows, so that the runs for
    // different M share their channels and symbols.
    let m_max = *cfg.m_list.iter().max().expect("validated");
    let g_full = draw_iid_rayleigh(m_max, cfg.k, &mut rng)?.into_matrix();
    let g = g_full.select_rows(&(0..m).collect::<Vec<_>>());
    let points = c.points();
    let x: Vec<Vec<C64>> = (0..cfg.uses)
        .map(|_| (0..cfg.k).map(|_| points[rng.random_range(0..points.len())]).collect())
        .collect();
    let noise: Vec<Vec<C64>> = (0..cfg.uses).map(|_| (0..cfg.k).map(|_| cn01(&mut rng)).collect()).collect();
    let sigma = cfg.snr_db.map_or(0.0, |s| 10f64.powf(-s / 20.0));

    let precoder = precode(&g, cfg.precoder, m as f64)?;
    let gt = g.transpose();
    let mut rx: Vec<Vec<C64>> = vec![Vec::with_capacity(cfg.uses); cfg.k];
    for (xt, wt) in x.iter().zip(&noise) {
        let s: Vec<C64> = apply_precoder(&precoder, xt)?.into_iter().map(|v| pa.apply_sample(v)).collect();
        for (u, r) in gt.mul_vec(&s).into_iter().enumerate() {
            rx[u].push(r + wt[u] * sigma);
        }
    }
    let mut total = 0.0;
    for (u, r) in rx.iter().enumerate() {
        let reference: Vec<C64> = x.iter().map(|xt| xt[u]).collect();
        total += 10f64.powf(evm_db(&reference, r)? / 10.0);
    }
    Ok(total / cfg.k as f64)
}

/// EVM per array size, averaged over users and trials.
pub fn run_downlink_evm(cfg: &EvmConfig) -> Result<Vec<EvmPoint>> {
    cfg.validate()?;
    let c = Constellation::new(cfg.modulation);
    let pa = cfg.pa.model()?;
    cfg.m_list
        .iter()
        .map(|&m| {
            let evms: Vec<f64> = (0..cfg.trials as u64)
                .into_par_iter()
                .map(|t| trial_evm(cfg, &c, &pa, m, t))
                .collect::<Result<_>>()?;
            let n = evms.len() as f64;
            let mean = evms.iter().sum::<f64>() / n;
            let var = if evms.len() > 1 {
                evms.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / (n - 1.0)
            } else {
                0.0
            };
            let se = (var / n).sqrt();
            Ok(EvmPoint {
                m,
                evm_db: 10.0 * mean.log10(),
                std_err_db: if mean > 0.0 { 10.0 / std::f64::consts::LN_10 * se / mean } else { 0.0 },
            })
        })
        .collect()
}
