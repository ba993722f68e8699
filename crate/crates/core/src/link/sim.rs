//! Uplink Monte-Carlo BER simulation.
//!
//! A frame is one coherence block of `P` channel uses. Per frame the channel,
//! payload bits, unit noise and (if configured) victim antennas are drawn
//! once from streams keyed by the frame index, and the same draws are reused
//! at every SNR point, so neighbouring points and competing configurations
//! are compared on common random numbers. Frames run in parallel and are
//! reduced in index order, so tables do not depend on the worker count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::coding::{conv_encode, viterbi_decode, ConvCode, Interleaver};
use super::modulation::{demap_soft, hard_decisions, map_bits, Constellation, Modulation};
use crate::channel::{cn01, draw_iid_rayleigh, estimate_ls};
use crate::equalization::{Detector, Method};
use crate::error::{Error, Result};
use crate::impairments::{apply_adc, apply_errors, draw_victims, exclude_antennas, surviving, AdcConfig, CircuitErrorModel};
use crate::numerics::{CMatrix, FixedPointFormat, Overlay, C64};
use crate::rng::{stream, tagged};
use rand::Rng;

const TAG_FRAME: u16 = 1;
const TAG_PILOT: u16 = 2;
const TAG_VICTIMS: u16 = 3;
const TAG_TRANSIENT: u16 = 4;

/// Fixed-point formats for the detector arithmetic: sign, `integer_bits`,
/// and the given fraction bits, saturating.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FxpConfig {
    pub signal_fraction_bits: u32,
    pub operator_fraction_bits: u32,
    #[serde(default = "default_integer_bits")]
    pub integer_bits: u32,
}

fn default_integer_bits() -> u32 {
    4
}

impl FxpConfig {
    /// Same fraction width for signals and operators.
    pub fn uniform(fraction_bits: u32) -> Self {
        Self {
            signal_fraction_bits: fraction_bits,
            operator_fraction_bits: fraction_bits,
            integer_bits: default_integer_bits(),
        }
    }

    pub fn overlay(&self) -> Result<Overlay> {
        let fmt = |n: u32| FixedPointFormat::new(n, n + self.integer_bits + 1, true);
        Ok(Overlay::new(fmt(self.signal_fraction_bits)?, fmt(self.operator_fraction_bits)?))
    }
}

/// What the receiver does with antennas hit by circuit errors.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VictimPolicy {
    /// Detect over all antennas, corrupted ones included.
    #[default]
    Ignore,
    /// Drop the victim antennas (known to the receiver) before detection.
    Exclude,
}

/// Uplink link-level simulation parameters.
///
/// SNR is the average per-receive-antenna SNR `1/N0` for unit-power
/// symbols and unit-variance channel entries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub m: usize,
    pub k: usize,
    /// Ascending SNR grid in dB; `inf` means noiseless.
    pub snr_db: Vec<f64>,
    pub modulation: Modulation,
    /// Rate-1/2 convolutional coding over each user's frame.
    #[serde(default)]
    pub coded: bool,
    pub detector: Method,
    /// Detector arithmetic format; absent means double precision.
    #[serde(default)]
    pub fixed_point: Option<FxpConfig>,
    /// Channel uses per coherence block (frame length).
    pub coherence: usize,
    /// Frames simulated per SNR point.
    pub frames: usize,
    pub seed: u64,
    /// Pilot SNR for least-squares estimation; absent means perfect CSI.
    #[serde(default)]
    pub pilot_snr_db: Option<f64>,
    #[serde(default)]
    pub adc: Option<AdcConfig>,
    /// Digital errors at the antenna outputs. They act on the AGC-normalized
    /// signal (unit RMS per real component), so `full_scale` is in units of
    /// that RMS.
    #[serde(default)]
    pub circuit: Option<CircuitErrorModel>,
    #[serde(default)]
    pub policy: VictimPolicy,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k < 1 {
            return Err(Error::config("K", "at least one user is required"));
        }
        if self.m < self.k {
            return Err(Error::config("K", format!("K = {} exceeds M = {}", self.k, self.m)));
        }
        if self.frames < 1 {
            return Err(Error::config("frames", "must be at least 1"));
        }
        if self.coherence < 1 {
            return Err(Error::config("coherence", "must be at least 1"));
        }
        if self.snr_db.is_empty() {
            return Err(Error::config("snr_db", "grid is empty"));
        }
        if self.snr_db.iter().any(|s| s.is_nan() || *s == f64::NEG_INFINITY) {
            return Err(Error::config("snr_db", "values must be numbers (inf allowed)"));
        }
        if self.snr_db.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::config("snr_db", "grid must be strictly ascending"));
        }
        if self.coded && self.info_bits() == 0 {
            return Err(Error::config("coherence", "frame too short for the terminated code"));
        }
        self.detector.validate()?;
        if let Some(f) = &self.fixed_point {
            f.overlay()?;
        }
        if let Some(p) = self.pilot_snr_db {
            if p.is_nan() {
                return Err(Error::config("pilot_snr_db", "must be a number"));
            }
        }
        if let Some(a) = &self.adc {
            a.validate()?;
        }
        if let Some(c) = &self.circuit {
            c.validate()?;
            if self.policy == VictimPolicy::Exclude && self.m - c.victim_count(self.m) < self.k {
                return Err(Error::config(
                    "victim_fraction",
                    "excluding the victims leaves fewer antennas than users",
                ));
            }
        }
        Ok(())
    }

    /// Coded bits carried by one user's frame.
    pub fn frame_bits(&self) -> usize {
        self.coherence * self.modulation.bits_per_symbol()
    }

    /// Payload bits per user and frame.
    pub fn info_bits(&self) -> usize {
        if self.coded {
            ConvCode.info_len(self.frame_bits()).unwrap_or(0)
        } else {
            self.frame_bits()
        }
    }

    pub fn overlay(&self) -> Result<Overlay> {
        self.fixed_point.as_ref().map_or(Ok(Overlay::NONE), FxpConfig::overlay)
    }
}

/// Noise variance for a per-antenna SNR in dB.
pub fn snr_to_n0(snr_db: f64) -> f64 {
    if snr_db == f64::INFINITY {
        0.0
    } else {
        10f64.powf(-snr_db / 10.0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BerPoint {
    pub snr_db: f64,
    pub n0: f64,
    pub bits: u64,
    pub errors: u64,
    pub ber: f64,
    /// Standard error of `ber` from the spread of per-frame error rates.
    pub std_err: f64,
    pub per_user_ber: Vec<f64>,
    /// Frames in which the Neumann series was flagged as divergent.
    pub diverging_frames: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BerTable {
    pub label: String,
    pub points: Vec<BerPoint>,
}

struct FrameResult {
    /// `[snr][user]` bit errors.
    errors: Vec<Vec<u32>>,
    diverging: Vec<bool>,
}

struct FrameDraws {
    g: CMatrix,
    g_est: CMatrix,
    info: Vec<Vec<u8>>,
    /// `[use][user]` transmitted symbols.
    x: Vec<Vec<C64>>,
    /// `[use][antenna]` unit-variance noise.
    w: Vec<Vec<C64>>,
    victims: Vec<usize>,
}

fn draw_frame(cfg: &SimConfig, c: &Constellation, il: Option<&Interleaver>, frame: u64) -> Result<FrameDraws> {
    let mut rng = stream(cfg.seed, tagged(TAG_FRAME, frame));
    let g = draw_iid_rayleigh(cfg.m, cfg.k, &mut rng)?;
    let n_info = cfg.info_bits();
    let mut info = Vec::with_capacity(cfg.k);
    let mut per_user_symbols = Vec::with_capacity(cfg.k);
    for _ in 0..cfg.k {
        let bits: Vec<u8> = (0..n_info).map(|_| rng.random_range(0..2u8)).collect();
        let coded = match il {
            Some(il) => il.interleave(&conv_encode(&bits)),
            None => bits.clone(),
        };
        per_user_symbols.push(map_bits(&coded, c)?);
        info.push(bits);
    }
    let x = (0..cfg.coherence)
        .map(|t| per_user_symbols.iter().map(|s| s[t]).collect())
        .collect();
    let w = (0..cfg.coherence)
        .map(|_| (0..cfg.m).map(|_| cn01(&mut rng)).collect())
        .collect();
    let g_est = match cfg.pilot_snr_db {
        Some(p) => estimate_ls(&g, p, &mut stream(cfg.seed, tagged(TAG_PILOT, frame)))?.into_matrix(),
        None => g.matrix().clone(),
    };
    let victims = match &cfg.circuit {
        Some(model) => draw_victims(cfg.m, model, &mut stream(cfg.seed, tagged(TAG_VICTIMS, frame))),
        None => Vec::new(),
    };
    Ok(FrameDraws {
        g: g.into_matrix(),
        g_est,
        info,
        x,
        w,
        victims,
    })
}

fn simulate_frame(
    cfg: &SimConfig,
    c: &Constellation,
    il: Option<&Interleaver>,
    overlay: Overlay,
    frame: u64,
) -> Result<FrameResult> {
    let d = draw_frame(cfg, c, il, frame)?;
    let exclude = cfg.policy == VictimPolicy::Exclude && !d.victims.is_empty();
    let keep = if exclude { surviving(cfg.m, &d.victims)? } else { Vec::new() };
    let g_det = if exclude { exclude_antennas(&d.g_est, &d.victims)? } else { d.g_est.clone() };
    let clean: Vec<Vec<C64>> = d.x.iter().map(|x| d.g.mul_vec(x)).collect();

    let mut errors = Vec::with_capacity(cfg.snr_db.len());
    let mut diverging = Vec::with_capacity(cfg.snr_db.len());
    for &snr in &cfg.snr_db {
        let n0 = snr_to_n0(snr);
        let sigma = n0.sqrt();
        let det = Detector::prepare(&g_det, cfg.detector, n0, overlay)?;
        let mut transient_rng = stream(cfg.seed, tagged(TAG_TRANSIENT, frame));
        let rms = ((cfg.k as f64 + n0) / 2.0).sqrt();
        let mut est: Vec<Vec<C64>> = vec![Vec::with_capacity(cfg.coherence); cfg.k];
        for (s, w) in clean.iter().zip(&d.w) {
            let mut y: Vec<C64> = s.iter().zip(w).map(|(a, b)| a + b * sigma).collect();
            if let Some(adc) = &cfg.adc {
                y = apply_adc(&y, adc)?;
            }
            if let Some(model) = &cfg.circuit {
                y.iter_mut().for_each(|v| *v /= rms);
                apply_errors(&mut y, model, &d.victims, &mut transient_rng);
                y.iter_mut().for_each(|v| *v *= rms);
            }
            let y_det: Vec<C64> = if exclude { keep.iter().map(|&i| y[i]).collect() } else { y };
            for (u, v) in det.detect(&y_det)?.into_iter().enumerate() {
                est[u].push(v);
            }
        }
        let mut user_errors = Vec::with_capacity(cfg.k);
        for (u, symbols) in est.iter().enumerate() {
            let llr = demap_soft(symbols, &det.noise_var()[u..=u], c)?;
            let decoded = match il {
                Some(il) => viterbi_decode(&il.deinterleave(&llr))?,
                None => hard_decisions(&llr),
            };
            let e = decoded.iter().zip(&d.info[u]).filter(|(a, b)| a != b).count();
            user_errors.push(e as u32);
        }
        errors.push(user_errors);
        diverging.push(det.diverging());
    }
    Ok(FrameResult { errors, diverging })
}

/// Runs the configured uplink and returns one BER point per SNR value.
pub fn run_uplink_ber(cfg: &SimConfig) -> Result<BerTable> {
    cfg.validate()?;
    let c = Constellation::new(cfg.modulation);
    let il = cfg.coded.then(|| Interleaver::new(cfg.frame_bits()));
    let overlay = cfg.overlay()?;
    let frames: Vec<FrameResult> = (0..cfg.frames as u64)
        .into_par_iter()
        .map(|f| simulate_frame(cfg, &c, il.as_ref(), overlay, f))
        .collect::<Result<_>>()?;

    let n_info = cfg.info_bits() as u64;
    let frame_bits = (n_info * cfg.k as u64) as f64;
    let points = cfg
        .snr_db
        .iter()
        .enumerate()
        .map(|(i, &snr)| {
            let mut per_user = vec![0u64; cfg.k];
            let mut frame_rates = Vec::with_capacity(frames.len());
            let mut diverging_frames = 0;
            for fr in &frames {
                let mut total = 0u64;
                for (acc, &e) in per_user.iter_mut().zip(&fr.errors[i]) {
                    *acc += e as u64;
                    total += e as u64;
                }
                frame_rates.push(total as f64 / frame_bits);
                diverging_frames += fr.diverging[i] as u64;
            }
            let errors: u64 = per_user.iter().sum();
            let bits = n_info * cfg.k as u64 * frames.len() as u64;
            let ber = errors as f64 / bits as f64;
            BerPoint {
                snr_db: snr,
                n0: snr_to_n0(snr),
                bits,
                errors,
                ber,
                std_err: standard_error(&frame_rates, ber, bits),
                per_user_ber: per_user.iter().map(|&e| e as f64 / (n_info * frames.len() as u64) as f64).collect(),
                diverging_frames,
            }
        })
        .collect();
    Ok(BerTable {
        label: label(cfg),
        points,
    })
}

fn label(cfg: &SimConfig) -> String {
    match &cfg.fixed_point {
        Some(f) => format!("{} [{}/{} frac bits]", cfg.detector.label(), f.signal_fraction_bits, f.operator_fraction_bits),
        None => cfg.detector.label(),
    }
}

fn standard_error(rates: &[f64], mean: f64, bits: u64) -> f64 {
    let n = rates.len();
    if n < 2 {
        return (mean * (1.0 - mean) / bits as f64).sqrt();
    }
    let var = rates.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / (n - 1) as f64;
    (var / n as f64).sqrt()
}

/// SNR at which a BER curve crosses a target.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TargetSnr {
    Reached(f64),
    /// The target is not reached anywhere on the grid.
    AboveGrid,
    /// Already below the target at the first grid point.
    BelowGrid,
}

impl TargetSnr {
    pub fn value(&self) -> Option<f64> {
        match self {
            TargetSnr::Reached(v) => Some(*v),
            _ => None,
        }
    }
}

impl std::fmt::Display for TargetSnr {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TargetSnr::Reached(v) => write!(f, "{v:.3}"),
            TargetSnr::AboveGrid => f.write_str("> grid"),
            TargetSnr::BelowGrid => f.write_str("< grid"),
        }
    }
}

/// First crossing of `target` from above, interpolating `log10(BER)`
/// linearly in SNR between the bracketing grid points. A point without
/// errors is taken as half an error over its bit count.
pub fn snr_at_ber(points: &[BerPoint], target: f64) -> TargetSnr {
    let floor = |p: &BerPoint| if p.errors == 0 { 0.5 / p.bits.max(1) as f64 } else { p.ber };
    match points.first() {
        None => return TargetSnr::AboveGrid,
        Some(p) if p.ber < target => return TargetSnr::BelowGrid,
        _ => {}
    }
    for w in points.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        if a.ber >= target && b.ber < target {
            if b.snr_db.is_infinite() {
                return TargetSnr::Reached(a.snr_db);
            }
            let (la, lb, lt) = (floor(a).log10(), floor(b).log10(), target.log10());
            let frac = if la == lb { 0.0 } else { (la - lt) / (la - lb) };
            return TargetSnr::Reached(a.snr_db + frac.clamp(0.0, 1.0) * (b.snr_db - a.snr_db));
        }
    }
    TargetSnr::AboveGrid
}

/// Difference of two crossings, when both exist.
pub fn snr_loss(method: TargetSnr, reference: TargetSnr) -> Option<f64> {
    Some(method.value()? - reference.value()?)
}

/// One row of a fixed-point sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct FxpRow {
    pub method: Method,
    /// `None` for double precision.
    pub fraction_bits: Option<u32>,
    pub snr_at_target: TargetSnr,
    /// SNR offset from the floating-point ZF reference.
    pub loss_db: Option<f64>,
    pub table: BerTable,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FxpSweep {
    pub target_ber: f64,
    pub reference: BerTable,
    pub reference_snr: TargetSnr,
    pub rows: Vec<FxpRow>,
}

/// SNR loss at `target_ber` of each method and fraction width relative to
/// floating-point ZF on the same channel, payload and noise draws.
pub fn run_fxp_sweep(
    cfg: &SimConfig,
    methods: &[Method],
    fraction_bits: &[Option<u32>],
    target_ber: f64,
) -> Result<FxpSweep> {
    if !(target_ber > 0.0 && target_ber < 0.5) {
        return Err(Error::config("target_ber", "must lie in (0, 0.5)"));
    }
    let reference = run_uplink_ber(&SimConfig {
        detector: Method::Zf,
        fixed_point: None,
        ..cfg.clone()
    })?;
    let reference_snr = snr_at_ber(&reference.points, target_ber);
    let mut rows = Vec::new();
    for &method in methods {
        for &bits in fraction_bits {
            let run = SimConfig {
                detector: method,
                fixed_point: bits.map(FxpConfig::uniform),
                ..cfg.clone()
            };
            let table = run_uplink_ber(&run)?;
            let snr = snr_at_ber(&table.points, target_ber);
            log::info!("{} at {:?} fraction bits: {}", method.label(), bits, snr);
            rows.push(FxpRow {
                method,
                fraction_bits: bits,
                snr_at_target: snr,
                loss_db: snr_loss(snr, reference_snr),
                table,
            });
        }
    }
    Ok(FxpSweep {
        target_ber,
        reference,
        reference_snr,
        rows,
    })
}
