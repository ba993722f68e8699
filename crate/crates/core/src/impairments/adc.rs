//! Uniform and 1-bit analog-to-digital converters, and Bussgang statistics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::C64;

/// Output level of the 1-bit quantizer per real dimension. With this level
/// every output has unit power, whatever the input scale.
pub const ONE_BIT_LEVEL: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Clipping level of the uniform quantizer relative to the per-dimension
/// input RMS when no explicit scale is configured.
pub const DEFAULT_AGC_FACTOR: f64 = 3.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdcConfig {
    pub bits: u32,
    /// Full-scale amplitude per real dimension; `None` tracks
    /// [`DEFAULT_AGC_FACTOR`] times the input RMS. Ignored for 1 bit.
    #[serde(default)]
    pub agc_scale: Option<f64>,
}

impl AdcConfig {
    pub fn validate(&self) -> Result<()> {
        if self.bits < 1 || self.bits > 24 {
            return Err(Error::config("bits", "ADC resolution must be between 1 and 24"));
        }
        if let Some(s) = self.agc_scale {
            if !(s > 0.0) {
                return Err(Error::config("agc_scale", "must be positive"));
            }
        }
        Ok(())
    }
}

/// Per-real-dimension RMS of a complex vector.
pub fn component_rms(y: &[C64]) -> f64 {
    if y.is_empty() {
        return 0.0;
    }
    (y.iter().map(|v| v.norm_sqr()).sum::<f64>() / (2.0 * y.len() as f64)).sqrt()
}

fn uniform(x: f64, scale: f64, levels: f64) -> f64 {
    let step = 2.0 * scale / levels;
    let top = scale - step / 2.0;
    (step * ((x / step).floor() + 0.5)).clamp(-top, top)
}

/// Quantizes real and imaginary parts independently.
///
/// One bit keeps only the signs (`±ℓ ± jℓ`, no gain control). More bits use
/// a mid-rise uniform quantizer with `2^N` levels over `±agc_scale`,
/// clipping outside that range.
pub fn quantize_adc(y: &[C64], bits: u32, agc_scale: f64) -> Result<Vec<C64>> {
    if bits < 1 {
        return Err(Error::config("bits", "must be at least 1"));
    }
    if bits == 1 {
        let s = |v: f64| if v >= 0.0 { ONE_BIT_LEVEL } else { -ONE_BIT_LEVEL };
        return Ok(y.iter().map(|v| C64::new(s(v.re), s(v.im))).collect());
    }
    if !(agc_scale > 0.0) {
        return Err(Error::config("agc_scale", "must be positive"));
    }
    let levels = (bits as f64).exp2();
    Ok(y
        .iter()
        .map(|v| C64::new(uniform(v.re, agc_scale, levels), uniform(v.im, agc_scale, levels)))
        .collect())
}

/// Applies a configured ADC, deriving the gain-control scale from the input
/// when none is set.
pub fn apply_adc(y: &[C64], cfg: &AdcConfig) -> Result<Vec<C64>> {
    cfg.validate()?;
    let scale = cfg
        .agc_scale
        .unwrap_or_else(|| (DEFAULT_AGC_FACTOR * component_rms(y)).max(f64::MIN_POSITIVE));
    quantize_adc(y, cfg.bits, scale)
}

/// Bussgang decomposition `q = b·x + d` with `d` uncorrelated with `x`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bussgang {
    pub gain: C64,
    /// `E|d|² / E|b·x|²`.
    pub distortion_to_signal: f64,
}

pub fn bussgang(x: &[C64], q: &[C64]) -> Result<Bussgang> {
    if x.is_empty() {
        return Err(Error::EmptyInput);
    }
    if x.len() != q.len() {
        return Err(Error::DimensionMismatch {
            context: "bussgang",
            expected: x.len(),
            found: q.len(),
        });
    }
    let px: f64 = x.iter().map(|v| v.norm_sqr()).sum();
    let cross: C64 = x.iter().zip(q).map(|(a, b)| b * a.conj()).sum();
    let gain = cross / px;
    let pd: f64 = x.iter().zip(q).map(|(a, b)| (b - gain * a).norm_sqr()).sum();
    Ok(Bussgang {
        gain,
        distortion_to_signal: pd / (gain.norm_sqr() * px),
    })
}
