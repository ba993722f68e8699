//! Digital circuit errors at the per-antenna outputs: permanent stuck-at
//! faults (antenna outage) and transient bit flips from voltage
//! over-scaling.

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{CMatrix, C64};

use super::{sddr_db, DB_FLOOR};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ErrorMode {
    /// Output pinned to the largest representable value at 45°.
    StuckAtMax,
    StuckAtValue { re: f64, im: f64 },
    /// Each bit of each quantized component flips with probability `p_error`.
    Transient { p_error: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircuitErrorModel {
    pub victim_fraction: f64,
    pub mode: ErrorMode,
    /// Whether the receiver knows the victim set (and may exclude it).
    #[serde(default)]
    pub detected: bool,
    /// Full-scale amplitude per real dimension of the digital word.
    #[serde(default = "default_full_scale")]
    pub full_scale: f64,
    #[serde(default = "default_word_bits")]
    pub word_bits: u32,
}

fn default_full_scale() -> f64 {
    4.0
}

fn default_word_bits() -> u32 {
    12
}

impl CircuitErrorModel {
    pub fn new(victim_fraction: f64, mode: ErrorMode) -> Result<Self> {
        let m = Self {
            victim_fraction,
            mode,
            detected: false,
            full_scale: default_full_scale(),
            word_bits: default_word_bits(),
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.victim_fraction) {
            return Err(Error::config("victim_fraction", "must lie in [0, 1]"));
        }
        if !(self.full_scale > 0.0) {
            return Err(Error::config("full_scale", "must be positive"));
        }
        if !(2..=32).contains(&self.word_bits) {
            return Err(Error::config("word_bits", "must be between 2 and 32"));
        }
        if let ErrorMode::Transient { p_error } = self.mode {
            if !(0.0..=1.0).contains(&p_error) {
                return Err(Error::config("p_error", "must lie in [0, 1]"));
            }
        }
        Ok(())
    }

    pub fn is_stuck(&self) -> bool {
        !matches!(self.mode, ErrorMode::Transient { .. })
    }

    /// Number of victims among `m` antennas, `round(fraction·m)`.
    pub fn victim_count(&self, m: usize) -> usize {
        ((self.victim_fraction * m as f64).round() as usize).min(m)
    }

    fn stuck_value(&self) -> C64 {
        match self.mode {
            ErrorMode::StuckAtMax => C64::new(self.full_scale, self.full_scale),
            ErrorMode::StuckAtValue { re, im } => C64::new(re, im),
            ErrorMode::Transient { .. } => unreachable!("transient mode has no stuck value"),
        }
    }

    fn flip_component<R: Rng + ?Sized>(&self, x: f64, p: f64, rng: &mut R) -> f64 {
        let max_code = ((1i64 << (self.word_bits - 1)) - 1) as f64;
        let lsb = self.full_scale / max_code;
        let code = (x / lsb).round().clamp(-max_code, max_code) as i64;
        let width = self.word_bits;
        let mask = (1u64 << width) - 1;
        let mut word = (code as u64) & mask;
        for bit in 0..width {
            if rng.random_bool(p) {
                word ^= 1 << bit;
            }
        }
        // Sign-extend the two's-complement word.
        let shift = 64 - width;
        (((word << shift) as i64) >> shift) as f64 * lsb
    }
}

/// Distinct victim indices (ascending), drawn uniformly.
pub fn draw_victims<R: Rng + ?Sized>(m: usize, model: &CircuitErrorModel, rng: &mut R) -> Vec<usize> {
    let mut v = sample(rng, m, model.victim_count(m)).into_vec();
    v.sort_unstable();
    v
}

/// Corrupts the victim entries of one per-antenna vector.
pub fn apply_errors<R: Rng + ?Sized>(
    signal: &mut [C64],
    model: &CircuitErrorModel,
    victims: &[usize],
    rng: &mut R,
) {
    match model.mode {
        ErrorMode::Transient { p_error } => {
            if p_error == 0.0 {
                return;
            }
            for &v in victims {
                let s = signal[v];
                signal[v] = C64::new(
                    model.flip_component(s.re, p_error, rng),
                    model.flip_component(s.im, p_error, rng),
                );
            }
        }
        _ => {
            let value = model.stuck_value();
            for &v in victims {
                signal[v] = value;
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Injection {
    pub corrupted: Vec<C64>,
    pub victims: Vec<usize>,
}

/// Draws a victim set and corrupts `signal`.
pub fn inject_errors<R: Rng + ?Sized>(signal: &[C64], model: &CircuitErrorModel, rng: &mut R) -> Result<Injection> {
    model.validate()?;
    let victims = draw_victims(signal.len(), model, rng);
    let mut corrupted = signal.to_vec();
    apply_errors(&mut corrupted, model, &victims, rng);
    Ok(Injection { corrupted, victims })
}

/// Per-antenna SDDR over a block of channel uses (`M×T`, one column per
/// use). Stuck victims carry no signal at all and report the floor.
pub fn antenna_sddr_db(
    clean: &CMatrix,
    distorted: &CMatrix,
    model: &CircuitErrorModel,
    victims: &[usize],
) -> Result<Vec<f64>> {
    if clean.rows() != distorted.rows() || clean.cols() != distorted.cols() {
        return Err(Error::DimensionMismatch {
            context: "sddr block",
            expected: clean.rows() * clean.cols(),
            found: distorted.rows() * distorted.cols(),
        });
    }
    (0..clean.rows())
        .map(|m| {
            if model.is_stuck() && victims.binary_search(&m).is_ok() {
                Ok(DB_FLOOR)
            } else {
                sddr_db(clean.row(m), distorted.row(m))
            }
        })
        .collect()
}
