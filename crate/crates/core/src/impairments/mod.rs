//! Hardware non-idealities: power amplifier, data converters, non-reciprocal
//! front-ends and digital circuit errors.

pub mod adc;
pub mod circuit;
pub mod pa;
pub mod reciprocity;

use crate::error::{Error, Result};
use crate::numerics::{CMatrix, C64};

pub use adc::{apply_adc, bussgang, quantize_adc, AdcConfig, Bussgang, ONE_BIT_LEVEL};
pub use circuit::{antenna_sddr_db, apply_errors, draw_victims, inject_errors, CircuitErrorModel, ErrorMode, Injection};
pub use pa::{pa_apply, PaModel};
pub use reciprocity::{
    apply_calibration, build_nonreciprocal, calibrate, effective_downlink, mui_db, FrontEndSet, MismatchBounds,
};

/// Value reported for a ratio of zero (e.g. EVM of a perfect signal).
pub const DB_FLOOR: f64 = -100.0;
/// Value reported for an infinite ratio (e.g. SDDR without distortion).
pub const DB_CEILING: f64 = 100.0;

pub(crate) fn db_or_floor(ratio: f64) -> f64 {
    if ratio.is_nan() {
        return f64::NAN;
    }
    (10.0 * ratio.log10()).clamp(DB_FLOOR, DB_CEILING)
}

fn check_pair(a: &[C64], b: &[C64]) -> Result<()> {
    if a.is_empty() {
        return Err(Error::EmptyInput);
    }
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            context: "signal pair",
            expected: a.len(),
            found: b.len(),
        });
    }
    Ok(())
}

/// Error vector magnitude in dB after scaling `received` by its
/// least-squares gain onto `reference`.
pub fn evm_db(reference: &[C64], received: &[C64]) -> Result<f64> {
    check_pair(reference, received)?;
    let pr: f64 = received.iter().map(|v| v.norm_sqr()).sum();
    let ps: f64 = reference.iter().map(|v| v.norm_sqr()).sum();
    if ps == 0.0 {
        return Err(Error::config("reference", "signal power is zero"));
    }
    let gain = if pr > 0.0 {
        received.iter().zip(reference).map(|(r, s)| r.conj() * s).sum::<C64>() / pr
    } else {
        C64::new(0.0, 0.0)
    };
    let pe: f64 = received.iter().zip(reference).map(|(r, s)| (gain * r - s).norm_sqr()).sum();
    Ok(db_or_floor(pe / ps))
}

/// Signal-to-digital-distortion ratio `σ_s²/σ_d²` in dB, with
/// `σ_d² = power(distorted − clean)`.
pub fn sddr_db(clean: &[C64], distorted: &[C64]) -> Result<f64> {
    check_pair(clean, distorted)?;
    let ps: f64 = clean.iter().map(|v| v.norm_sqr()).sum();
    let pd: f64 = clean.iter().zip(distorted).map(|(a, b)| (b - a).norm_sqr()).sum();
    if pd == 0.0 {
        return Ok(DB_CEILING);
    }
    Ok(db_or_floor(ps / pd))
}

/// Antenna indices that survive after removing `victims`.
pub fn surviving(m: usize, victims: &[usize]) -> Result<Vec<usize>> {
    if let Some(&bad) = victims.iter().find(|&&v| v >= m) {
        return Err(Error::config("victims", format!("antenna index {bad} out of range 0..{m}")));
    }
    Ok((0..m).filter(|i| !victims.contains(i)).collect())
}

/// Removes victim rows so downstream processing runs with `M' = M − |victims|`.
pub fn exclude_antennas(g: &CMatrix, victims: &[usize]) -> Result<CMatrix> {
    let keep = surviving(g.rows(), victims)?;
    if keep.len() < g.cols() {
        return Err(Error::config(
            "victims",
            format!("only {} antennas remain for {} users", keep.len(), g.cols()),
        ));
    }
    Ok(g.select_rows(&keep))
}

/// Removes victim rows of a precoder and rescales so that the surviving
/// antennas again radiate `total_power`.
pub fn exclude_precoder_antennas(a: &CMatrix, victims: &[usize], total_power: f64) -> Result<CMatrix> {
    let reduced = exclude_antennas(a, victims)?;
    let fro = reduced.frobenius_norm();
    if fro == 0.0 {
        return Err(Error::Singular { index: 0 });
    }
    Ok(reduced.scale(C64::new(total_power.sqrt() / fro, 0.0)))
}
