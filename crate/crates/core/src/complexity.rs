//! Analytic cost models: real-multiplication counts of the detection
//! algorithms, filter area, converter figures of merit and dynamic power.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::QrMode;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "algorithm", rename_all = "snake_case")]
pub enum Algorithm {
    Nsa { l: u32 },
    Chd,
    Mqrd,
    Cd { l: u32 },
    Exact,
}

impl Algorithm {
    pub fn label(&self) -> String {
        match self {
            Algorithm::Nsa { l } => format!("NSA(L={l})"),
            Algorithm::Chd => "ChD".into(),
            Algorithm::Mqrd => "MQRD".into(),
            Algorithm::Cd { l } => format!("CD(L={l})"),
            Algorithm::Exact => "exact".into(),
        }
    }
}

/// Real multiplications per channel realization and per channel use.
///
/// Values are reals: the modified-QRD closed form has fractional
/// coefficients and is not an integer for every `K`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AlgoCost {
    pub algorithm: Algorithm,
    pub per_realization: f64,
    pub per_use: f64,
}

fn check_mk(m: u64, k: u64) -> Result<()> {
    if k < 1 {
        return Err(Error::config("K", "must be at least 1"));
    }
    if m < k {
        return Err(Error::config("M", "must be at least K"));
    }
    Ok(())
}

/// Closed-form multiplication counts for the detection algorithms.
pub fn table2_cost(alg: Algorithm, m: u64, k: u64) -> Result<AlgoCost> {
    check_mk(m, k)?;
    let (mf, kf) = (m as f64, k as f64);
    let gram = 2.0 * mf * kf * (kf + 1.0);
    let (per_realization, per_use) = match alg {
        Algorithm::Nsa { l } => {
            if l < 1 {
                return Err(Error::config("L", "must be at least 1"));
            }
            (
                gram + 8.0 * kf * kf + 4.0 * (l as f64 - 1.0) * kf.powi(3),
                4.0 * kf * kf + 4.0 * kf * mf,
            )
        }
        Algorithm::Chd => (
            gram + 4.0 * kf * (kf + 1.0) * (kf + 2.0) / 6.0,
            4.0 * kf * kf + 4.0 * kf + 4.0 * kf * mf,
        ),
        Algorithm::Mqrd => (
            gram + 4.0 * kf.powi(3) / 3.0 + 3.0 * kf * kf / 2.0 - 31.0 * kf / 3.0,
            6.0 * kf * kf - 2.0 * kf + 4.0 * kf * mf,
        ),
        Algorithm::Cd { l } => {
            if l < 1 {
                return Err(Error::config("L", "must be at least 1"));
            }
            let lf = l as f64;
            (0.0, 4.0 * mf * (lf - 1.0) + 4.0 * kf * mf * lf)
        }
        Algorithm::Exact => (exact_inverse_cost(m, k)? as f64, 0.0),
    };
    Ok(AlgoCost {
        algorithm: alg,
        per_realization,
        per_use,
    })
}

/// `MK² + K³`: Gram matrix plus inversion.
pub fn exact_inverse_cost(m: u64, k: u64) -> Result<u64> {
    check_mk(m, k)?;
    Ok(m * k * k + k * k * k)
}

/// Cost of one coherence block of `P` channel uses.
pub fn total_cost(alg: Algorithm, m: u64, k: u64, p: u64) -> Result<f64> {
    if p < 1 {
        return Err(Error::config("P", "must be at least 1"));
    }
    let c = table2_cost(alg, m, k)?;
    Ok(c.per_realization + p as f64 * c.per_use)
}

/// Multiplication counts of one complex Givens rotation on a real pivot.
///
/// Convention (real multiplications; a reciprocal or reciprocal square root
/// counts as one):
/// * exact generation: `a²` (1), `|b|²` (2), `1/√(·)` (1), `c = a/r` (1),
///   `s = b*/r` (2) = 7;
/// * modified generation: `1/a` (1), `s = b*/a` (2) = 3;
/// * applying to one column pair `(x, y)`: `c·x` and `c·y` with real `c`
///   cost 2 each, `s·y` and `s*·x` cost 4 each, so 12 exact; with
///   `c_const = 1` (or a power of two) the `c` products are free, so 8.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GivensCost {
    pub generate: u64,
    pub apply_per_column: u64,
}

pub fn givens_cost(mode: QrMode) -> GivensCost {
    match mode {
        QrMode::Exact => GivensCost {
            generate: 7,
            apply_per_column: 12,
        },
        QrMode::Modified { .. } => GivensCost {
            generate: 3,
            apply_per_column: 8,
        },
    }
}

/// Multiplications to triangularize a `K×K` matrix with Givens rotations,
/// applying each rotation to the remaining columns and one right-hand side.
pub fn givens_qrd_cost(k: u64, mode: QrMode) -> u64 {
    let c = givens_cost(mode);
    (0..k)
        .map(|j| {
            let rotations = k - 1 - j;
            rotations * (c.generate + (k - j) * c.apply_per_column)
        })
        .sum()
}

/// Fractional saving `1 − modified/exact` of the modified rotations.
pub fn modified_givens_saving(k: u64) -> f64 {
    let exact = givens_qrd_cost(k, QrMode::Exact) as f64;
    if exact == 0.0 {
        return 0.0;
    }
    1.0 - givens_qrd_cost(k, QrMode::Modified { c_const: 1.0 }) as f64 / exact
}

/// Filter area model `2T(m+n)·log2(m+n) + 2Tmn` for `T` taps with `m`-bit
/// coefficients and `n`-bit data.
pub fn filter_area(t: u32, m: u32, n: u32) -> Result<f64> {
    if t < 1 || m < 1 || n < 1 {
        return Err(Error::config("filter", "T, m and n must be at least 1"));
    }
    let (t, s) = (t as f64, (m + n) as f64);
    Ok(2.0 * t * s * s.log2() + 2.0 * t * m as f64 * n as f64)
}

/// Adder area `n·log2(n)`.
pub fn adder_area(n: u32) -> f64 {
    n as f64 * (n as f64).log2()
}

/// Multiplier area `n·m`.
pub fn multiplier_area(n: u32, m: u32) -> f64 {
    n as f64 * m as f64
}

fn positive(v: f64, name: &str) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::config(name, "must be positive"))
    }
}

/// ADC power from the Walden figure of merit: `FoM·2^ENOB·f_s`.
pub fn adc_power(fom_j_per_step: f64, enob: f64, fs: f64) -> Result<f64> {
    positive(fom_j_per_step, "fom")?;
    positive(fs, "fs")?;
    if !(enob >= 0.0) {
        return Err(Error::config("enob", "must be non-negative"));
    }
    Ok(fom_j_per_step * enob.exp2() * fs)
}

/// DAC figure of merit `V_pp · f_out · 10^(SFDR/20) / P`.
pub fn dac_fom(vpp: f64, fout: f64, sfdr_db: f64, power: f64) -> Result<f64> {
    positive(vpp, "vpp")?;
    positive(fout, "fout")?;
    positive(power, "power")?;
    Ok(vpp * fout * 10f64.powf(sfdr_db / 20.0) / power)
}

/// Average dynamic power `α·C·V_dd²·f`, with `alpha_c` the switched
/// capacitance.
pub fn dynamic_power(alpha_c: f64, vdd: f64, fs: f64) -> Result<f64> {
    if !(alpha_c >= 0.0) || !(vdd >= 0.0) || !(fs >= 0.0) {
        return Err(Error::config("dynamic_power", "inputs must be non-negative"));
    }
    Ok(alpha_c * vdd * vdd * fs)
}
