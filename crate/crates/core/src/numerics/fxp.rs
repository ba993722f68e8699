//! Fixed-point emulation.
//!
//! Values stay in `f64` but are snapped onto the grid of a two's-complement
//! word with `fraction_bits` fractional bits. Rounding is half-to-even.
//! Saturating formats clamp to the symmetric range `±(2^(i) − 2^(−n))`;
//! non-saturating formats wrap like a two's-complement register.

use serde::{Deserialize, Serialize};

use super::{CMatrix, C64};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixedPointFormat {
    fraction_bits: u32,
    total_bits: u32,
    saturating: bool,
}

impl FixedPointFormat {
    pub fn new(fraction_bits: u32, total_bits: u32, saturating: bool) -> Result<Self> {
        if fraction_bits < 1 {
            return Err(Error::config("fraction_bits", "must be at least 1"));
        }
        if total_bits < fraction_bits + 1 {
            return Err(Error::config("total_bits", "must leave room for a sign bit"));
        }
        if total_bits > 62 {
            return Err(Error::config("total_bits", "at most 62 bits are emulated"));
        }
        Ok(Self {
            fraction_bits,
            total_bits,
            saturating,
        })
    }

    pub fn fraction_bits(&self) -> u32 {
        self.fraction_bits
    }

    pub fn total_bits(&self) -> u32 {
        self.total_bits
    }

    pub fn saturating(&self) -> bool {
        self.saturating
    }

    /// Quantization step `2^(−n)`.
    pub fn step(&self) -> f64 {
        (-(self.fraction_bits as f64)).exp2()
    }

    /// Largest representable value; the range is `[-max, max]`.
    pub fn max_value(&self) -> f64 {
        self.max_code() as f64 * self.step()
    }

    fn max_code(&self) -> i64 {
        (1i64 << (self.total_bits - 1)) - 1
    }

    pub fn quantize(&self, x: f64) -> f64 {
        if x.is_nan() {
            return 0.0;
        }
        let scaled = x * (self.fraction_bits as f64).exp2();
        let max = self.max_code();
        let code = if self.saturating {
            scaled.round_ties_even().clamp(-(max as f64), max as f64) as i64
        } else {
            let modulus = 1i128 << self.total_bits;
            // Out-of-range magnitudes would overflow i128; such inputs have no
            // meaningful wrapped value, so they are pinned to the range edge.
            let r = scaled.round_ties_even().clamp(-1e30, 1e30) as i128;
            let half = modulus / 2;
            ((r + half).rem_euclid(modulus) - half) as i64
        };
        code as f64 * self.step()
    }

    pub fn quantize_complex(&self, z: C64) -> C64 {
        C64::new(self.quantize(z.re), self.quantize(z.im))
    }

    /// Integer code of an already-quantized value (two's complement, `total_bits` wide).
    pub fn to_code(&self, x: f64) -> i64 {
        (self.quantize(x) * (self.fraction_bits as f64).exp2()).round() as i64
    }

    pub fn from_code(&self, code: i64) -> f64 {
        code as f64 * self.step()
    }
}

/// Optional fixed-point overlay for detector arithmetic: one format for
/// signals (received samples, matched-filter outputs, estimates) and one for
/// stored operators (channel, Gram, inverses, factors).
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Overlay {
    pub signal: Option<FixedPointFormat>,
    pub operator: Option<FixedPointFormat>,
}

impl Overlay {
    /// Pure floating point.
    pub const NONE: Overlay = Overlay {
        signal: None,
        operator: None,
    };

    pub fn new(signal: FixedPointFormat, operator: FixedPointFormat) -> Self {
        Self {
            signal: Some(signal),
            operator: Some(operator),
        }
    }

    pub fn is_float(&self) -> bool {
        self.signal.is_none() && self.operator.is_none()
    }

    #[inline]
    pub fn sig(&self, z: C64) -> C64 {
        match self.signal {
            Some(f) => f.quantize_complex(z),
            None => z,
        }
    }

    #[inline]
    pub fn op(&self, z: C64) -> C64 {
        match self.operator {
            Some(f) => f.quantize_complex(z),
            None => z,
        }
    }

    #[inline]
    pub fn op_real(&self, x: f64) -> f64 {
        match self.operator {
            Some(f) => f.quantize(x),
            None => x,
        }
    }

    pub fn sig_vec(&self, v: &[C64]) -> Vec<C64> {
        v.iter().map(|&z| self.sig(z)).collect()
    }

    pub fn op_mat(&self, m: &CMatrix) -> CMatrix {
        if self.operator.is_none() {
            return m.clone();
        }
        m.map(|z| self.op(z))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_is_fixed() {
        for n in 1..10 {
            let f = FixedPointFormat::new(n, n + 4, true).unwrap();
            assert_eq!(f.quantize(0.0), 0.0);
        }
    }

    #[test]
    fn rounds_to_nearest_step() {
        let f = FixedPointFormat::new(2, 8, true).unwrap();
        assert_eq!(f.quantize(0.3), 0.25);
        assert_eq!(f.quantize(-0.3), -0.25);
        // ties go to the even code: 0.125 = 0.5 LSB -> 0, 0.375 = 1.5 LSB -> 2 LSB
        assert_eq!(f.quantize(0.125), 0.0);
        assert_eq!(f.quantize(0.375), 0.5);
    }

    #[test]
    fn saturates_symmetrically() {
        let f = FixedPointFormat::new(4, 8, true).unwrap();
        assert_eq!(f.max_value(), 7.9375);
        assert_eq!(f.quantize(100.0), 7.9375);
        assert_eq!(f.quantize(-100.0), -7.9375);
    }

    #[test]
    fn wraps_when_not_saturating() {
        let f = FixedPointFormat::new(4, 8, false).unwrap();
        // 8.0 is code 128, one past the top of an 8-bit register.
        assert_eq!(f.quantize(8.0), -8.0);
        assert_eq!(f.quantize(7.5), 7.5);
    }

    #[test]
    fn rejects_invalid_formats() {
        assert!(FixedPointFormat::new(0, 8, true).is_err());
        assert!(FixedPointFormat::new(8, 8, true).is_err());
    }

    #[test]
    fn codes_round_trip() {
        let f = FixedPointFormat::new(3, 6, true).unwrap();
        for code in -31..=31 {
            assert_eq!(f.to_code(f.from_code(code)), code);
        }
    }

    proptest! {
        #[test]
        fn quantize_is_idempotent(x in -1e3f64..1e3, n in 1u32..20, extra in 1u32..16, sat in any::<bool>()) {
            let f = FixedPointFormat::new(n, n + extra, sat).unwrap();
            let q = f.quantize(x);
            prop_assert_eq!(f.quantize(q), q);
        }

        #[test]
        fn in_range_error_is_half_step(x in -3.0f64..3.0, n in 1u32..20) {
            let f = FixedPointFormat::new(n, n + 4, true).unwrap();
            prop_assert!((f.quantize(x) - x).abs() <= f.step() / 2.0 + 1e-15);
        }
    }
}
