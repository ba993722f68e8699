//! Memoryless third-order power amplifier with hard output saturation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::C64;

/// `10^(−1/20) − 1`: relative gain drop at the 1-dB compression point.
pub const ONE_DB_COMPRESSION: f64 = -0.108_749_061_866_254_4;

/// `y = α1·x + α3·x·|x|²` below the input saturation amplitude; above it the
/// output magnitude is `a_out_sat`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PaModel {
    pub alpha1: C64,
    pub alpha3: C64,
    pub a_in_sat: f64,
    pub a_out_sat: f64,
}

impl PaModel {
    pub fn new(alpha1: C64, alpha3: C64, a_in_sat: f64, a_out_sat: f64) -> Result<Self> {
        if !(a_in_sat > 0.0) {
            return Err(Error::config("a_in_sat", "must be positive"));
        }
        if !(a_out_sat > 0.0) {
            return Err(Error::config("a_out_sat", "must be positive"));
        }
        if alpha1.norm() == 0.0 || !alpha1.is_finite() || !alpha3.is_finite() {
            return Err(Error::config("alpha1", "linear gain must be finite and nonzero"));
        }
        Ok(Self {
            alpha1,
            alpha3,
            a_in_sat,
            a_out_sat,
        })
    }

    /// Ideal amplifier with unit gain.
    pub fn linear() -> Self {
        Self {
            alpha1: C64::new(1.0, 0.0),
            alpha3: C64::new(0.0, 0.0),
            a_in_sat: f64::INFINITY,
            a_out_sat: f64::INFINITY,
        }
    }

    /// Unit linear gain with the 1-dB compression point at input amplitude
    /// `a_1db`: `α3 = (10^(−1/20) − 1)/a_1db²`.
    ///
    /// Saturation is placed at the peak of the cubic, `|x|² = −1/(3·α3)`,
    /// where the output magnitude is `2/3·|x|`. Beyond that point the
    /// polynomial would fold back, so the output is held at its peak.
    pub fn from_compression_point(a_1db: f64) -> Result<Self> {
        if !(a_1db > 0.0) {
            return Err(Error::config("a_1db", "must be positive"));
        }
        let alpha3 = ONE_DB_COMPRESSION / (a_1db * a_1db);
        let a_in_sat = (-1.0 / (3.0 * alpha3)).sqrt();
        let a_out_sat = 2.0 / 3.0 * a_in_sat;
        Self::new(C64::new(1.0, 0.0), C64::new(alpha3, 0.0), a_in_sat, a_out_sat)
    }

    fn polynomial(&self, x: C64) -> C64 {
        self.alpha1 * x + self.alpha3 * x * x.norm_sqr()
    }

    pub fn apply_sample(&self, x: C64) -> C64 {
        let mag = x.norm();
        if mag > self.a_in_sat {
            // Phase of the response at the saturation amplitude in the
            // direction of x (AM/PM is frozen once saturated).
            let at_sat = self.polynomial(x * (self.a_in_sat / mag));
            let dir = if at_sat.norm() > 0.0 { at_sat } else { self.alpha1 * x };
            return dir * (self.a_out_sat / dir.norm());
        }
        let y = self.polynomial(x);
        let ym = y.norm();
        if ym > self.a_out_sat {
            y * (self.a_out_sat / ym)
        } else {
            y
        }
    }
}

/// Applies the PA to each sample.
pub fn pa_apply(x: &[C64], pa: &PaModel) -> Vec<C64> {
    x.iter().map(|&v| pa.apply_sample(v)).collect()
}
