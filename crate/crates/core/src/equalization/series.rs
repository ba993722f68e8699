//! Neumann-series approximate inverses of a Gram matrix.
//!
//! With the diagonal preconditioner `Z_d`, `Z⁻¹ = Σ_n (I − Z_d⁻¹Z)ⁿ Z_d⁻¹`
//! whenever the spectral radius of `I − Z_d⁻¹Z` is below one. Truncating
//! after `L` terms gives the NSA inverse. The weighted variant works in the
//! whitened domain `B = I − Z_d^{−1/2} Z Z_d^{−1/2}`, where the same series
//! reads `Z⁻¹ = Z_d^{−1/2} (Σ Bⁿ) Z_d^{−1/2}`, and replaces the unit
//! coefficients by fitted weights `α_n`.

use crate::error::{Error, Result};
use crate::numerics::{hermitian_eigenvalues, hpd_solve, spectral_radius, CMatrix, Overlay, C64};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Preconditioner {
    #[default]
    Diagonal,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NsaConfig {
    /// Highest series power `L` (so `L + 1` terms).
    pub l: usize,
    pub preconditioner: Preconditioner,
}

impl NsaConfig {
    pub const MAX_TERMS: usize = 10;

    pub fn new(l: usize) -> Result<Self> {
        if l > Self::MAX_TERMS {
            return Err(Error::config("L", format!("at most {} terms", Self::MAX_TERMS)));
        }
        Ok(Self {
            l,
            preconditioner: Preconditioner::Diagonal,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WnsaConfig {
    /// `α_0..α_L`.
    pub weights: Vec<f64>,
}

impl WnsaConfig {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::EmptyInput);
        }
        if weights.len() > NsaConfig::MAX_TERMS + 1 {
            return Err(Error::config("weights", format!("at most {} terms", NsaConfig::MAX_TERMS + 1)));
        }
        Ok(Self { weights })
    }

    /// Unit weights; reproduces the plain Neumann series.
    pub fn unweighted(l: usize) -> Result<Self> {
        Self::new(vec![1.0; l + 1])
    }

    /// Weights fitted to the spectrum of `Z` (see [`fit_wnsa_weights`]).
    pub fn fitted(z: &CMatrix, l: usize) -> Result<Self> {
        Self::new(fit_wnsa_weights(z, l)?)
    }

    pub fn l(&self) -> usize {
        self.weights.len() - 1
    }
}

#[derive(Clone, Debug)]
pub struct SeriesInverse {
    pub inverse: CMatrix,
    /// Estimated spectral radius of the iteration matrix.
    pub spectral_radius: f64,
    /// Set when the spectral radius is not below one; the truncated series
    /// is still returned but does not approximate the inverse.
    pub diverging: bool,
}

fn check_square(z: &CMatrix) -> Result<()> {
    if !z.is_square() {
        return Err(Error::DimensionMismatch {
            context: "series inverse",
            expected: z.rows(),
            found: z.cols(),
        });
    }
    if z.rows() == 0 {
        return Err(Error::EmptyInput);
    }
    Ok(())
}

fn positive_diagonal(z: &CMatrix) -> Result<Vec<f64>> {
    z.diag()
        .iter()
        .enumerate()
        .map(|(i, d)| if d.re > 0.0 { Ok(d.re) } else { Err(Error::Singular { index: i }) })
        .collect()
}

fn flag_divergence(rho: f64, what: &str) -> bool {
    let diverging = !(rho < 1.0);
    if diverging {
        log::warn!("{what}: spectral radius {rho:.3} >= 1, series diverges");
    }
    diverging
}

/// Whitened iteration matrix `B = I − Z_d^{−1/2} Z Z_d^{−1/2}`.
fn whitened(z: &CMatrix, d: &[f64]) -> CMatrix {
    let k = z.rows();
    CMatrix::from_fn(k, k, |i, j| {
        let v = -z[(i, j)] / (d[i] * d[j]).sqrt();
        if i == j {
            v + 1.0
        } else {
            v
        }
    })
}

/// Truncated Neumann series `Σ_{n=0}^{L} (I − Z_d⁻¹Z)ⁿ Z_d⁻¹`.
pub fn nsa_inverse(z: &CMatrix, cfg: &NsaConfig) -> Result<SeriesInverse> {
    nsa_inverse_with(z, cfg, &Overlay::NONE)
}

/// [`nsa_inverse`] with every stored intermediate snapped to the overlay's
/// operator format.
pub(crate) fn nsa_inverse_with(z: &CMatrix, cfg: &NsaConfig, ov: &Overlay) -> Result<SeriesInverse> {
    check_square(z)?;
    let k = z.rows();
    let d = positive_diagonal(z)?;
    let dinv: Vec<C64> = d.iter().map(|&v| C64::new(ov.op_real(1.0 / v), 0.0)).collect();
    let x = ov.op_mat(&CMatrix::from_fn(k, k, |i, j| {
        let v = -dinv[i] * z[(i, j)];
        if i == j {
            v + 1.0
        } else {
            v
        }
    }));
    let rho = spectral_radius(&x);
    let diverging = flag_divergence(rho, "nsa_inverse");
    let mut term = CMatrix::from_diag(&dinv);
    let mut acc = term.clone();
    for _ in 0..cfg.l {
        term = ov.op_mat(&x.matmul(&term));
        acc = ov.op_mat(&(&acc + &term));
    }
    Ok(SeriesInverse {
        inverse: acc,
        spectral_radius: rho,
        diverging,
    })
}

/// Weighted series `Z_d^{−1/2} (Σ α_n Bⁿ) Z_d^{−1/2}`.
pub fn wnsa_inverse(z: &CMatrix, cfg: &WnsaConfig) -> Result<SeriesInverse> {
    wnsa_inverse_with(z, cfg, &Overlay::NONE)
}

pub(crate) fn wnsa_inverse_with(z: &CMatrix, cfg: &WnsaConfig, ov: &Overlay) -> Result<SeriesInverse> {
    check_square(z)?;
    let k = z.rows();
    let d = positive_diagonal(z)?;
    let b = ov.op_mat(&whitened(z, &d));
    let rho = spectral_radius(&b);
    // Fitted weights keep the weighted series accurate beyond rho = 1, so
    // only the unit-weight (plain Neumann) case is flagged.
    let unit = cfg.weights.iter().all(|&w| w == 1.0);
    let diverging = if unit { flag_divergence(rho, "wnsa_inverse") } else { false };
    let mut power = CMatrix::identity(k);
    let mut acc = CMatrix::identity(k).scale(C64::new(cfg.weights[0], 0.0));
    for &w in &cfg.weights[1..] {
        power = ov.op_mat(&b.matmul(&power));
        acc = ov.op_mat(&(&acc + &power.scale(C64::new(w, 0.0))));
    }
    let s: Vec<f64> = d.iter().map(|&v| ov.op_real(1.0 / v.sqrt())).collect();
    let inverse = ov.op_mat(&CMatrix::from_fn(k, k, |i, j| acc[(i, j)] * (s[i] * s[j])));
    Ok(SeriesInverse {
        inverse,
        spectral_radius: rho,
        diverging,
    })
}

/// Number of spectral samples used by the weight fit.
pub const WNSA_FIT_SAMPLES: usize = 31;

/// Least-squares weights so that `Σ α_n tⁿ ≈ 1/(1 − t)` on 31 uniform
/// samples of `[λ_min(B), λ_max(B)]`.
///
/// `B` is Hermitian with eigenvalues below one (since `Z` is positive
/// definite), so the target is finite on the whole interval. A degenerate
/// interval (`B` a multiple of the identity) is matched exactly by `α_0`.
pub fn fit_wnsa_weights(z: &CMatrix, l: usize) -> Result<Vec<f64>> {
    check_square(z)?;
    NsaConfig::new(l)?;
    let d = positive_diagonal(z)?;
    let ev = hermitian_eigenvalues(&whitened(z, &d));
    let lo = ev[0];
    let hi = *ev.last().expect("non-empty spectrum");
    if !(hi < 1.0) {
        return Err(Error::NotPositiveDefinite { pivot: 0 });
    }
    let mut weights = vec![0.0; l + 1];
    if hi - lo < 1e-12 || l == 0 {
        let mid = 0.5 * (lo + hi);
        if l == 0 {
            // One coefficient: least-squares constant over the interval samples.
            let samples = sample_interval(lo, hi);
            weights[0] = samples.iter().map(|t| 1.0 / (1.0 - t)).sum::<f64>() / samples.len() as f64;
        } else {
            weights[0] = 1.0 / (1.0 - mid);
        }
        return Ok(weights);
    }
    let samples = sample_interval(lo, hi);
    let n = l + 1;
    // Normal equations of the Vandermonde least-squares problem; at most
    // 11×11 and well conditioned for |t| of order one.
    let mut gram = CMatrix::zeros(n, n);
    let mut rhs = vec![C64::new(0.0, 0.0); n];
    for &t in &samples {
        let target = 1.0 / (1.0 - t);
        let powers: Vec<f64> = (0..n).map(|p| t.powi(p as i32)).collect();
        for i in 0..n {
            rhs[i] += powers[i] * target;
            for j in 0..n {
                gram[(i, j)] += powers[i] * powers[j];
            }
        }
    }
    let sol = hpd_solve(&gram, &rhs)?;
    for (w, s) in weights.iter_mut().zip(sol) {
        *w = s.re;
    }
    Ok(weights)
}

fn sample_interval(lo: f64, hi: f64) -> Vec<f64> {
    let n = WNSA_FIT_SAMPLES;
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// `‖Ẑ⁻¹Z − I‖_F`.
pub fn inverse_error(approx: &CMatrix, z: &CMatrix) -> f64 {
    (&approx.matmul(z) - &CMatrix::identity(z.rows())).frobenius_norm()
}
