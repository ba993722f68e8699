//! Uplink detection and downlink precoding.
//!
//! Uplink model `y = G x + w` with `w ~ CN(0, N0·I)`; a linear combiner
//! estimates `x̂_k = a_kᴴ y`. Downlink model `r = Gᵀ A x + w` (reciprocal
//! channel). Detector columns are normalized to unit gain (`a_kᴴ ĝ_k = 1`);
//! precoders are scaled so that `E‖A x‖² = total_power` for unit-power
//! symbols.
//!
//! Exact methods (MR, ZF, MMSE, RZF) live here; the Neumann-series inverses
//! are in [`series`], the implicit solvers (coordinate descent, Cholesky,
//! modified QRD) in [`implicit`], and [`detector`] wraps all of them behind a
//! per-realization object with an optional fixed-point overlay.

pub mod detector;
pub mod implicit;
pub mod series;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{dot, hpd_inverse, norm, CMatrix, QrMode, C64};

pub use detector::Detector;
pub use implicit::{cd_detect, cd_objective, chd_detect, mqrd_detect, ChdMode, MqrdOutput};
pub use series::{
    fit_wnsa_weights, inverse_error, nsa_inverse, wnsa_inverse, NsaConfig, Preconditioner, SeriesInverse,
    WnsaConfig,
};

/// Detection / precoding method, selectable by name in configuration files.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case", deny_unknown_fields)]
pub enum Method {
    Mr,
    Zf,
    Mmse,
    Rzf { lambda: f64 },
    Nsa { iterations: usize },
    /// Weighted Neumann series with weights fitted per realization.
    Wnsa { iterations: usize },
    Cd { iterations: usize },
    Chd {
        #[serde(default)]
        mode: ChdKind,
    },
    Mqrd {
        #[serde(default = "default_c_const")]
        c_const: f64,
    },
}

fn default_c_const() -> f64 {
    QrMode::DEFAULT_C_CONST
}

/// Cholesky target system, as named in configuration files.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChdKind {
    Zf,
    #[default]
    Mmse,
}

impl Method {
    pub fn label(&self) -> String {
        match self {
            Method::Mr => "MR".into(),
            Method::Zf => "ZF".into(),
            Method::Mmse => "MMSE".into(),
            Method::Rzf { lambda } => format!("RZF({lambda})"),
            Method::Nsa { iterations } => format!("NSA(L={iterations})"),
            Method::Wnsa { iterations } => format!("WNSA(L={iterations})"),
            Method::Cd { iterations } => format!("CD(L={iterations})"),
            Method::Chd { mode: ChdKind::Zf } => "ChD-ZF".into(),
            Method::Chd { mode: ChdKind::Mmse } => "ChD-MMSE".into(),
            Method::Mqrd { .. } => "MQRD".into(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Method::Rzf { lambda } if !(lambda >= 0.0) => {
                Err(Error::config("lambda", "regularizer must be non-negative"))
            }
            Method::Nsa { iterations } | Method::Wnsa { iterations } if iterations > NsaConfig::MAX_TERMS => {
                Err(Error::config("iterations", format!("at most {} series terms", NsaConfig::MAX_TERMS)))
            }
            Method::Cd { iterations } if iterations < 1 => {
                Err(Error::config("iterations", "coordinate descent needs at least one sweep"))
            }
            Method::Mqrd { c_const } if !(c_const > 0.0) => {
                Err(Error::config("c_const", "must be positive"))
            }
            _ => Ok(()),
        }
    }
}

/// Linear combiner or precoder. Column `k` of `a` serves user `k`; `alpha`
/// records the normalizing constant that has already been applied to it.
#[derive(Clone, Debug)]
pub struct LinearCombiner {
    pub a: CMatrix,
    pub alpha: Vec<f64>,
    pub method: Method,
}

impl LinearCombiner {
    /// `x̂ = Aᴴ y`.
    pub fn combine(&self, y: &[C64]) -> Vec<C64> {
        self.a.adjoint_mul_vec(y)
    }
}

/// Unnormalized `(ĜᴴĜ + λI)⁻¹` for the exact linear methods.
fn regularized_inverse(g: &CMatrix, lambda: f64) -> Result<CMatrix> {
    let mut z = g.adjoint_mul(g);
    for i in 0..z.rows() {
        z[(i, i)] += lambda;
    }
    hpd_inverse(&z).map_err(|e| match e {
        Error::NotPositiveDefinite { pivot } => Error::Singular { index: pivot },
        other => other,
    })
}

fn check_dims(g: &CMatrix) -> Result<()> {
    if g.cols() == 0 {
        return Err(Error::config("K", "at least one user is required"));
    }
    if g.rows() < g.cols() {
        return Err(Error::config("M", "need at least as many antennas as users"));
    }
    Ok(())
}

/// Exact or series-based linear detector with unit-gain normalization.
///
/// `noise_var` is `N0` for MMSE. NSA and WNSA use `A = Ĝ Ẑ⁻¹`; the implicit
/// methods are not linear combiners and are rejected here.
pub fn combiner_exact(g: &CMatrix, method: Method, noise_var: f64) -> Result<LinearCombiner> {
    check_dims(g)?;
    method.validate()?;
    let a = match method {
        Method::Mr => g.clone(),
        Method::Zf => g.matmul(&regularized_inverse(g, 0.0)?),
        Method::Mmse => {
            if !(noise_var > 0.0) {
                return Err(Error::config("noise_var", "MMSE needs a positive noise variance"));
            }
            g.matmul(&regularized_inverse(g, noise_var)?)
        }
        Method::Rzf { lambda } => g.matmul(&regularized_inverse(g, lambda)?),
        Method::Nsa { iterations } => {
            let z = g.adjoint_mul(g);
            g.matmul(&nsa_inverse(&z, &NsaConfig::new(iterations)?)?.inverse)
        }
        Method::Wnsa { iterations } => {
            let z = g.adjoint_mul(g);
            let cfg = WnsaConfig::fitted(&z, iterations)?;
            g.matmul(&wnsa_inverse(&z, &cfg)?.inverse)
        }
        Method::Cd { .. } | Method::Chd { .. } | Method::Mqrd { .. } => {
            return Err(Error::config(
                "method",
                format!("{} is an implicit solver without an explicit combiner", method.label()),
            ))
        }
    };
    let k = g.cols();
    let mut a = a;
    let mut alpha = vec![1.0; k];
    for (u, al) in alpha.iter_mut().enumerate() {
        let gain = dot(&a.col(u), &g.col(u)).re;
        if !(gain.abs() > 0.0) || !gain.is_finite() {
            return Err(Error::Singular { index: u });
        }
        *al = 1.0 / gain;
        for m in 0..a.rows() {
            a[(m, u)] *= *al;
        }
    }
    Ok(LinearCombiner { a, alpha, method })
}

/// Downlink precoder for channel `Ĝ` (users receive `Ĝᵀ A x`), scaled to
/// `E‖A x‖² = total_power`. Supports MR, ZF and RZF.
pub fn precode(g: &CMatrix, method: Method, total_power: f64) -> Result<LinearCombiner> {
    check_dims(g)?;
    method.validate()?;
    if !(total_power > 0.0) {
        return Err(Error::config("total_power", "must be positive"));
    }
    let a = match method {
        Method::Mr => g.conj(),
        Method::Zf => g.matmul(&regularized_inverse(g, 0.0)?).conj(),
        Method::Rzf { lambda } => g.matmul(&regularized_inverse(g, lambda)?).conj(),
        other => {
            return Err(Error::config(
                "precoder",
                format!("{} is not a supported precoder (use mr, zf or rzf)", other.label()),
            ))
        }
    };
    let fro = a.frobenius_norm();
    if !(fro > 0.0) || !fro.is_finite() {
        return Err(Error::Singular { index: 0 });
    }
    let scale = (total_power).sqrt() / fro;
    Ok(LinearCombiner {
        a: a.scale(C64::new(scale, 0.0)),
        alpha: vec![scale; g.cols()],
        method,
    })
}

/// Transmit vector `A x`.
pub fn apply_precoder(a: &LinearCombiner, x: &[C64]) -> Result<Vec<C64>> {
    if x.len() != a.a.cols() {
        return Err(Error::DimensionMismatch {
            context: "apply_precoder",
            expected: a.a.cols(),
            found: x.len(),
        });
    }
    Ok(a.a.mul_vec(x))
}

/// Post-combining SINR of user `k` for combiner column `a_k` over true
/// channel `G` and noise variance `N0` (unit-power symbols).
pub fn post_combining_sinr(a: &LinearCombiner, g: &CMatrix, n0: f64, k: usize) -> f64 {
    let ak = a.a.col(k);
    let signal = dot(&ak, &g.col(k)).norm_sqr();
    let interference: f64 = (0..g.cols())
        .filter(|&j| j != k)
        .map(|j| dot(&ak, &g.col(j)).norm_sqr())
        .sum();
    signal / (interference + n0 * norm(&ak).powi(2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::draw_iid_rayleigh;
    use crate::numerics::rel_error;
    use crate::rng::stream;

    fn rayleigh(m: usize, k: usize, seed: u64) -> CMatrix {
        draw_iid_rayleigh(m, k, &mut stream(seed, 0)).unwrap().into_matrix()
    }

    fn orthonormal(m: usize, k: usize) -> CMatrix {
        CMatrix::from_fn(m, k, |i, j| if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) })
    }

    #[test]
    fn orthonormal_channel_gives_proportional_combiners() {
        let g = orthonormal(6, 3);
        for method in [Method::Mr, Method::Zf, Method::Mmse] {
            let c = combiner_exact(&g, method, 0.1).unwrap();
            assert!(rel_error(&c.a, &g) < 1e-12, "{method:?}");
        }
    }

    #[test]
    fn single_user_zf_is_mr_direction() {
        let g = rayleigh(16, 1, 3);
        let zf = combiner_exact(&g, Method::Zf, 0.0).unwrap().a.col(0);
        let mr = g.col(0);
        let cos = dot(&zf, &mr).norm() / (norm(&zf) * norm(&mr));
        assert!((cos - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zf_nulls_interference() {
        let g = rayleigh(32, 4, 1);
        let c = combiner_exact(&g, Method::Zf, 0.0).unwrap();
        let prod = c.a.adjoint_mul(&g);
        assert!((&prod - &CMatrix::identity(4)).frobenius_norm() < 1e-9);
        let g = rayleigh(64, 8, 2);
        let c = combiner_exact(&g, Method::Zf, 0.0).unwrap();
        for k in 0..8 {
            let own = dot(&c.a.col(k), &g.col(k)).norm();
            for j in (0..8).filter(|&j| j != k) {
                assert!(dot(&c.a.col(k), &g.col(j)).norm() / own < 1e-9);
            }
        }
    }

    #[test]
    fn zf_rejects_rank_deficient_channel() {
        let col: Vec<C64> = (0..8).map(|i| C64::new(i as f64, 1.0)).collect();
        let g = CMatrix::from_fn(8, 2, |i, _| col[i]);
        assert!(matches!(combiner_exact(&g, Method::Zf, 0.0), Err(Error::Singular { .. })));
    }

    #[test]
    fn mmse_matches_regularized_formula_up_to_normalization() {
        let g = rayleigh(16, 4, 5);
        let n0 = 0.5;
        let c = combiner_exact(&g, Method::Mmse, n0).unwrap();
        let mut reg = g.adjoint_mul(&g);
        for i in 0..4 {
            reg[(i, i)] += n0;
        }
        let raw = g.matmul(&hpd_inverse(&reg).unwrap());
        let expect = CMatrix::from_fn(16, 4, |i, j| raw[(i, j)] * c.alpha[j]);
        assert!(rel_error(&c.a, &expect) < 1e-12);
        for k in 0..4 {
            assert!((dot(&c.a.col(k), &g.col(k)).re - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn mmse_beats_zf_in_sinr_at_low_snr() {
        let (m, k) = (32, 8);
        let n0 = 10f64.powf(0.5);
        let mut rng = stream(77, 0);
        let (mut s_mmse, mut s_zf) = (0.0, 0.0);
        for _ in 0..1000 {
            let g = draw_iid_rayleigh(m, k, &mut rng).unwrap().into_matrix();
            let zf = combiner_exact(&g, Method::Zf, n0).unwrap();
            let mmse = combiner_exact(&g, Method::Mmse, n0).unwrap();
            for u in 0..k {
                s_zf += post_combining_sinr(&zf, &g, n0, u);
                s_mmse += post_combining_sinr(&mmse, &g, n0, u);
            }
        }
        assert!(s_mmse > s_zf, "{s_mmse} vs {s_zf}");
    }

    #[test]
    fn single_user_mr_precoder() {
        let g = rayleigh(8, 1, 4);
        let p = precode(&g, Method::Mr, 2.0).unwrap();
        let gc = g.col(0);
        let n = norm(&gc);
        for i in 0..8 {
            assert!((p.a[(i, 0)] - gc[i].conj() / n * 2f64.sqrt()).norm() < 1e-12);
        }
    }

    #[test]
    fn zf_precoder_is_interference_free_and_power_normalized() {
        let g = rayleigh(32, 6, 9);
        let p = precode(&g, Method::Zf, 3.0).unwrap();
        assert!((p.a.frobenius_norm().powi(2) - 3.0).abs() < 1e-12);
        let eff = g.transpose().matmul(&p.a);
        for k in 0..6 {
            let own = eff[(k, k)].norm_sqr();
            for j in (0..6).filter(|&j| j != k) {
                assert!(eff[(k, j)].norm_sqr() / own < 1e-18);
            }
        }
    }

    #[test]
    fn rzf_approaches_zf() {
        let g = rayleigh(16, 4, 10);
        let zf = precode(&g, Method::Zf, 1.0).unwrap();
        let rzf = precode(&g, Method::Rzf { lambda: 1e-9 }, 1.0).unwrap();
        assert!(rel_error(&rzf.a, &zf.a) < 1e-6);
    }

    #[test]
    fn precoder_power_matches_symbol_average() {
        let g = rayleigh(16, 4, 11);
        let p = precode(&g, Method::Rzf { lambda: 0.3 }, 5.0).unwrap();
        let mut rng = stream(11, 1);
        let trials = 20_000;
        let mean = (0..trials)
            .map(|_| {
                let x: Vec<C64> = (0..4).map(|_| crate::channel::cn01(&mut rng)).collect();
                norm(&apply_precoder(&p, &x).unwrap()).powi(2)
            })
            .sum::<f64>()
            / trials as f64;
        assert!((mean - 5.0).abs() < 0.15, "{mean}");
    }

    #[test]
    fn invalid_requests_are_rejected() {
        let g = rayleigh(4, 2, 1);
        assert!(precode(&g, Method::Mmse, 1.0).is_err());
        assert!(combiner_exact(&g, Method::Cd { iterations: 2 }, 1.0).is_err());
        assert!(combiner_exact(&CMatrix::zeros(4, 0), Method::Zf, 1.0).is_err());
        assert!(Method::Nsa { iterations: 11 }.validate().is_err());
    }

    #[test]
    fn methods_parse_from_toml() {
        #[derive(Deserialize)]
        struct W {
            d: Method,
        }
        let w: W = toml::from_str("d = { method = \"nsa\", iterations = 3 }").unwrap();
        assert_eq!(w.d, Method::Nsa { iterations: 3 });
        let w: W = toml::from_str("d = { method = \"chd\" }").unwrap();
        assert_eq!(w.d, Method::Chd { mode: ChdKind::Mmse });
        let w: W = toml::from_str("d = { method = \"mqrd\" }").unwrap();
        assert_eq!(w.d, Method::Mqrd { c_const: 1.0 });
    }
}
