//! Acceptance run: prints one PASS/FAIL line per criterion.
//!
//! Run with `cargo test -p mmimo --release --test acceptance`. The link-level
//! criteria (5, 7 and 8) are Monte-Carlo runs of several minutes each.


use std::time::Instant;

use mmimo::channel::{cn01, draw_iid_rayleigh, gram, hardening_variance};
use mmimo::complexity::{exact_inverse_cost, table2_cost, Algorithm};
use mmimo::decentral::{
    aggregate_gram, aggregate_mf, interconnect_rate, local_gram, local_mf, partition, InterconnectConfig,
};
use mmimo::equalization::{
    combiner_exact, fit_wnsa_weights, inverse_error, nsa_inverse, precode, wnsa_inverse, ChdKind, Method, NsaConfig,
    WnsaConfig,
};
use mmimo::impairments::{
    apply_calibration, bussgang, build_nonreciprocal, calibrate, effective_downlink, mui_db, quantize_adc,
    FrontEndSet, MismatchBounds,
};
use mmimo::link::{
    run_downlink_evm, run_fxp_sweep, run_outage_study, EvmConfig, FxpSweep, Modulation, PaSpec, SimConfig, TargetSnr,
    VictimPolicy,
};
use mmimo::numerics::{rel_error, CMatrix, C64};
use mmimo::rng::stream;
use rand::Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

/// Hand-evaluated closed forms in exact integer arithmetic, per realization
/// and per use. Thirds and sixths are kept as numerators over a common
/// denominator so no rounding enters the oracle.
fn hand_cost(alg: Algorithm, m: i128, k: i128) -> (f64, f64) {
    let gram = 2 * m * k * k + 2 * m * k;
    match alg {
        Algorithm::Nsa { l } => {
            let l = l as i128;
            ((gram + 8 * k * k + 4 * (l - 1) * k * k * k) as f64, (4 * k * k + 4 * k * m) as f64)
        }
        Algorithm::Chd => (
            (3 * gram + 2 * k * k * k + 6 * k * k + 4 * k) as f64 / 3.0,
            (4 * k * k + 4 * k + 4 * k * m) as f64,
        ),
        Algorithm::Mqrd => (
            (6 * gram + 8 * k * k * k + 9 * k * k - 62 * k) as f64 / 6.0,
            (6 * k * k - 2 * k + 4 * k * m) as f64,
        ),
        Algorithm::Cd { l } => {
            let l = l as i128;
            (0.0, (4 * m * l - 4 * m + 4 * k * m * l) as f64)
        }
        Algorithm::Exact => ((m * k * k + k * k * k) as f64, 0.0),
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * b.abs().max(1.0)
}

fn c1_formula_oracles() -> Outcome {
    let mut rng = stream(11, 0);
    let mut mismatches = Vec::new();
    for _ in 0..20 {
        let k: u64 = rng.random_range(1..=64);
        let m: u64 = k + rng.random_range(0..=1024);
        let l: u32 = rng.random_range(1..=6);
        for alg in [Algorithm::Nsa { l }, Algorithm::Chd, Algorithm::Mqrd, Algorithm::Cd { l }] {
            let c = table2_cost(alg, m, k).unwrap();
            let (pr, pu) = hand_cost(alg, m as i128, k as i128);
            if !close(c.per_realization, pr) || !close(c.per_use, pu) {
                mismatches.push(format!("{} at M={m}, K={k}", alg.label()));
            }
        }
    }
    let exact = exact_inverse_cost(128, 16).unwrap();
    let r = interconnect_rate(&InterconnectConfig::lte_20mhz()).unwrap();
    let total_ok = (r.r_total / 40.32e9 - 1.0).abs() <= 1e-3;
    let ofdm_ok = (r.r_ofdm / 16.8e6 - 1.0).abs() <= 1e-3;
    outcome(
        mismatches.is_empty() && exact == 36_864 && total_ok && ofdm_ok,
        format!(
            "80 closed forms, {} mismatches; exact(128,16) = {exact}; R_total = {:.4} Gb/s; R_OFDM = {:.4} MS/s",
            mismatches.len(),
            r.r_total / 1e9,
            r.r_ofdm / 1e6
        ),
    )
}

fn c2_decentralized() -> Outcome {
    let mut rng = stream(12, 0);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let k: usize = rng.random_range(1..=32);
        let m: usize = rng.random_range(k..=256);
        let divisors: Vec<usize> = (1..=m).filter(|b| m % b == 0).collect();
        let b = divisors[rng.random_range(0..divisors.len())];
        let g = draw_iid_rayleigh(m, k, &mut rng).unwrap().into_matrix();
        let y: Vec<C64> = (0..m).map(|_| cn01(&mut rng)).collect();
        let p = partition(m, b).unwrap();
        let zd = aggregate_gram(&local_gram(&g, &p).unwrap()).unwrap();
        worst = worst.max(rel_error(zd.matrix(), &g.adjoint_mul(&g)));
        let mf = aggregate_mf(&local_mf(&g, &y, &p).unwrap()).unwrap();
        let mfc = g.adjoint_mul_vec(&y);
        let num: f64 = mf.iter().zip(&mfc).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
        let den: f64 = mfc.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        worst = worst.max(num / den);
    }
    outcome(worst < 1e-12, format!("50 configs, worst relative error {worst:.2e} (limit 1e-12)"))
}

fn c3_bussgang() -> Outcome {
    let mut rng = stream(13, 0);
    let x: Vec<C64> = (0..1_000_000).map(|_| cn01(&mut rng)).collect();
    let q = quantize_adc(&x, 1, 1.0).unwrap();
    let d = bussgang(&x, &q).unwrap().distortion_to_signal;
    let theory = std::f64::consts::FRAC_PI_2 - 1.0;
    let rel = (d / theory - 1.0).abs();
    outcome(rel <= 0.02, format!("ratio {d:.5} vs π/2 − 1 = {theory:.5} ({:.2}% off, limit 2%)", 100.0 * rel))
}

/// Multi-user interference in dB without the reporting floor of `mui_db`.
fn raw_mui_db(e: &CMatrix) -> f64 {
    let k = e.rows();
    let total: f64 = (0..k)
        .map(|u| (0..k).filter(|&j| j != u).map(|j| e[(u, j)].norm_sqr()).sum::<f64>() / e[(u, u)].norm_sqr())
        .sum();
    10.0 * (total / k as f64).log10()
}

fn c4_zf_exact() -> Outcome {
    let mut rng = stream(14, 0);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..100 {
        let g = draw_iid_rayleigh(64, 8, &mut rng).unwrap().into_matrix();
        let a = combiner_exact(&g, Method::Zf, 0.0).unwrap();
        // Uplink combiner: row k of AᴴG is user k's output.
        worst = worst.max(raw_mui_db(&a.a.adjoint_mul(&g)));
    }
    outcome(worst < -180.0, format!("worst MUI over 100 draws {worst:.1} dB (limit −180 dB)"))
}

fn link_cfg(k: usize, frames: usize, grid: Vec<f64>) -> SimConfig {
    SimConfig {
        m: 128,
        k,
        snr_db: grid,
        modulation: Modulation::Qam16,
        coded: true,
        detector: Method::Zf,
        fixed_point: None,
        coherence: 128,
        frames,
        seed: 1,
        pilot_snr_db: None,
        adc: None,
        circuit: None,
        policy: VictimPolicy::Ignore,
    }
}

fn grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step).round() as usize;
    (0..=n).map(|i| lo + step * i as f64).collect()
}

/// Loss of the single row of a sweep. When the method never reaches the
/// target on the grid its loss is at least the distance from the reference
/// crossing to the top of the grid, which is returned with `false`.
fn loss_or_bound(s: &FxpSweep, top: f64) -> Option<(f64, bool)> {
    let row = &s.rows[0];
    match (row.snr_at_target, s.reference_snr) {
        (TargetSnr::Reached(v), TargetSnr::Reached(r)) => Some((v - r, true)),
        (TargetSnr::AboveGrid, TargetSnr::Reached(r)) => Some((top - r, false)),
        _ => None,
    }
}

fn c5_inversion_ordering() -> Outcome {
    const TARGET: f64 = 1e-3;
    let fxp = [Some(8)];
    let g16 = grid(-14.0, -10.0, 0.5);
    let methods = [Method::Chd { mode: ChdKind::Mmse }, Method::Cd { iterations: 3 }, Method::Nsa { iterations: 3 }];
    let s16 = run_fxp_sweep(&link_cfg(16, 500, g16), &methods, &fxp, TARGET).unwrap();
    let bits = s16.reference.points[0].bits;
    let l: Vec<Option<f64>> = s16.rows.iter().map(|r| r.loss_db).collect();
    let ordered = match (l[0], l[1], l[2]) {
        (Some(chd), Some(cd), Some(nsa)) => chd <= cd && cd <= nsa,
        _ => false,
    };
    let nsa = [Method::Nsa { iterations: 3 }];
    let s8 = run_fxp_sweep(&link_cfg(8, 1000, grid(-14.0, -10.0, 0.5)), &nsa, &fxp, TARGET).unwrap();
    let g32 = grid(-14.0, -6.0, 0.5);
    let top32 = *g32.last().unwrap();
    let s32 = run_fxp_sweep(&link_cfg(32, 250, g32), &nsa, &fxp, TARGET).unwrap();
    let k8 = loss_or_bound(&s8, -10.0);
    let k32 = loss_or_bound(&s32, top32);
    let gap_ok = matches!((k8, k32), (Some((a, true)), Some((b, _))) if b - a >= 1.0);
    let show = |x: Option<f64>| x.map_or("n/a".to_string(), |v| format!("{v:+.3}"));
    let show_k = |x: Option<(f64, bool)>| match x {
        Some((v, true)) => format!("{v:+.3}"),
        Some((v, false)) => format!(">= {v:+.3} (never reaches 1e-3)"),
        None => "n/a".into(),
    };
    outcome(
        ordered && gap_ok,
        format!(
            "K=16 losses at 8 bits: ChD {} CD {} NSA {} dB ({}); NSA K=8 {} K=32 {} dB ({}); {bits} bits/point at K=16",
            show(l[0]),
            show(l[1]),
            show(l[2]),
            if ordered { "ordered" } else { "not ordered" },
            show_k(k8),
            show_k(k32),
            if gap_ok { "gap >= 1 dB" } else { "gap < 1 dB" },
        ),
    )
}

fn c6_weighted_nsa() -> Outcome {
    let mut rng = stream(16, 0);
    let (mut plain, mut weighted) = (Vec::new(), Vec::new());
    let nsa = NsaConfig::new(3).unwrap();
    for _ in 0..200 {
        let g = draw_iid_rayleigh(128, 32, &mut rng).unwrap();
        let z = gram(&g).into_matrix();
        plain.push(inverse_error(&nsa_inverse(&z, &nsa).unwrap().inverse, &z));
        let w = WnsaConfig::new(fit_wnsa_weights(&z, 3).unwrap()).unwrap();
        weighted.push(inverse_error(&wnsa_inverse(&z, &w).unwrap().inverse, &z));
    }
    let median = |v: &mut Vec<f64>| {
        v.sort_by(f64::total_cmp);
        (v[99] + v[100]) / 2.0
    };
    let (p, w) = (median(&mut plain), median(&mut weighted));
    outcome(w < p, format!("median ‖Ẑ⁻¹Z − I‖_F: WNSA {w:.4} vs NSA {p:.4}"))
}

fn c7_evm_gap() -> Outcome {
    let cfg = EvmConfig {
        m_list: vec![30, 100],
        k: 25,
        modulation: Modulation::Qam16,
        precoder: Method::Zf,
        pa: PaSpec::Cubic { backoff_db: 0.0 },
        uses: 128,
        trials: 100,
        seed: 1,
        snr_db: None,
    };
    let p = run_downlink_evm(&cfg).unwrap();
    let gap = p[1].evm_db - p[0].evm_db;
    outcome(
        gap <= -8.0,
        format!("K=25: EVM {:.2} dB at M=30, {:.2} dB at M=100, gap {gap:.2} dB (limit −8 dB)", p[0].evm_db, p[1].evm_db),
    )
}

fn c8_outage() -> Outcome {
    let cfg = SimConfig {
        m: 100,
        k: 10,
        snr_db: grid(-13.0, -7.0, 0.5),
        modulation: Modulation::Qpsk,
        coded: false,
        detector: Method::Zf,
        fixed_point: None,
        coherence: 100,
        frames: 1000,
        seed: 1,
        pilot_snr_db: None,
        adc: None,
        circuit: None,
        policy: VictimPolicy::Exclude,
    };
    let s = run_outage_study(&cfg, &[0.1], VictimPolicy::Exclude, 1e-3).unwrap();
    let row = &s.rows[0];
    let pass = matches!(row.penalty_db, Some(p) if p < 0.5);
    outcome(
        pass,
        format!(
            "{} victims excluded: reference {} dB, outage {} dB, penalty {} (limit 0.5 dB); {} bits/point",
            row.victims,
            s.reference_snr,
            row.snr_at_target,
            row.penalty_db.map_or("n/a".into(), |p| format!("{p:.3} dB")),
            s.reference.points[0].bits
        ),
    )
}

fn mean_db(values: &[f64]) -> f64 {
    10.0 * (values.iter().map(|v| 10f64.powf(v / 10.0)).sum::<f64>() / values.len() as f64).log10()
}

fn c9_reciprocity() -> Outcome {
    let (m, k) = (64, 8);
    let mut rng = stream(19, 0);
    let (mut uncal, mut genie) = (Vec::new(), Vec::new());
    let mut worst_offdiag: f64 = 0.0;
    for _ in 0..100 {
        let g = draw_iid_rayleigh(m, k, &mut rng).unwrap().into_matrix();
        let fe = FrontEndSet::random(m, k, MismatchBounds::default(), &mut rng);
        let (ul, dl) = build_nonreciprocal(&g, &fe).unwrap();
        uncal.push(mui_db(&effective_downlink(&dl, &precode(&ul, Method::Zf, 1.0).unwrap())));
        let c = calibrate(&fe, f64::NEG_INFINITY, &mut rng).unwrap();
        let cal = apply_calibration(&ul, &c).unwrap();
        genie.push(raw_mui_db(&effective_downlink(&dl, &precode(&cal, Method::Zf, 1.0).unwrap())));

        let fe = FrontEndSet::terminal_only(m, k, MismatchBounds::default(), &mut rng);
        let (ul, dl) = build_nonreciprocal(&g, &fe).unwrap();
        let e: CMatrix = effective_downlink(&dl, &precode(&ul, Method::Zf, 1.0).unwrap());
        let diag = (0..k).map(|i| e[(i, i)].norm()).fold(0.0, f64::max);
        for i in 0..k {
            for j in (0..k).filter(|&j| j != i) {
                worst_offdiag = worst_offdiag.max(e[(i, j)].norm() / diag);
            }
        }
    }
    let (u, gm) = (mean_db(&uncal), mean_db(&genie));
    outcome(
        u > -15.0 && gm < -80.0 && worst_offdiag < 1e-9,
        format!(
            "M=64, K=8, 100 draws: uncalibrated MUI {u:.2} dB (needs > −15), genie {gm:.1} dB (needs < −80), \
             terminal-only off-diagonal {worst_offdiag:.1e} (needs < 1e-9)"
        ),
    )
}

fn c10_hardening() -> Outcome {
    let mut rng = stream(20, 0);
    let mut parts = Vec::new();
    let mut pass = true;
    for m in [10, 100, 1000] {
        let v = hardening_variance(m, 10_000, &mut rng).unwrap();
        let rel = v * m as f64 - 1.0;
        pass &= rel.abs() <= 0.15;
        parts.push(format!("M={m}: {:+.1}%", 100.0 * rel));
    }
    outcome(pass, format!("var(‖g‖²/M)·M − 1: {} (limit ±15%)", parts.join(", ")))
}

fn c11_properties() -> Outcome {
    let mut failures = Vec::new();
    for seed in [1, 2024, 0xDEAD_BEEF] {
        for (name, check) in properties::ALL {
            if let Err(msg) = check(seed) {
                failures.push(format!("seed {seed} {name}: {msg}"));
            }
        }
    }
    let n = properties::ALL.len();
    if failures.is_empty() {
        outcome(true, format!("{n} invariants under 3 seeds"))
    } else {
        outcome(false, failures.join("; "))
    }
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("formula oracles", c1_formula_oracles),
        ("decentralized equals centralized", c2_decentralized),
        ("1-bit Bussgang distortion", c3_bussgang),
        ("ZF exactness", c4_zf_exact),
        ("approximate inversion ordering", c5_inversion_ordering),
        ("weighted vs plain NSA", c6_weighted_nsa),
        ("PA EVM gap", c7_evm_gap),
        ("outage resilience", c8_outage),
        ("reciprocity calibration", c9_reciprocity),
        ("channel hardening", c10_hardening),
        ("property suites", c11_properties),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let o = run();
        failed += usize::from(!o.pass);
        println!(
            "{} C{}: {name}: {} [{:.1}s]",
            if o.pass { "PASS" } else { "FAIL" },
            i + 1,
            o.detail,
            t.elapsed().as_secs_f64()
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
}
