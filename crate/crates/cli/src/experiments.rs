//! Experiment runners. Each returns a table of rows for the CSV writer.

use mmimo::complexity::{table2_cost, total_cost};
use mmimo::decentral::{group_link_load, interconnect_rate, partition, LoadPeriod};
use mmimo::equalization::{precode, Method};
use mmimo::impairments::{
    apply_calibration, build_nonreciprocal, calibrate, effective_downlink, mui_db, FrontEndSet, MismatchBounds,
};
use mmimo::link::{run_downlink_evm, run_fxp_sweep, run_outage_study, run_uplink_ber, TargetSnr};
use mmimo::channel::{draw_iid_rayleigh, hardening_variance};
use mmimo::rng::{stream, tagged};
use rayon::prelude::*;

use crate::config::{CalibrationParams, ConfigFile, Experiment};

pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }
}

fn num(v: f64) -> String {
    format!("{v}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn target(t: TargetSnr) -> String {
    match t {
        TargetSnr::Reached(v) => num(v),
        other => other.to_string(),
    }
}

/// Runs `experiment` on an already validated configuration.
pub fn run(cfg: &ConfigFile, experiment: Experiment) -> mmimo::Result<Table> {
    let section = || -> ! { unreachable!("validated configuration lacks its section") };
    match experiment {
        Experiment::Ber => {
            let link = cfg.link.as_ref().unwrap_or_else(|| section());
            let t = run_uplink_ber(link)?;
            let mut header = vec!["snr_db", "n0", "bits", "errors", "ber", "std_err", "diverging_frames"]
                .into_iter()
                .map(String::from)
                .collect::<Vec<_>>();
            header.extend((0..link.k).map(|u| format!("ber_user{u}")));
            let rows = t
                .points
                .iter()
                .map(|p| {
                    let mut r = vec![
                        num(p.snr_db),
                        num(p.n0),
                        p.bits.to_string(),
                        p.errors.to_string(),
                        num(p.ber),
                        num(p.std_err),
                        p.diverging_frames.to_string(),
                    ];
                    r.extend(p.per_user_ber.iter().map(|&b| num(b)));
                    r
                })
                .collect();
            Ok(Table { header, rows })
        }
        Experiment::FxpSweep => {
            let link = cfg.link.as_ref().unwrap_or_else(|| section());
            let sweep = cfg.sweep.as_ref().unwrap_or_else(|| section());
            let bits: Vec<Option<u32>> = sweep.fraction_bits.iter().map(|&b| (b > 0).then_some(b)).collect();
            let s = run_fxp_sweep(link, &sweep.methods, &bits, sweep.target_ber)?;
            let mut t = Table::new(&["method", "fraction_bits", "target_ber", "snr_at_target_db", "loss_db"]);
            t.rows.push(vec![
                "ZF (reference)".into(),
                "float".into(),
                num(s.target_ber),
                target(s.reference_snr),
                "0".into(),
            ]);
            for r in &s.rows {
                t.rows.push(vec![
                    r.method.label(),
                    r.fraction_bits.map_or("float".into(), |b| b.to_string()),
                    num(s.target_ber),
                    target(r.snr_at_target),
                    opt(r.loss_db),
                ]);
            }
            Ok(t)
        }
        Experiment::Outage => {
            let link = cfg.link.as_ref().unwrap_or_else(|| section());
            let o = cfg.outage.as_ref().unwrap_or_else(|| section());
            let mut t = Table::new(&[
                "policy",
                "victim_fraction",
                "victims",
                "target_ber",
                "snr_at_target_db",
                "penalty_db",
            ]);
            for &policy in &o.policies {
                let s = run_outage_study(link, &o.victim_fractions, policy, o.target_ber)?;
                for r in &s.rows {
                    t.rows.push(vec![
                        format!("{policy:?}").to_lowercase(),
                        num(r.victim_fraction),
                        r.victims.to_string(),
                        num(s.target_ber),
                        target(r.snr_at_target),
                        opt(r.penalty_db),
                    ]);
                }
            }
            Ok(t)
        }
        Experiment::EvmVsM => {
            let e = cfg.evm.as_ref().unwrap_or_else(|| section());
            let mut t = Table::new(&["m", "k", "evm_db", "std_err_db"]);
            for p in run_downlink_evm(e)? {
                t.rows.push(vec![p.m.to_string(), e.k.to_string(), num(p.evm_db), num(p.std_err_db)]);
            }
            Ok(t)
        }
        Experiment::ComplexityTable => {
            let c = cfg.complexity.as_ref().unwrap_or_else(|| section());
            let mut t = Table::new(&["algorithm", "m", "k", "per_realization", "per_use", "coherence", "total"]);
            for alg in c.algorithms() {
                for &m in &c.m {
                    for &k in &c.k {
                        let cost = table2_cost(alg, m, k)?;
                        let total = match c.coherence {
                            Some(p) => num(total_cost(alg, m, k, p)?),
                            None => String::new(),
                        };
                        t.rows.push(vec![
                            alg.label(),
                            m.to_string(),
                            k.to_string(),
                            num(cost.per_realization),
                            num(cost.per_use),
                            c.coherence.map(|p| p.to_string()).unwrap_or_default(),
                            total,
                        ]);
                    }
                }
            }
            Ok(t)
        }
        Experiment::Interconnect => {
            let p = cfg.interconnect.clone().unwrap_or_default();
            let rate = interconnect_rate(&p.rate_config())?;
            let mut t = Table::new(&[
                "m",
                "groups",
                "group_size",
                "r_ofdm",
                "r_total",
                "realization_bits_decentralized",
                "realization_bits_triangular",
                "realization_bits_centralized",
                "use_bits_decentralized",
                "use_bits_centralized",
            ]);
            for &b in &p.groups {
                let part = partition(p.m as usize, b)?;
                let r = group_link_load(&part, p.k, p.w, LoadPeriod::Realization);
                let u = group_link_load(&part, p.k, p.w, LoadPeriod::Use);
                t.rows.push(vec![
                    p.m.to_string(),
                    b.to_string(),
                    part.group_size().to_string(),
                    num(rate.r_ofdm),
                    num(rate.r_total),
                    r.decentralized.to_string(),
                    r.decentralized_triangular.to_string(),
                    r.centralized.to_string(),
                    u.decentralized.to_string(),
                    u.centralized.to_string(),
                ]);
            }
            Ok(t)
        }
        Experiment::Hardening => {
            let h = cfg.hardening.as_ref().unwrap_or_else(|| section());
            let vars: Vec<f64> = h
                .m_list
                .par_iter()
                .enumerate()
                .map(|(i, &m)| hardening_variance(m, h.trials, &mut stream(h.seed, tagged(20, i as u64))))
                .collect::<mmimo::Result<_>>()?;
            let mut t = Table::new(&["m", "trials", "variance", "expected", "relative_deviation"]);
            for (&m, v) in h.m_list.iter().zip(vars) {
                let expected = 1.0 / m as f64;
                t.rows.push(vec![
                    m.to_string(),
                    h.trials.to_string(),
                    num(v),
                    num(expected),
                    num((v - expected) / expected),
                ]);
            }
            Ok(t)
        }
        Experiment::Calibration => {
            let c = cfg.calibration.as_ref().unwrap_or_else(|| section());
            calibration_table(c)
        }
    }
}

#[derive(Clone, Copy)]
enum Case {
    Uncalibrated,
    TerminalOnly,
    Residual(f64),
}

fn calibration_table(c: &CalibrationParams) -> mmimo::Result<Table> {
    let bounds = MismatchBounds {
        gain_db: c.gain_db,
        phase_deg: c.phase_deg,
    };
    let mut cases = vec![Case::Uncalibrated, Case::TerminalOnly, Case::Residual(f64::NEG_INFINITY)];
    cases.extend(c.residual_db.iter().map(|&r| Case::Residual(r)));
    let mut t = Table::new(&["case", "residual_db", "trials", "mui_db"]);
    for case in cases {
        let linear: Vec<f64> = (0..c.trials as u64)
            .into_par_iter()
            .map(|trial| {
                let mut rng = stream(c.seed, tagged(30, trial));
                let g = draw_iid_rayleigh(c.m, c.k, &mut rng)?.into_matrix();
                let fe = match case {
                    Case::TerminalOnly => FrontEndSet::terminal_only(c.m, c.k, bounds, &mut rng),
                    _ => FrontEndSet::random(c.m, c.k, bounds, &mut rng),
                };
                let (ul, dl) = build_nonreciprocal(&g, &fe)?;
                let est = match case {
                    Case::Residual(r) => apply_calibration(&ul, &calibrate(&fe, r, &mut rng)?)?,
                    _ => ul,
                };
                let e = effective_downlink(&dl, &precode(&est, Method::Zf, 1.0)?);
                Ok(10f64.powf(mui_db(&e) / 10.0))
            })
            .collect::<mmimo::Result<_>>()?;
        let mean = linear.iter().sum::<f64>() / linear.len() as f64;
        let (name, residual) = match case {
            Case::Uncalibrated => ("uncalibrated", String::new()),
            Case::TerminalOnly => ("terminal_only", String::new()),
            Case::Residual(r) if r == f64::NEG_INFINITY => ("genie", String::new()),
            Case::Residual(r) => ("calibrated", num(r)),
        };
        t.rows.push(vec![name.into(), residual, c.trials.to_string(), num(10.0 * mean.log10())]);
    }
    Ok(t)
}

