//! Antenna-outage study: SNR penalty at a target BER as a function of the
//! fraction of victim antennas, for a receiver that either ignores the
//! faults or excludes the known victims.

use super::sim::{run_uplink_ber, snr_at_ber, snr_loss, BerTable, SimConfig, TargetSnr, VictimPolicy};
use crate::error::{Error, Result};
use crate::impairments::{CircuitErrorModel, ErrorMode};

#[derive(Clone, Debug, PartialEq)]
pub struct OutageRow {
    pub victim_fraction: f64,
    pub victims: usize,
    pub policy: VictimPolicy,
    pub snr_at_target: TargetSnr,
    /// Offset from the error-free curve; `None` when either crossing lies
    /// outside the SNR grid.
    pub penalty_db: Option<f64>,
    pub table: BerTable,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OutageStudy {
    pub target_ber: f64,
    pub reference: BerTable,
    pub reference_snr: TargetSnr,
    pub rows: Vec<OutageRow>,
}

/// Runs the error-free reference and one curve per victim fraction. The
/// fault model comes from `cfg.circuit` (stuck-at-max when absent) with its
/// fraction replaced; all curves share channel, payload and noise draws.
pub fn run_outage_study(
    cfg: &SimConfig,
    victim_fractions: &[f64],
    policy: VictimPolicy,
    target_ber: f64,
) -> Result<OutageStudy> {
    if !(target_ber > 0.0 && target_ber < 0.5) {
        return Err(Error::config("target_ber", "must lie in (0, 0.5)"));
    }
    let template = match cfg.circuit {
        Some(c) => c,
        None => CircuitErrorModel::new(0.0, ErrorMode::StuckAtMax)?,
    };
    let reference = run_uplink_ber(&SimConfig {
        circuit: None,
        ..cfg.clone()
    })?;
    let reference_snr = snr_at_ber(&reference.points, target_ber);
    let mut rows = Vec::with_capacity(victim_fractions.len());
    for &fraction in victim_fractions {
        let model = CircuitErrorModel {
            victim_fraction: fraction,
            detected: policy == VictimPolicy::Exclude,
            ..template
        };
        model.validate()?;
        let table = run_uplink_ber(&SimConfig {
            circuit: Some(model),
            policy,
            ..cfg.clone()
        })?;
        let snr = snr_at_ber(&table.points, target_ber);
        log::info!("outage {fraction} ({policy:?}): {snr}");
        rows.push(OutageRow {
            victim_fraction: fraction,
            victims: model.victim_count(cfg.m),
            policy,
            snr_at_target: snr,
            penalty_db: snr_loss(snr, reference_snr),
            table,
        });
    }
    Ok(OutageStudy {
        target_ber,
        reference,
        reference_snr,
        rows,
    })
}
