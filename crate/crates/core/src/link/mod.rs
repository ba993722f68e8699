//! Modulation, channel coding and end-to-end Monte-Carlo experiments.

pub mod coding;
pub mod evm;
pub mod modulation;
pub mod outage;
pub mod sim;

pub use coding::{conv_encode, viterbi_decode, ConvCode, Interleaver};
pub use evm::{run_downlink_evm, EvmConfig, EvmPoint, PaSpec};
pub use modulation::{demap_hard, demap_soft, hard_decisions, map_bits, Constellation, Modulation};
pub use outage::{run_outage_study, OutageRow, OutageStudy};
pub use sim::{
    run_fxp_sweep, run_uplink_ber, snr_at_ber, snr_loss, snr_to_n0, BerPoint, BerTable, FxpConfig, FxpRow, FxpSweep,
    SimConfig, TargetSnr, VictimPolicy,
};
