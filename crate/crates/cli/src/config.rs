//! Experiment configuration file.
//!
//! One TOML document names the experiment and carries a section with its
//! parameters. The document is echoed into every CSV it produces (with any
//! command-line overrides applied), so a run can be reproduced from its
//! output alone.

use std::fmt;
use std::str::FromStr;

use mmimo::complexity::Algorithm;
use mmimo::decentral::{partition, InterconnectConfig};
use mmimo::equalization::Method;
use mmimo::link::{EvmConfig, SimConfig, VictimPolicy};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Ber,
    EvmVsM,
    FxpSweep,
    Outage,
    ComplexityTable,
    Interconnect,
    Hardening,
    Calibration,
}

impl Experiment {
    pub const ALL: [Experiment; 8] = [
        Experiment::Ber,
        Experiment::EvmVsM,
        Experiment::FxpSweep,
        Experiment::Outage,
        Experiment::ComplexityTable,
        Experiment::Interconnect,
        Experiment::Hardening,
        Experiment::Calibration,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Ber => "ber",
            Experiment::EvmVsM => "evm_vs_m",
            Experiment::FxpSweep => "fxp_sweep",
            Experiment::Outage => "outage",
            Experiment::ComplexityTable => "complexity_table",
            Experiment::Interconnect => "interconnect",
            Experiment::Hardening => "hardening",
            Experiment::Calibration => "calibration",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Experiment::ALL.into_iter().find(|e| e.name() == s).ok_or_else(|| {
            let names: Vec<_> = Experiment::ALL.iter().map(|e| e.name()).collect();
            format!("unknown experiment `{s}` (expected one of: {})", names.join(", "))
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FxpSweepParams {
    pub methods: Vec<Method>,
    /// Fraction widths to sweep; 0 stands for double precision.
    pub fraction_bits: Vec<u32>,
    #[serde(default = "default_target_ber")]
    pub target_ber: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutageParams {
    pub victim_fractions: Vec<f64>,
    pub policies: Vec<VictimPolicy>,
    #[serde(default = "default_target_ber")]
    pub target_ber: f64,
}

fn default_target_ber() -> f64 {
    1e-3
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComplexityParams {
    pub m: Vec<u64>,
    pub k: Vec<u64>,
    /// Iterations for NSA and CD when `algorithms` is not given.
    #[serde(default = "default_iterations")]
    pub l: u32,
    /// Channel uses per coherence block for the total-cost column.
    #[serde(default)]
    pub coherence: Option<u64>,
    #[serde(default)]
    pub algorithms: Option<Vec<Algorithm>>,
}

fn default_iterations() -> u32 {
    3
}

impl ComplexityParams {
    pub fn algorithms(&self) -> Vec<Algorithm> {
        self.algorithms.clone().unwrap_or_else(|| {
            vec![
                Algorithm::Nsa { l: self.l },
                Algorithm::Chd,
                Algorithm::Mqrd,
                Algorithm::Cd { l: self.l },
                Algorithm::Exact,
            ]
        })
    }
}

/// Fronthaul parameters; every field defaults to the 20 MHz LTE setup with
/// 100 antennas and 24-bit samples.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterconnectParams {
    #[serde(default = "defaults::r_samp")]
    pub r_samp: f64,
    #[serde(default = "defaults::n_data")]
    pub n_data: u32,
    #[serde(default = "defaults::n_sub")]
    pub n_sub: u32,
    #[serde(default = "defaults::n_cp")]
    pub n_cp: f64,
    #[serde(default = "defaults::w")]
    pub w: u32,
    #[serde(default = "defaults::m")]
    pub m: u32,
    /// Users, for the per-group link load.
    #[serde(default = "defaults::k")]
    pub k: usize,
    /// Group counts `B` to tabulate; each must divide `m`.
    #[serde(default = "defaults::groups")]
    pub groups: Vec<usize>,
}

mod defaults {
    use super::InterconnectConfig;

    fn lte() -> InterconnectConfig {
        InterconnectConfig::lte_20mhz()
    }
    pub fn r_samp() -> f64 {
        lte().r_samp
    }
    pub fn n_data() -> u32 {
        lte().n_data
    }
    pub fn n_sub() -> u32 {
        lte().n_sub
    }
    pub fn n_cp() -> f64 {
        lte().n_cp
    }
    pub fn w() -> u32 {
        lte().w
    }
    pub fn m() -> u32 {
        lte().m
    }
    pub fn k() -> usize {
        10
    }
    pub fn groups() -> Vec<usize> {
        vec![1, 4, 10, 25, 100]
    }
}

impl Default for InterconnectParams {
    fn default() -> Self {
        toml::from_str("").expect("all fields have defaults")
    }
}

impl InterconnectParams {
    pub fn rate_config(&self) -> InterconnectConfig {
        InterconnectConfig {
            r_samp: self.r_samp,
            n_data: self.n_data,
            n_sub: self.n_sub,
            n_cp: self.n_cp,
            w: self.w,
            m: self.m,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HardeningParams {
    pub m_list: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationParams {
    pub m: usize,
    pub k: usize,
    /// Uniform front-end gain mismatch bound (dB).
    #[serde(default = "default_gain_db")]
    pub gain_db: f64,
    /// Uniform front-end phase mismatch bound (degrees).
    #[serde(default = "default_phase_deg")]
    pub phase_deg: f64,
    /// Calibration residual levels (dB) to evaluate besides the
    /// uncalibrated and genie cases.
    #[serde(default)]
    pub residual_db: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
}

fn default_gain_db() -> f64 {
    1.0
}

fn default_phase_deg() -> f64 {
    5.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    /// Experiment the file is meant for; checked against the command line.
    #[serde(default)]
    pub experiment: Option<Experiment>,
    #[serde(default)]
    pub link: Option<SimConfig>,
    #[serde(default)]
    pub sweep: Option<FxpSweepParams>,
    #[serde(default)]
    pub outage: Option<OutageParams>,
    #[serde(default)]
    pub evm: Option<EvmConfig>,
    #[serde(default)]
    pub complexity: Option<ComplexityParams>,
    #[serde(default)]
    pub interconnect: Option<InterconnectParams>,
    #[serde(default)]
    pub hardening: Option<HardeningParams>,
    #[serde(default)]
    pub calibration: Option<CalibrationParams>,
}

/// A named problem found while validating.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub field: String,
    pub reason: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "`{}`: {}", self.field, self.reason)
    }
}

fn violation(field: impl Into<String>, reason: impl Into<String>) -> Violation {
    Violation {
        field: field.into(),
        reason: reason.into(),
    }
}

fn from_core(section: &str, e: mmimo::Error) -> Violation {
    match e {
        mmimo::Error::Config { field, reason } => violation(format!("{section}.{field}"), reason),
        other => violation(section, other.to_string()),
    }
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, Violation> {
        toml::from_str(text).map_err(|e| {
            let msg = e.message().to_string();
            // Unknown or missing keys are reported by name in the message.
            violation("config", msg)
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration types serialize")
    }

    /// Experiment named on the command line, else in the file.
    pub fn resolve(&self, requested: Option<Experiment>) -> Result<Experiment, Violation> {
        match (requested, self.experiment) {
            (Some(r), Some(f)) if r != f => Err(violation(
                "experiment",
                format!("command line asks for `{r}` but the file is for `{f}`"),
            )),
            (Some(r), _) => Ok(r),
            (None, Some(f)) => Ok(f),
            (None, None) => Err(violation("experiment", "not given on the command line or in the file")),
        }
    }

    /// Replaces every seed in the file.
    pub fn override_seed(&mut self, seed: u64) {
        if let Some(l) = &mut self.link {
            l.seed = seed;
        }
        if let Some(e) = &mut self.evm {
            e.seed = seed;
        }
        if let Some(h) = &mut self.hardening {
            h.seed = seed;
        }
        if let Some(c) = &mut self.calibration {
            c.seed = seed;
        }
    }

    /// Schema and cross-field checks for `experiment`; no computation.
    pub fn validate(&self, experiment: Experiment) -> Vec<Violation> {
        let mut out = Vec::new();
        let missing = |name: &str| violation(name, format!("section [{name}] is required for `{experiment}`"));
        match experiment {
            Experiment::Ber | Experiment::FxpSweep | Experiment::Outage => match &self.link {
                Some(l) => {
                    if let Err(e) = l.validate() {
                        out.push(from_core("link", e));
                    }
                }
                None => out.push(missing("link")),
            },
            Experiment::EvmVsM => match &self.evm {
                Some(e) => {
                    if let Err(err) = e.validate() {
                        out.push(from_core("evm", err));
                    }
                }
                None => out.push(missing("evm")),
            },
            Experiment::ComplexityTable => match &self.complexity {
                Some(c) => out.extend(validate_complexity(c)),
                None => out.push(missing("complexity")),
            },
            Experiment::Interconnect => {
                let p = self.interconnect.clone().unwrap_or_default();
                out.extend(validate_interconnect(&p));
            }
            Experiment::Hardening => match &self.hardening {
                Some(h) => {
                    if h.m_list.is_empty() || h.m_list.contains(&0) {
                        out.push(violation("hardening.m_list", "must list positive array sizes"));
                    }
                    if h.trials < 1000 {
                        out.push(violation("hardening.trials", "at least 1000 draws are needed"));
                    }
                }
                None => out.push(missing("hardening")),
            },
            Experiment::Calibration => match &self.calibration {
                Some(c) => out.extend(validate_calibration(c)),
                None => out.push(missing("calibration")),
            },
        }
        if experiment == Experiment::FxpSweep {
            match &self.sweep {
                Some(s) => {
                    if s.methods.is_empty() {
                        out.push(violation("sweep.methods", "is empty"));
                    }
                    for m in &s.methods {
                        if let Err(e) = m.validate() {
                            out.push(from_core("sweep", e));
                        }
                    }
                    if s.fraction_bits.is_empty() {
                        out.push(violation("sweep.fraction_bits", "is empty"));
                    }
                    if let Some(b) = s.fraction_bits.iter().find(|&&b| b > 40) {
                        out.push(violation("sweep.fraction_bits", format!("{b} exceeds 40")));
                    }
                    check_target(&mut out, "sweep.target_ber", s.target_ber);
                }
                None => out.push(missing("sweep")),
            }
        }
        if experiment == Experiment::Outage {
            match &self.outage {
                Some(o) => {
                    if o.victim_fractions.is_empty() || o.policies.is_empty() {
                        out.push(violation("outage", "victim_fractions and policies must be non-empty"));
                    }
                    if let Some(f) = o.victim_fractions.iter().find(|f| !(0.0..=1.0).contains(*f)) {
                        out.push(violation("outage.victim_fractions", format!("{f} is outside [0, 1]")));
                    }
                    if let Some(l) = &self.link {
                        if o.policies.contains(&VictimPolicy::Exclude) {
                            let worst = o.victim_fractions.iter().cloned().fold(0.0, f64::max);
                            let left = l.m - ((worst * l.m as f64).round() as usize).min(l.m);
                            if left < l.k {
                                out.push(violation(
                                    "outage.victim_fractions",
                                    format!("excluding {worst} of M = {} leaves fewer antennas than K = {}", l.m, l.k),
                                ));
                            }
                        }
                    }
                    check_target(&mut out, "outage.target_ber", o.target_ber);
                }
                None => out.push(missing("outage")),
            }
        }
        out
    }
}

fn check_target(out: &mut Vec<Violation>, field: &str, t: f64) {
    if !(t > 0.0 && t < 0.5) {
        out.push(violation(field, "must lie in (0, 0.5)"));
    }
}

fn validate_complexity(c: &ComplexityParams) -> Vec<Violation> {
    let mut out = Vec::new();
    if c.m.is_empty() || c.k.is_empty() {
        out.push(violation("complexity", "m and k lists must be non-empty"));
    }
    if c.k.contains(&0) {
        out.push(violation("complexity.k", "K must be at least 1"));
    }
    if c.l < 1 {
        out.push(violation("complexity.l", "must be at least 1"));
    }
    if c.coherence == Some(0) {
        out.push(violation("complexity.coherence", "must be at least 1"));
    }
    if let (Some(&m), Some(&k)) = (c.m.iter().min(), c.k.iter().max()) {
        if k > m {
            out.push(violation("complexity.k", format!("K = {k} exceeds M = {m}")));
        }
    }
    out
}

fn validate_interconnect(p: &InterconnectParams) -> Vec<Violation> {
    let mut out = Vec::new();
    if let Err(e) = p.rate_config().validate() {
        out.push(from_core("interconnect", e));
    }
    if p.k < 1 {
        out.push(violation("interconnect.k", "must be at least 1"));
    }
    for &b in &p.groups {
        if let Err(e) = partition(p.m as usize, b) {
            out.push(from_core("interconnect", match e {
                mmimo::Error::Config { reason, .. } => mmimo::Error::config("groups", reason),
                other => other,
            }));
        }
    }
    out
}

fn validate_calibration(c: &CalibrationParams) -> Vec<Violation> {
    let mut out = Vec::new();
    if c.k < 1 {
        out.push(violation("calibration.k", "must be at least 1"));
    }
    if c.k > c.m {
        out.push(violation("calibration.k", format!("K = {} exceeds M = {}", c.k, c.m)));
    }
    if c.trials < 1 {
        out.push(violation("calibration.trials", "must be at least 1"));
    }
    if !(c.gain_db >= 0.0) || !(c.phase_deg >= 0.0) {
        out.push(violation("calibration", "mismatch bounds must be non-negative"));
    }
    if c.residual_db.iter().any(|r| r.is_nan()) {
        out.push(violation("calibration.residual_db", "values must be numbers"));
    }
    out
}
