//! All-photonic entanglement generation switch.
//!
//! BSAs are preassigned to client pairs once per calibration epoch and fire
//! blindly every attempt period, so the aggregate rate is the per-station
//! end-to-end success probability times the maximum number of stations that
//! the source and BSA budgets allow.

use serde::{Deserialize, Serialize};

use crate::bmatch::{emax_closed_form, CapacityVector};
use crate::hwmodel::{fidelity_from_werner, storage_decay, HardwareProfile};
use crate::lleg::{egs_link_success, single_link_werner, LinkArchitecture};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Architecture {
    Egs,
    MemSingle,
    MemBlock { k: u32 },
}

impl std::fmt::Display for Architecture {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Architecture::Egs => write!(f, "egs"),
            Architecture::MemSingle => write!(f, "mem-single"),
            Architecture::MemBlock { k } => write!(f, "mem-block(K={k})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct E2eFidelity {
    pub werner: f64,
    pub fidelity: f64,
}

impl E2eFidelity {
    pub(crate) fn from_werner(werner: f64) -> Self {
        // Werner products of valid links never leave [-1/3, 1].
        let fidelity =
            fidelity_from_werner(werner.clamp(-1.0 / 3.0, 1.0)).expect("clamped werner parameter");
        E2eFidelity { werner, fidelity }
    }
}

/// Aggregate throughput of one architecture at one operating point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateSummary {
    /// End-to-end pairs per second over all client pairs.
    pub rate_total: f64,
    /// Pairs per second per client pair.
    pub rate_normalized: f64,
    pub slot_duration: f64,
}

/// Rate and fidelity of one architecture at one operating point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArchitectureMetrics {
    pub architecture: Architecture,
    pub rate_total: f64,
    pub rate_normalized: f64,
    pub werner_e2e: f64,
    pub fidelity_e2e: f64,
    pub slot_duration: f64,
}

impl ArchitectureMetrics {
    pub fn new(architecture: Architecture, rate: RateSummary, fidelity: E2eFidelity) -> Self {
        ArchitectureMetrics {
            architecture,
            rate_total: rate.rate_total,
            rate_normalized: rate.rate_normalized,
            werner_e2e: fidelity.werner,
            fidelity_e2e: fidelity.fidelity,
            slot_duration: rate.slot_duration,
        }
    }
}

/// p_i p_j xi^2 p_BSA for homogeneous links.
pub fn egs_e2e_prob(profile: &HardwareProfile) -> f64 {
    let p = egs_link_success(profile);
    let xi = profile.detector_eff;
    p * p * xi * xi * profile.p_bsa
}

/// Source and BSA capacities of the EGS as a b-matching instance.
pub fn egs_capacities(profile: &HardwareProfile) -> CapacityVector {
    CapacityVector::new(profile.multiplex.clone(), profile.bsm_budget)
        .expect("validated profile has at least two clients")
}

/// Maximum expected aggregate rate: p_e2e * f_pulse * E_max(S, B), scaled
/// by the active-duty factor.
pub fn egs_max_total_rate(profile: &HardwareProfile) -> RateSummary {
    let slot = profile.attempt_period();
    let stations = emax_closed_form(&egs_capacities(profile)) as f64;
    let rate_total = profile.active_duty * egs_e2e_prob(profile) * stations / slot;
    RateSummary {
        rate_total,
        rate_normalized: rate_total / profile.n_flows() as f64,
        slot_duration: slot,
    }
}

/// w_i w_j q_BSM exp(-2 tau_hrld / T): both end-node qubits wait for the
/// end-to-end herald after the BSM.
pub fn egs_fidelity(profile: &HardwareProfile) -> E2eFidelity {
    let w_link = single_link_werner(profile, LinkArchitecture::Egs);
    let herald = profile.heralding_delay();
    let werner =
        w_link * w_link * profile.q_bsm * storage_decay(2.0 * herald, profile.coherence_time);
    E2eFidelity::from_werner(werner)
}

pub fn egs_metrics(profile: &HardwareProfile) -> ArchitectureMetrics {
    ArchitectureMetrics::new(
        Architecture::Egs,
        egs_max_total_rate(profile),
        egs_fidelity(profile),
    )
}
