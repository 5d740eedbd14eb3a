//! Analytical rate and fidelity models for two quantum-switch architectures:
//! the all-photonic entanglement generation switch (EGS) and the
//! memory-equipped herald-then-swap switch.
//!
//! Module map:
//!
//! * [`hwmodel`] hardware parameters and the SPDC source model
//! * [`lleg`] link-level entanglement generation (single attempt and block based)
//! * [`bmatch`] capacitated b-matchings with a global budget
//! * [`egs`] all-photonic switch throughput and fidelity
//! * [`memswitch`] memory switch: connectivity states, exact and Monte Carlo throughput
//! * [`utility`] application quality functions and log utilities
//! * [`bench`] parameter sweeps reproducing the rate/fidelity studies

pub mod bench;
pub mod bmatch;
pub mod egs;
mod error;
pub mod hwmodel;
pub mod lleg;
pub mod memswitch;
pub mod utility;

pub use egs::{Architecture, ArchitectureMetrics, E2eFidelity, RateSummary};
pub use error::{ModelError, Result};
pub use hwmodel::HardwareProfile;
