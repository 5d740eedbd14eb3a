//! Hardware parameters and the midpoint SPDC source model.
//!
//! Units: seconds, Hz, km, dB/km. Speeds are in m/s and converted once in
//! [`heralding_delay`].

use serde::{Deserialize, Serialize};

use crate::error::{domain, ModelError, Result};

/// Full parameter set for one switch scenario.
///
/// Construct through [`HardwareProfile::baseline`] and field updates followed
/// by [`HardwareProfile::validated`]; model functions assume a validated
/// profile. Deserialization fills missing fields from the baseline and
/// rejects unknown ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HardwareProfile {
    pub n_clients: usize,
    /// Multiplexing degree S_i per client.
    pub multiplex: Vec<u32>,
    /// Switch memories M_i per client (memory architecture only).
    pub mem_per_client: Vec<u32>,
    /// Concurrent BSM operations per slot.
    pub bsm_budget: u32,
    pub detector_eff: f64,
    pub p_bsa: f64,
    pub p_swap: f64,
    /// Fiber attenuation in dB/km.
    pub attenuation: f64,
    /// Node-to-switch distance in km.
    pub link_length: f64,
    pub gate_eff_mem: f64,
    pub gate_eff_switch: f64,
    pub beta: f64,
    /// Signal speed in fiber, m/s.
    pub light_speed: f64,
    pub tau_c: f64,
    pub tau_a: f64,
    pub pulse_rate: f64,
    pub coherence_time: f64,
    pub q_bsm: f64,
    /// Fraction of slots spent generating entanglement (EGS only).
    pub active_duty: f64,
}

impl HardwareProfile {
    /// Six clients, S_i = M_i = 3, B = 8, 1 km links, 10 MHz sources.
    pub fn baseline() -> Self {
        HardwareProfile {
            n_clients: 6,
            multiplex: vec![3; 6],
            mem_per_client: vec![3; 6],
            bsm_budget: 8,
            detector_eff: 0.9,
            p_bsa: 0.5,
            p_swap: 1.0,
            attenuation: 0.2,
            link_length: 1.0,
            gate_eff_mem: 0.85,
            gate_eff_switch: 0.85,
            beta: 0.03,
            light_speed: 2.0e8,
            tau_c: 2.0e-6,
            tau_a: 3.0e-6,
            pulse_rate: 1.0e7,
            coherence_time: 5.0e-4,
            q_bsm: 0.97,
            active_duty: 1.0,
        }
    }

    /// Checks every invariant and returns the profile unchanged on success.
    pub fn validated(self) -> Result<Self> {
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_clients < 2 {
            return Err(invalid("n_clients", "at least two clients are required"));
        }
        if self.multiplex.len() != self.n_clients {
            return Err(invalid(
                "multiplex",
                format!(
                    "expected {} entries, got {}",
                    self.n_clients,
                    self.multiplex.len()
                ),
            ));
        }
        if self.mem_per_client.len() != self.n_clients {
            return Err(invalid(
                "mem_per_client",
                format!(
                    "expected {} entries, got {}",
                    self.n_clients,
                    self.mem_per_client.len()
                ),
            ));
        }
        if self.multiplex.contains(&0) {
            return Err(invalid("multiplex", "entries must be positive"));
        }
        if self.mem_per_client.contains(&0) {
            return Err(invalid("mem_per_client", "entries must be positive"));
        }
        if self.bsm_budget == 0 {
            return Err(invalid("bsm_budget", "must be positive"));
        }
        for (field, v) in [
            ("detector_eff", self.detector_eff),
            ("p_bsa", self.p_bsa),
            ("p_swap", self.p_swap),
            ("gate_eff_mem", self.gate_eff_mem),
            ("gate_eff_switch", self.gate_eff_switch),
            ("q_bsm", self.q_bsm),
            ("active_duty", self.active_duty),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(invalid(field, format!("{v} is not in [0, 1]")));
            }
        }
        for (field, v) in [("attenuation", self.attenuation), ("beta", self.beta)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(invalid(
                    field,
                    format!("{v} must be finite and nonnegative"),
                ));
            }
        }
        for (field, v) in [("tau_c", self.tau_c), ("tau_a", self.tau_a)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(invalid(
                    field,
                    format!("{v} s must be finite and nonnegative"),
                ));
            }
        }
        for (field, v) in [
            ("link_length", self.link_length),
            ("light_speed", self.light_speed),
            ("pulse_rate", self.pulse_rate),
            ("coherence_time", self.coherence_time),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(field, format!("{v} must be finite and positive")));
            }
        }
        Ok(())
    }

    /// Number of client pairs F = N(N-1)/2.
    pub fn n_flows(&self) -> usize {
        self.n_clients * (self.n_clients - 1) / 2
    }

    /// LLEG attempt period 1/f_pulse.
    pub fn attempt_period(&self) -> f64 {
        1.0 / self.pulse_rate
    }

    pub fn heralding_delay(&self) -> f64 {
        heralding_delay(self.link_length, self.light_speed)
            .expect("validated profile has positive length and speed")
    }

    pub fn half_link_transmittance(&self) -> f64 {
        half_link_transmittance(self.attenuation, self.link_length)
            .expect("validated profile has positive length")
    }

    pub fn pair_emission_prob(&self) -> f64 {
        pair_emission_prob(self.beta).expect("validated profile has beta >= 0")
    }

    /// Werner parameter w0(beta) of a freshly emitted pair.
    pub fn initial_werner(&self) -> f64 {
        let f0 = initial_fidelity(self.beta).expect("validated profile has beta >= 0");
        werner_from_fidelity(f0).expect("initial fidelity lies in [0, 1]")
    }

    /// Switch memories usable per client: min(M_i, S_i).
    pub fn effective_memories(&self) -> Vec<u32> {
        self.mem_per_client
            .iter()
            .zip(&self.multiplex)
            .map(|(&m, &s)| m.min(s))
            .collect()
    }

    /// Swap success for a linear-optics BSA, xi^2 * p_BSA.
    pub fn optical_swap_prob(&self) -> f64 {
        self.detector_eff * self.detector_eff * self.p_bsa
    }

    /// Resizes the per-client lists to `n` clients, repeating the first entry.
    pub fn with_clients(mut self, n: usize) -> Self {
        let s = self.multiplex.first().copied().unwrap_or(1);
        let m = self.mem_per_client.first().copied().unwrap_or(1);
        self.n_clients = n;
        self.multiplex = vec![s; n];
        self.mem_per_client = vec![m; n];
        self
    }
}

impl Default for HardwareProfile {
    fn default() -> Self {
        Self::baseline()
    }
}

fn invalid(field: &'static str, reason: impl Into<String>) -> ModelError {
    ModelError::InvalidProfile {
        field,
        reason: reason.into(),
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if beta.is_finite() && beta >= 0.0 {
        Ok(())
    } else {
        Err(domain("beta", beta, "source tuning parameter must be >= 0"))
    }
}

/// Pr(n >= 1) = beta(beta+2)/(beta+1)^2 for the SPDC pair-number
/// distribution p(n) = (n+1) beta^n / (beta+1)^(n+2).
pub fn pair_emission_prob(beta: f64) -> Result<f64> {
    check_beta(beta)?;
    let b1 = beta + 1.0;
    Ok(beta * (beta + 2.0) / (b1 * b1))
}

/// Pr(n = 1) / Pr(n >= 1) = 2/((beta+1)(beta+2)).
pub fn initial_fidelity(beta: f64) -> Result<f64> {
    check_beta(beta)?;
    Ok(2.0 / ((beta + 1.0) * (beta + 2.0)))
}

/// w = (4F - 1)/3.
pub fn werner_from_fidelity(fidelity: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&fidelity) {
        return Err(domain("fidelity", fidelity, "must lie in [0, 1]"));
    }
    Ok((4.0 * fidelity - 1.0) / 3.0)
}

/// F = (3w + 1)/4.
pub fn fidelity_from_werner(werner: f64) -> Result<f64> {
    if !(-1.0 / 3.0..=1.0).contains(&werner) {
        return Err(domain("werner", werner, "must lie in [-1/3, 1]"));
    }
    Ok((3.0 * werner + 1.0) / 4.0)
}

/// Transmittance of one half of a link of length `length_km` with a
/// midpoint source.
pub fn half_link_transmittance(attenuation_db_per_km: f64, length_km: f64) -> Result<f64> {
    if !(attenuation_db_per_km.is_finite() && attenuation_db_per_km >= 0.0) {
        return Err(domain(
            "attenuation",
            attenuation_db_per_km,
            "must be finite and nonnegative",
        ));
    }
    if !(length_km.is_finite() && length_km > 0.0) {
        return Err(domain("link_length", length_km, "must be positive"));
    }
    Ok(10f64.powf(-attenuation_db_per_km * (length_km / 2.0) / 10.0))
}

/// One-way classical latency L/v_f in seconds, with L in km and v_f in m/s.
pub fn heralding_delay(length_km: f64, light_speed: f64) -> Result<f64> {
    if !(length_km.is_finite() && length_km > 0.0) {
        return Err(domain("link_length", length_km, "must be positive"));
    }
    if !(light_speed.is_finite() && light_speed > 0.0) {
        return Err(domain("light_speed", light_speed, "must be positive"));
    }
    Ok(1000.0 * length_km / light_speed)
}

/// Werner factor of storing one qubit for `duration` seconds in a memory
/// with coherence time `coherence_time`.
pub(crate) fn storage_decay(duration: f64, coherence_time: f64) -> f64 {
    (-duration / coherence_time).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn emission_probability_examples() {
        assert_eq!(pair_emission_prob(0.0).unwrap(), 0.0);
        assert_abs_diff_eq!(
            pair_emission_prob(0.03).unwrap(),
            0.0609 / 1.0609,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(pair_emission_prob(0.03).unwrap(), 0.05740, epsilon = 5e-6);
        assert_abs_diff_eq!(pair_emission_prob(1.0).unwrap(), 0.75, epsilon = 1e-15);
        assert!(matches!(
            pair_emission_prob(-0.1),
            Err(ModelError::Domain { .. })
        ));
    }

    #[test]
    fn initial_fidelity_examples() {
        assert_eq!(initial_fidelity(0.0).unwrap(), 1.0);
        assert_abs_diff_eq!(initial_fidelity(0.03).unwrap(), 0.9565, epsilon = 5e-5);
        assert_abs_diff_eq!(initial_fidelity(1.0).unwrap(), 1.0 / 3.0, epsilon = 1e-15);
        assert!(initial_fidelity(-1.0).is_err());
    }

    #[test]
    fn werner_map_examples() {
        assert_eq!(werner_from_fidelity(1.0).unwrap(), 1.0);
        assert_eq!(werner_from_fidelity(0.25).unwrap(), 0.0);
        assert_abs_diff_eq!(
            werner_from_fidelity(0.9565).unwrap(),
            0.9420,
            epsilon = 1e-4
        );
        assert!(werner_from_fidelity(1.01).is_err());
        assert!(fidelity_from_werner(-0.5).is_err());
    }

    #[test]
    fn transmittance_examples() {
        assert_abs_diff_eq!(
            half_link_transmittance(0.2, 1.0).unwrap(),
            0.97724,
            epsilon = 5e-6
        );
        assert_eq!(half_link_transmittance(0.0, 5.0).unwrap(), 1.0);
        assert_abs_diff_eq!(
            half_link_transmittance(0.2, 10.0).unwrap(),
            0.7943,
            epsilon = 5e-5
        );
        assert!(half_link_transmittance(0.2, 0.0).is_err());
        assert!(half_link_transmittance(0.2, -1.0).is_err());
    }

    #[test]
    fn heralding_delay_examples() {
        assert_eq!(heralding_delay(1.0, 2.0e8).unwrap(), 5.0e-6);
        assert_abs_diff_eq!(
            heralding_delay(0.0001, 2.0e8).unwrap(),
            5e-10,
            epsilon = 1e-22
        );
        assert_abs_diff_eq!(
            heralding_delay(10.0, 2.0e8).unwrap(),
            5.0e-5,
            epsilon = 1e-18
        );
        assert!(heralding_delay(0.0, 2.0e8).is_err());
        assert!(heralding_delay(1.0, 0.0).is_err());
    }

    #[test]
    fn baseline_is_valid() {
        let p = HardwareProfile::baseline().validated().unwrap();
        assert_eq!(p.n_flows(), 15);
        assert_eq!(p.heralding_delay(), 5.0e-6);
    }

    #[test]
    fn validation_names_the_field() {
        let mut p = HardwareProfile::baseline();
        p.detector_eff = 1.2;
        match p.validate() {
            Err(ModelError::InvalidProfile { field, .. }) => assert_eq!(field, "detector_eff"),
            other => panic!("unexpected {other:?}"),
        }

        let mut p = HardwareProfile::baseline();
        p.multiplex.pop();
        assert!(matches!(
            p.validate(),
            Err(ModelError::InvalidProfile {
                field: "multiplex",
                ..
            })
        ));

        let p = HardwareProfile::baseline().with_clients(1);
        assert!(p.validate().is_err());

        let mut p = HardwareProfile::baseline();
        p.coherence_time = 0.0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn with_clients_keeps_flow_count_consistent() {
        for n in 2..20 {
            let p = HardwareProfile::baseline()
                .with_clients(n)
                .validated()
                .unwrap();
            assert_eq!(p.n_flows(), n * (n - 1) / 2);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn emission_increasing_fidelity_decreasing(a in 0.0f64..5.0, b in 0.0f64..5.0) {
            prop_assume!((a - b).abs() > 1e-9);
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(pair_emission_prob(lo).unwrap() < pair_emission_prob(hi).unwrap());
            prop_assert!(initial_fidelity(lo).unwrap() > initial_fidelity(hi).unwrap());
            prop_assert!(pair_emission_prob(hi).unwrap() < 1.0);
        }

        #[test]
        fn heralding_delay_is_homogeneous(l in 1e-3f64..100.0, v in 1e7f64..3e8, s in 0.1f64..10.0) {
            let base = heralding_delay(l, v).unwrap();
            prop_assert!((heralding_delay(s * l, v).unwrap() - s * base).abs() <= 1e-12 * s * base);
            prop_assert!((heralding_delay(l, s * v).unwrap() - base / s).abs() <= 1e-12 * base / s);
        }

        #[test]
        fn half_link_squares_to_full_link(alpha in 0.0f64..1.0, l in 1e-3f64..100.0) {
            let half = half_link_transmittance(alpha, l).unwrap();
            let full = 10f64.powf(-alpha * l / 10.0);
            prop_assert!((half * half - full).abs() <= 1e-12);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn werner_round_trip(f in 0.25f64..=1.0) {
            let back = fidelity_from_werner(werner_from_fidelity(f).unwrap()).unwrap();
            prop_assert!((back - f).abs() <= 1e-12);
        }
    }
}
