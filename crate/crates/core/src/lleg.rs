//! Link-level entanglement generation (LLEG) with midpoint SPDC sources.
//!
//! Three protocols are modeled: a single attempt per slot for the EGS, a
//! single attempt per slot for the memory switch, and the block-based
//! protocol where `K` consecutive bins are tried and the first non-empty bin
//! is kept.

use serde::{Deserialize, Serialize};

use crate::error::{domain, ModelError, Result};
use crate::hwmodel::{storage_decay, HardwareProfile};

/// Largest block accepted by [`block_link_werner`].
pub const MAX_BLOCK_SIZE: u32 = 1_000_000;

/// Success probabilities below this are treated as zero when conditioning.
const MIN_CONDITIONING_PROB: f64 = 1e-300;

/// Per-bin outcome probabilities of the block protocol.
///
/// `q1` is the probability of one *specified* side capturing its photon, so
/// `q0 + 2 q1 + q2 = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinOutcomeProbs {
    pub q2: f64,
    pub q1: f64,
    pub q0: f64,
}

impl BinOutcomeProbs {
    pub fn total(&self) -> f64 {
        self.q0 + 2.0 * self.q1 + self.q2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "protocol")]
pub enum LinkProtocol {
    EgsSingle,
    MemSingle,
    MemBlock { k: u32 },
}

/// Per-link success probability and heralded Werner parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkModel {
    pub p_link: f64,
    pub w_link: f64,
    pub protocol: LinkProtocol,
}

impl LinkModel {
    pub fn new(profile: &HardwareProfile, protocol: LinkProtocol) -> Result<Self> {
        let (p_link, w_link) = match protocol {
            LinkProtocol::EgsSingle => (
                egs_link_success(profile),
                single_link_werner(profile, LinkArchitecture::Egs),
            ),
            LinkProtocol::MemSingle => (
                mem_link_success_single(profile),
                single_link_werner(profile, LinkArchitecture::Memory),
            ),
            LinkProtocol::MemBlock { k } => (
                block_success_prob(profile, k)?,
                block_link_werner(profile, k)?,
            ),
        };
        Ok(LinkModel {
            p_link,
            w_link,
            protocol,
        })
    }
}

/// Which side of the link holds a memory during link-level heralding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkArchitecture {
    /// Only the node qubit waits for the herald.
    Egs,
    /// Both the node and the switch qubit wait.
    Memory,
}

/// p_pair * (eta_m g_m) * (eta_sw g_sw).
pub fn egs_link_success(profile: &HardwareProfile) -> f64 {
    let eta = profile.half_link_transmittance();
    profile.pair_emission_prob() * (eta * profile.gate_eff_mem) * (eta * profile.gate_eff_switch)
}

/// p_pair * eta_m^2 * g_m^2.
pub fn mem_link_success_single(profile: &HardwareProfile) -> f64 {
    let eta = profile.half_link_transmittance();
    let g = profile.gate_eff_mem;
    profile.pair_emission_prob() * eta * eta * g * g
}

pub fn block_bin_probs(profile: &HardwareProfile) -> BinOutcomeProbs {
    let capture = profile.half_link_transmittance() * profile.gate_eff_mem;
    let p_pair = profile.pair_emission_prob();
    BinOutcomeProbs {
        q2: p_pair * capture * capture,
        q1: p_pair * capture * (1.0 - capture),
        q0: 1.0 - p_pair * (2.0 * capture - capture * capture),
    }
}

fn check_block_size(k: u32) -> Result<()> {
    if k == 0 {
        return Err(domain("K", 0.0, "block size must be at least 1"));
    }
    Ok(())
}

/// Probability that the first non-empty bin of a `k`-bin block delivers
/// both photons: q2 (1 - q0^k) / (1 - q0).
pub fn block_success_prob(profile: &HardwareProfile, k: u32) -> Result<f64> {
    check_block_size(k)?;
    let capture = profile.half_link_transmittance() * profile.gate_eff_mem;
    let p_pair = profile.pair_emission_prob();
    // 1 - q0, computed without cancellation.
    let non_empty = p_pair * (2.0 * capture - capture * capture);
    if non_empty <= 0.0 {
        return Ok(0.0);
    }
    let q2 = p_pair * capture * capture;
    if k == 1 {
        return Ok(q2);
    }
    let one_minus_q0k = -(f64::from(k) * (-non_empty).ln_1p()).exp_m1();
    Ok(q2 * one_minus_q0k / non_empty)
}

/// Werner parameter of a link heralded by the block protocol: a mixture over
/// the success bin `t`, where the qubits wait `tau_hrld + (k - t)/f_pulse`
/// on both sides before the switch learns of the success.
pub fn block_link_werner(profile: &HardwareProfile, k: u32) -> Result<f64> {
    check_block_size(k)?;
    if k > MAX_BLOCK_SIZE {
        return Err(domain("K", f64::from(k), "block size exceeds 10^6"));
    }
    let p_success = block_success_prob(profile, k)?;
    if p_success < MIN_CONDITIONING_PROB {
        return Err(ModelError::UndefinedConditional(p_success));
    }
    let bins = block_bin_probs(profile);
    let herald = profile.heralding_delay();
    let period = profile.attempt_period();
    let t_coh = profile.coherence_time;

    // q2 cancels between numerator and denominator; weights are q0^(t-1).
    let mut weight = 1.0;
    let mut norm = 0.0;
    let mut acc = 0.0;
    for t in 1..=k {
        let wait = herald + f64::from(k - t) * period;
        acc += weight * storage_decay(2.0 * wait, t_coh);
        norm += weight;
        weight *= bins.q0;
    }
    Ok(profile.initial_werner() * (acc / norm))
}

/// Werner parameter of a single-attempt link after link-level heralding.
pub fn single_link_werner(profile: &HardwareProfile, arch: LinkArchitecture) -> f64 {
    let herald = profile.heralding_delay();
    let stored = match arch {
        LinkArchitecture::Egs => herald,
        LinkArchitecture::Memory => 2.0 * herald,
    };
    profile.initial_werner() * storage_decay(stored, profile.coherence_time)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn baseline() -> HardwareProfile {
        HardwareProfile::baseline()
    }

    fn no_decoherence() -> HardwareProfile {
        HardwareProfile {
            coherence_time: 1e9,
            ..baseline()
        }
    }

    #[test]
    fn egs_link_examples() {
        assert_abs_diff_eq!(egs_link_success(&baseline()), 0.03961, epsilon = 5e-6);
        let p = HardwareProfile {
            beta: 0.0,
            ..baseline()
        };
        assert_eq!(egs_link_success(&p), 0.0);
        let p = HardwareProfile {
            gate_eff_mem: 1.0,
            gate_eff_switch: 1.0,
            attenuation: 0.0,
            ..baseline()
        };
        assert_eq!(egs_link_success(&p), p.pair_emission_prob());
    }

    #[test]
    fn mem_single_link_examples() {
        assert_abs_diff_eq!(
            mem_link_success_single(&baseline()),
            0.03961,
            epsilon = 1e-5
        );
        let p = HardwareProfile {
            beta: 0.0,
            ..baseline()
        };
        assert_eq!(mem_link_success_single(&p), 0.0);
        let p = HardwareProfile {
            gate_eff_mem: 1.0,
            attenuation: 0.0,
            ..baseline()
        };
        assert_eq!(mem_link_success_single(&p), p.pair_emission_prob());
    }

    #[test]
    fn bin_probability_examples() {
        let b = block_bin_probs(&baseline());
        assert_abs_diff_eq!(b.q2, 0.03961, epsilon = 5e-6);
        assert_abs_diff_eq!(b.q1, 0.00807, epsilon = 1e-5);
        assert_abs_diff_eq!(b.q0, 0.94424, epsilon = 5e-6);

        let b = block_bin_probs(&HardwareProfile {
            beta: 0.0,
            ..baseline()
        });
        assert_eq!((b.q2, b.q1, b.q0), (0.0, 0.0, 1.0));

        let p = HardwareProfile {
            gate_eff_mem: 1.0,
            attenuation: 0.0,
            ..baseline()
        };
        let b = block_bin_probs(&p);
        let pp = p.pair_emission_prob();
        assert_eq!(b.q2, pp);
        assert_eq!(b.q1, 0.0);
        assert_abs_diff_eq!(b.q0, 1.0 - pp, epsilon = 1e-15);
    }

    #[test]
    fn block_success_examples() {
        let p = baseline();
        assert_eq!(block_success_prob(&p, 1).unwrap(), block_bin_probs(&p).q2);
        assert_abs_diff_eq!(block_success_prob(&p, 30).unwrap(), 0.58330, epsilon = 5e-6);
        assert_abs_diff_eq!(
            block_success_prob(&p, 10_000).unwrap(),
            0.71035,
            epsilon = 5e-6
        );

        let capture = p.half_link_transmittance() * p.gate_eff_mem;
        assert_abs_diff_eq!(
            block_success_prob(&p, 10_000).unwrap(),
            capture / (2.0 - capture),
            epsilon = 1e-12
        );
        assert!(block_success_prob(&p, 0).is_err());
        let dark = HardwareProfile {
            beta: 0.0,
            ..baseline()
        };
        assert_eq!(block_success_prob(&dark, 5).unwrap(), 0.0);
    }

    #[test]
    fn block_success_matches_explicit_series() {
        let p = baseline();
        let b = block_bin_probs(&p);
        for k in [1u32, 2, 7, 30, 60, 500] {
            let series: f64 = (0..k).map(|t| b.q0.powi(t as i32) * b.q2).sum();
            assert_abs_diff_eq!(block_success_prob(&p, k).unwrap(), series, epsilon = 1e-12);
        }
    }

    #[test]
    fn block_werner_examples() {
        let p = baseline();
        assert_abs_diff_eq!(block_link_werner(&p, 1).unwrap(), 0.92338, epsilon = 5e-6);
        for k in [1, 7, 60, 1000] {
            assert_abs_diff_eq!(
                block_link_werner(&no_decoherence(), k).unwrap(),
                p.initial_werner(),
                epsilon = 1e-6
            );
        }
        let dark = HardwareProfile {
            beta: 0.0,
            ..baseline()
        };
        assert!(matches!(
            block_link_werner(&dark, 10),
            Err(ModelError::UndefinedConditional(_))
        ));
        assert!(block_link_werner(&p, 0).is_err());
        assert!(block_link_werner(&p, MAX_BLOCK_SIZE + 1).is_err());
    }

    /// Direct simulation of the block: draw bins until the first non-empty one
    /// and average the storage decay over successful blocks.
    #[test]
    fn block_werner_matches_bin_simulation() {
        let p = baseline();
        let k = 30u32;
        let b = block_bin_probs(&p);
        let herald = p.heralding_delay();
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        let (mut n, mut sum, mut sumsq) = (0u64, 0.0f64, 0.0f64);
        for _ in 0..1_000_000 {
            for t in 1..=k {
                let u: f64 = rng.random();
                if u < b.q2 {
                    let wait = herald + f64::from(k - t) / p.pulse_rate;
                    let x = (-2.0 * wait / p.coherence_time).exp();
                    n += 1;
                    sum += x;
                    sumsq += x * x;
                    break;
                } else if u < b.q2 + 2.0 * b.q1 {
                    break;
                }
            }
        }
        let nf = n as f64;
        let mean = sum / nf;
        let se = ((sumsq / nf - mean * mean) / nf).sqrt();
        let expected = p.initial_werner() * mean;
        let got = block_link_werner(&p, k).unwrap();
        assert!(
            (got - expected).abs() <= 3.0 * p.initial_werner() * se,
            "got {got}, simulated {expected} (se {se})"
        );
    }

    #[test]
    fn single_link_werner_examples() {
        let p = baseline();
        assert_abs_diff_eq!(
            single_link_werner(&p, LinkArchitecture::Egs),
            0.93266,
            epsilon = 5e-6
        );
        assert_abs_diff_eq!(
            single_link_werner(&p, LinkArchitecture::Memory),
            0.92338,
            epsilon = 5e-6
        );
        let q = no_decoherence();
        for arch in [LinkArchitecture::Egs, LinkArchitecture::Memory] {
            assert_abs_diff_eq!(
                single_link_werner(&q, arch),
                q.initial_werner(),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn link_model_dispatch() {
        let p = baseline();
        let m = LinkModel::new(&p, LinkProtocol::MemBlock { k: 30 }).unwrap();
        assert_eq!(m.p_link, block_success_prob(&p, 30).unwrap());
        assert_eq!(m.w_link, block_link_werner(&p, 30).unwrap());
        let e = LinkModel::new(&p, LinkProtocol::EgsSingle).unwrap();
        assert_eq!(e.p_link, egs_link_success(&p));
    }

    fn arb_profile() -> impl Strategy<Value = HardwareProfile> {
        (
            0.001f64..1.0,
            0.0f64..0.5,
            0.01f64..20.0,
            0.3f64..1.0,
            1e4f64..1e9,
            1e-5f64..1e-2,
        )
            .prop_map(|(beta, alpha, l, g, f, t)| HardwareProfile {
                beta,
                attenuation: alpha,
                link_length: l,
                gate_eff_mem: g,
                pulse_rate: f,
                coherence_time: t,
                ..HardwareProfile::baseline()
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn block_success_increases_with_k(p in arb_profile()) {
            let mut prev = block_success_prob(&p, 1).unwrap();
            for k in 2..=100 {
                let cur = block_success_prob(&p, k).unwrap();
                prop_assert!(cur >= prev);
                // strict while the increment q2 q0^(k-1) is resolvable in f64
                if block_bin_probs(&p).q0.powi(k as i32) > 1e-10 {
                    prop_assert!(cur > prev, "k={} {} {}", k, cur, prev);
                }
                prev = cur;
            }
        }

        #[test]
        fn block_werner_nonincreasing_and_bounded(p in arb_profile()) {
            let bound = p.initial_werner() * (-2.0 * p.heralding_delay() / p.coherence_time).exp();
            let mut prev = f64::INFINITY;
            for k in 1..=100 {
                let w = block_link_werner(&p, k).unwrap();
                prop_assert!(w > 0.0);
                prop_assert!(w <= bound * (1.0 + 1e-12));
                prop_assert!(w <= prev * (1.0 + 1e-12));
                prev = w;
            }
        }

        #[test]
        fn block_k1_equals_single_memory_link(p in arb_profile()) {
            prop_assert_eq!(
                block_link_werner(&p, 1).unwrap(),
                single_link_werner(&p, LinkArchitecture::Memory)
            );
        }

        #[test]
        fn bins_sum_to_one(p in arb_profile()) {
            prop_assert!((block_bin_probs(&p).total() - 1.0).abs() <= 1e-12);
        }

        #[test]
        fn egs_and_memory_single_links_agree_when_gates_match(p in arb_profile()) {
            let p = HardwareProfile { gate_eff_switch: p.gate_eff_mem, ..p };
            let a = egs_link_success(&p);
            let b = mem_link_success_single(&p);
            prop_assert!((a - b).abs() <= 1e-15 * a.max(1e-300));
        }
    }
}
