//! Memory-equipped herald-then-swap switch.
//!
//! Each slot, client `i` heralds `C_i ~ Binomial(M_i, p)` link pairs into the
//! switch memories. The switch then performs the maximum number of swaps the
//! connectivity state allows, so the aggregate rate is
//! `p_swap / slot * E[E_max(C)]`.
//!
//! `E[E_max(C)]` is available three ways: full enumeration of the state space
//! ([`expected_emax_exact`]), an exact recursion over the distribution of
//! `(sum C_i, max C_i)` ([`expected_emax_grouped`]), and Monte Carlo
//! ([`expected_emax_mc`]).

use std::ops::RangeInclusive;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bmatch::{emax_from_sum_max, emax_of};
use crate::egs::{Architecture, ArchitectureMetrics, E2eFidelity, RateSummary};
use crate::error::{domain, ModelError, Result};
use crate::hwmodel::{storage_decay, HardwareProfile};
use crate::lleg::{
    block_link_werner, block_success_prob, mem_link_success_single, single_link_werner,
    LinkArchitecture,
};
use crate::utility::UtilityKind;

/// Largest state space [`expected_emax_exact`] will enumerate.
pub const MAX_ENUMERATED_STATES: u64 = 1_000_000;

/// Samples drawn from one RNG stream. Chunk `i` uses ChaCha8 stream `i`.
pub const MC_CHUNK: u64 = 4096;

/// Default Monte Carlo sample count.
pub const DEFAULT_MC_SAMPLES: u64 = 100_000;

/// Per-client heralded link counts in one slot.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ConnectivityState(pub Vec<u32>);

impl ConnectivityState {
    pub fn counts(&self) -> &[u32] {
        &self.0
    }
}

/// Product-binomial distribution of connectivity states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConnectivityDistribution {
    mem_per_client: Vec<u32>,
    link_prob: f64,
}

impl ConnectivityDistribution {
    pub fn new(mem_per_client: Vec<u32>, link_prob: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&link_prob) {
            return Err(domain("link_prob", link_prob, "must lie in [0, 1]"));
        }
        if mem_per_client.len() < 2 {
            return Err(ModelError::Usage(
                "connectivity needs at least two clients".into(),
            ));
        }
        Ok(ConnectivityDistribution {
            mem_per_client,
            link_prob,
        })
    }

    /// Distribution for a profile's usable memories, min(M_i, S_i).
    pub fn for_profile(profile: &HardwareProfile, link_prob: f64) -> Result<Self> {
        Self::new(profile.effective_memories(), link_prob)
    }

    pub fn mem_per_client(&self) -> &[u32] {
        &self.mem_per_client
    }

    pub fn link_prob(&self) -> f64 {
        self.link_prob
    }

    /// Number of distinct states, saturating.
    pub fn n_states(&self) -> u64 {
        self.mem_per_client
            .iter()
            .fold(1u64, |acc, &m| acc.saturating_mul(u64::from(m) + 1))
    }

    fn client_pmf(&self, m: u32) -> Vec<f64> {
        binomial_pmf(m, self.link_prob)
    }
}

fn binomial_pmf(n: u32, p: f64) -> Vec<f64> {
    (0..=n).map(|k| binomial_point(n, k, p)).collect()
}

fn binomial_point(n: u32, k: u32, p: f64) -> f64 {
    let k_small = k.min(n - k);
    let mut coeff = 1.0f64;
    for i in 0..k_small {
        coeff = coeff * f64::from(n - i) / f64::from(i + 1);
    }
    // powi(0) is 1 even for a zero base, which gives the p = 0 and p = 1 edges.
    coeff * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32)
}

/// Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_samples: u64,
    pub seed: u64,
}

/// pi(c) = prod_i binom(M_i, c_i) p^c_i (1-p)^(M_i - c_i).
pub fn state_pmf(dist: &ConnectivityDistribution, state: &ConnectivityState) -> Result<f64> {
    check_state(dist, state)?;
    Ok(dist
        .mem_per_client
        .iter()
        .zip(state.counts())
        .map(|(&m, &c)| binomial_point(m, c, dist.link_prob))
        .product())
}

fn check_state(dist: &ConnectivityDistribution, state: &ConnectivityState) -> Result<()> {
    if state.0.len() != dist.mem_per_client.len() {
        return Err(ModelError::Usage(format!(
            "state has {} clients, distribution has {}",
            state.0.len(),
            dist.mem_per_client.len()
        )));
    }
    if let Some((&c, _)) = state
        .counts()
        .iter()
        .zip(&dist.mem_per_client)
        .find(|(&c, &m)| c > m)
    {
        return Err(domain("c_i", f64::from(c), "exceeds the client's memories"));
    }
    Ok(())
}

/// Draws each `c_i` as `M_i` independent coin flips.
pub fn sample_state<R: Rng + ?Sized>(
    dist: &ConnectivityDistribution,
    rng: &mut R,
) -> ConnectivityState {
    let mut counts = Vec::with_capacity(dist.mem_per_client.len());
    sample_into(dist, rng, &mut counts);
    ConnectivityState(counts)
}

fn sample_into<R: Rng + ?Sized>(dist: &ConnectivityDistribution, rng: &mut R, out: &mut Vec<u32>) {
    out.clear();
    let p = dist.link_prob;
    for &m in &dist.mem_per_client {
        let c = (0..m).filter(|_| rng.random::<f64>() < p).count();
        out.push(c as u32);
    }
}

/// Maximum number of swaps in state `c` with `budget` BSMs.
pub fn state_emax(state: &ConnectivityState, budget: u32) -> u64 {
    emax_of(state.counts(), budget)
}

/// E[E_max(C)] by enumerating every state.
pub fn expected_emax_exact(dist: &ConnectivityDistribution, budget: u32) -> Result<f64> {
    let n_states = dist.n_states();
    if n_states > MAX_ENUMERATED_STATES {
        return Err(ModelError::TooLarge(format!(
            "{n_states} connectivity states exceed the enumeration limit {MAX_ENUMERATED_STATES}"
        )));
    }
    let pmfs: Vec<Vec<f64>> = dist
        .mem_per_client
        .iter()
        .map(|&m| dist.client_pmf(m))
        .collect();
    let n = pmfs.len();
    let mut counts = vec![0u32; n];
    let mut total = 0.0;
    loop {
        let prob: f64 = counts
            .iter()
            .zip(&pmfs)
            .map(|(&c, pmf)| pmf[c as usize])
            .product();
        total += prob * emax_of(&counts, budget) as f64;

        let mut i = 0;
        while i < n && counts[i] == dist.mem_per_client[i] {
            counts[i] = 0;
            i += 1;
        }
        if i == n {
            break;
        }
        counts[i] += 1;
    }
    Ok(total)
}

/// E[E_max(C)] from the exact joint distribution of `(sum C_i, max C_i)`,
/// built client by client. Cost grows with `sum M_i * max M_i` rather than
/// with the number of states.
pub fn expected_emax_grouped(dist: &ConnectivityDistribution, budget: u32) -> f64 {
    let total_mem: usize = dist.mem_per_client.iter().map(|&m| m as usize).sum();
    let max_mem = dist.mem_per_client.iter().copied().max().unwrap_or(0) as usize;
    let width = max_mem + 1;
    // joint[s * width + m] = P(sum = s, max = m) over the clients seen so far
    let mut joint = vec![0.0f64; (total_mem + 1) * width];
    joint[0] = 1.0;
    let mut seen = 0usize;
    let mut next = vec![0.0f64; joint.len()];
    for &m_i in &dist.mem_per_client {
        let pmf = dist.client_pmf(m_i);
        next.iter_mut().for_each(|x| *x = 0.0);
        for s in 0..=seen {
            for mx in 0..width {
                let p = joint[s * width + mx];
                if p == 0.0 {
                    continue;
                }
                for (c, &pc) in pmf.iter().enumerate() {
                    next[(s + c) * width + mx.max(c)] += p * pc;
                }
            }
        }
        std::mem::swap(&mut joint, &mut next);
        seen += m_i as usize;
    }
    let mut total = 0.0;
    for s in 0..=total_mem {
        for mx in 0..width {
            let p = joint[s * width + mx];
            if p != 0.0 {
                total += p * emax_from_sum_max(s as u64, mx as u64, budget) as f64;
            }
        }
    }
    total
}

/// Monte Carlo estimate of E[E_max(C)].
///
/// Samples are split into chunks of [`MC_CHUNK`]; chunk `i` draws from
/// ChaCha8 seeded with `seed` on stream `i`. Per-chunk integer sums are
/// reduced exactly, so the result does not depend on the number of worker
/// threads or the order chunks finish in.
pub fn expected_emax_mc(
    dist: &ConnectivityDistribution,
    budget: u32,
    n_samples: u64,
    seed: u64,
) -> Result<McEstimate> {
    if n_samples == 0 {
        return Err(ModelError::Usage("n_samples must be at least 1".into()));
    }
    let n_chunks = n_samples.div_ceil(MC_CHUNK);
    let (sum, sum_sq) = (0..n_chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(chunk);
            let len = MC_CHUNK.min(n_samples - chunk * MC_CHUNK);
            let mut counts = Vec::with_capacity(dist.mem_per_client.len());
            let (mut s, mut sq) = (0u128, 0u128);
            for _ in 0..len {
                sample_into(dist, &mut rng, &mut counts);
                let e = u128::from(emax_of(&counts, budget));
                s += e;
                sq += e * e;
            }
            (s, sq)
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));

    let n = n_samples as f64;
    let mean = sum as f64 / n;
    let std_error = if n_samples > 1 {
        // exact integer numerator: n * sum_sq - sum^2 = n (n-1) s^2
        let numer = u128::from(n_samples) * sum_sq - sum * sum;
        let var = numer as f64 / (n * (n - 1.0));
        (var / n).sqrt()
    } else {
        0.0
    };
    Ok(McEstimate {
        mean,
        std_error,
        n_samples,
        seed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MemProtocol {
    /// One LLEG attempt per slot.
    Single,
    /// `K` attempts per slot, first non-empty bin kept.
    Block,
}

/// How E[E_max(C)] is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Estimator {
    /// Exact, via the `(sum, max)` recursion.
    Exact,
    MonteCarlo {
        n_samples: u64,
        seed: u64,
    },
}

fn check_protocol(k: u32, protocol: MemProtocol) -> Result<()> {
    match protocol {
        _ if k == 0 => Err(domain("K", 0.0, "block size must be at least 1")),
        MemProtocol::Single if k != 1 => Err(ModelError::Usage(format!(
            "single-attempt protocol requires K = 1, got K = {k}"
        ))),
        _ => Ok(()),
    }
}

/// Slot length: one attempt (single) or `K - 1` pipelined attempt periods
/// (block), plus heralding, connectivity acquisition and actuation.
pub fn mem_slot_duration(profile: &HardwareProfile, k: u32, protocol: MemProtocol) -> Result<f64> {
    check_protocol(k, protocol)?;
    let attempts = match protocol {
        MemProtocol::Single => profile.attempt_period(),
        MemProtocol::Block => f64::from(k - 1) * profile.attempt_period(),
    };
    Ok(attempts + profile.heralding_delay() + profile.tau_c + profile.tau_a)
}

/// Per-memory heralding probability for the chosen protocol.
pub fn mem_link_prob(profile: &HardwareProfile, k: u32, protocol: MemProtocol) -> Result<f64> {
    check_protocol(k, protocol)?;
    match protocol {
        MemProtocol::Single => Ok(mem_link_success_single(profile)),
        MemProtocol::Block => block_success_prob(profile, k),
    }
}

/// Rate summary from an expected swap count.
pub fn rate_from_expected_emax(
    p_swap: f64,
    slot_duration: f64,
    expected_emax: f64,
    n_flows: usize,
) -> RateSummary {
    let rate_total = p_swap * expected_emax / slot_duration;
    RateSummary {
        rate_total,
        rate_normalized: rate_total / n_flows as f64,
        slot_duration,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MemRate {
    pub rate: RateSummary,
    pub link_prob: f64,
    pub expected_emax: f64,
    /// Zero for the exact estimator.
    pub std_error: f64,
}

pub fn expected_emax(
    dist: &ConnectivityDistribution,
    budget: u32,
    estimator: Estimator,
) -> Result<(f64, f64)> {
    match estimator {
        Estimator::Exact => Ok((expected_emax_grouped(dist, budget), 0.0)),
        Estimator::MonteCarlo { n_samples, seed } => {
            let est = expected_emax_mc(dist, budget, n_samples, seed)?;
            Ok((est.mean, est.std_error))
        }
    }
}

/// Maximum expected aggregate swap rate `p_swap / slot * E[E_max(C)]`.
pub fn mem_max_total_rate(
    profile: &HardwareProfile,
    k: u32,
    protocol: MemProtocol,
    estimator: Estimator,
) -> Result<MemRate> {
    let link_prob = mem_link_prob(profile, k, protocol)?;
    let slot = mem_slot_duration(profile, k, protocol)?;
    let dist = ConnectivityDistribution::for_profile(profile, link_prob)?;
    let (mean, std_error) = expected_emax(&dist, profile.bsm_budget, estimator)?;
    Ok(MemRate {
        rate: rate_from_expected_emax(profile.p_swap, slot, mean, profile.n_flows()),
        link_prob,
        expected_emax: mean,
        std_error,
    })
}

/// `w_i^2 q_BSM exp(-4(tau_c + tau_a)/T) exp(-2 tau_hrld/T)`.
pub fn mem_fidelity(
    profile: &HardwareProfile,
    k: u32,
    protocol: MemProtocol,
) -> Result<E2eFidelity> {
    check_protocol(k, protocol)?;
    let w_link = match protocol {
        MemProtocol::Single => single_link_werner(profile, LinkArchitecture::Memory),
        MemProtocol::Block => block_link_werner(profile, k)?,
    };
    let t_coh = profile.coherence_time;
    let werner = w_link
        * w_link
        * profile.q_bsm
        * storage_decay(4.0 * (profile.tau_c + profile.tau_a), t_coh)
        * storage_decay(2.0 * profile.heralding_delay(), t_coh);
    Ok(E2eFidelity::from_werner(werner))
}

pub fn mem_metrics(
    profile: &HardwareProfile,
    k: u32,
    protocol: MemProtocol,
    estimator: Estimator,
) -> Result<ArchitectureMetrics> {
    let rate = mem_max_total_rate(profile, k, protocol, estimator)?;
    let fid = mem_fidelity(profile, k, protocol)?;
    let arch = match protocol {
        MemProtocol::Single => Architecture::MemSingle,
        MemProtocol::Block => Architecture::MemBlock { k },
    };
    Ok(ArchitectureMetrics::new(arch, rate.rate, fid))
}

/// What [`optimize_block_size`] maximizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Objective {
    /// Normalized rate.
    Rate,
    Utility(UtilityKind),
}

/// Objective value of the block protocol at one `K`; `None` when undefined.
pub fn block_objective(
    profile: &HardwareProfile,
    k: u32,
    objective: Objective,
    estimator: Estimator,
) -> Result<Option<f64>> {
    let rate = mem_max_total_rate(profile, k, MemProtocol::Block, estimator)?;
    match objective {
        Objective::Rate => Ok(Some(rate.rate.rate_normalized)),
        Objective::Utility(kind) => {
            if rate.rate.rate_normalized == 0.0 {
                return Ok(None);
            }
            let fid = mem_fidelity(profile, k, MemProtocol::Block)?;
            kind.utility(rate.rate.rate_normalized, fid.fidelity)
        }
    }
}

/// Exhaustive scan of `k_range`; returns the smallest maximizing `K` and its
/// objective value.
pub fn optimize_block_size(
    profile: &HardwareProfile,
    objective: Objective,
    k_range: RangeInclusive<u32>,
    estimator: Estimator,
) -> Result<(u32, f64)> {
    if k_range.is_empty() || *k_range.start() == 0 {
        return Err(ModelError::Usage(format!(
            "block size range {}..={} must be nonempty and start at 1 or more",
            k_range.start(),
            k_range.end()
        )));
    }
    let values: Vec<(u32, Option<f64>)> = k_range
        .into_par_iter()
        .map(|k| block_objective(profile, k, objective, estimator).map(|v| (k, v)))
        .collect::<Result<_>>()?;
    argmax_first(&values).ok_or(ModelError::NoFeasibleBlockSize)
}

/// Smallest key among the maximal defined values.
pub(crate) fn argmax_first(values: &[(u32, Option<f64>)]) -> Option<(u32, f64)> {
    values
        .iter()
        .filter_map(|&(k, v)| v.map(|v| (k, v)))
        .fold(None, |best, (k, v)| match best {
            Some((_, bv)) if v <= bv => best,
            _ => Some((k, v)),
        })
}
