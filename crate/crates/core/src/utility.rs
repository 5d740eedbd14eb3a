//! Application quality functions Q(F) and proportional-fair utilities
//! U = ln(R Q(F)).
//!
//! A utility is *undefined* when R Q(F) = 0; this is reported as `None`
//! rather than an error so sweeps can mask such points.

use serde::{Deserialize, Serialize};

use crate::egs::egs_metrics;
use crate::error::{domain, Result};
use crate::hwmodel::HardwareProfile;
use crate::memswitch::{mem_metrics, optimize_block_size, Estimator, MemProtocol, Objective};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum UtilityKind {
    /// Hashing yield (one-way distillable entanglement).
    De,
    /// Asymptotic BB84 secret-key fraction.
    Skf,
    /// Negativity above the separability threshold.
    Ngt,
}

impl UtilityKind {
    pub const ALL: [UtilityKind; 3] = [UtilityKind::De, UtilityKind::Skf, UtilityKind::Ngt];

    pub fn name(self) -> &'static str {
        match self {
            UtilityKind::De => "U_DE",
            UtilityKind::Skf => "U_SKF",
            UtilityKind::Ngt => "U_NGT",
        }
    }

    pub fn quality(self, fidelity: f64) -> Result<f64> {
        match self {
            UtilityKind::De => hashing_yield(fidelity),
            UtilityKind::Skf => bb84_key_fraction(fidelity),
            UtilityKind::Ngt => negativity_q(fidelity),
        }
    }

    pub fn utility(self, rate: f64, fidelity: f64) -> Result<Option<f64>> {
        log_utility(rate, self.quality(fidelity)?)
    }
}

fn check_werner_fidelity(fidelity: f64) -> Result<()> {
    if !(0.25..=1.0).contains(&fidelity) {
        return Err(domain("fidelity", fidelity, "must lie in [0.25, 1]"));
    }
    Ok(())
}

/// x log2 x with 0 log2 0 = 0.
fn xlog2x(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x * x.log2()
    }
}

fn binary_entropy(p: f64) -> f64 {
    -xlog2x(p) - xlog2x(1.0 - p)
}

/// max{0, 1 - S(rho)} for the Werner state of fidelity F, whose Bell-diagonal
/// spectrum is (F, (1-F)/3, (1-F)/3, (1-F)/3).
pub fn hashing_yield(fidelity: f64) -> Result<f64> {
    check_werner_fidelity(fidelity)?;
    let rest = 1.0 - fidelity;
    let raw = 1.0 + xlog2x(fidelity) + 3.0 * xlog2x(rest / 3.0);
    Ok(raw.max(0.0))
}

/// max{0, 1 - 2 h(e)} with QBER e = 2(1-F)/3.
pub fn bb84_key_fraction(fidelity: f64) -> Result<f64> {
    check_werner_fidelity(fidelity)?;
    let qber = 2.0 * (1.0 - fidelity) / 3.0;
    Ok((1.0 - 2.0 * binary_entropy(qber)).max(0.0))
}

/// max{F - 1/2, 0}.
pub fn negativity_q(fidelity: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&fidelity) {
        return Err(domain("fidelity", fidelity, "must lie in [0, 1]"));
    }
    Ok((fidelity - 0.5).max(0.0))
}

/// ln(R Q), or `None` when R Q = 0.
pub fn log_utility(rate: f64, quality: f64) -> Result<Option<f64>> {
    if !(rate.is_finite() && rate >= 0.0) {
        return Err(domain("rate", rate, "must be finite and nonnegative"));
    }
    if !(quality.is_finite() && quality >= 0.0) {
        return Err(domain("quality", quality, "must be finite and nonnegative"));
    }
    let product = rate * quality;
    Ok((product > 0.0).then(|| product.ln()))
}

/// U_NGT of the memory switch at its utility-optimal block size minus U_NGT
/// of the EGS, both at source parameter `beta`.
///
/// Returns `None` when either side is undefined.
pub fn delta_negativity_utility(
    profile: &HardwareProfile,
    beta: f64,
    k_range: std::ops::RangeInclusive<u32>,
    estimator: Estimator,
) -> Result<Option<f64>> {
    let profile = HardwareProfile {
        beta,
        ..profile.clone()
    }
    .validated()?;
    let egs = egs_metrics(&profile);
    let Some(u_egs) = UtilityKind::Ngt.utility(egs.rate_normalized, egs.fidelity_e2e)? else {
        return Ok(None);
    };
    let u_mem = match optimize_block_size(
        &profile,
        Objective::Utility(UtilityKind::Ngt),
        k_range,
        estimator,
    ) {
        Ok((_, value)) => value,
        Err(crate::ModelError::NoFeasibleBlockSize) => return Ok(None),
        Err(e) => return Err(e),
    };
    Ok(Some(u_mem - u_egs))
}

/// Utility difference for two already-evaluated operating points.
pub fn delta_utility(kind: UtilityKind, mem: (f64, f64), egs: (f64, f64)) -> Result<Option<f64>> {
    let a = kind.utility(mem.0, mem.1)?;
    let b = kind.utility(egs.0, egs.1)?;
    Ok(a.zip(b).map(|(a, b)| a - b))
}

/// U_NGT of the memory switch at a fixed block size.
pub fn mem_negativity_utility(
    profile: &HardwareProfile,
    k: u32,
    estimator: Estimator,
) -> Result<Option<f64>> {
    let m = mem_metrics(profile, k, MemProtocol::Block, estimator)?;
    UtilityKind::Ngt.utility(m.rate_normalized, m.fidelity_e2e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
        assert!(f(lo) * f(hi) < 0.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(lo) * f(mid) <= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    fn raw_hashing(f: f64) -> f64 {
        1.0 + f * f.log2() + (1.0 - f) * ((1.0 - f) / 3.0).log2()
    }

    fn raw_bb84(f: f64) -> f64 {
        let e = 2.0 * (1.0 - f) / 3.0;
        1.0 - 2.0 * (-e * e.log2() - (1.0 - e) * (1.0 - e).log2())
    }

    #[test]
    fn hashing_examples() {
        assert_eq!(hashing_yield(1.0).unwrap(), 1.0);
        assert_eq!(hashing_yield(0.25).unwrap(), 0.0);
        assert_abs_diff_eq!(raw_hashing(0.25), -1.0, epsilon = 1e-12);
        let root = bisect(raw_hashing, 0.5, 0.99);
        assert_abs_diff_eq!(root, 0.8107, epsilon = 5e-5);
        assert_eq!(hashing_yield(root - 1e-6).unwrap(), 0.0);
        assert!(hashing_yield(root + 1e-6).unwrap() > 0.0);
        assert!(hashing_yield(0.2).is_err());
        assert!(hashing_yield(1.1).is_err());
    }

    #[test]
    fn bb84_examples() {
        assert_eq!(bb84_key_fraction(1.0).unwrap(), 1.0);
        assert_eq!(bb84_key_fraction(0.5).unwrap(), 0.0);
        let root = bisect(raw_bb84, 0.5, 0.99);
        assert_abs_diff_eq!(root, 0.8350, epsilon = 5e-5);
        assert_abs_diff_eq!(2.0 * (1.0 - root) / 3.0, 0.1100, epsilon = 5e-5);
        assert_eq!(bb84_key_fraction(root - 1e-6).unwrap(), 0.0);
        assert!(bb84_key_fraction(root + 1e-6).unwrap() > 0.0);
        assert!(bb84_key_fraction(0.0).is_err());
    }

    #[test]
    fn negativity_examples() {
        assert_eq!(negativity_q(0.5).unwrap(), 0.0);
        assert_eq!(negativity_q(1.0).unwrap(), 0.5);
        assert_abs_diff_eq!(negativity_q(0.8703).unwrap(), 0.3703, epsilon = 1e-12);
        assert_eq!(negativity_q(0.1).unwrap(), 0.0);
        assert!(negativity_q(-0.1).is_err());
    }

    #[test]
    fn log_utility_examples() {
        assert_eq!(log_utility(1.0, 1.0).unwrap(), Some(0.0));
        assert_abs_diff_eq!(
            log_utility(std::f64::consts::E, 1.0).unwrap().unwrap(),
            1.0,
            epsilon = 1e-15
        );
        assert_eq!(log_utility(123.0, 0.0).unwrap(), None);
        assert_eq!(log_utility(0.0, 0.4).unwrap(), None);
        assert!(log_utility(-1.0, 1.0).is_err());
        assert!(log_utility(1.0, -1.0).is_err());
    }

    #[test]
    fn delta_of_identical_points_is_zero() {
        for kind in UtilityKind::ALL {
            assert_eq!(
                delta_utility(kind, (3.0e3, 0.9), (3.0e3, 0.9)).unwrap(),
                Some(0.0)
            );
        }
        assert_eq!(
            delta_utility(UtilityKind::Ngt, (3.0e3, 0.4), (3.0e3, 0.9)).unwrap(),
            None
        );
    }

    #[test]
    fn quality_at_perfect_fidelity() {
        assert_eq!(negativity_q(1.0).unwrap(), 0.5);
        assert_eq!(hashing_yield(1.0).unwrap(), 1.0);
        assert_eq!(bb84_key_fraction(1.0).unwrap(), 1.0);
    }

    #[test]
    fn quality_monotone_on_upper_half() {
        let grid: Vec<f64> = (0..=1000).map(|i| 0.5 + 0.5 * i as f64 / 1000.0).collect();
        for kind in UtilityKind::ALL {
            for w in grid.windows(2) {
                assert!(kind.quality(w[1]).unwrap() >= kind.quality(w[0]).unwrap());
            }
        }
    }

    #[test]
    fn clamp_regions() {
        for i in 0..=560 {
            let f = 0.25 + i as f64 * 0.001;
            assert_eq!(hashing_yield(f).unwrap(), 0.0, "F = {f}");
        }
        for i in 0..=580 {
            let f = 0.25 + i as f64 * 0.001;
            assert_eq!(bb84_key_fraction(f).unwrap(), 0.0, "F = {f}");
        }
    }

    proptest! {
        #[test]
        fn log_utility_is_additive(r in 1e-3f64..1e9, q in 1e-6f64..1.0, a in 1e-3f64..1e3) {
            let lhs = log_utility(a * r, q).unwrap().unwrap() - log_utility(r, q).unwrap().unwrap();
            prop_assert!((lhs - a.ln()).abs() <= 1e-9);
        }
    }
}
