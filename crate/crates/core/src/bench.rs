//! Parameter sweeps over the switch models.
//!
//! Every sweep returns a [`SweepResult`]: named axes, a dense row-major value
//! matrix (first axis slowest) with `None` for undefined cells, and argmax
//! annotations. Cells are evaluated in parallel; when a Monte Carlo estimator
//! is used each cell draws from its own seed derived from the master seed and
//! the cell index, so results are independent of scheduling.

use std::ops::RangeInclusive;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::egs::egs_metrics;
use crate::error::{ModelError, Result};
use crate::hwmodel::HardwareProfile;
use crate::memswitch::{
    mem_fidelity, mem_max_total_rate, optimize_block_size, Estimator, MemProtocol, Objective,
};
use crate::utility::{delta_negativity_utility, UtilityKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub name: String,
    pub unit: String,
    pub values: Vec<f64>,
    /// Display names for categorical axes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
}

impl Axis {
    pub fn numeric(name: &str, unit: &str, values: Vec<f64>) -> Self {
        Axis {
            name: name.into(),
            unit: unit.into(),
            values,
            labels: None,
        }
    }

    pub fn categorical(name: &str, labels: Vec<String>) -> Self {
        Axis {
            name: name.into(),
            unit: String::new(),
            values: (0..labels.len()).map(|i| i as f64).collect(),
            labels: Some(labels),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Text form of entry `i`: the label if categorical, else the value.
    pub fn label(&self, i: usize) -> Option<&str> {
        self.labels.as_ref().map(|l| l[i].as_str())
    }
}

/// For each index along `across`, the index along `along` that maximizes
/// the metric (smallest on ties; `None` if the whole slice is undefined).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Annotation {
    pub name: String,
    pub along: usize,
    pub across: usize,
    pub indices: Vec<Option<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepMetadata {
    pub profile: HardwareProfile,
    pub estimator: Estimator,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_range: Option<(u32, u32)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub metric: String,
    pub axes: Vec<Axis>,
    pub values: Vec<Option<f64>>,
    pub annotations: Vec<Annotation>,
    pub metadata: SweepMetadata,
}

impl SweepResult {
    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(Axis::len).collect()
    }

    fn strides(&self) -> Vec<usize> {
        let shape = self.shape();
        let mut strides = vec![1; shape.len()];
        for d in (0..shape.len().saturating_sub(1)).rev() {
            strides[d] = strides[d + 1] * shape[d + 1];
        }
        strides
    }

    pub fn flat_index(&self, index: &[usize]) -> usize {
        index.iter().zip(self.strides()).map(|(i, s)| i * s).sum()
    }

    pub fn get(&self, index: &[usize]) -> Option<f64> {
        self.values[self.flat_index(index)]
    }

    /// Multi-index of flat position `flat`.
    pub fn unravel(&self, mut flat: usize) -> Vec<usize> {
        self.strides()
            .into_iter()
            .map(|s| {
                let i = flat / s;
                flat %= s;
                i
            })
            .collect()
    }

    /// Checks the shape and annotation invariants.
    pub fn check(&self) -> Result<()> {
        let cells: usize = self.shape().iter().product();
        if cells != self.values.len() {
            return Err(ModelError::Usage(format!(
                "{} values for shape {:?}",
                self.values.len(),
                self.shape()
            )));
        }
        for a in &self.annotations {
            let along = self.axes.get(a.along).map_or(0, Axis::len);
            let across = self.axes.get(a.across).map_or(0, Axis::len);
            if a.indices.len() != across || a.indices.iter().flatten().any(|&i| i >= along) {
                return Err(ModelError::Usage(format!(
                    "annotation {} out of range",
                    a.name
                )));
            }
        }
        Ok(())
    }

    /// Adds an argmax annotation of axis `along` for every index of `across`
    /// (two-axis results only).
    pub fn annotate_argmax(&mut self, name: &str, along: usize, across: usize) {
        let shape = self.shape();
        let indices = (0..shape[across])
            .map(|j| {
                let mut best: Option<(usize, f64)> = None;
                for i in 0..shape[along] {
                    let mut idx = [0usize; 2];
                    idx[along] = i;
                    idx[across] = j;
                    if let Some(v) = self.get(&idx) {
                        if best.is_none_or(|(_, b)| v > b) {
                            best = Some((i, v));
                        }
                    }
                }
                best.map(|b| b.0)
            })
            .collect();
        self.annotations.push(Annotation {
            name: name.into(),
            along,
            across,
            indices,
        });
    }

    /// Column `j` of a two-axis result.
    pub fn column(&self, j: usize) -> Vec<Option<f64>> {
        (0..self.axes[0].len()).map(|i| self.get(&[i, j])).collect()
    }
}

/// SplitMix64 finalizer, used to derive per-cell seeds.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn cell_estimator(estimator: Estimator, cell: usize) -> Estimator {
    match estimator {
        Estimator::Exact => Estimator::Exact,
        Estimator::MonteCarlo { n_samples, seed } => Estimator::MonteCarlo {
            n_samples,
            seed: derive_seed(seed, cell as u64),
        },
    }
}

fn with_override(
    profile: &HardwareProfile,
    apply: impl FnOnce(&mut HardwareProfile),
) -> Result<HardwareProfile> {
    let mut p = profile.clone();
    apply(&mut p);
    p.validated()
}

fn check_k_axis(k_axis: &[u32]) -> Result<()> {
    if k_axis.is_empty() || k_axis.contains(&0) {
        return Err(ModelError::Usage(
            "K axis must be nonempty with K >= 1".into(),
        ));
    }
    Ok(())
}

fn check_axis(name: &str, values: &[f64]) -> Result<()> {
    if values.is_empty() || values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(ModelError::Usage(format!(
            "{name} axis must be nonempty with positive values"
        )));
    }
    Ok(())
}

fn k_values(k_axis: &[u32]) -> Vec<f64> {
    k_axis.iter().map(|&k| f64::from(k)).collect()
}

/// Normalized memory-switch rate over block size K and link length L.
pub fn sweep_rate_k_l(
    profile: &HardwareProfile,
    k_axis: &[u32],
    l_axis: &[f64],
    estimator: Estimator,
) -> Result<SweepResult> {
    check_k_axis(k_axis)?;
    check_axis("L", l_axis)?;
    let n_l = l_axis.len();
    let values = (0..k_axis.len() * n_l)
        .into_par_iter()
        .map(|cell| {
            let (k, l) = (k_axis[cell / n_l], l_axis[cell % n_l]);
            let p = with_override(profile, |p| p.link_length = l)?;
            let r = mem_max_total_rate(&p, k, MemProtocol::Block, cell_estimator(estimator, cell))?;
            Ok(Some(r.rate.rate_normalized))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut result = SweepResult {
        metric: "rate_normalized".into(),
        axes: vec![
            Axis::numeric("K", "attempts", k_values(k_axis)),
            Axis::numeric("L", "km", l_axis.to_vec()),
        ],
        values,
        annotations: Vec::new(),
        metadata: SweepMetadata {
            profile: profile.clone(),
            estimator,
            k_range: None,
        },
    };
    result.annotate_argmax("argmax_K_per_L", 0, 1);
    Ok(result)
}

/// End-to-end memory-switch fidelity over block size K and pulse rate.
pub fn sweep_fidelity_k_fpulse(
    profile: &HardwareProfile,
    k_axis: &[u32],
    f_axis: &[f64],
) -> Result<SweepResult> {
    check_k_axis(k_axis)?;
    check_axis("f_pulse", f_axis)?;
    let n_f = f_axis.len();
    let values = (0..k_axis.len() * n_f)
        .into_par_iter()
        .map(|cell| {
            let (k, f) = (k_axis[cell / n_f], f_axis[cell % n_f]);
            let p = with_override(profile, |p| p.pulse_rate = f)?;
            match mem_fidelity(&p, k, MemProtocol::Block) {
                Ok(fid) => Ok(Some(fid.fidelity)),
                Err(ModelError::UndefinedConditional(_)) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let mut result = SweepResult {
        metric: "fidelity_e2e".into(),
        axes: vec![
            Axis::numeric("K", "attempts", k_values(k_axis)),
            Axis::numeric("f_pulse", "Hz", f_axis.to_vec()),
        ],
        values,
        annotations: Vec::new(),
        metadata: SweepMetadata {
            profile: profile.clone(),
            estimator: Estimator::Exact,
            k_range: None,
        },
    };
    result.annotate_argmax("argmax_K_per_f_pulse", 0, 1);
    Ok(result)
}

/// U_DE, U_SKF and U_NGT of the memory switch over block size K.
pub fn sweep_utility_k(
    profile: &HardwareProfile,
    k_axis: &[u32],
    estimator: Estimator,
) -> Result<SweepResult> {
    check_k_axis(k_axis)?;
    let kinds = UtilityKind::ALL;
    let per_k = k_axis
        .par_iter()
        .enumerate()
        .map(|(i, &k)| {
            let rate =
                mem_max_total_rate(profile, k, MemProtocol::Block, cell_estimator(estimator, i))?;
            let r = rate.rate.rate_normalized;
            if r == 0.0 {
                return Ok(vec![None; kinds.len()]);
            }
            let f = mem_fidelity(profile, k, MemProtocol::Block)?.fidelity;
            kinds
                .iter()
                .map(|kind| kind.utility(r, f))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let mut result = SweepResult {
        metric: "utility".into(),
        axes: vec![
            Axis::numeric("K", "attempts", k_values(k_axis)),
            Axis::categorical(
                "utility",
                kinds.iter().map(|k| k.name().to_string()).collect(),
            ),
        ],
        values: per_k.into_iter().flatten().collect(),
        annotations: Vec::new(),
        metadata: SweepMetadata {
            profile: profile.clone(),
            estimator,
            k_range: None,
        },
    };
    result.annotate_argmax("argmax_K_per_utility", 0, 1);
    Ok(result)
}

/// One β point of the rate/fidelity comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontierPoint {
    pub beta: f64,
    pub egs_rate: f64,
    pub egs_fidelity: f64,
    pub u_egs: Option<f64>,
    /// Chosen block size; `None` when no K gives a defined objective.
    pub mem_k: Option<u32>,
    pub mem_rate: Option<f64>,
    pub mem_fidelity: Option<f64>,
    pub u_mem: Option<f64>,
    pub delta_u: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frontier {
    pub points: Vec<FrontierPoint>,
    pub k_range: (u32, u32),
    pub objective: Objective,
    pub metadata: SweepMetadata,
}

/// EGS and memory-switch operating points for each β. The memory switch
/// uses the block size maximizing `objective` (U_NGT by default).
pub fn frontier_vs_beta(
    profile: &HardwareProfile,
    beta_axis: &[f64],
    k_range: RangeInclusive<u32>,
    estimator: Estimator,
    objective: Objective,
) -> Result<Frontier> {
    if beta_axis.is_empty() || beta_axis.iter().any(|b| !(0.0..=2.0).contains(b)) {
        return Err(ModelError::Usage(
            "beta axis must be nonempty within [0, 2]".into(),
        ));
    }
    let points = beta_axis
        .par_iter()
        .enumerate()
        .map(|(i, &beta)| {
            let p = with_override(profile, |p| p.beta = beta)?;
            frontier_point(&p, k_range.clone(), cell_estimator(estimator, i), objective)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Frontier {
        points,
        k_range: (*k_range.start(), *k_range.end()),
        objective,
        metadata: SweepMetadata {
            profile: profile.clone(),
            estimator,
            k_range: Some((*k_range.start(), *k_range.end())),
        },
    })
}

fn frontier_point(
    p: &HardwareProfile,
    k_range: RangeInclusive<u32>,
    estimator: Estimator,
    objective: Objective,
) -> Result<FrontierPoint> {
    let egs = egs_metrics(p);
    let ngt = UtilityKind::Ngt;
    let u_egs = ngt.utility(egs.rate_normalized, egs.fidelity_e2e)?;
    let mut point = FrontierPoint {
        beta: p.beta,
        egs_rate: egs.rate_normalized,
        egs_fidelity: egs.fidelity_e2e,
        u_egs,
        mem_k: None,
        mem_rate: None,
        mem_fidelity: None,
        u_mem: None,
        delta_u: None,
    };
    let k = match optimize_block_size(p, objective, k_range, estimator) {
        Ok((k, _)) => k,
        Err(ModelError::NoFeasibleBlockSize) => return Ok(point),
        Err(e) => return Err(e),
    };
    let rate = mem_max_total_rate(p, k, MemProtocol::Block, estimator)?
        .rate
        .rate_normalized;
    let fid = mem_fidelity(p, k, MemProtocol::Block)?.fidelity;
    point.mem_k = Some(k);
    point.mem_rate = Some(rate);
    point.mem_fidelity = Some(fid);
    point.u_mem = ngt.utility(rate, fid)?;
    point.delta_u = point.u_mem.zip(u_egs).map(|(m, e)| m - e);
    Ok(point)
}

/// Grid resolution used by [`dominance_window`].
pub const WINDOW_GRID_POINTS: usize = 2001;

/// Fidelity interval over which the memory switch delivers a higher rate
/// than the EGS at equal fidelity.
///
/// Both series are linearly interpolated as rate-versus-fidelity curves over
/// their common fidelity range; returns the smallest and largest fidelity
/// where the memory rate is strictly higher, or `None` if it never is.
pub fn dominance_window(frontier: &Frontier) -> Option<(f64, f64)> {
    let mut egs: Vec<(f64, f64)> = frontier
        .points
        .iter()
        .map(|p| (p.egs_fidelity, p.egs_rate))
        .collect();
    let mut mem: Vec<(f64, f64)> = frontier
        .points
        .iter()
        .filter_map(|p| p.mem_fidelity.zip(p.mem_rate))
        .collect();
    if egs.len() < 2 || mem.len() < 2 {
        return None;
    }
    egs.sort_by(|a, b| a.0.total_cmp(&b.0));
    mem.sort_by(|a, b| a.0.total_cmp(&b.0));
    let lo = egs[0].0.max(mem[0].0);
    let hi = egs[egs.len() - 1].0.min(mem[mem.len() - 1].0);
    if lo >= hi {
        return None;
    }
    let mut window: Option<(f64, f64)> = None;
    for i in 0..WINDOW_GRID_POINTS {
        let f = lo + (hi - lo) * i as f64 / (WINDOW_GRID_POINTS - 1) as f64;
        if interpolate(&mem, f) > interpolate(&egs, f) {
            window = Some(window.map_or((f, f), |(a, _)| (a, f)));
        }
    }
    window
}

/// Piecewise-linear interpolation on points sorted by x, clamped at the ends.
fn interpolate(points: &[(f64, f64)], x: f64) -> f64 {
    let i = points.partition_point(|p| p.0 < x);
    if i == 0 {
        return points[0].1;
    }
    if i == points.len() {
        return points[i - 1].1;
    }
    let (x0, y0) = points[i - 1];
    let (x1, y1) = points[i];
    if x1 == x0 {
        return y1;
    }
    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
}

/// A single-group change applied to the baseline profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Override {
    PulseRate(f64),
    LinkLength(f64),
    SwitchSize { n_clients: usize, bsm_budget: u32 },
}

impl Override {
    pub fn apply(&self, profile: &HardwareProfile) -> Result<HardwareProfile> {
        let p = match *self {
            Override::PulseRate(f) => HardwareProfile {
                pulse_rate: f,
                ..profile.clone()
            },
            Override::LinkLength(l) => HardwareProfile {
                link_length: l,
                ..profile.clone()
            },
            Override::SwitchSize {
                n_clients,
                bsm_budget,
            } => HardwareProfile {
                bsm_budget,
                ..profile.clone().with_clients(n_clients)
            },
        };
        p.validated()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub overrides: Vec<Override>,
}

impl Scenario {
    pub fn baseline() -> Self {
        Scenario {
            name: "baseline".into(),
            overrides: Vec::new(),
        }
    }

    pub fn new(name: &str, overrides: Vec<Override>) -> Self {
        Scenario {
            name: name.into(),
            overrides,
        }
    }

    pub fn apply(&self, profile: &HardwareProfile) -> Result<HardwareProfile> {
        self.overrides
            .iter()
            .try_fold(profile.clone(), |p, o| o.apply(&p))
    }
}

/// ΔU_NGT over β for each scenario.
pub fn dominance_sweep(
    profile: &HardwareProfile,
    beta_axis: &[f64],
    scenarios: &[Scenario],
    k_range: RangeInclusive<u32>,
    estimator: Estimator,
) -> Result<SweepResult> {
    if beta_axis.is_empty() || scenarios.is_empty() {
        return Err(ModelError::Usage(
            "beta axis and scenario list must be nonempty".into(),
        ));
    }
    let profiles = scenarios
        .iter()
        .map(|s| s.apply(profile))
        .collect::<Result<Vec<_>>>()?;
    let n_s = scenarios.len();
    let values = (0..beta_axis.len() * n_s)
        .into_par_iter()
        .map(|cell| {
            let (beta, p) = (beta_axis[cell / n_s], &profiles[cell % n_s]);
            delta_negativity_utility(p, beta, k_range.clone(), cell_estimator(estimator, cell))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut result = SweepResult {
        metric: "delta_U_NGT".into(),
        axes: vec![
            Axis::numeric("beta", "", beta_axis.to_vec()),
            Axis::categorical(
                "scenario",
                scenarios.iter().map(|s| s.name.clone()).collect(),
            ),
        ],
        values,
        annotations: Vec::new(),
        metadata: SweepMetadata {
            profile: profile.clone(),
            estimator,
            k_range: Some((*k_range.start(), *k_range.end())),
        },
    };
    result.annotate_argmax("argmax_beta_per_scenario", 0, 1);
    Ok(result)
}

/// Affine map of the defined entries onto [0, 1]; undefined entries stay
/// undefined.
pub fn minmax_normalize(series: &[Option<f64>]) -> Result<Vec<Option<f64>>> {
    let defined = series.iter().flatten().copied();
    let (min, max) = defined.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    });
    if !min.is_finite() {
        return Err(ModelError::DegenerateSeries("no defined values"));
    }
    if max == min {
        return Err(ModelError::DegenerateSeries("all defined values are equal"));
    }
    let span = max - min;
    Ok(series.iter().map(|v| v.map(|x| (x - min) / span)).collect())
}

/// Column-wise [`minmax_normalize`] of a two-axis result. Columns with no
/// defined entry are left masked.
pub fn normalize_columns(result: &SweepResult) -> Result<SweepResult> {
    let mut out = result.clone();
    out.metric = format!("{}_normalized", result.metric);
    for j in 0..result.axes[1].len() {
        let col = result.column(j);
        if col.iter().all(Option::is_none) {
            continue;
        }
        let col = minmax_normalize(&col)?;
        for (i, v) in col.into_iter().enumerate() {
            let at = out.flat_index(&[i, j]);
            out.values[at] = v;
        }
    }
    Ok(out)
}

/// Index of the first maximal defined entry.
pub fn argmax(series: &[Option<f64>]) -> Option<usize> {
    series
        .iter()
        .enumerate()
        .filter_map(|(i, v)| v.map(|v| (i, v)))
        .fold(None, |best: Option<(usize, f64)>, (i, v)| match best {
            Some((_, b)) if v <= b => best,
            _ => Some((i, v)),
        })
        .map(|b| b.0)
}

/// β ∈ {0.005, 0.010, ..., 0.150}.
pub fn default_beta_axis() -> Vec<f64> {
    (1..=30).map(|i| f64::from(i) * 0.005).collect()
}

/// K ∈ {1, ..., 60}.
pub fn default_k_axis() -> Vec<u32> {
    (1..=60).collect()
}

pub const DEFAULT_K_RANGE: RangeInclusive<u32> = 1..=60;

/// `points` log-spaced values from `start` to `stop` inclusive.
pub fn logspace(start: f64, stop: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![start],
        _ => {
            let (a, b) = (start.log10(), stop.log10());
            (0..points)
                .map(|i| {
                    if i == points - 1 {
                        stop
                    } else {
                        10f64.powf(a + (b - a) * i as f64 / (points - 1) as f64)
                    }
                })
                .collect()
        }
    }
}

/// 25 log-spaced lengths over [0.01, 20] km.
pub fn default_l_axis() -> Vec<f64> {
    logspace(0.01, 20.0, 25)
}

/// Pulse rates from 10 kHz to 1 GHz, two per decade.
pub fn default_f_axis() -> Vec<f64> {
    logspace(1e4, 1e9, 11)
}

/// Source-rate, length and switch-size scenarios for the dominance study.
pub fn default_scenarios() -> Vec<Scenario> {
    vec![
        Scenario::baseline(),
        Scenario::new("f_pulse=10kHz", vec![Override::PulseRate(1e4)]),
        Scenario::new("f_pulse=1MHz", vec![Override::PulseRate(1e6)]),
        Scenario::new("f_pulse=100MHz", vec![Override::PulseRate(1e8)]),
        Scenario::new("f_pulse=1GHz", vec![Override::PulseRate(1e9)]),
        Scenario::new("L=0.01km", vec![Override::LinkLength(0.01)]),
        Scenario::new("L=0.1km", vec![Override::LinkLength(0.1)]),
        Scenario::new("L=5km", vec![Override::LinkLength(5.0)]),
        Scenario::new(
            "N=10,B=14",
            vec![Override::SwitchSize {
                n_clients: 10,
                bsm_budget: 14,
            }],
        ),
        Scenario::new(
            "N=14,B=20",
            vec![Override::SwitchSize {
                n_clients: 14,
                bsm_budget: 20,
            }],
        ),
    ]
}
