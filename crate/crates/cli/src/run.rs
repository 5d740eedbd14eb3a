//! Command dispatch. Each command is a thin adapter over one library call.

use std::fs;
use std::path::PathBuf;

use qswitch_core::bench::{
    dominance_sweep, dominance_window, frontier_vs_beta, sweep_fidelity_k_fpulse, sweep_rate_k_l,
    sweep_utility_k, Annotation, SweepResult,
};
use qswitch_core::bmatch::{emax_closed_form, greedy_max_allocation, CapacityVector};
use qswitch_core::egs::egs_metrics;
use qswitch_core::memswitch::{
    mem_max_total_rate, mem_metrics, optimize_block_size, MemProtocol, Objective,
};
use qswitch_core::utility::UtilityKind;
use qswitch_core::{ArchitectureMetrics, HardwareProfile, ModelError};

use crate::config::{Format, RunConfig};
use crate::emit::{emit, Artifact, Cell, Table};
use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    /// Maximum simultaneous swaps for the configured capacities.
    Emax,
    /// EGS rate and fidelity.
    Egs,
    /// Memory-switch rate and fidelity at block size `k`.
    Mem,
    /// EGS and memory operating points over the β axis.
    Frontier,
    /// Memory rate over K and link length.
    SweepKl,
    /// Memory fidelity over K and pulse rate.
    SweepKf,
    /// Memory utilities over K.
    UtilityK,
    /// ΔU_NGT over β for each scenario.
    Dominance,
    /// Both architectures and ΔU_NGT at `compare_beta`.
    Compare,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Emax => "emax",
            Command::Egs => "egs",
            Command::Mem => "mem",
            Command::Frontier => "frontier",
            Command::SweepKl => "sweep-kl",
            Command::SweepKf => "sweep-kf",
            Command::UtilityK => "utility-k",
            Command::Dominance => "dominance",
            Command::Compare => "compare",
        }
    }
}

/// Result of a command before anything is written.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub artifact: Artifact,
    pub summary: Vec<(String, String)>,
}

impl Outcome {
    pub fn summary_line(&self) -> String {
        self.summary
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(" ")
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.summary
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }
}

struct Summary(Vec<(String, String)>);

impl Summary {
    fn new(command: Command) -> Self {
        Summary(vec![("command".into(), command.name().into())])
    }

    fn put(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.0.push((key.into(), value.to_string()));
        self
    }

    fn opt(&mut self, key: &str, value: Option<f64>) -> &mut Self {
        match value {
            Some(v) => self.put(key, v),
            None => self.put(key, "undefined"),
        }
    }
}

fn metrics_row(m: &ArchitectureMetrics) -> Vec<Cell> {
    vec![
        Cell::Text(m.architecture.to_string()),
        Cell::Num(m.rate_total),
        Cell::Num(m.rate_normalized),
        Cell::Num(m.werner_e2e),
        Cell::Num(m.fidelity_e2e),
        Cell::Num(m.slot_duration),
    ]
}

const METRIC_COLUMNS: [&str; 6] = [
    "architecture",
    "rate_total",
    "rate_normalized",
    "werner_e2e",
    "fidelity_e2e",
    "slot_duration",
];

/// Values of axis `along` picked by an annotation, `;`-separated.
fn annotated_values(result: &SweepResult, a: &Annotation) -> String {
    a.indices
        .iter()
        .map(|i| match i {
            Some(i) => result.axes[a.along].values[*i].to_string(),
            None => "none".into(),
        })
        .collect::<Vec<_>>()
        .join(";")
}

fn sweep_outcome(command: Command, result: SweepResult) -> Outcome {
    let mut s = Summary::new(command);
    s.put("metric", &result.metric)
        .put("cells", result.values.len())
        .put(
            "masked",
            result.values.iter().filter(|v| v.is_none()).count(),
        );
    for a in &result.annotations {
        s.put(&a.name, annotated_values(&result, a));
    }
    Outcome {
        artifact: Artifact::from_sweep(command.name(), &result),
        summary: s.0,
    }
}

fn compare_at(config: &RunConfig, profile: &HardwareProfile) -> Result<Outcome, CliError> {
    let egs = egs_metrics(profile);
    let ngt = UtilityKind::Ngt;
    let u_egs = ngt.utility(egs.rate_normalized, egs.fidelity_e2e)?;
    let est = config.estimator();
    let mem = match optimize_block_size(profile, Objective::Utility(ngt), config.k_range(), est) {
        Ok((k, u)) => Some((mem_metrics(profile, k, MemProtocol::Block, est)?, k, u)),
        Err(ModelError::NoFeasibleBlockSize) => None,
        Err(e) => return Err(e.into()),
    };
    let delta = mem.as_ref().zip(u_egs).map(|(m, e)| m.2 - e);

    let mut table = Table::new(&[
        "architecture",
        "k",
        "rate_normalized",
        "fidelity_e2e",
        "U_NGT",
    ]);
    table.push(vec![
        Cell::Text(egs.architecture.to_string()),
        Cell::Empty,
        Cell::Num(egs.rate_normalized),
        Cell::Num(egs.fidelity_e2e),
        Cell::opt(u_egs),
    ]);
    if let Some((m, k, u)) = &mem {
        table.push(vec![
            Cell::Text(m.architecture.to_string()),
            Cell::Int(i64::from(*k)),
            Cell::Num(m.rate_normalized),
            Cell::Num(m.fidelity_e2e),
            Cell::Num(*u),
        ]);
    }
    let mut s = Summary::new(Command::Compare);
    s.put("beta", profile.beta);
    match &mem {
        Some((_, k, _)) => s.put("k_star", k),
        None => s.put("k_star", "none"),
    };
    s.opt("U_NGT_egs", u_egs)
        .opt("U_NGT_mem", mem.as_ref().map(|m| m.2));
    match delta {
        Some(d) => s.put("delta_U_NGT", format!("{d:+}")),
        None => s.put("delta_U_NGT", "undefined"),
    };
    Ok(Outcome {
        artifact: Artifact::from_table(Command::Compare.name(), table),
        summary: s.0,
    })
}

/// Evaluates `command` without touching the file system.
pub fn execute(command: Command, config: &RunConfig) -> Result<Outcome, CliError> {
    config.validate()?;
    let profile = &config.profile;
    let est = config.estimator();
    match command {
        Command::Emax => {
            let (caps, budget) = match &config.emax {
                Some(e) => (e.caps.clone(), e.budget),
                None => (profile.multiplex.clone(), profile.bsm_budget),
            };
            let cv = CapacityVector::new(caps, budget)?;
            let emax = emax_closed_form(&cv);
            let witness = greedy_max_allocation(&cv);
            debug_assert_eq!(witness.total(), emax);
            let mut table = Table::new(&["i", "j", "count"]);
            for ((i, j), c) in witness.iter() {
                table.push(vec![
                    Cell::Int(i as i64),
                    Cell::Int(j as i64),
                    Cell::Int(i64::from(c)),
                ]);
            }
            let pairs = witness
                .iter()
                .map(|((i, j), c)| format!("{i}-{j}:{c}"))
                .collect::<Vec<_>>()
                .join(";");
            let mut s = Summary::new(command);
            s.put("emax", emax).put(
                "witness",
                if pairs.is_empty() {
                    "none".into()
                } else {
                    pairs
                },
            );
            Ok(Outcome {
                artifact: Artifact::from_table(command.name(), table),
                summary: s.0,
            })
        }
        Command::Egs => {
            let m = egs_metrics(profile);
            let mut table = Table::new(&METRIC_COLUMNS);
            table.push(metrics_row(&m));
            let mut s = Summary::new(command);
            s.put("rate_total", m.rate_total)
                .put("rate_normalized", m.rate_normalized)
                .put("fidelity", m.fidelity_e2e);
            Ok(Outcome {
                artifact: Artifact::from_table(command.name(), table),
                summary: s.0,
            })
        }
        Command::Mem => {
            let m = mem_metrics(profile, config.k, config.protocol, est)?;
            let r = mem_max_total_rate(profile, config.k, config.protocol, est)?;
            let mut cols = METRIC_COLUMNS.to_vec();
            cols.extend(["link_prob", "expected_emax", "std_error"]);
            let mut table = Table::new(&cols);
            let mut row = metrics_row(&m);
            row.extend([
                Cell::Num(r.link_prob),
                Cell::Num(r.expected_emax),
                Cell::Num(r.std_error),
            ]);
            table.push(row);
            let mut s = Summary::new(command);
            s.put("k", config.k)
                .put("rate_total", m.rate_total)
                .put("rate_normalized", m.rate_normalized)
                .put("fidelity", m.fidelity_e2e)
                .put("expected_emax", r.expected_emax)
                .put("std_error", r.std_error);
            Ok(Outcome {
                artifact: Artifact::from_table(command.name(), table),
                summary: s.0,
            })
        }
        Command::Frontier => {
            let f = frontier_vs_beta(
                profile,
                &config.beta_axis,
                config.k_range(),
                est,
                config.frontier_objective,
            )?;
            let mut table = Table::new(&[
                "beta",
                "egs_rate",
                "egs_fidelity",
                "U_NGT_egs",
                "mem_k",
                "mem_rate",
                "mem_fidelity",
                "U_NGT_mem",
                "delta_U_NGT",
            ]);
            for p in &f.points {
                table.push(vec![
                    Cell::Num(p.beta),
                    Cell::Num(p.egs_rate),
                    Cell::Num(p.egs_fidelity),
                    Cell::opt(p.u_egs),
                    p.mem_k.map_or(Cell::Empty, |k| Cell::Int(i64::from(k))),
                    Cell::opt(p.mem_rate),
                    Cell::opt(p.mem_fidelity),
                    Cell::opt(p.u_mem),
                    Cell::opt(p.delta_u),
                ]);
            }
            let window = dominance_window(&f);
            let mut s = Summary::new(command);
            s.put("points", f.points.len())
                .opt("window_lo", window.map(|w| w.0))
                .opt("window_hi", window.map(|w| w.1));
            let mut artifact = Artifact::from_table(command.name(), table);
            let body = artifact.body.as_object_mut().expect("object body");
            body.insert("window".into(), serde_json::json!(window));
            body.insert(
                "metadata".into(),
                serde_json::to_value(&f.metadata).expect("metadata serializes"),
            );
            Ok(Outcome {
                artifact,
                summary: s.0,
            })
        }
        Command::SweepKl => Ok(sweep_outcome(
            command,
            sweep_rate_k_l(profile, &config.k_axis(), &config.l_axis, est)?,
        )),
        Command::SweepKf => Ok(sweep_outcome(
            command,
            sweep_fidelity_k_fpulse(profile, &config.k_axis(), &config.f_axis)?,
        )),
        Command::UtilityK => Ok(sweep_outcome(
            command,
            sweep_utility_k(profile, &config.k_axis(), est)?,
        )),
        Command::Dominance => Ok(sweep_outcome(
            command,
            dominance_sweep(
                profile,
                &config.beta_axis,
                &config.scenarios,
                config.k_range(),
                est,
            )?,
        )),
        Command::Compare => {
            let p = HardwareProfile {
                beta: config.compare_beta,
                ..profile.clone()
            }
            .validated()?;
            compare_at(config, &p)
        }
    }
}

pub fn output_path(command: Command, config: &RunConfig) -> PathBuf {
    config.out.clone().unwrap_or_else(|| {
        format!("qswitch-{}.{}", command.name(), config.format.extension()).into()
    })
}

/// Runs `command`, writes its artifact and returns the summary line.
pub fn run(command: Command, config: &RunConfig) -> Result<String, CliError> {
    let outcome = execute(command, config)?;
    let path = output_path(command, config);
    let bytes = emit(&outcome.artifact, config, config.format);
    fs::write(&path, bytes).map_err(|source| CliError::Io {
        path: path.clone(),
        source,
    })?;
    let mut line = outcome.summary_line();
    line.push_str(&format!(" out={}", path.display()));
    Ok(line)
}

/// Applies command-line overrides to a parsed configuration.
pub fn apply_overrides(
    config: &mut RunConfig,
    seed: Option<u64>,
    samples: Option<u64>,
    out: Option<PathBuf>,
    format: Option<Format>,
) {
    if let Some(seed) = seed {
        config.seed = seed;
    }
    if let Some(n) = samples {
        config.n_samples = n;
    }
    if out.is_some() {
        config.out = out;
    }
    if let Some(f) = format {
        config.format = f;
    }
}
