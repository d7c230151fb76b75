//! Shared scenario construction for the `run` and `sweep` commands.

use std::path::{Path, PathBuf};

use antta_core::scenario::read_scenario_file;
use antta_core::{
    add_idle, make_idle_distribution_lb, make_lowerbound_chain, make_upper_worstcase,
    IdleDistributionGoal, ModelParams, Scenario,
};

/// Which instance family a command line names.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScenarioKind {
    UpperWorst,
    LowerboundChain,
    IdleDistributionLb,
    File(PathBuf),
}

impl ScenarioKind {
    pub fn parse(text: &str) -> Result<Self, String> {
        match text {
            "upper-worst" => Ok(ScenarioKind::UpperWorst),
            "lowerbound-chain" => Ok(ScenarioKind::LowerboundChain),
            "idle-distribution-lb" => Ok(ScenarioKind::IdleDistributionLb),
            other => match other.strip_prefix("file:") {
                Some(path) if !path.is_empty() => Ok(ScenarioKind::File(PathBuf::from(path))),
                _ => Err(format!(
                    "unknown scenario {other:?}; expected upper-worst, lowerbound-chain, \
                     idle-distribution-lb or file:PATH"
                )),
            },
        }
    }

    pub fn label(&self) -> String {
        match self {
            ScenarioKind::UpperWorst => "upper-worst".into(),
            ScenarioKind::LowerboundChain => "lowerbound-chain".into(),
            ScenarioKind::IdleDistributionLb => "idle-distribution-lb".into(),
            ScenarioKind::File(path) => path.display().to_string(),
        }
    }
}

/// A non-negative rational `a/b` from the command line, or zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IdleFraction {
    pub numerator: u64,
    pub denominator: u64,
}

impl IdleFraction {
    pub fn parse(text: &str) -> Result<Option<Self>, String> {
        if text.trim() == "0" {
            return Ok(None);
        }
        let (a, b) = text
            .split_once('/')
            .ok_or_else(|| format!("idle fraction must look like a/b, got {text:?}"))?;
        let numerator: u64 =
            a.trim().parse().map_err(|_| format!("bad idle numerator {a:?}"))?;
        let denominator: u64 =
            b.trim().parse().map_err(|_| format!("bad idle denominator {b:?}"))?;
        if denominator == 0 {
            return Err("idle fraction denominator must be non-zero".into());
        }
        if numerator == 0 {
            return Ok(None);
        }
        Ok(Some(IdleFraction { numerator, denominator }))
    }

    /// Idle ants per task for a colony of `n`: `floor(n * a / b)`, with a
    /// warning on stderr when the division is not exact.
    pub fn count_for(&self, n: usize) -> usize {
        let exact_numerator = n as u128 * self.numerator as u128;
        let per_task = (exact_numerator / self.denominator as u128) as usize;
        if !exact_numerator.is_multiple_of(self.denominator as u128) {
            eprintln!(
                "warning: idle fraction {}/{} of n={n} is not integral; \
                 rounding down to {per_task} idle ants per task",
                self.numerator, self.denominator
            );
        }
        per_task
    }
}

/// How the engine should drive a resolved scenario.
pub enum RunMode {
    Allocation,
    Distribution(IdleDistributionGoal),
}

pub struct ResolvedScenario {
    pub label: String,
    pub scenario: Scenario,
    pub params: ModelParams,
    pub mode: RunMode,
}

/// Builds the scenario and params a command line describes. `n` is the
/// total colony size (idle included); for file scenarios it is optional
/// and cross-checked when present.
pub fn resolve(
    kind: &ScenarioKind,
    n: Option<usize>,
    t: Option<usize>,
    rate: usize,
    threshold: usize,
    idle: Option<IdleFraction>,
) -> Result<ResolvedScenario, String> {
    let label = kind.label();
    let (scenario, mode) = match kind {
        ScenarioKind::File(path) => {
            if idle.is_some() {
                return Err("--idle applies to constructed scenarios only; \
                            file scenarios carry their own idle counts"
                    .into());
            }
            let scenario = load_scenario(path)?;
            if let Some(n) = n {
                if n != scenario.total_ants() {
                    return Err(format!(
                        "--n {n} does not match the {} ants in {}",
                        scenario.total_ants(),
                        path.display()
                    ));
                }
            }
            if let Some(t) = t {
                if t != scenario.task_count() {
                    return Err(format!(
                        "--t {t} does not match the {} tasks in {}",
                        scenario.task_count(),
                        path.display()
                    ));
                }
            }
            (scenario, RunMode::Allocation)
        }
        ScenarioKind::UpperWorst => {
            let n = n.ok_or("--n is required for upper-worst")?;
            require_task_count(t, 3, "upper-worst")?;
            (constructed_with_idle(n, 3, idle, |workers| {
                make_upper_worstcase(workers).map_err(|e| e.to_string())
            })?, RunMode::Allocation)
        }
        ScenarioKind::LowerboundChain => {
            let n = n.ok_or("--n is required for lowerbound-chain")?;
            let t = t.unwrap_or(3);
            (constructed_with_idle(n, t, idle, |workers| {
                make_lowerbound_chain(workers, t).map_err(|e| e.to_string())
            })?, RunMode::Allocation)
        }
        ScenarioKind::IdleDistributionLb => {
            let n = n.ok_or("--n is required for idle-distribution-lb")?;
            require_task_count(t, 2, "idle-distribution-lb")?;
            if idle.is_some() {
                return Err(
                    "--idle does not apply to idle-distribution-lb; the instance \
                     pins two idle ants to the first task"
                        .into(),
                );
            }
            let scenario = make_idle_distribution_lb(n).map_err(|e| e.to_string())?;
            (scenario, RunMode::Distribution(IdleDistributionGoal::one_per_task(2)))
        }
    };

    let params = ModelParams::new(
        scenario.total_ants(),
        scenario.task_count(),
        rate,
        threshold,
    )
    .map_err(|e| e.to_string())?;
    Ok(ResolvedScenario { label, scenario, params, mode })
}

fn require_task_count(t: Option<usize>, fixed: usize, kind: &str) -> Result<(), String> {
    match t {
        None => Ok(()),
        Some(t) if t == fixed => Ok(()),
        Some(t) => Err(format!("{kind} has exactly {fixed} tasks, got --t {t}")),
    }
}

/// Builds a constructed instance of `n` total ants with `floor(n * a/b)`
/// idle recruiters per task: the base shape is built over the remaining
/// non-idle headcount and the idle counts are attached on top.
fn constructed_with_idle(
    n: usize,
    task_count: usize,
    idle: Option<IdleFraction>,
    build: impl Fn(usize) -> Result<Scenario, String>,
) -> Result<Scenario, String> {
    let Some(fraction) = idle else {
        return build(n);
    };
    let per_task = fraction.count_for(n);
    if per_task == 0 {
        return build(n);
    }
    let workers = n
        .checked_sub(task_count * per_task)
        .ok_or_else(|| format!("idle fraction leaves no workers at n={n}"))?;
    let base = build(workers)?;
    add_idle(&base, &vec![per_task; task_count]).map_err(|e| e.to_string())
}

pub fn load_scenario(path: &Path) -> Result<Scenario, String> {
    read_scenario_file(path).map_err(|e| e.to_string())
}
