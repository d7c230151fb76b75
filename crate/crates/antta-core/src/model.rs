//! Core domain types and per-round primitives of the colony model.
//!
//! A colony of `n` ants is spread over `t` ordered tasks. Each round every
//! non-idle ant is either `Working` (its task still needs it) or `NotNeeded`
//! (its task's demand is already covered). Not-needed ants observe a fixed
//! number of uniformly random partners and switch to the *next* task when
//! enough of those partners recruit for it. Task switching is strictly
//! one-way and single-step.
//!
//! Task indices are 0-based throughout the crate.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Global constants governing a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelParams {
    /// Total number of ants in the colony, idle included (`n >= 2`).
    pub colony_size: usize,
    /// Number of ordered tasks (`2 <= t <= n`).
    pub task_count: usize,
    /// Partner observations each acting ant makes per round (`R >= 1`).
    pub interaction_rate: usize,
    /// Minimum number of qualifying observations that triggers a switch
    /// (`1 <= th <= R`).
    pub threshold: usize,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ModelError {
    #[error("colony size must be at least 2, got {0}")]
    ColonyTooSmall(usize),
    #[error("task count must satisfy 2 <= t <= n, got t={task_count}, n={colony_size}")]
    BadTaskCount { task_count: usize, colony_size: usize },
    #[error("threshold must satisfy 1 <= th <= R, got th={threshold}, R={interaction_rate}")]
    BadThreshold { threshold: usize, interaction_rate: usize },
    #[error("interaction rate must be at least 1")]
    BadInteractionRate,
}

impl ModelParams {
    pub fn new(
        colony_size: usize,
        task_count: usize,
        interaction_rate: usize,
        threshold: usize,
    ) -> Result<Self, ModelError> {
        if colony_size < 2 {
            return Err(ModelError::ColonyTooSmall(colony_size));
        }
        if task_count < 2 || task_count > colony_size {
            return Err(ModelError::BadTaskCount { task_count, colony_size });
        }
        if interaction_rate < 1 {
            return Err(ModelError::BadInteractionRate);
        }
        if threshold < 1 || threshold > interaction_rate {
            return Err(ModelError::BadThreshold { threshold, interaction_rate });
        }
        Ok(Self { colony_size, task_count, interaction_rate, threshold })
    }
}

/// Per-round state of a single ant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    /// Never works, never changes role; recruits for its task.
    Idle,
    /// Engaged in its task; never switches.
    Working,
    /// Surplus in its task; the only role eligible to switch.
    NotNeeded,
}

/// How the working subset of a task is chosen each round.
///
/// The working *count* is always `min(demand, present)`; the choice of which
/// ants fill those slots does not affect the count dynamics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WorkerSelection {
    /// Lowest-indexed non-idle ants work. Fully deterministic given a seed.
    #[default]
    Stable,
    /// A uniformly random subset works.
    Random,
}

/// An initial problem instance: per-task non-idle counts, per-task demand,
/// and per-task idle recruiter counts.
///
/// Idle ants never work and are excluded from the assignment; they are
/// counted separately per task. The total colony size is
/// `sum(initial_assignment) + sum(idle_counts)`.
///
/// Serializes as a flat JSON document
/// `{"n":…, "t":…, "assignment":[…], "demand":[…], "idle":[…]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "ScenarioDoc", into = "ScenarioDoc")]
pub struct Scenario {
    initial_assignment: Vec<usize>,
    demand: Vec<usize>,
    idle_counts: Vec<usize>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ScenarioError {
    #[error("assignment, demand and idle vectors must have equal non-zero length")]
    ShapeMismatch,
    #[error("task {task} has an empty initial assignment; every task needs at least one ant")]
    EmptyTask { task: usize },
    #[error("task {task} has zero demand; every demand entry must be at least one")]
    ZeroDemand { task: usize },
    #[error("document claims t={claimed} but vectors have length {actual}")]
    TaskCountMismatch { claimed: usize, actual: usize },
    #[error("document claims n={claimed} but counts sum to {actual}")]
    ColonySizeMismatch { claimed: usize, actual: usize },
}

impl Scenario {
    /// Builds a scenario, enforcing the structural invariants
    /// (equal lengths, every `x_i >= 1`, every `d_i >= 1`).
    pub fn new(
        initial_assignment: Vec<usize>,
        demand: Vec<usize>,
        idle_counts: Vec<usize>,
    ) -> Result<Self, ScenarioError> {
        if initial_assignment.is_empty()
            || initial_assignment.len() != demand.len()
            || initial_assignment.len() != idle_counts.len()
        {
            return Err(ScenarioError::ShapeMismatch);
        }
        if let Some(task) = initial_assignment.iter().position(|&x| x == 0) {
            return Err(ScenarioError::EmptyTask { task });
        }
        if let Some(task) = demand.iter().position(|&d| d == 0) {
            return Err(ScenarioError::ZeroDemand { task });
        }
        Ok(Self { initial_assignment, demand, idle_counts })
    }

    pub fn initial_assignment(&self) -> &[usize] {
        &self.initial_assignment
    }

    pub fn demand(&self) -> &[usize] {
        &self.demand
    }

    pub fn idle_counts(&self) -> &[usize] {
        &self.idle_counts
    }

    pub fn task_count(&self) -> usize {
        self.initial_assignment.len()
    }

    /// Non-idle ants.
    pub fn worker_count(&self) -> usize {
        self.initial_assignment.iter().sum()
    }

    /// Idle ants across the whole colony.
    pub fn idle_total(&self) -> usize {
        self.idle_counts.iter().sum()
    }

    /// Total colony size `n`, idle included.
    pub fn total_ants(&self) -> usize {
        self.worker_count() + self.idle_total()
    }

    /// Replaces the idle counts, leaving assignment and demand untouched.
    /// The caller is responsible for re-validating the result.
    pub(crate) fn with_idle_counts(&self, idle_counts: Vec<usize>) -> Result<Self, ScenarioError> {
        Self::new(self.initial_assignment.clone(), self.demand.clone(), idle_counts)
    }
}

/// On-disk shape of [`Scenario`]. `n` and `t` are redundant but required on
/// output and cross-checked on input; `idle` may be omitted for instances
/// without idle ants.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct ScenarioDoc {
    n: usize,
    t: usize,
    assignment: Vec<usize>,
    demand: Vec<usize>,
    #[serde(default)]
    idle: Option<Vec<usize>>,
}

impl From<Scenario> for ScenarioDoc {
    fn from(s: Scenario) -> Self {
        ScenarioDoc {
            n: s.total_ants(),
            t: s.task_count(),
            idle: Some(s.idle_counts.clone()),
            assignment: s.initial_assignment,
            demand: s.demand,
        }
    }
}

impl TryFrom<ScenarioDoc> for Scenario {
    type Error = ScenarioError;

    fn try_from(doc: ScenarioDoc) -> Result<Self, ScenarioError> {
        let idle = doc.idle.unwrap_or_else(|| vec![0; doc.assignment.len()]);
        let scenario = Scenario::new(doc.assignment, doc.demand, idle)?;
        if doc.t != scenario.task_count() {
            return Err(ScenarioError::TaskCountMismatch {
                claimed: doc.t,
                actual: scenario.task_count(),
            });
        }
        if doc.n != scenario.total_ants() {
            return Err(ScenarioError::ColonySizeMismatch {
                claimed: doc.n,
                actual: scenario.total_ants(),
            });
        }
        Ok(scenario)
    }
}

/// Task and role of one ant. For idle ants `task` is the task they recruit
/// for; they never contribute to it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AntState {
    pub task: usize,
    pub role: Role,
}

/// Full colony state at one round: every ant plus the derived per-task
/// counts (non-idle assignment and idle recruiters).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColonyState {
    round: u64,
    ants: Vec<AntState>,
    assignment: Vec<usize>,
    idle_recruiters: Vec<usize>,
}

impl ColonyState {
    /// Lays the colony out task-contiguously: for each task, its non-idle
    /// ants first (roles settled by [`assign_roles`]), then its idle ants.
    pub fn from_scenario(scenario: &Scenario) -> Self {
        let t = scenario.task_count();
        let mut ants = Vec::with_capacity(scenario.total_ants());
        for task in 0..t {
            for _ in 0..scenario.initial_assignment()[task] {
                ants.push(AntState { task, role: Role::NotNeeded });
            }
            for _ in 0..scenario.idle_counts()[task] {
                ants.push(AntState { task, role: Role::Idle });
            }
        }
        ColonyState {
            round: 0,
            ants,
            assignment: scenario.initial_assignment().to_vec(),
            idle_recruiters: scenario.idle_counts().to_vec(),
        }
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn ants(&self) -> &[AntState] {
        &self.ants
    }

    /// Non-idle ants per task (the assignment vector).
    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    /// Idle recruiters per task.
    pub fn idle_recruiters(&self) -> &[usize] {
        &self.idle_recruiters
    }

    pub fn task_count(&self) -> usize {
        self.assignment.len()
    }

    pub fn colony_size(&self) -> usize {
        self.ants.len()
    }

    pub(crate) fn advance_round(&mut self) {
        self.round += 1;
    }

    /// Moves one ant to a new task, keeping the derived counts in sync.
    /// Works for both non-idle switches and idle recruit-task changes.
    pub(crate) fn move_ant(&mut self, ant: usize, new_task: usize) {
        let old_task = self.ants[ant].task;
        if old_task == new_task {
            return;
        }
        match self.ants[ant].role {
            Role::Idle => {
                self.idle_recruiters[old_task] -= 1;
                self.idle_recruiters[new_task] += 1;
            }
            Role::Working | Role::NotNeeded => {
                self.assignment[old_task] -= 1;
                self.assignment[new_task] += 1;
            }
        }
        self.ants[ant].task = new_task;
    }
}

/// Settles roles for the round: in each task exactly `min(demand, present)`
/// non-idle ants become `Working`, the rest become `NotNeeded`. Idle ants
/// are untouched.
///
/// `Stable` gives the working slots to the lowest-indexed non-idle ants of
/// each task; `Random` draws a uniform subset.
pub fn assign_roles<R: Rng>(
    state: &mut ColonyState,
    demand: &[usize],
    mode: WorkerSelection,
    rng: &mut R,
) {
    assert_eq!(demand.len(), state.task_count(), "demand length must match task count");
    let mut slots: Vec<usize> = state
        .assignment
        .iter()
        .zip(demand)
        .map(|(&present, &needed)| present.min(needed))
        .collect();
    // Non-idle ants not yet passed, per task; drives the exact uniform
    // subset draw in Random mode.
    let mut remaining = state.assignment.clone();

    for ant in &mut state.ants {
        if ant.role == Role::Idle {
            continue;
        }
        let task = ant.task;
        let works = match mode {
            WorkerSelection::Stable => slots[task] > 0,
            WorkerSelection::Random => {
                slots[task] > 0 && rng.random_ratio(slots[task] as u32, remaining[task] as u32)
            }
        };
        if works {
            slots[task] -= 1;
        }
        remaining[task] -= 1;
        ant.role = if works { Role::Working } else { Role::NotNeeded };
    }
}

/// One uniform draw from the `n - 1` ants other than `actor`.
pub(crate) fn sample_partner<R: Rng>(rng: &mut R, actor: usize, colony_size: usize) -> usize {
    debug_assert!(colony_size >= 2 && actor < colony_size);
    let j = rng.random_range(0..colony_size - 1);
    if j >= actor {
        j + 1
    } else {
        j
    }
}

/// Draws the round's `R` partner observations for `actor`: each partner is
/// chosen independently and uniformly among the other `n - 1` ants, with
/// replacement across draws. Idle ants are valid targets.
pub fn sample_partners<R: Rng>(rng: &mut R, actor: usize, params: &ModelParams) -> Vec<usize> {
    (0..params.interaction_rate)
        .map(|_| sample_partner(rng, actor, params.colony_size))
        .collect()
}

/// The recruitment rule: a working ant stays put; a not-needed ant switches
/// to the next task iff at least `threshold` of its observed partners are in
/// that task with a recruiting role (`Working` or `Idle`). Returns the
/// ant's task for the next round.
pub fn decide<I>(self_task: usize, self_role: Role, partners: I, threshold: usize) -> usize
where
    I: IntoIterator<Item = (usize, Role)>,
{
    debug_assert!(self_role != Role::Idle, "idle ants do not take part in recruitment");
    if self_role == Role::Working {
        return self_task;
    }
    let next = self_task + 1;
    let recruiters = partners
        .into_iter()
        .filter(|&(task, role)| task == next && role != Role::NotNeeded)
        .count();
    if recruiters >= threshold {
        next
    } else {
        self_task
    }
}

/// True iff the assignment meets (or exceeds) the demand in every task.
pub fn is_satisfied(assignment: &[usize], demand: &[usize]) -> bool {
    assert_eq!(assignment.len(), demand.len(), "assignment/demand length mismatch");
    assignment.iter().zip(demand).all(|(&x, &d)| x >= d)
}
