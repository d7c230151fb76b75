//! The synchronous round loop for both modes of the simulator.
//!
//! Task allocation: each round assigns roles, lets every eligible ant draw
//! its partners against the round's snapshot, and applies all resulting
//! switches at once. The run stops at the first round whose assignment
//! meets the demand (checked before any interaction, so an already-covered
//! demand terminates at round 0).
//!
//! Idle distribution: non-idle ants are frozen and the idle ants spread
//! their recruit-tasks across tasks until every task holds its target
//! number of idle recruiters.
//!
//! A run is fully determined by `(scenario, params, options, seed)`; trials
//! of a sweep derive independent seeds from a master seed and can run on
//! any number of threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::model::{
    assign_roles, decide, is_satisfied, sample_partner, AntState, ColonyState, ModelParams, Role,
    Scenario, WorkerSelection,
};
use crate::scenario::{validate, SatisfiabilityVerdict, ValidationError};

/// The simulation RNG. ChaCha8 is fast, has solid statistical quality, and
/// its streams are reproducible across platforms and releases.
pub type SimRng = ChaCha8Rng;

/// Per-round snapshot kept when a trajectory is recorded.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Snapshot {
    /// Non-idle ants per task.
    pub assignment: Vec<usize>,
    /// Idle recruiters per task.
    pub idle: Vec<usize>,
}

/// Outcome of a single run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunResult {
    /// False when the round cap was hit first.
    pub terminated: bool,
    /// First round at which the goal held, or the cap when `!terminated`.
    pub rounds: u64,
    /// Completed rounds until an ant of the first task first sampled a
    /// partner belonging to the second task — the earliest round any
    /// protocol could have moved an ant across that boundary. Tracked in
    /// task-allocation mode only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub first_switch_round: Option<u64>,
    /// Per-round snapshots (`rounds + 1` entries), when requested.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trajectory: Option<Vec<Snapshot>>,
}

/// Minimum idle recruiters required per task for the distribution mode.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdleDistributionGoal {
    targets: Vec<usize>,
}

impl IdleDistributionGoal {
    pub fn new(targets: Vec<usize>) -> Self {
        Self { targets }
    }

    /// One idle recruiter per task.
    pub fn one_per_task(task_count: usize) -> Self {
        Self { targets: vec![1; task_count] }
    }

    pub fn targets(&self) -> &[usize] {
        &self.targets
    }
}

/// Knobs of a single run.
#[derive(Debug, Clone)]
pub struct RunOptions {
    pub max_rounds: u64,
    pub record_trajectory: bool,
    pub worker_selection: WorkerSelection,
    /// Run an unsatisfiable scenario anyway (it will time out).
    pub force: bool,
}

impl RunOptions {
    pub fn new(max_rounds: u64) -> Self {
        Self {
            max_rounds,
            record_trajectory: false,
            worker_selection: WorkerSelection::Stable,
            force: false,
        }
    }

    /// Defaults for a colony of the given size: the round cap sits far
    /// above the worst-case expectation.
    pub fn for_colony(colony_size: usize) -> Self {
        Self::new(default_max_rounds(colony_size))
    }

    pub fn with_trajectory(mut self, record: bool) -> Self {
        self.record_trajectory = record;
        self
    }

    pub fn with_worker_selection(mut self, mode: WorkerSelection) -> Self {
        self.worker_selection = mode;
        self
    }

    pub fn with_force(mut self, force: bool) -> Self {
        self.force = force;
        self
    }
}

/// `ceil(50 * n * ln(n + 1))` — comfortably above the worst case.
pub fn default_max_rounds(colony_size: usize) -> u64 {
    (50.0 * colony_size as f64 * ((colony_size + 1) as f64).ln()).ceil() as u64
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Invalid(#[from] ValidationError),
    #[error("demand is unsatisfiable ({verdict:?}); refusing to run without force")]
    Unsatisfiable { verdict: SatisfiabilityVerdict },
    #[error("idle distribution needs at least one idle ant per task: {idle} idle ants, {task_count} tasks")]
    TooFewIdle { idle: usize, task_count: usize },
    #[error("goal asks for {wanted} idle recruiters but the scenario only has {idle}")]
    GoalExceedsIdle { wanted: usize, idle: usize },
    #[error("goal has {actual} targets, expected one per task ({expected})")]
    GoalShape { expected: usize, actual: usize },
}

/// What `step` reports back to the run loop.
#[derive(Debug, Clone, Copy, Default)]
pub struct StepReport {
    /// Some first-task ant sampled a partner of the second task this round.
    pub first_task_contact: bool,
}

/// One decision made during a traced step: the acting ant, its task before
/// and after, and the partner indices it drew (against the pre-step
/// snapshot).
#[derive(Debug, Clone)]
pub struct DecisionRecord {
    pub ant: usize,
    pub task_before: usize,
    pub task_after: usize,
    pub partners: Vec<usize>,
}

/// Advances the colony by one task-allocation round: assigns roles, lets
/// ants observe the round snapshot, and applies all switches together.
///
/// Partner draws that cannot influence any observable are elided: working
/// ants outside the first task and not-needed ants of the last task skip
/// their draws. First-task ants always draw so the boundary-contact
/// statistic sees every interaction the model grants them.
pub fn step<R: Rng>(
    state: &mut ColonyState,
    scenario: &Scenario,
    params: &ModelParams,
    mode: WorkerSelection,
    rng: &mut R,
) -> StepReport {
    step_impl(state, scenario, params, mode, rng, None)
}

/// Like [`step`], invoking `trace` for every acting ant. Intended for
/// instrumentation and invariant tests; the simulated process is identical.
pub fn step_traced<R: Rng>(
    state: &mut ColonyState,
    scenario: &Scenario,
    params: &ModelParams,
    mode: WorkerSelection,
    rng: &mut R,
    trace: &mut dyn FnMut(DecisionRecord),
) -> StepReport {
    step_impl(state, scenario, params, mode, rng, Some(trace))
}

fn step_impl<R: Rng>(
    state: &mut ColonyState,
    scenario: &Scenario,
    params: &ModelParams,
    mode: WorkerSelection,
    rng: &mut R,
    mut trace: Option<&mut dyn FnMut(DecisionRecord)>,
) -> StepReport {
    debug_assert_eq!(state.colony_size(), params.colony_size);
    assign_roles(state, scenario.demand(), mode, rng);

    let n = state.colony_size();
    let last_task = state.task_count() - 1;
    let mut report = StepReport::default();
    let mut switches: Vec<(usize, usize)> = Vec::new();
    let mut observed: Vec<(usize, Role)> = Vec::with_capacity(params.interaction_rate);

    for ant in 0..n {
        let AntState { task, role } = state.ants()[ant];
        if role == Role::Idle {
            continue;
        }
        let eligible = role == Role::NotNeeded && task < last_task;
        let watches_boundary = task == 0;
        if !eligible && !watches_boundary {
            continue;
        }

        observed.clear();
        let mut partner_ids = trace.is_some().then(Vec::new);
        for _ in 0..params.interaction_rate {
            let partner = sample_partner(rng, ant, n);
            let partner_state = state.ants()[partner];
            observed.push((partner_state.task, partner_state.role));
            if let Some(ids) = partner_ids.as_mut() {
                ids.push(partner);
            }
            if watches_boundary && partner_state.task == 1 {
                report.first_task_contact = true;
            }
        }

        let next_task = if eligible {
            decide(task, role, observed.iter().copied(), params.threshold)
        } else {
            task
        };
        if let (Some(trace), Some(partners)) = (trace.as_mut(), partner_ids) {
            trace(DecisionRecord { ant, task_before: task, task_after: next_task, partners });
        }
        if next_task != task {
            switches.push((ant, next_task));
        }
    }

    for &(ant, next_task) in &switches {
        state.move_ant(ant, next_task);
    }
    state.advance_round();
    report
}

/// Runs task allocation to completion (or the round cap). Deterministic:
/// identical inputs and seed yield an identical result.
pub fn run(
    scenario: &Scenario,
    params: &ModelParams,
    seed: u64,
    options: &RunOptions,
) -> Result<RunResult, EngineError> {
    let verdict = validate(scenario, params)?;
    if !verdict.satisfiable && !options.force {
        return Err(EngineError::Unsatisfiable { verdict });
    }

    let mut rng = SimRng::seed_from_u64(seed);
    let mut state = ColonyState::from_scenario(scenario);
    let mut trajectory = options.record_trajectory.then(|| vec![snapshot(&state)]);
    let mut first_switch_round = None;

    loop {
        if is_satisfied(state.assignment(), scenario.demand()) {
            return Ok(RunResult {
                terminated: true,
                rounds: state.round(),
                first_switch_round,
                trajectory,
            });
        }
        if state.round() >= options.max_rounds {
            return Ok(RunResult {
                terminated: false,
                rounds: options.max_rounds,
                first_switch_round,
                trajectory,
            });
        }
        let report = step(&mut state, scenario, params, options.worker_selection, &mut rng);
        if report.first_task_contact && first_switch_round.is_none() {
            first_switch_round = Some(state.round());
        }
        if let Some(rows) = trajectory.as_mut() {
            rows.push(snapshot(&state));
        }
    }
}

/// Advances one idle-distribution round.
///
/// Every idle ant in a task holding more recruiters than its target samples
/// `R` partners; among the sampled partners' tasks that are below target it
/// picks the lowest task index. Admission into a task is capped by its
/// remaining deficit (lowest ant index first), so a round never overshoots
/// a target. All reads are against the round snapshot; moves apply together.
pub fn distribution_step<R: Rng>(
    state: &mut ColonyState,
    goal: &IdleDistributionGoal,
    params: &ModelParams,
    rng: &mut R,
) {
    distribution_step_impl(state, goal, params, rng, None);
}

/// Traced variant of [`distribution_step`] for instrumentation and tests.
pub fn distribution_step_traced<R: Rng>(
    state: &mut ColonyState,
    goal: &IdleDistributionGoal,
    params: &ModelParams,
    rng: &mut R,
    trace: &mut dyn FnMut(DecisionRecord),
) {
    distribution_step_impl(state, goal, params, rng, Some(trace));
}

fn distribution_step_impl<R: Rng>(
    state: &mut ColonyState,
    goal: &IdleDistributionGoal,
    params: &ModelParams,
    rng: &mut R,
    mut trace: Option<&mut dyn FnMut(DecisionRecord)>,
) {
    let n = state.colony_size();
    let targets = goal.targets();
    let counts = state.idle_recruiters().to_vec();
    let mut room: Vec<usize> =
        targets.iter().zip(&counts).map(|(&t, &c)| t.saturating_sub(c)).collect();
    let mut moves: Vec<(usize, usize)> = Vec::new();

    for ant in 0..n {
        let AntState { task, role } = state.ants()[ant];
        if role != Role::Idle || counts[task] <= targets[task] {
            continue;
        }
        let mut destination: Option<usize> = None;
        let mut partner_ids = trace.is_some().then(Vec::new);
        for _ in 0..params.interaction_rate {
            let partner = sample_partner(rng, ant, n);
            if let Some(ids) = partner_ids.as_mut() {
                ids.push(partner);
            }
            let candidate = state.ants()[partner].task;
            if counts[candidate] < targets[candidate]
                && destination.is_none_or(|best| candidate < best)
            {
                destination = Some(candidate);
            }
        }
        let admitted = match destination {
            Some(dest) if room[dest] > 0 => {
                room[dest] -= 1;
                moves.push((ant, dest));
                dest
            }
            _ => task,
        };
        if let (Some(trace), Some(partners)) = (trace.as_mut(), partner_ids) {
            trace(DecisionRecord { ant, task_before: task, task_after: admitted, partners });
        }
    }

    for &(ant, dest) in &moves {
        state.move_ant(ant, dest);
    }
    state.advance_round();
}

/// Runs the idle-distribution mode: non-idle ants stay frozen in their
/// tasks while idle ants retarget until every task holds at least its
/// target number of idle recruiters (checked at the start of each round,
/// round 0 included).
pub fn run_idle_distribution(
    scenario: &Scenario,
    goal: &IdleDistributionGoal,
    params: &ModelParams,
    seed: u64,
    options: &RunOptions,
) -> Result<RunResult, EngineError> {
    validate(scenario, params)?;
    let idle = scenario.idle_total();
    if idle < params.task_count {
        return Err(EngineError::TooFewIdle { idle, task_count: params.task_count });
    }
    if goal.targets().len() != params.task_count {
        return Err(EngineError::GoalShape {
            expected: params.task_count,
            actual: goal.targets().len(),
        });
    }
    let wanted: usize = goal.targets().iter().sum();
    if wanted > idle {
        return Err(EngineError::GoalExceedsIdle { wanted, idle });
    }

    let mut rng = SimRng::seed_from_u64(seed);
    let mut state = frozen_state(scenario);
    let mut trajectory = options.record_trajectory.then(|| vec![snapshot(&state)]);

    loop {
        let met = state
            .idle_recruiters()
            .iter()
            .zip(goal.targets())
            .all(|(&count, &target)| count >= target);
        if met {
            return Ok(RunResult {
                terminated: true,
                rounds: state.round(),
                first_switch_round: None,
                trajectory,
            });
        }
        if state.round() >= options.max_rounds {
            return Ok(RunResult {
                terminated: false,
                rounds: options.max_rounds,
                first_switch_round: None,
                trajectory,
            });
        }
        distribution_step(&mut state, goal, params, &mut rng);
        if let Some(rows) = trajectory.as_mut() {
            rows.push(snapshot(&state));
        }
    }
}

/// Distribution-mode initial state: non-idle ants are frozen and marked
/// `Working` for the whole run.
fn frozen_state(scenario: &Scenario) -> ColonyState {
    let mut state = ColonyState::from_scenario(scenario);
    // Freezing every non-idle ant: demand is irrelevant in this mode.
    let saturated: Vec<usize> = state.assignment().to_vec();
    assign_roles(&mut state, &saturated, WorkerSelection::Stable, &mut no_rng());
    state
}

/// RNG stand-in for paths that never draw (Stable role assignment).
fn no_rng() -> impl Rng {
    SimRng::seed_from_u64(0)
}

fn snapshot(state: &ColonyState) -> Snapshot {
    Snapshot {
        assignment: state.assignment().to_vec(),
        idle: state.idle_recruiters().to_vec(),
    }
}

/// SplitMix64-style finalizer mixing a master seed and a trial index into
/// a statistically independent per-trial seed.
pub fn derive_trial_seed(master_seed: u64, trial_index: u64) -> u64 {
    let mut z = master_seed
        .wrapping_add(trial_index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Runs `trials` independent task-allocation trials in parallel, seeded
/// from `master_seed`. Results come back in trial order regardless of
/// scheduling.
pub fn run_trials(
    scenario: &Scenario,
    params: &ModelParams,
    master_seed: u64,
    trials: usize,
    options: &RunOptions,
) -> Result<Vec<RunResult>, EngineError> {
    (0..trials as u64)
        .into_par_iter()
        .map(|i| run(scenario, params, derive_trial_seed(master_seed, i), options))
        .collect()
}

/// Parallel trials of the idle-distribution mode.
pub fn run_idle_distribution_trials(
    scenario: &Scenario,
    goal: &IdleDistributionGoal,
    params: &ModelParams,
    master_seed: u64,
    trials: usize,
    options: &RunOptions,
) -> Result<Vec<RunResult>, EngineError> {
    (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            run_idle_distribution(scenario, goal, params, derive_trial_seed(master_seed, i), options)
        })
        .collect()
}

/// Writes a recorded trajectory as CSV: `round,x_1,…,x_t[,idle_1,…,idle_t]`,
/// one row per round. Idle columns appear when any snapshot holds idle
/// ants.
pub fn write_trajectory_csv<W: std::io::Write>(
    out: &mut W,
    trajectory: &[Snapshot],
) -> std::io::Result<()> {
    let Some(first) = trajectory.first() else {
        return Ok(());
    };
    let t = first.assignment.len();
    let with_idle = trajectory.iter().any(|row| row.idle.iter().any(|&i| i > 0));

    let mut header = String::from("round");
    for i in 1..=t {
        header.push_str(&format!(",x_{i}"));
    }
    if with_idle {
        for i in 1..=t {
            header.push_str(&format!(",idle_{i}"));
        }
    }
    writeln!(out, "{header}")?;

    for (round, row) in trajectory.iter().enumerate() {
        let mut line = round.to_string();
        for &x in &row.assignment {
            line.push_str(&format!(",{x}"));
        }
        if with_idle {
            for &i in &row.idle {
                line.push_str(&format!(",{i}"));
            }
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::recruit_probability;
    use crate::scenario::{make_idle_distribution_lb, make_lowerbound_chain, make_upper_worstcase};

    fn params_for(scenario: &Scenario, rate: usize, threshold: usize) -> ModelParams {
        ModelParams::new(scenario.total_ants(), scenario.task_count(), rate, threshold).unwrap()
    }

    #[test]
    fn exact_demand_is_a_fixed_point() {
        let scenario = Scenario::new(vec![2, 3], vec![2, 3], vec![0, 0]).unwrap();
        let params = params_for(&scenario, 2, 1);
        let mut state = ColonyState::from_scenario(&scenario);
        let mut rng = SimRng::seed_from_u64(3);
        for round in 1..=50u64 {
            step(&mut state, &scenario, &params, WorkerSelection::Stable, &mut rng);
            assert_eq!(state.assignment(), &[2, 3]);
            assert_eq!(state.round(), round);
            assert!(state.ants().iter().all(|a| a.role == Role::Working));
        }
    }

    #[test]
    fn two_ants_two_tasks_never_move() {
        let scenario = Scenario::new(vec![1, 1], vec![1, 1], vec![0, 0]).unwrap();
        let params = params_for(&scenario, 1, 1);
        let result = run(&scenario, &params, 9, &RunOptions::new(100)).unwrap();
        assert!(result.terminated);
        assert_eq!(result.rounds, 0);
    }

    #[test]
    fn already_satisfied_terminates_at_round_zero() {
        let scenario = Scenario::new(vec![3, 2], vec![1, 2], vec![0, 0]).unwrap();
        let params = params_for(&scenario, 1, 1);
        let result = run(&scenario, &params, 1, &RunOptions::new(10)).unwrap();
        assert!(result.terminated);
        assert_eq!(result.rounds, 0);
    }

    #[test]
    fn switch_frequency_matches_recruit_probability() {
        // One not-needed ant in task 1, one working ant in task 2, and two
        // idle ants pinned to task 1: the switch probability per round is
        // exactly recruit_probability(1, 5, 1, 1) = 1/4.
        let scenario = Scenario::new(vec![2, 1], vec![1, 1], vec![2, 0]).unwrap();
        let params = params_for(&scenario, 1, 1);
        let rounds = 200_000u32;
        let mut rng = SimRng::seed_from_u64(77);
        let mut switched = 0u32;
        for _ in 0..rounds {
            let mut state = ColonyState::from_scenario(&scenario);
            step(&mut state, &scenario, &params, WorkerSelection::Stable, &mut rng);
            if state.assignment() == [1, 2] {
                switched += 1;
            }
        }
        let expected = recruit_probability(1, 5, 1, 1);
        let freq = f64::from(switched) / f64::from(rounds);
        let stderr = (expected * (1.0 - expected) / f64::from(rounds)).sqrt();
        assert!(
            (freq - expected).abs() < 3.0 * stderr,
            "freq {freq} vs expected {expected} (3se = {})",
            3.0 * stderr
        );
    }

    #[test]
    fn runs_are_deterministic() {
        let scenario = make_upper_worstcase(40).unwrap();
        let params = params_for(&scenario, 2, 1);
        let options = RunOptions::for_colony(40).with_trajectory(true);
        let a = run(&scenario, &params, 1234, &options).unwrap();
        let b = run(&scenario, &params, 1234, &options).unwrap();
        assert_eq!(a, b);
        let c = run(&scenario, &params, 1235, &options).unwrap();
        assert_ne!(a.trajectory, c.trajectory);
    }

    #[test]
    fn trajectory_length_and_one_way_flow() {
        let scenario = make_upper_worstcase(24).unwrap();
        let params = params_for(&scenario, 1, 1);
        let options = RunOptions::for_colony(24).with_trajectory(true);
        let result = run(&scenario, &params, 5, &options).unwrap();
        assert!(result.terminated);
        let rows = result.trajectory.unwrap();
        assert_eq!(rows.len() as u64, result.rounds + 1);
        for pair in rows.windows(2) {
            let (before, after) = (&pair[0], &pair[1]);
            let mut prefix_before = 0usize;
            let mut prefix_after = 0usize;
            for i in 0..before.assignment.len() - 1 {
                prefix_before += before.assignment[i];
                prefix_after += after.assignment[i];
                assert!(prefix_after <= prefix_before, "mass moved left at prefix {i}");
            }
        }
    }

    #[test]
    fn unsatisfiable_scenario_refused_unless_forced() {
        let scenario = Scenario::new(vec![1, 1, 4], vec![1, 2, 1], vec![0, 0, 0]).unwrap();
        let params = params_for(&scenario, 1, 1);
        let err = run(&scenario, &params, 3, &RunOptions::new(50)).unwrap_err();
        assert!(matches!(err, EngineError::Unsatisfiable { .. }));

        let result =
            run(&scenario, &params, 3, &RunOptions::new(50).with_force(true)).unwrap();
        assert!(!result.terminated);
        assert_eq!(result.rounds, 50);
    }

    #[test]
    fn timeout_reports_cap() {
        let scenario = make_upper_worstcase(30).unwrap();
        let params = params_for(&scenario, 1, 1);
        let result = run(&scenario, &params, 8, &RunOptions::new(1)).unwrap();
        assert!(!result.terminated);
        assert_eq!(result.rounds, 1);
    }

    #[test]
    fn first_switch_round_reported_for_chain() {
        let scenario = make_lowerbound_chain(20, 3).unwrap();
        let params = params_for(&scenario, 1, 1);
        let result = run(&scenario, &params, 21, &RunOptions::for_colony(20)).unwrap();
        assert!(result.terminated);
        let first = result.first_switch_round.expect("chain always crosses the boundary");
        assert!(first >= 1 && first <= result.rounds);
    }

    #[test]
    fn working_ants_persist_and_idle_never_move() {
        let scenario = Scenario::new(vec![6, 2, 1], vec![2, 2, 4], vec![1, 1, 0]).unwrap();
        let params = params_for(&scenario, 2, 1);
        let mut rng = SimRng::seed_from_u64(17);
        let mut state = ColonyState::from_scenario(&scenario);
        for _ in 0..500 {
            let tasks_before: Vec<usize> = state.ants().iter().map(|a| a.task).collect();
            step(&mut state, &scenario, &params, WorkerSelection::Random, &mut rng);
            // Post-step roles are the ones in force during the round just
            // simulated; moves never touch the role field.
            for (ant, (&prev_task, now)) in tasks_before.iter().zip(state.ants()).enumerate() {
                match now.role {
                    Role::Idle | Role::Working => {
                        assert_eq!(prev_task, now.task, "pinned ant {ant} moved")
                    }
                    Role::NotNeeded => {
                        assert!(
                            now.task == prev_task || now.task == prev_task + 1,
                            "ant {ant} jumped from {} to {}",
                            prev_task,
                            now.task
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn derived_seeds_are_distinct_and_stable() {
        assert_eq!(derive_trial_seed(42, 0), derive_trial_seed(42, 0));
        assert_ne!(derive_trial_seed(42, 0), derive_trial_seed(42, 1));
        assert_ne!(derive_trial_seed(42, 0), derive_trial_seed(43, 0));
        let seeds: std::collections::HashSet<u64> =
            (0..1000).map(|i| derive_trial_seed(7, i)).collect();
        assert_eq!(seeds.len(), 1000);
    }

    #[test]
    fn run_trials_matches_sequential_runs() {
        let scenario = make_upper_worstcase(16).unwrap();
        let params = params_for(&scenario, 1, 1);
        let options = RunOptions::for_colony(16);
        let parallel = run_trials(&scenario, &params, 99, 8, &options).unwrap();
        for (i, result) in parallel.iter().enumerate() {
            let solo = run(&scenario, &params, derive_trial_seed(99, i as u64), &options).unwrap();
            assert_eq!(*result, solo);
        }
    }

    #[test]
    fn distribution_already_met_is_round_zero() {
        let scenario = Scenario::new(vec![3, 1], vec![1, 1], vec![1, 1]).unwrap();
        let params = params_for(&scenario, 1, 1);
        let goal = IdleDistributionGoal::one_per_task(2);
        let result =
            run_idle_distribution(&scenario, &goal, &params, 4, &RunOptions::new(100)).unwrap();
        assert!(result.terminated);
        assert_eq!(result.rounds, 0);
    }

    #[test]
    fn distribution_with_crowded_next_task_finishes_fast() {
        // Both idle ants recruit for task 1 while nearly every worker sits
        // in task 2: the first sampled partner is almost surely in task 2,
        // and the deficit cap admits exactly one mover.
        let scenario = Scenario::new(vec![1, 97], vec![1, 1], vec![2, 0]).unwrap();
        let params = params_for(&scenario, 1, 1);
        let goal = IdleDistributionGoal::one_per_task(2);
        let mut total = 0u64;
        let trials = 200;
        for seed in 0..trials {
            let result =
                run_idle_distribution(&scenario, &goal, &params, seed, &RunOptions::new(10_000))
                    .unwrap();
            assert!(result.terminated);
            total += result.rounds;
        }
        let mean = total as f64 / trials as f64;
        assert!(mean < 3.0, "expected O(1) rounds, got mean {mean}");
    }

    #[test]
    fn distribution_lower_bound_small_instance() {
        // Minimum of two geometrics with p = 1/(n-1) each.
        let n = 41;
        let scenario = make_idle_distribution_lb(n).unwrap();
        let params = params_for(&scenario, 1, 1);
        let goal = IdleDistributionGoal::one_per_task(2);
        let trials = 2_000u64;
        let mut total = 0u64;
        for seed in 0..trials {
            let result = run_idle_distribution(
                &scenario,
                &goal,
                &params,
                seed,
                &RunOptions::new(1_000_000),
            )
            .unwrap();
            assert!(result.terminated);
            total += result.rounds;
        }
        let mean = total as f64 / trials as f64;
        let p = 1.0 / (n - 1) as f64;
        let expected = 1.0 / (1.0 - (1.0 - p) * (1.0 - p));
        assert!(
            (mean - expected).abs() / expected < 0.15,
            "mean {mean} vs expected {expected}"
        );
    }

    #[test]
    fn distribution_switches_only_to_sampled_tasks() {
        // An idle ant's recruit-task next round is its current task or the
        // task of one of the partners it sampled this round.
        let scenario = Scenario::new(vec![4, 3, 2], vec![1, 1, 1], vec![3, 1, 0]).unwrap();
        let params = params_for(&scenario, 2, 1);
        let goal = IdleDistributionGoal::new(vec![1, 1, 2]);
        let mut rng = SimRng::seed_from_u64(23);
        let mut state = frozen_state(&scenario);
        for _ in 0..300 {
            let snapshot = state.clone();
            let mut records = Vec::new();
            distribution_step_traced(&mut state, &goal, &params, &mut rng, &mut |r| {
                records.push(r)
            });
            for record in &records {
                assert_eq!(snapshot.ants()[record.ant].task, record.task_before);
                if record.task_after != record.task_before {
                    let sampled_tasks: Vec<usize> = record
                        .partners
                        .iter()
                        .map(|&p| snapshot.ants()[p].task)
                        .collect();
                    assert!(
                        sampled_tasks.contains(&record.task_after),
                        "ant {} retargeted to {} without sampling it (saw {:?})",
                        record.ant,
                        record.task_after,
                        sampled_tasks
                    );
                }
            }
            // Non-idle ants stay frozen in place.
            for (before, after) in snapshot.ants().iter().zip(state.ants()) {
                if before.role != Role::Idle {
                    assert_eq!(before, after);
                }
            }
        }
    }

    #[test]
    fn distribution_mode_argument_errors() {
        let scenario = Scenario::new(vec![3, 1], vec![1, 1], vec![1, 0]).unwrap();
        let params = params_for(&scenario, 1, 1);
        let goal = IdleDistributionGoal::one_per_task(2);
        let err = run_idle_distribution(&scenario, &goal, &params, 0, &RunOptions::new(10))
            .unwrap_err();
        assert!(matches!(err, EngineError::TooFewIdle { idle: 1, task_count: 2 }));

        let scenario = Scenario::new(vec![3, 1], vec![1, 1], vec![2, 0]).unwrap();
        let params = params_for(&scenario, 1, 1);
        let err = run_idle_distribution(
            &scenario,
            &IdleDistributionGoal::new(vec![2, 1]),
            &params,
            0,
            &RunOptions::new(10),
        )
        .unwrap_err();
        assert!(matches!(err, EngineError::GoalExceedsIdle { wanted: 3, idle: 2 }));

        let err = run_idle_distribution(
            &scenario,
            &IdleDistributionGoal::new(vec![1]),
            &params,
            0,
            &RunOptions::new(10),
        )
        .unwrap_err();
        assert!(matches!(err, EngineError::GoalShape { expected: 2, actual: 1 }));
    }

    #[test]
    fn trajectory_csv_format() {
        let trajectory = vec![
            Snapshot { assignment: vec![3, 1], idle: vec![0, 0] },
            Snapshot { assignment: vec![2, 2], idle: vec![0, 0] },
        ];
        let mut buffer = Vec::new();
        write_trajectory_csv(&mut buffer, &trajectory).unwrap();
        let text = String::from_utf8(buffer).unwrap();
        assert_eq!(text, "round,x_1,x_2\n0,3,1\n1,2,2\n");

        let trajectory = vec![Snapshot { assignment: vec![2, 1], idle: vec![2, 0] }];
        let mut buffer = Vec::new();
        write_trajectory_csv(&mut buffer, &trajectory).unwrap();
        let text = String::from_utf8(buffer).unwrap();
        assert_eq!(text, "round,x_1,x_2,idle_1,idle_2\n0,2,1,2,0\n");
    }
}
