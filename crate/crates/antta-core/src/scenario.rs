//! Scenario validation and the named adversarial instances.
//!
//! A demand is *satisfiable* when the whole colony can cover it
//! (`sum(d) <= alpha * n`, with `alpha = 1 - m/n` the non-idle fraction) and
//! when one-way switching can route enough ants into every prefix of the
//! task sequence: for every task `i`, the cumulative demand through `i` must
//! not exceed the non-idle ants starting at or before `i`.
//!
//! Note on the prefix condition: assignment counts here already exclude idle
//! ants, so no idle subtraction is applied on the assignment side — the
//! idle ants only shrink the budget through `alpha`.

use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::model::{ModelParams, Scenario, ScenarioError};

/// Outcome of a satisfiability check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SatisfiabilityVerdict {
    pub satisfiable: bool,
    /// Demand fraction `sum(d) / n`.
    pub gamma: f64,
    /// Non-idle fraction `1 - m/n`.
    pub alpha: f64,
    /// First task number (1-based) whose cumulative demand cannot be covered
    /// by the non-idle ants at or before it, when such a task exists.
    pub first_violated_prefix: Option<usize>,
}

#[derive(Debug, Error, PartialEq)]
pub enum ValidationError {
    #[error("scenario vectors have length {actual}, expected task count {expected}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("scenario totals {actual} ants but params declare n={expected}")]
    ColonySizeMismatch { expected: usize, actual: usize },
    #[error(transparent)]
    Malformed(#[from] ScenarioError),
    #[error("scenario is unsatisfiable: {verdict:?}")]
    Unsatisfiable { verdict: SatisfiabilityVerdict },
}

#[derive(Debug, Error, PartialEq)]
pub enum ConstructionError {
    #[error("worst-case instance needs n >= 5, got {0}")]
    WorstCaseTooSmall(usize),
    #[error("chain instance needs t >= 3, got {0}")]
    ChainTooFewTasks(usize),
    #[error("chain instance needs n >= t + 2, got n={n}, t={t}")]
    ChainTooSmall { n: usize, t: usize },
    #[error("idle-distribution instance needs n >= 5, got {0}")]
    IdleDistributionTooSmall(usize),
    #[error(transparent)]
    Invalid(#[from] ValidationError),
}

/// Checks a scenario against model params and reports satisfiability.
///
/// Structural defects (length or colony-size mismatch, zero entries) are
/// errors; a well-formed but uncoverable demand yields a verdict with
/// `satisfiable == false`.
pub fn validate(
    scenario: &Scenario,
    params: &ModelParams,
) -> Result<SatisfiabilityVerdict, ValidationError> {
    if scenario.task_count() != params.task_count {
        return Err(ValidationError::LengthMismatch {
            expected: params.task_count,
            actual: scenario.task_count(),
        });
    }
    if scenario.total_ants() != params.colony_size {
        return Err(ValidationError::ColonySizeMismatch {
            expected: params.colony_size,
            actual: scenario.total_ants(),
        });
    }
    Ok(satisfiability(scenario))
}

/// Params-free satisfiability core; `n` and `t` are taken from the scenario
/// itself.
pub fn satisfiability(scenario: &Scenario) -> SatisfiabilityVerdict {
    let n = scenario.total_ants();
    let workers = scenario.worker_count();
    let total_demand: usize = scenario.demand().iter().sum();
    let gamma = total_demand as f64 / n as f64;
    let alpha = workers as f64 / n as f64;

    let mut first_violated_prefix = None;
    let mut demand_prefix = 0usize;
    let mut assignment_prefix = 0usize;
    for (task, (&d, &x)) in scenario.demand().iter().zip(scenario.initial_assignment()).enumerate()
    {
        demand_prefix += d;
        assignment_prefix += x;
        if demand_prefix > assignment_prefix {
            first_violated_prefix = Some(task + 1);
            break;
        }
    }

    let satisfiable = total_demand <= workers && first_violated_prefix.is_none();
    SatisfiabilityVerdict { satisfiable, gamma, alpha, first_violated_prefix }
}

/// The hardest no-idle instance for three tasks: nearly the whole colony
/// must funnel through two single-recruiter bottlenecks.
/// `X0 = {n-2, 1, 1}`, `D = {1, 1, n-2}`.
pub fn make_upper_worstcase(n: usize) -> Result<Scenario, ConstructionError> {
    if n < 5 {
        return Err(ConstructionError::WorstCaseTooSmall(n));
    }
    let scenario = Scenario::new(vec![n - 2, 1, 1], vec![1, 1, n - 2], vec![0, 0, 0])
        .map_err(ValidationError::from)?;
    debug_assert!(satisfiability(&scenario).satisfiable);
    Ok(scenario)
}

/// The sequential-bottleneck chain for `t >= 3` tasks: one surplus ant must
/// percolate across every boundary in turn.
/// `X0 = {2, 1, ..., 1, n-t}`, `D = {1, 1, ..., 1, n-t+1}`.
pub fn make_lowerbound_chain(n: usize, t: usize) -> Result<Scenario, ConstructionError> {
    if t < 3 {
        return Err(ConstructionError::ChainTooFewTasks(t));
    }
    if n < t + 2 {
        return Err(ConstructionError::ChainTooSmall { n, t });
    }
    let mut assignment = vec![1; t];
    assignment[0] = 2;
    assignment[t - 1] = n - t;
    let mut demand = vec![1; t];
    demand[t - 1] = n - t + 1;
    let scenario =
        Scenario::new(assignment, demand, vec![0; t]).map_err(ValidationError::from)?;
    debug_assert!(satisfiability(&scenario).satisfiable);
    Ok(scenario)
}

/// Attaches idle recruiter counts to an existing scenario and re-validates.
/// The assignment and demand are kept as-is, so the colony grows by the
/// idle total; callers wanting a fixed colony size shrink the base scenario
/// first.
pub fn add_idle(
    scenario: &Scenario,
    idle_per_task: &[usize],
) -> Result<Scenario, ValidationError> {
    if idle_per_task.len() != scenario.task_count() {
        return Err(ValidationError::LengthMismatch {
            expected: scenario.task_count(),
            actual: idle_per_task.len(),
        });
    }
    let with_idle = scenario.with_idle_counts(idle_per_task.to_vec())?;
    let verdict = satisfiability(&with_idle);
    if !verdict.satisfiable {
        return Err(ValidationError::Unsatisfiable { verdict });
    }
    Ok(with_idle)
}

/// The two-task idle-distribution bottleneck: two idle ants both recruit
/// for task 1 while only a single ant sits in task 2, so spreading the idle
/// ants out takes a linear number of rounds.
/// `X0 = {n-3, 1}`, idle `{2, 0}`; the demand is the minimal `{1, 1}`.
pub fn make_idle_distribution_lb(n: usize) -> Result<Scenario, ConstructionError> {
    if n < 5 {
        return Err(ConstructionError::IdleDistributionTooSmall(n));
    }
    let scenario = Scenario::new(vec![n - 3, 1], vec![1, 1], vec![2, 0])
        .map_err(ValidationError::from)?;
    debug_assert!(satisfiability(&scenario).satisfiable);
    Ok(scenario)
}

/// Draws a uniform-ish random satisfiable instance, used by property tests
/// and the oracle-equivalence suite. Demand entries are chosen left to
/// right within the prefix budget so the result always validates.
pub fn random_satisfiable<R: Rng>(
    rng: &mut R,
    max_workers: usize,
    max_tasks: usize,
    max_idle_per_task: usize,
) -> Scenario {
    assert!(max_tasks >= 2);
    let t = rng.random_range(2..=max_tasks);
    let workers = rng.random_range(2 * t..=max_workers.max(2 * t));

    // Random composition of `workers` into t positive parts.
    let mut assignment = vec![1usize; t];
    for _ in 0..workers - t {
        assignment[rng.random_range(0..t)] += 1;
    }

    // Demand within both the prefix budget and the total budget, leaving
    // room for at least one unit per remaining task. Both caps stay >= 1
    // because every assignment entry is positive and workers >= 2t.
    let mut demand = Vec::with_capacity(t);
    let mut demand_sum = 0usize;
    let mut prefix = 0usize;
    for (i, &present) in assignment.iter().enumerate() {
        prefix += present;
        let tasks_after = t - 1 - i;
        let cap = (prefix - demand_sum).min(workers - demand_sum - tasks_after);
        let d = rng.random_range(1..=cap);
        demand.push(d);
        demand_sum += d;
    }

    let idle: Vec<usize> =
        (0..t).map(|_| rng.random_range(0..=max_idle_per_task)).collect();
    let scenario = Scenario::new(assignment, demand, idle).expect("construction is well-formed");
    debug_assert!(satisfiability(&scenario).satisfiable);
    scenario
}

/// Reads a scenario from a JSON file.
pub fn read_scenario_file(path: &std::path::Path) -> Result<Scenario, ScenarioFileError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| ScenarioFileError::Io { path: path.display().to_string(), source })?;
    serde_json::from_str(&text)
        .map_err(|source| ScenarioFileError::Parse { path: path.display().to_string(), source })
}

/// Writes a scenario as a JSON file.
pub fn write_scenario_file(
    path: &std::path::Path,
    scenario: &Scenario,
) -> Result<(), ScenarioFileError> {
    let text = serde_json::to_string_pretty(scenario).expect("scenario serialization is total");
    std::fs::write(path, text)
        .map_err(|source| ScenarioFileError::Io { path: path.display().to_string(), source })
}

#[derive(Debug, Error)]
pub enum ScenarioFileError {
    #[error("cannot access scenario file {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed scenario file {path}: {source}")]
    Parse { path: String, source: serde_json::Error },
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn params_for(scenario: &Scenario) -> ModelParams {
        ModelParams::new(scenario.total_ants(), scenario.task_count(), 1, 1).unwrap()
    }

    #[test]
    fn worstcase_instances() {
        let s = make_upper_worstcase(10).unwrap();
        assert_eq!(s.initial_assignment(), &[8, 1, 1]);
        assert_eq!(s.demand(), &[1, 1, 8]);
        assert_eq!(s.idle_counts(), &[0, 0, 0]);

        let s = make_upper_worstcase(5).unwrap();
        assert_eq!(s.initial_assignment(), &[3, 1, 1]);
        assert_eq!(s.demand(), &[1, 1, 3]);

        assert!(matches!(
            make_upper_worstcase(4),
            Err(ConstructionError::WorstCaseTooSmall(4))
        ));
    }

    #[test]
    fn worstcase_is_satisfiable() {
        for n in [5, 6, 17, 100] {
            let s = make_upper_worstcase(n).unwrap();
            let verdict = validate(&s, &params_for(&s)).unwrap();
            assert!(verdict.satisfiable, "n={n}");
            assert!(verdict.first_violated_prefix.is_none());
        }
    }

    #[test]
    fn chain_instances() {
        let s = make_lowerbound_chain(10, 4).unwrap();
        assert_eq!(s.initial_assignment(), &[2, 1, 1, 6]);
        assert_eq!(s.demand(), &[1, 1, 1, 7]);

        let s = make_lowerbound_chain(5, 3).unwrap();
        assert_eq!(s.initial_assignment(), &[2, 1, 2]);
        assert_eq!(s.demand(), &[1, 1, 3]);

        assert!(make_lowerbound_chain(10, 2).is_err());
        assert!(matches!(
            make_lowerbound_chain(4, 3),
            Err(ConstructionError::ChainTooSmall { n: 4, t: 3 })
        ));
    }

    #[test]
    fn chain_is_satisfiable() {
        for (n, t) in [(5, 3), (10, 4), (40, 5)] {
            let s = make_lowerbound_chain(n, t).unwrap();
            assert!(validate(&s, &params_for(&s)).unwrap().satisfiable, "n={n} t={t}");
        }
    }

    #[test]
    fn idle_distribution_instances() {
        let s = make_idle_distribution_lb(100).unwrap();
        assert_eq!(s.initial_assignment(), &[97, 1]);
        assert_eq!(s.idle_counts(), &[2, 0]);
        assert_eq!(s.total_ants(), 100);

        let s = make_idle_distribution_lb(5).unwrap();
        assert_eq!(s.initial_assignment(), &[2, 1]);
        assert_eq!(s.idle_counts(), &[2, 0]);
        assert_eq!(s.total_ants(), 5);

        assert!(make_idle_distribution_lb(4).is_err());
    }

    #[test]
    fn validate_accepts_worstcase_shape() {
        let s = Scenario::new(vec![8, 1, 1], vec![1, 1, 8], vec![0, 0, 0]).unwrap();
        let verdict = validate(&s, &params_for(&s)).unwrap();
        assert!(verdict.satisfiable);
        assert!((verdict.gamma - 1.0).abs() < 1e-12);
        assert!((verdict.alpha - 1.0).abs() < 1e-12);
    }

    #[test]
    fn validate_rejects_excess_total_demand() {
        // sum(d) = n + 1 > n.
        let s = Scenario::new(vec![4, 4], vec![4, 5], vec![0, 0]).unwrap();
        let verdict = satisfiability(&s);
        assert!(!verdict.satisfiable);
        assert!(verdict.gamma > 1.0);
    }

    #[test]
    fn validate_reports_first_violated_prefix() {
        // One-way switching cannot refill task 2: d1 + d2 = 3 > x1 + x2 = 2.
        let s = Scenario::new(vec![1, 1, 4], vec![1, 2, 1], vec![0, 0, 0]).unwrap();
        let verdict = satisfiability(&s);
        assert!(!verdict.satisfiable);
        assert_eq!(verdict.first_violated_prefix, Some(2));
    }

    #[test]
    fn validate_counts_idle_in_alpha_budget() {
        // Workers alone cannot cover the demand once idle ants are added in.
        let s = Scenario::new(vec![3, 1], vec![3, 2], vec![2, 0]).unwrap();
        let verdict = satisfiability(&s);
        assert!(!verdict.satisfiable);
        assert!((verdict.alpha - 4.0 / 6.0).abs() < 1e-12);
        assert!((verdict.gamma - 5.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn validate_structural_errors() {
        let s = Scenario::new(vec![3, 1], vec![1, 1], vec![0, 0]).unwrap();
        let params = ModelParams::new(4, 3, 1, 1).unwrap();
        assert!(matches!(
            validate(&s, &params),
            Err(ValidationError::LengthMismatch { expected: 3, actual: 2 })
        ));
        let params = ModelParams::new(9, 2, 1, 1).unwrap();
        assert!(matches!(
            validate(&s, &params),
            Err(ValidationError::ColonySizeMismatch { expected: 9, actual: 4 })
        ));
    }

    #[test]
    fn add_idle_example_grows_colony() {
        let base = make_upper_worstcase(80).unwrap();
        let with_idle = add_idle(&base, &[8, 8, 8]).unwrap();
        assert_eq!(with_idle.total_ants(), 104);
        assert_eq!(with_idle.idle_total(), 24);
        assert!(satisfiability(&with_idle).satisfiable);
    }

    #[test]
    fn add_idle_zero_is_identity() {
        let base = make_upper_worstcase(12).unwrap();
        let same = add_idle(&base, &[0, 0, 0]).unwrap();
        assert_eq!(same, base);
    }

    #[test]
    fn add_idle_rejects_alpha_violation() {
        // Demand equals the worker count exactly; attaching idle ants keeps
        // alpha * n = workers, so the result still validates.
        let base = Scenario::new(vec![4, 4], vec![4, 4], vec![0, 0]).unwrap();
        assert!(add_idle(&base, &[1, 1]).is_ok());
        // A caller that swapped workers for idle ants without easing the
        // demand ends up with sum(d) > alpha * n and is rejected.
        let shrunk = Scenario::new(vec![4, 3], vec![4, 4], vec![0, 0]).unwrap();
        let err = add_idle(&shrunk, &[1, 1]).unwrap_err();
        assert!(matches!(err, ValidationError::Unsatisfiable { .. }));
    }

    #[test]
    fn random_satisfiable_instances_validate() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..200 {
            let s = random_satisfiable(&mut rng, 20, 4, 3);
            assert!(satisfiability(&s).satisfiable, "{s:?}");
        }
    }
}
