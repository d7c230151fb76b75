//! Exact analytical ground truth for small instances.
//!
//! Ants are exchangeable under uniform partner sampling, so the per-task
//! counts form a Markov chain: in each round, every surplus ant of task `i`
//! independently switches with the same probability (a binomial tail in the
//! recruiter count of task `i+1`), which makes the number of switchers per
//! task an independent binomial draw. The chain is absorbed at the first
//! assignment meeting the demand, and the expected absorption time solves a
//! dense linear system over the reachable states.

use std::collections::HashMap;

use thiserror::Error;

use crate::model::{is_satisfied, ModelParams, Scenario};
use crate::scenario::{validate, SatisfiabilityVerdict, ValidationError};

/// Reachable-state cap for the hitting-time solver; the dense solve is
/// cubic, so the cap keeps it to interactive sizes.
pub const MAX_CHAIN_STATES: usize = 2048;

/// A chain state: per-task non-idle counts. Ants are exchangeable, so the
/// counts fully determine the dynamics; idle counts are fixed by the
/// scenario and are not part of the state.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ChainState {
    assignment: Vec<usize>,
}

impl ChainState {
    fn new(assignment: Vec<usize>) -> Self {
        Self { assignment }
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }
}

#[derive(Debug, Error)]
pub enum OracleError {
    #[error(transparent)]
    Invalid(#[from] ValidationError),
    #[error("scenario is unsatisfiable; the chain would never absorb: {verdict:?}")]
    Unsatisfiable { verdict: SatisfiabilityVerdict },
    #[error("state space exceeds {max} states; the exact solver only handles small instances")]
    StateSpaceTooLarge { max: usize },
    #[error("internal: reachable state {0:?} cannot progress toward absorption")]
    NonAbsorbing(ChainState),
}

/// Exact probability that one not-needed ant is recruited in a round when
/// the next task holds `recruiters_next` recruiting (working or idle) ants:
/// the tail `P[Binomial(R, w/(n-1)) >= th]`.
///
/// For `th == R` this reduces to the single term `(w/(n-1))^R`.
pub fn recruit_probability(
    recruiters_next: usize,
    colony_size: usize,
    interaction_rate: usize,
    threshold: usize,
) -> f64 {
    assert!(colony_size >= 2, "colony size must be at least 2");
    assert!(
        recruiters_next < colony_size,
        "recruiters ({recruiters_next}) must be among the other {} ants",
        colony_size - 1
    );
    assert!(
        threshold >= 1 && threshold <= interaction_rate,
        "threshold must satisfy 1 <= th <= R"
    );
    if recruiters_next == 0 {
        return 0.0;
    }
    let p = recruiters_next as f64 / (colony_size - 1) as f64;
    let q = 1.0 - p;
    let mut tail = 0.0;
    let mut coefficient = 1.0f64;
    // C(R, k) built incrementally; exact in f64 for any realistic R.
    for k in 0..=interaction_rate {
        if k >= threshold {
            tail += coefficient * powu(p, k) * powu(q, interaction_rate - k);
        }
        coefficient = coefficient * (interaction_rate - k) as f64 / (k + 1) as f64;
    }
    tail.min(1.0)
}

/// Left-associated repeated multiplication. Unlike `powi`, the operation
/// order is pinned, so results are bit-identical across call sites.
pub fn powu(base: f64, exponent: usize) -> f64 {
    let mut acc = 1.0;
    for _ in 0..exponent {
        acc *= base;
    }
    acc
}

/// Probability mass function of `Binomial(trials, p)` as a dense vector.
/// Log-space evaluation keeps large `trials` finite.
fn binomial_pmf(trials: usize, p: f64) -> Vec<f64> {
    let mut pmf = vec![0.0; trials + 1];
    if trials == 0 || p <= 0.0 {
        pmf[0] = 1.0;
        return pmf;
    }
    if p >= 1.0 {
        pmf[trials] = 1.0;
        return pmf;
    }
    let ln_p = p.ln();
    let ln_q = (1.0 - p).ln();
    let mut ln_factorial = vec![0.0; trials + 1];
    for i in 1..=trials {
        ln_factorial[i] = ln_factorial[i - 1] + (i as f64).ln();
    }
    for (s, slot) in pmf.iter_mut().enumerate() {
        let ln_term = ln_factorial[trials] - ln_factorial[s] - ln_factorial[trials - s]
            + s as f64 * ln_p
            + (trials - s) as f64 * ln_q;
        *slot = ln_term.exp();
    }
    pmf
}

/// Expected number of rounds until the assignment first meets the demand,
/// from the scenario's initial state, computed exactly from the absorbing
/// count chain.
pub fn expected_hitting_time(
    scenario: &Scenario,
    params: &ModelParams,
) -> Result<f64, OracleError> {
    let verdict = validate(scenario, params)?;
    if !verdict.satisfiable {
        return Err(OracleError::Unsatisfiable { verdict });
    }

    let demand = scenario.demand();
    let idle = scenario.idle_counts();
    let n = params.colony_size;

    // Breadth-first enumeration of reachable states. Absorbing states get
    // no outgoing rows.
    let initial = ChainState::new(scenario.initial_assignment().to_vec());
    let mut index: HashMap<ChainState, usize> = HashMap::new();
    let mut states: Vec<ChainState> = Vec::new();
    let mut rows: Vec<Option<Vec<(usize, f64)>>> = Vec::new();
    index.insert(initial.clone(), 0);
    states.push(initial);

    let mut cursor = 0;
    while cursor < states.len() {
        let state = states[cursor].clone();
        if is_satisfied(state.assignment(), demand) {
            rows.push(None);
            cursor += 1;
            continue;
        }

        let mut sorted = transition_row(state.assignment(), demand, idle, n, params);
        sorted.sort_by(|a, b| a.0.cmp(&b.0));
        let mut row = Vec::with_capacity(sorted.len());
        for (next, probability) in sorted {
            let next = ChainState::new(next);
            let target = match index.get(&next) {
                Some(&idx) => idx,
                None => {
                    let idx = states.len();
                    if idx >= MAX_CHAIN_STATES {
                        return Err(OracleError::StateSpaceTooLarge { max: MAX_CHAIN_STATES });
                    }
                    index.insert(next.clone(), idx);
                    states.push(next);
                    idx
                }
            };
            row.push((target, probability));
        }
        rows.push(Some(row));
        cursor += 1;
    }

    // Map transient states to dense indices and solve (I - Q) tau = 1.
    let transient: Vec<usize> =
        (0..states.len()).filter(|&s| rows[s].is_some()).collect();
    if transient.is_empty() {
        return Ok(0.0);
    }
    let dense_of: HashMap<usize, usize> =
        transient.iter().enumerate().map(|(dense, &s)| (s, dense)).collect();
    let dim = transient.len();
    let mut matrix = vec![0.0f64; dim * dim];
    let mut rhs = vec![1.0f64; dim];
    for (dense, &s) in transient.iter().enumerate() {
        matrix[dense * dim + dense] = 1.0;
        let row = rows[s].as_ref().expect("transient states have rows");
        let mut exit_mass = 0.0;
        for &(target, probability) in row {
            if target != s {
                exit_mass += probability;
            }
            if let Some(&target_dense) = dense_of.get(&target) {
                matrix[dense * dim + target_dense] -= probability;
            }
        }
        if exit_mass <= 0.0 {
            return Err(OracleError::NonAbsorbing(states[s].clone()));
        }
    }

    let tau = solve_dense(&mut matrix, &mut rhs, dim)
        .ok_or_else(|| OracleError::NonAbsorbing(states[transient[0]].clone()))?;
    Ok(tau[dense_of[&0]])
}

/// Gaussian elimination with partial pivoting on a row-major `dim x dim`
/// system. Returns `None` when the matrix is numerically singular.
fn solve_dense(matrix: &mut [f64], rhs: &mut [f64], dim: usize) -> Option<Vec<f64>> {
    for col in 0..dim {
        let pivot_row = (col..dim)
            .max_by(|&a, &b| {
                matrix[a * dim + col]
                    .abs()
                    .total_cmp(&matrix[b * dim + col].abs())
            })
            .expect("non-empty pivot range");
        if matrix[pivot_row * dim + col].abs() < 1e-300 {
            return None;
        }
        if pivot_row != col {
            for k in 0..dim {
                matrix.swap(col * dim + k, pivot_row * dim + k);
            }
            rhs.swap(col, pivot_row);
        }
        let pivot = matrix[col * dim + col];
        for row in col + 1..dim {
            let factor = matrix[row * dim + col] / pivot;
            if factor == 0.0 {
                continue;
            }
            matrix[row * dim + col] = 0.0;
            for k in col + 1..dim {
                matrix[row * dim + k] -= factor * matrix[col * dim + k];
            }
            rhs[row] -= factor * rhs[col];
        }
    }
    let mut solution = vec![0.0; dim];
    for row in (0..dim).rev() {
        let mut acc = rhs[row];
        for k in row + 1..dim {
            acc -= matrix[row * dim + k] * solution[k];
        }
        solution[row] = acc / matrix[row * dim + row];
    }
    Some(solution)
}

/// One transition row of the count chain: `(next_assignment, probability)`
/// pairs for a state that does not yet meet the demand. Per boundary
/// `i -> i+1`, the surplus `max(x_i - d_i, 0)` ants each switch
/// independently with the recruiting probability of task `i+1`, so the
/// switcher counts are independent binomials whose product distribution is
/// enumerated here.
fn transition_row(
    state: &[usize],
    demand: &[usize],
    idle: &[usize],
    colony_size: usize,
    params: &ModelParams,
) -> Vec<(Vec<usize>, f64)> {
    let t = state.len();
    let mut pmfs: Vec<Vec<f64>> = Vec::with_capacity(t - 1);
    for i in 0..t - 1 {
        let surplus = state[i].saturating_sub(demand[i]);
        let recruiters = state[i + 1].min(demand[i + 1]) + idle[i + 1];
        let p = recruit_probability(
            recruiters,
            colony_size,
            params.interaction_rate,
            params.threshold,
        );
        pmfs.push(binomial_pmf(surplus, p));
    }

    let mut result: HashMap<Vec<usize>, f64> = HashMap::new();
    let mut switchers = vec![0usize; t - 1];
    'product: loop {
        let probability: f64 =
            switchers.iter().enumerate().map(|(i, &s)| pmfs[i][s]).product();
        if probability > 0.0 {
            let mut next = state.to_vec();
            for (i, &s) in switchers.iter().enumerate() {
                next[i] -= s;
                next[i + 1] += s;
            }
            *result.entry(next).or_insert(0.0) += probability;
        }
        // Odometer increment over the per-boundary switcher counts.
        for i in 0..t - 1 {
            switchers[i] += 1;
            if switchers[i] < pmfs[i].len() {
                continue 'product;
            }
            switchers[i] = 0;
        }
        break;
    }
    result.into_iter().collect()
}
