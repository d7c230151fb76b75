//! Simulator and statistical verification harness for threshold-based ant
//! task allocation.
//!
//! A colony of `n` ants is spread over `t` ordered tasks and must grow into
//! an externally imposed per-task demand. Ants switch tasks only through
//! random pairwise encounters, only forward, and only when not needed where
//! they are. Idle ants never work but recruit for their task, which is what
//! makes the difference between near-linear and logarithmic convergence.
//!
//! The crate provides:
//!
//! - [`model`]: the domain types and per-round primitives (role assignment,
//!   partner sampling, the switch rule);
//! - [`scenario`]: satisfiability validation and the named adversarial
//!   instances;
//! - [`engine`]: the synchronous round loop for task allocation and for the
//!   idle-distribution mode, with seeded, parallelizable trials;
//! - [`oracle`]: exact recruitment probabilities and expected hitting times
//!   from the absorbing count chain, for validating the simulator;
//! - [`stats`]: trial summaries, scaling-law fits and gap reports, with CSV
//!   and JSON interchange.

pub mod engine;
pub mod model;
pub mod oracle;
pub mod scenario;
pub mod stats;

pub use engine::{
    default_max_rounds, derive_trial_seed, run, run_idle_distribution,
    run_idle_distribution_trials, run_trials, step, EngineError, IdleDistributionGoal,
    RunOptions, RunResult, SimRng, Snapshot,
};
pub use model::{
    assign_roles, decide, is_satisfied, sample_partners, AntState, ColonyState, ModelParams,
    Role, Scenario, ScenarioError, WorkerSelection,
};
pub use oracle::{expected_hitting_time, recruit_probability, OracleError};
pub use scenario::{
    add_idle, make_idle_distribution_lb, make_lowerbound_chain, make_upper_worstcase,
    satisfiability, validate, SatisfiabilityVerdict, ValidationError,
};
pub use stats::{
    fit_scaling, gap_report, summarize, summarize_runs, GapRow, ModelFit, ScalingFit,
    ScalingModel, StatsError, SweepRow, TrialSummary,
};
