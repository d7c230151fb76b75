//! Aggregation of Monte Carlo trials and scaling-law fits.
//!
//! Sweeps produce per-colony-size summaries (mean termination round with a
//! normal-approximation confidence interval); `fit_scaling` regresses those
//! means against the candidate growth laws `c*ln n`, `c*n`, `c*n*ln n` and
//! `c*n^2` (least squares through the origin) and picks the best fit by R².
//! `gap_report` compares two sweeps of the same colony sizes, which is how
//! the idle/no-idle runtime gap is exhibited.

use std::fmt;
use std::io::{BufRead, Write};

use serde::Serialize;
use thiserror::Error;

use crate::engine::RunResult;

/// Sample statistics of one sweep cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialSummary {
    /// Colony size the trials were run at.
    pub colony_size: usize,
    pub trials: usize,
    pub mean_rounds: f64,
    /// Sample standard deviation (n-1 denominator).
    pub std_rounds: f64,
    /// `std / sqrt(trials)`.
    pub stderr: f64,
    /// `mean ± 1.96 * stderr`.
    pub ci95: (f64, f64),
}

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("need at least 2 terminated trials, got {0}")]
    TooFewTrials(usize),
    #[error("trial {index} did not terminate; handle timeouts upstream")]
    NonTerminated { index: usize },
    #[error("scaling fit needs at least 4 points with distinct sizes, got {0}")]
    TooFewPoints(usize),
    #[error("gap report inputs disagree on colony sizes")]
    MismatchedSizes,
    #[error("malformed summary CSV at line {line}: {reason}")]
    CsvParse { line: usize, reason: String },
}

/// Summarizes termination rounds of one sweep cell.
///
/// Moments are accumulated in exact integer arithmetic, so the result does
/// not depend on the order of the trials.
pub fn summarize(colony_size: usize, rounds: &[u64]) -> Result<TrialSummary, StatsError> {
    if rounds.len() < 2 {
        return Err(StatsError::TooFewTrials(rounds.len()));
    }
    let trials = rounds.len();
    let sum: u128 = rounds.iter().map(|&r| u128::from(r)).sum();
    let sum_squares: u128 = rounds.iter().map(|&r| u128::from(r) * u128::from(r)).sum();

    let count = trials as f64;
    let mean = sum as f64 / count;
    let variance = ((sum_squares as f64 - (sum as f64) * (sum as f64) / count) / (count - 1.0))
        .max(0.0);
    let std = variance.sqrt();
    let stderr = std / count.sqrt();
    Ok(TrialSummary {
        colony_size,
        trials,
        mean_rounds: mean,
        std_rounds: std,
        stderr,
        ci95: (mean - 1.96 * stderr, mean + 1.96 * stderr),
    })
}

/// Summarizes engine results, rejecting any non-terminated trial.
pub fn summarize_runs(
    colony_size: usize,
    results: &[RunResult],
) -> Result<TrialSummary, StatsError> {
    if let Some(index) = results.iter().position(|r| !r.terminated) {
        return Err(StatsError::NonTerminated { index });
    }
    let rounds: Vec<u64> = results.iter().map(|r| r.rounds).collect();
    summarize(colony_size, &rounds)
}

/// The candidate growth laws, ordered slowest to fastest; R² ties break
/// toward the slower-growing model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ScalingModel {
    LogN,
    Linear,
    NLogN,
    Quadratic,
}

impl ScalingModel {
    pub const ALL: [ScalingModel; 4] =
        [ScalingModel::LogN, ScalingModel::Linear, ScalingModel::NLogN, ScalingModel::Quadratic];

    /// Basis value of the law at colony size `n`.
    pub fn basis(self, n: f64) -> f64 {
        match self {
            ScalingModel::LogN => n.ln(),
            ScalingModel::Linear => n,
            ScalingModel::NLogN => n * n.ln(),
            ScalingModel::Quadratic => n * n,
        }
    }
}

impl fmt::Display for ScalingModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            ScalingModel::LogN => "ln n",
            ScalingModel::Linear => "n",
            ScalingModel::NLogN => "n·ln n",
            ScalingModel::Quadratic => "n²",
        };
        f.write_str(name)
    }
}

/// One candidate's least-squares fit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelFit {
    pub model: ScalingModel,
    /// Coefficient of the through-origin fit `y = c * f(n)`.
    pub coefficient: f64,
    /// Residual sum of squares.
    pub rss: f64,
    /// `1 - rss / tss`, with `tss` taken against the mean of `y`.
    pub r_squared: f64,
}

/// Fits of all candidates plus the winner.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingFit {
    pub fits: Vec<ModelFit>,
    pub best_model: ScalingModel,
}

impl ScalingFit {
    pub fn fit_for(&self, model: ScalingModel) -> &ModelFit {
        self.fits.iter().find(|f| f.model == model).expect("all candidates are fitted")
    }

    pub fn best(&self) -> &ModelFit {
        self.fit_for(self.best_model)
    }

    /// The exported JSON document: per-model `{c, r2}` plus `best_model`.
    pub fn to_json(&self) -> serde_json::Value {
        let mut models = serde_json::Map::new();
        for fit in &self.fits {
            models.insert(
                fit.model.to_string(),
                serde_json::json!({ "c": fit.coefficient, "r2": fit.r_squared }),
            );
        }
        serde_json::json!({ "models": models, "best_model": self.best_model.to_string() })
    }
}

/// Least squares through the origin against each candidate law. Requires
/// at least 4 points with distinct sizes.
pub fn fit_scaling(points: &[(f64, f64)]) -> Result<ScalingFit, StatsError> {
    let mut sizes: Vec<u64> = points.iter().map(|&(n, _)| n.to_bits()).collect();
    sizes.sort_unstable();
    sizes.dedup();
    if sizes.len() < 4 {
        return Err(StatsError::TooFewPoints(sizes.len()));
    }

    let mean_y: f64 = points.iter().map(|&(_, y)| y).sum::<f64>() / points.len() as f64;
    let tss: f64 = points.iter().map(|&(_, y)| (y - mean_y).powi(2)).sum();

    let mut fits = Vec::with_capacity(ScalingModel::ALL.len());
    for model in ScalingModel::ALL {
        let mut cross = 0.0;
        let mut norm = 0.0;
        for &(n, y) in points {
            let f = model.basis(n);
            cross += f * y;
            norm += f * f;
        }
        let coefficient = cross / norm;
        let rss: f64 =
            points.iter().map(|&(n, y)| (y - coefficient * model.basis(n)).powi(2)).sum();
        let r_squared = if tss > 0.0 {
            1.0 - rss / tss
        } else if rss <= f64::EPSILON {
            1.0
        } else {
            f64::NEG_INFINITY
        };
        fits.push(ModelFit { model, coefficient, rss, r_squared });
    }

    // Strictly-greater comparison keeps the earliest (slowest-growing)
    // candidate on ties.
    let mut best_model = fits[0].model;
    let mut best_r2 = fits[0].r_squared;
    for fit in &fits[1..] {
        if fit.r_squared > best_r2 {
            best_r2 = fit.r_squared;
            best_model = fit.model;
        }
    }
    Ok(ScalingFit { fits, best_model })
}

/// One line of a gap report: how many times slower the first sweep is at
/// this colony size.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapRow {
    pub colony_size: usize,
    /// `mean_baseline / mean_comparison`; infinite when the comparison
    /// mean is zero.
    pub ratio: f64,
    /// Ratio CI from first-order error propagation.
    pub ci95: (f64, f64),
}

/// Per-size ratio of mean runtimes between two sweeps over the same colony
/// sizes (baseline over comparison).
pub fn gap_report(
    baseline: &[TrialSummary],
    comparison: &[TrialSummary],
) -> Result<Vec<GapRow>, StatsError> {
    if baseline.len() != comparison.len()
        || baseline
            .iter()
            .zip(comparison)
            .any(|(a, b)| a.colony_size != b.colony_size)
    {
        return Err(StatsError::MismatchedSizes);
    }
    Ok(baseline
        .iter()
        .zip(comparison)
        .map(|(a, b)| {
            if b.mean_rounds == 0.0 {
                return GapRow {
                    colony_size: a.colony_size,
                    ratio: f64::INFINITY,
                    ci95: (f64::INFINITY, f64::INFINITY),
                };
            }
            let ratio = a.mean_rounds / b.mean_rounds;
            let relative = if a.mean_rounds == 0.0 {
                b.stderr / b.mean_rounds
            } else {
                ((a.stderr / a.mean_rounds).powi(2) + (b.stderr / b.mean_rounds).powi(2)).sqrt()
            };
            let margin = 1.96 * ratio * relative;
            GapRow { colony_size: a.colony_size, ratio, ci95: (ratio - margin, ratio + margin) }
        })
        .collect())
}

/// A labeled sweep cell as it appears in the exported CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub scenario: String,
    pub summary: TrialSummary,
}

impl SweepRow {
    /// A cell whose trials timed out: statistics are NaN so downstream
    /// fits skip it.
    pub fn timed_out(scenario: String, colony_size: usize, trials: usize) -> Self {
        SweepRow {
            scenario,
            summary: TrialSummary {
                colony_size,
                trials,
                mean_rounds: f64::NAN,
                std_rounds: f64::NAN,
                stderr: f64::NAN,
                ci95: (f64::NAN, f64::NAN),
            },
        }
    }

    pub fn is_timed_out(&self) -> bool {
        self.summary.mean_rounds.is_nan()
    }
}

pub const SUMMARY_CSV_HEADER: &str = "scenario,n,trials,mean,std,stderr,ci_low,ci_high";

/// Writes sweep rows as CSV. Floats use shortest round-trip formatting, so
/// reading the file back reproduces the summaries exactly.
pub fn write_summary_csv<W: Write>(out: &mut W, rows: &[SweepRow]) -> std::io::Result<()> {
    writeln!(out, "{SUMMARY_CSV_HEADER}")?;
    for row in rows {
        let s = &row.summary;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            row.scenario,
            s.colony_size,
            s.trials,
            s.mean_rounds,
            s.std_rounds,
            s.stderr,
            s.ci95.0,
            s.ci95.1
        )?;
    }
    Ok(())
}

/// Parses a summary CSV produced by [`write_summary_csv`].
pub fn read_summary_csv<R: BufRead>(input: R) -> Result<Vec<SweepRow>, StatsError> {
    let mut rows = Vec::new();
    for (index, line) in input.lines().enumerate() {
        let line = line.map_err(|e| StatsError::CsvParse {
            line: index + 1,
            reason: e.to_string(),
        })?;
        if index == 0 {
            if line.trim() != SUMMARY_CSV_HEADER {
                return Err(StatsError::CsvParse {
                    line: 1,
                    reason: format!("unexpected header {line:?}"),
                });
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 8 {
            return Err(StatsError::CsvParse {
                line: index + 1,
                reason: format!("expected 8 fields, got {}", fields.len()),
            });
        }
        let parse_f64 = |text: &str, what: &str| {
            text.parse::<f64>().map_err(|_| StatsError::CsvParse {
                line: index + 1,
                reason: format!("bad {what}: {text:?}"),
            })
        };
        let parse_usize = |text: &str, what: &str| {
            text.parse::<usize>().map_err(|_| StatsError::CsvParse {
                line: index + 1,
                reason: format!("bad {what}: {text:?}"),
            })
        };
        rows.push(SweepRow {
            scenario: fields[0].to_string(),
            summary: TrialSummary {
                colony_size: parse_usize(fields[1], "n")?,
                trials: parse_usize(fields[2], "trials")?,
                mean_rounds: parse_f64(fields[3], "mean")?,
                std_rounds: parse_f64(fields[4], "std")?,
                stderr: parse_f64(fields[5], "stderr")?,
                ci95: (parse_f64(fields[6], "ci_low")?, parse_f64(fields[7], "ci_high")?),
            },
        });
    }
    Ok(rows)
}
