//! The `sweep` command: Monte Carlo trials over a grid of colony sizes,
//! exported as a summary CSV plus a scaling-law fit JSON.

use std::fs::File;
use std::io::Write;
use std::path::PathBuf;

use antta_core::stats::write_summary_csv;
use antta_core::{
    default_max_rounds, derive_trial_seed, fit_scaling, run_idle_distribution_trials, run_trials,
    summarize_runs, RunOptions, RunResult, SweepRow,
};
use serde::Deserialize;

use crate::build::{resolve, IdleFraction, ResolvedScenario, RunMode, ScenarioKind};
use crate::{EXIT_OK, EXIT_TIMEOUT, EXIT_USAGE};

/// Sweep description, from flags or a JSON config file.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub scenario_kind: String,
    /// Scenario file when `scenario_kind` is "file".
    #[serde(default)]
    pub scenario_path: Option<PathBuf>,
    #[serde(default)]
    pub n_values: Vec<usize>,
    #[serde(default)]
    pub t: Option<usize>,
    #[serde(rename = "R", default = "default_rate")]
    pub rate: usize,
    #[serde(default = "default_rate")]
    pub th: usize,
    /// Rational `[a, b]`, or `0` for no idle ants.
    #[serde(default, deserialize_with = "deserialize_idle_fraction")]
    pub idle_fraction_per_task: Option<(u64, u64)>,
    pub trials: usize,
    pub master_seed: u64,
    #[serde(default)]
    pub max_rounds: Option<u64>,
    #[serde(default)]
    pub output_path: Option<PathBuf>,
}

fn default_rate() -> usize {
    1
}

fn deserialize_idle_fraction<'de, D>(deserializer: D) -> Result<Option<(u64, u64)>, D::Error>
where
    D: serde::Deserializer<'de>,
{
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Zero(u64),
        Pair(u64, u64),
    }
    match Option::<Raw>::deserialize(deserializer)? {
        None | Some(Raw::Zero(0)) => Ok(None),
        Some(Raw::Zero(_)) => Err(serde::de::Error::custom(
            "idle_fraction_per_task must be 0 or a two-element ratio [a, b]",
        )),
        Some(Raw::Pair(_, 0)) => {
            Err(serde::de::Error::custom("idle fraction denominator must be non-zero"))
        }
        Some(Raw::Pair(0, _)) => Ok(None),
        Some(Raw::Pair(a, b)) => Ok(Some((a, b))),
    }
}

pub fn read_config_file(path: &PathBuf) -> Result<SweepConfig, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("malformed config {}: {e}", path.display()))
}

/// Runs the sweep. Writes `<output_path>.csv` and `<output_path>.json`
/// when an output path is set, otherwise prints both documents to stdout.
pub fn cmd_sweep(config: SweepConfig) -> u8 {
    match execute(config) {
        Ok(code) => code,
        Err(message) => {
            eprintln!("error: {message}");
            EXIT_USAGE
        }
    }
}

fn execute(config: SweepConfig) -> Result<u8, String> {
    if config.trials == 0 {
        return Err("trials must be at least 1".into());
    }
    let kind = match config.scenario_kind.as_str() {
        "file" => {
            let path =
                config.scenario_path.clone().ok_or("scenario_kind \"file\" needs scenario_path")?;
            ScenarioKind::File(path)
        }
        other => ScenarioKind::parse(other)?,
    };
    let idle = config
        .idle_fraction_per_task
        .map(|(numerator, denominator)| IdleFraction { numerator, denominator });

    // A file scenario is a single cell at its own colony size; constructed
    // kinds sweep the strictly increasing grid.
    let cells: Vec<ResolvedScenario> = if let ScenarioKind::File(_) = kind {
        if !config.n_values.is_empty() {
            return Err("n_values do not apply to a file scenario".into());
        }
        vec![resolve(&kind, None, config.t, config.rate, config.th, idle)?]
    } else {
        if config.n_values.is_empty() {
            return Err("n_values must not be empty".into());
        }
        if config.n_values.windows(2).any(|pair| pair[1] <= pair[0]) {
            return Err("n_values must be strictly increasing".into());
        }
        config
            .n_values
            .iter()
            .map(|&n| resolve(&kind, Some(n), config.t, config.rate, config.th, idle))
            .collect::<Result<_, _>>()?
    };

    let mut rows: Vec<SweepRow> = Vec::with_capacity(cells.len());
    let mut any_timeout = false;
    for (cell_index, cell) in cells.iter().enumerate() {
        let n = cell.params.colony_size;
        let options = RunOptions::new(config.max_rounds.unwrap_or_else(|| default_max_rounds(n)));
        let cell_seed = derive_trial_seed(config.master_seed, cell_index as u64);
        let results: Vec<RunResult> = match &cell.mode {
            RunMode::Allocation => {
                run_trials(&cell.scenario, &cell.params, cell_seed, config.trials, &options)
            }
            RunMode::Distribution(goal) => run_idle_distribution_trials(
                &cell.scenario,
                goal,
                &cell.params,
                cell_seed,
                config.trials,
                &options,
            ),
        }
        .map_err(|e| e.to_string())?;

        if results.iter().any(|r| !r.terminated) {
            any_timeout = true;
            eprintln!("warning: timeouts at n={n}; cell flagged and excluded from the fit");
            rows.push(SweepRow::timed_out(cell.label.clone(), n, config.trials));
        } else {
            let summary = summarize_runs(n, &results).map_err(|e| e.to_string())?;
            rows.push(SweepRow { scenario: cell.label.clone(), summary });
        }
    }

    // Fit over the clean cells when the grid is rich enough.
    let points: Vec<(f64, f64)> = rows
        .iter()
        .filter(|row| !row.is_timed_out())
        .map(|row| (row.summary.colony_size as f64, row.summary.mean_rounds))
        .collect();
    let fit = match fit_scaling(&points) {
        Ok(fit) => Some(fit),
        Err(_) => {
            eprintln!("note: fewer than 4 usable sizes; skipping the scaling fit");
            None
        }
    };

    match &config.output_path {
        Some(prefix) => {
            let csv_path = prefix.with_extension("csv");
            let mut csv = File::create(&csv_path)
                .map_err(|e| format!("cannot create {}: {e}", csv_path.display()))?;
            write_summary_csv(&mut csv, &rows).map_err(|e| e.to_string())?;
            println!("wrote {}", csv_path.display());
            if let Some(fit) = &fit {
                let json_path = prefix.with_extension("json");
                let mut json = File::create(&json_path)
                    .map_err(|e| format!("cannot create {}: {e}", json_path.display()))?;
                writeln!(json, "{}", serde_json::to_string_pretty(&fit.to_json()).unwrap())
                    .map_err(|e| e.to_string())?;
                println!("wrote {}", json_path.display());
            }
        }
        None => {
            let mut out = Vec::new();
            write_summary_csv(&mut out, &rows).map_err(|e| e.to_string())?;
            print!("{}", String::from_utf8(out).expect("CSV is UTF-8"));
            if let Some(fit) = &fit {
                println!("{}", serde_json::to_string_pretty(&fit.to_json()).unwrap());
            }
        }
    }
    if let Some(fit) = &fit {
        println!("best_model: {}", fit.best_model);
    }

    Ok(if any_timeout { EXIT_TIMEOUT } else { EXIT_OK })
}
