use std::fs::File;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::seeds::trial_seed;
use super::stats::CellSummary;
use super::trial::{run_trial, TrialOutcome};
use crate::error::{Result, SearchError};

/// Column order of the sweep CSV.
pub const CSV_HEADER: [&str; 15] = [
    "policy",
    "c",
    "neg_log_c",
    "trials",
    "avg_delay",
    "delay_ci_lo",
    "delay_ci_hi",
    "error_rate",
    "err_ci_lo",
    "err_ci_hi",
    "bayes_risk",
    "avg_samples",
    "avg_idle",
    "censored_frac",
    "base_seed",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub name: String,
    pub cells: usize,
    pub probes: usize,
    /// One summary per `(policy, c)`, policies in config order, `c`
    /// descending within each policy.
    pub rows: Vec<CellSummary>,
}

impl SweepResult {
    pub fn row(&self, policy: &str, neg_log_c: f64) -> Option<&CellSummary> {
        self.rows
            .iter()
            .find(|r| r.policy == policy && r.neg_log_c == neg_log_c)
    }

    pub fn policy_rows(&self, policy: &str) -> Vec<&CellSummary> {
        self.rows.iter().filter(|r| r.policy == policy).collect()
    }
}

/// Every trial of one `(policy, c)` cell, in trial order.
pub fn run_cell(
    config: &ExperimentConfig,
    policy_index: usize,
    c_index: usize,
) -> Result<Vec<TrialOutcome>> {
    let spec = &config.policies[policy_index];
    let c = config.costs()[c_index];
    (0..config.trials)
        .into_par_iter()
        .map(|k| run_trial(config, spec, c, trial_seed(config.base_seed, spec.label(), c_index, k)))
        .collect()
}

/// Run the full grid on a pool of `workers` threads (0 = one per core).
/// Outputs do not depend on `workers`: every trial owns its seed and results
/// are collected in a fixed order.
pub fn run_sweep(config: &ExperimentConfig, workers: usize) -> Result<SweepResult> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| SearchError::ContractViolation(format!("thread pool: {e}")))?;
    let costs = config.costs();
    let mut rows = Vec::with_capacity(config.policies.len() * costs.len());
    for (i, spec) in config.policies.iter().enumerate() {
        for (j, &c) in costs.iter().enumerate() {
            let outcomes = pool.install(|| run_cell(config, i, j))?;
            let row = CellSummary::from_outcomes(
                spec.label(),
                c,
                config.neg_log_c[j],
                spec.gamma_at(c),
                config.base_seed,
                &outcomes,
            )?;
            log::info!(
                "{} -ln c = {}: delay {:.3}, error {:.5}, risk {:.5}",
                row.policy,
                row.neg_log_c,
                row.avg_delay,
                row.error_rate,
                row.bayes_risk
            );
            if row.censored_frac > 0.0 {
                log::warn!(
                    "{} -ln c = {}: {:.2}% of trials hit the horizon",
                    row.policy,
                    row.neg_log_c,
                    100.0 * row.censored_frac
                );
            }
            rows.push(row);
        }
    }
    Ok(SweepResult {
        name: config.name.clone(),
        cells: config.cells,
        probes: config.probes,
        rows,
    })
}

fn csv_record(row: &CellSummary) -> [String; 15] {
    [
        row.policy.clone(),
        format!("{:e}", row.c),
        row.neg_log_c.to_string(),
        row.trials.to_string(),
        row.avg_delay.to_string(),
        row.delay_ci.lo.to_string(),
        row.delay_ci.hi.to_string(),
        row.error_rate.to_string(),
        row.err_ci.lo.to_string(),
        row.err_ci.hi.to_string(),
        row.bayes_risk.to_string(),
        row.avg_samples.to_string(),
        row.avg_idle.to_string(),
        row.censored_frac.to_string(),
        row.base_seed.to_string(),
    ]
}

pub fn write_csv<W: std::io::Write>(result: &SweepResult, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for row in &result.rows {
        w.write_record(csv_record(row))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv_file(result: &SweepResult, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|source| SearchError::Io {
        context: format!("creating {}", path.display()),
        source,
    })?;
    write_csv(result, file).map_err(|source| SearchError::Csv {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_json_file(result: &SweepResult, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(result).expect("summaries serialize");
    std::fs::write(path, text + "\n").map_err(|source| SearchError::Io {
        context: format!("writing {}", path.display()),
        source,
    })
}

/// A CSV row read back from disk.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub policy: String,
    pub c: f64,
    pub neg_log_c: f64,
    pub trials: usize,
    pub avg_delay: f64,
    pub delay_ci_lo: f64,
    pub delay_ci_hi: f64,
    pub error_rate: f64,
    pub err_ci_lo: f64,
    pub err_ci_hi: f64,
    pub bayes_risk: f64,
    pub avg_samples: f64,
    pub avg_idle: f64,
    pub censored_frac: f64,
    pub base_seed: u64,
}

pub fn read_csv_file(path: &Path) -> Result<Vec<CsvRow>> {
    let to_err = |source| SearchError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut reader = csv::Reader::from_path(path).map_err(to_err)?;
    let headers = reader.headers().map_err(to_err)?.clone();
    if let Some(missing) = CSV_HEADER.iter().find(|h| !headers.iter().any(|x| x == **h)) {
        return Err(SearchError::invalid(
            path.display().to_string(),
            format!("missing column {missing:?}"),
        ));
    }
    reader.deserialize().collect::<csv::Result<Vec<CsvRow>>>().map_err(to_err)
}
