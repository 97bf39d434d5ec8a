use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::trial::TrialOutcome;
use crate::error::{Result, SearchError};

/// Two-sided 97.5% standard normal quantile.
pub const Z_95: f64 = 1.959_963_984_540_054;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn overlaps(&self, other: &Interval) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

/// Sample mean and its 95% Student-t interval. A single value gives a
/// degenerate interval.
pub fn mean_ci(values: &[f64]) -> Result<(f64, Interval)> {
    if values.is_empty() {
        return Err(SearchError::Empty("mean of no values"));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() == 1 {
        return Ok((mean, Interval { lo: mean, hi: mean }));
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let t = StudentsT::new(0.0, 1.0, n - 1.0)
        .expect("positive degrees of freedom")
        .inverse_cdf(0.975);
    let half = t * (var / n).sqrt();
    Ok((mean, Interval { lo: mean - half, hi: mean + half }))
}

/// Wilson score interval for `successes` out of `n` at 95%.
pub fn wilson_ci(successes: usize, n: usize) -> Result<Interval> {
    if n == 0 {
        return Err(SearchError::Empty("proportion of no trials"));
    }
    let n = n as f64;
    let p = successes as f64 / n;
    let z2 = Z_95 * Z_95;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = Z_95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    // the bounds at p = 0 and p = 1 are exact; pin them against rounding
    let lo = if successes == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if p == 1.0 { 1.0 } else { (centre + half).min(1.0) };
    Ok(Interval { lo, hi })
}

/// `P̂_e + c·mean(τ)`.
pub fn aggregate_bayes_risk(outcomes: &[TrialOutcome], c: f64) -> Result<f64> {
    if outcomes.is_empty() {
        return Err(SearchError::Empty("no outcomes to aggregate"));
    }
    let n = outcomes.len() as f64;
    let errors = outcomes.iter().filter(|o| !o.correct).count() as f64;
    let delay = outcomes.iter().map(|o| o.tau as f64).sum::<f64>() / n;
    Ok(errors / n + c * delay)
}

/// `P̂_e + c·mean(samples) + γ·mean(idle steps)`: the risk when only probing
/// steps pay `c` and idle steps pay `γ`.
pub fn aggregate_sampling_risk(outcomes: &[TrialOutcome], c: f64, gamma: f64) -> Result<f64> {
    if outcomes.is_empty() {
        return Err(SearchError::Empty("no outcomes to aggregate"));
    }
    let n = outcomes.len() as f64;
    let errors = outcomes.iter().filter(|o| !o.correct).count() as f64;
    let samples = outcomes.iter().map(|o| o.samples_taken as f64).sum::<f64>() / n;
    let idle = outcomes.iter().map(|o| o.idle_steps as f64).sum::<f64>() / n;
    Ok(errors / n + c * samples + gamma * idle)
}

/// Aggregate statistics of one `(policy, c)` cell of a sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub policy: String,
    pub c: f64,
    pub neg_log_c: f64,
    pub trials: usize,
    pub avg_delay: f64,
    pub delay_ci: Interval,
    pub error_rate: f64,
    pub err_ci: Interval,
    pub bayes_risk: f64,
    pub risk_ci: Interval,
    pub avg_samples: f64,
    pub samples_ci: Interval,
    pub avg_idle: f64,
    pub gamma: f64,
    pub sampling_risk: f64,
    pub sampling_risk_ci: Interval,
    pub censored_frac: f64,
    pub clamp_events: usize,
    pub base_seed: u64,
}

impl CellSummary {
    pub fn from_outcomes(
        policy: &str,
        c: f64,
        neg_log_c: f64,
        gamma: f64,
        base_seed: u64,
        outcomes: &[TrialOutcome],
    ) -> Result<Self> {
        if outcomes.is_empty() {
            return Err(SearchError::Empty("no outcomes to summarize"));
        }
        let n = outcomes.len();
        let delays: Vec<f64> = outcomes.iter().map(|o| o.tau as f64).collect();
        let samples: Vec<f64> = outcomes.iter().map(|o| o.samples_taken as f64).collect();
        let errors = outcomes.iter().filter(|o| !o.correct).count();
        let wrong = |o: &TrialOutcome| if o.correct { 0.0 } else { 1.0 };
        let risks: Vec<f64> = outcomes.iter().map(|o| wrong(o) + c * o.tau as f64).collect();
        let sampling: Vec<f64> = outcomes
            .iter()
            .map(|o| wrong(o) + c * o.samples_taken as f64 + gamma * o.idle_steps as f64)
            .collect();

        let (avg_delay, delay_ci) = mean_ci(&delays)?;
        let (avg_samples, samples_ci) = mean_ci(&samples)?;
        let (_, risk_ci) = mean_ci(&risks)?;
        let (_, sampling_risk_ci) = mean_ci(&sampling)?;
        let avg_idle = outcomes.iter().map(|o| o.idle_steps as f64).sum::<f64>() / n as f64;
        let error_rate = errors as f64 / n as f64;
        Ok(Self {
            policy: policy.to_string(),
            c,
            neg_log_c,
            trials: n,
            avg_delay,
            delay_ci,
            error_rate,
            err_ci: wilson_ci(errors, n)?,
            bayes_risk: error_rate + c * avg_delay,
            risk_ci,
            avg_samples,
            samples_ci,
            avg_idle,
            gamma,
            sampling_risk: error_rate + c * avg_samples + gamma * avg_idle,
            sampling_risk_ci,
            censored_frac: outcomes.iter().filter(|o| o.censored).count() as f64 / n as f64,
            clamp_events: outcomes.iter().map(|o| o.clamp_events).sum(),
            base_seed,
        })
    }
}
