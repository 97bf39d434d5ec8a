//! Randomized numerical checks of the analysis module and of the oracle
//! delay predictor. Each suite reports its worst case and, on failure, the
//! offending instances in a form that can be replayed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::analysis::{
    kl_closed_form, kl_numeric, rate_i_d, rate_i_star, theorem2_gap,
    verify_mixture_kl_inequality,
};
use crate::error::Result;
use crate::harness::{presets, run_cell, CellSummary, ExperimentConfig, VerifySettings};
use crate::obs::Law;
use crate::policy::PolicyKind;
use crate::{Distribution, MixtureLaw, Palette};

pub const SUITES: [&str; 5] = ["kl-closed-form", "mixture-kl", "theorem2", "rate-monotone", "oracle-delay"];

/// Failing instances kept per suite.
const MAX_FAILURES: usize = 5;

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub passed: bool,
    pub checked: usize,
    pub failed: usize,
    /// Worst value of the suite's metric (see `metric`).
    pub worst: f64,
    pub metric: String,
    pub failures: Vec<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub details: Option<Value>,
}

struct Tally {
    report: SuiteReport,
    /// true when larger metric values are worse
    larger_is_worse: bool,
}

impl Tally {
    fn new(suite: &str, metric: &str, larger_is_worse: bool) -> Self {
        Self {
            report: SuiteReport {
                suite: suite.to_string(),
                passed: true,
                checked: 0,
                failed: 0,
                worst: if larger_is_worse { f64::NEG_INFINITY } else { f64::INFINITY },
                metric: metric.to_string(),
                failures: Vec::new(),
                details: None,
            },
            larger_is_worse,
        }
    }

    fn record(&mut self, value: f64, ok: bool, instance: impl FnOnce() -> Value) {
        let r = &mut self.report;
        r.checked += 1;
        let worse = if self.larger_is_worse { value > r.worst } else { value < r.worst };
        if worse || value.is_nan() {
            r.worst = value;
        }
        if !ok {
            r.passed = false;
            r.failed += 1;
            if r.failures.len() < MAX_FAILURES {
                r.failures.push(instance());
            }
        }
    }

    fn error(&mut self, instance: Value) {
        self.record(f64::NAN, false, || instance);
    }

    fn finish(self) -> SuiteReport {
        self.report
    }
}

fn suite_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn log_uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    (rng.random_range(lo.ln()..hi.ln())).exp()
}

fn random_exponential<R: Rng>(rng: &mut R) -> Distribution {
    Distribution::exponential(log_uniform(rng, 0.1, 20.0)).expect("positive rate")
}

fn random_geometric<R: Rng>(rng: &mut R) -> Distribution {
    Distribution::geometric(rng.random_range(0.05..0.95)).expect("success in (0, 1)")
}

fn random_base<R: Rng>(rng: &mut R, discrete: bool) -> Distribution {
    if discrete {
        random_geometric(rng)
    } else {
        random_exponential(rng)
    }
}

fn random_weights<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let mut w: Vec<f64> = raw.iter().map(|x| x / total).collect();
    // make the weights sum to one exactly in floating point
    let head: f64 = w[..n - 1].iter().sum();
    w[n - 1] = 1.0 - head;
    w
}

/// Closed-form KL against quadrature (exponential) and summation
/// (geometric) on `kl_pairs` random pairs per family.
pub fn kl_closed_form_suite(settings: &VerifySettings) -> SuiteReport {
    let mut tally = Tally::new("kl-closed-form", "max |closed form - numeric|", true);
    let mut rng = suite_rng(settings.seed, 1);
    for discrete in [false, true] {
        for _ in 0..settings.kl_pairs {
            let (p, q) = (random_base(&mut rng, discrete), random_base(&mut rng, discrete));
            let exact = kl_closed_form(&p, &q).expect("both families have closed forms");
            match kl_numeric(&Law::Base(p.clone()), &Law::Base(q.clone())) {
                Ok(num) => {
                    let diff = (exact - num.value).abs();
                    tally.record(diff, diff <= settings.tol, || {
                        json!({"p": p, "q": q, "closed_form": exact, "numeric": num.value, "abs_err": num.abs_err})
                    });
                }
                Err(e) => tally.error(json!({"p": p, "q": q, "error": e.to_string()})),
            }
        }
    }
    tally.finish()
}

fn random_component<R: Rng>(rng: &mut R, discrete: bool) -> MixtureLaw {
    let base = random_base(rng, discrete);
    if rng.random_bool(0.5) {
        Law::Base(base)
    } else {
        let other = random_base(rng, discrete);
        Law::anomalous(rng.random_range(0.0..1.0), &base, &other)
    }
}

/// `Σ w_d D(g_d‖f) ≥ D(Σ w_d g_d‖f)` on random instances, with equality
/// when all components coincide.
pub fn mixture_kl_suite(settings: &VerifySettings) -> SuiteReport {
    let mut tally = Tally::new("mixture-kl", "min slack (identical components: -|slack|)", false);
    let mut rng = suite_rng(settings.seed, 2);
    for i in 0..settings.mixture_instances {
        let discrete = i % 2 == 1;
        let f: MixtureLaw = Law::Base(random_base(&mut rng, discrete));
        let d = rng.random_range(1..=4);
        let weights = random_weights(&mut rng, d);
        let identical = i % 10 == 0;
        let shared = random_component(&mut rng, discrete);
        let components: Vec<(f64, MixtureLaw)> = weights
            .into_iter()
            .map(|w| {
                let g = if identical { shared.clone() } else { random_component(&mut rng, discrete) };
                (w, g)
            })
            .collect();
        match verify_mixture_kl_inequality(&f, &components, settings.tol) {
            Ok(check) => {
                let (metric, ok) = if identical || d == 1 {
                    (-check.slack.abs(), check.slack.abs() <= settings.tol)
                } else {
                    (check.slack, check.holds)
                };
                tally.record(metric, ok, || json!({"f": f, "components": components, "check": check}));
            }
            Err(e) => tally.error(json!({"f": f, "components": components, "error": e.to_string()})),
        }
    }
    tally.finish()
}

fn random_palette<R: Rng>(rng: &mut R, equal_levels: bool) -> Palette {
    let d = rng.random_range(1..=4);
    let shared = rng.random_range(0.0..1.0);
    let levels = (0..d)
        .map(|_| if equal_levels { shared } else { rng.random_range(0.0..1.0) })
        .collect();
    Palette::new(levels, random_weights(rng, d)).expect("valid palette")
}

/// Oracle rate against the i.i.d. rate of the marginal mixture.
pub fn theorem2_suite(settings: &VerifySettings) -> SuiteReport {
    let mut tally = Tally::new("theorem2", "min gap (equal levels: -|gap|)", false);
    let mut rng = suite_rng(settings.seed, 3);
    for i in 0..settings.palettes {
        let discrete = i % 2 == 1;
        let f = random_base(&mut rng, discrete);
        let g = random_base(&mut rng, discrete);
        let equal = i % 10 == 0;
        let palette = random_palette(&mut rng, equal);
        let cells = rng.random_range(2..=10);
        let probes = rng.random_range(1..=cells);
        match theorem2_gap(&f, &g, &palette, cells, probes, settings.tol) {
            Ok(gap) => {
                let degenerate = equal || palette.len() == 1;
                let (metric, ok) = if degenerate {
                    (-gap.gap.abs(), gap.gap.abs() <= settings.tol)
                } else {
                    (gap.gap, gap.holds)
                };
                tally.record(metric, ok, || {
                    json!({"f": f, "g": g, "palette": palette, "cells": cells, "probes": probes, "gap": gap})
                });
            }
            Err(e) => tally.error(json!({"f": f, "g": g, "palette": palette, "error": e.to_string()})),
        }
    }
    tally.finish()
}

/// `I*_d` is non-increasing in `P_d` on a grid of levels.
pub fn rate_monotone_suite(settings: &VerifySettings) -> SuiteReport {
    let mut tally = Tally::new("rate-monotone", "max increase between grid neighbours", true);
    let mut rng = suite_rng(settings.seed, 4);
    let grid: Vec<f64> = (0..=20).map(|i| f64::from(i) / 20.0).collect();
    for i in 0..20 {
        let discrete = i % 2 == 1;
        let f = random_base(&mut rng, discrete);
        let g = loop {
            let g = random_base(&mut rng, discrete);
            if g != f {
                break g;
            }
        };
        let cells = rng.random_range(2..=10);
        let probes = rng.random_range(1..=cells);
        let rates: Result<Vec<f64>> = grid.iter().map(|p| rate_i_d(&f, &g, *p, cells, probes)).collect();
        match rates {
            Ok(rates) => {
                for (k, pair) in rates.windows(2).enumerate() {
                    let rise = pair[1] - pair[0];
                    tally.record(rise, rise <= settings.tol, || {
                        json!({"f": f, "g": g, "cells": cells, "probes": probes,
                               "levels": [grid[k], grid[k + 1]], "rates": pair})
                    });
                }
            }
            Err(e) => tally.error(json!({"f": f, "g": g, "error": e.to_string()})),
        }
    }
    tally.finish()
}

#[derive(Clone, Debug, Serialize)]
pub struct OracleRatio {
    pub neg_log_c: f64,
    pub avg_delay: f64,
    /// `avg_delay · I* / (−ln c)`
    pub ratio: f64,
    /// Standard error of `ratio`.
    pub ratio_se: f64,
    pub censored_frac: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct OracleDelayCheck {
    pub config: String,
    pub i_star: f64,
    pub rows: Vec<OracleRatio>,
    pub band: [f64; 2],
    pub in_band: bool,
    /// `|ratio − 1|` shrinks along the grid, with 2σ slack.
    pub monotone: bool,
}

/// Measure `E[τ]·I*/(−ln c)` for the oracle policy on `config`'s oracle
/// world, over `settings.oracle_neg_log_c` with `settings.oracle_trials`
/// trials each.
pub fn oracle_delay_check(
    config: &ExperimentConfig,
    settings: &VerifySettings,
    workers: usize,
) -> Result<OracleDelayCheck> {
    let palette = config.palette().ok_or_else(|| {
        crate::SearchError::invalid("world", "oracle delay check needs an oracle world")
    })?;
    let mut cfg = config.clone();
    cfg.policies.retain(|p| p.kind == PolicyKind::AdhmOracle);
    if cfg.policies.is_empty() {
        return Err(crate::SearchError::invalid("policies", "no adhm_oracle policy to measure"));
    }
    cfg.policies.truncate(1);
    cfg.trials = settings.oracle_trials;
    cfg.neg_log_c = settings.oracle_neg_log_c.clone();
    cfg.validate()?;
    let report = rate_i_star(&cfg.normal, &cfg.anomalous, palette, cfg.cells, cfg.probes)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| crate::SearchError::ContractViolation(format!("thread pool: {e}")))?;
    let spec = cfg.policies[0].clone();
    let mut rows = Vec::new();
    for (j, c) in cfg.costs().into_iter().enumerate() {
        let outcomes = pool.install(|| run_cell(&cfg, 0, j))?;
        let s = CellSummary::from_outcomes(spec.label(), c, cfg.neg_log_c[j], 0.0, cfg.base_seed, &outcomes)?;
        let scale = report.i_star / s.neg_log_c;
        let se = (s.delay_ci.hi - s.delay_ci.lo) / (2.0 * 1.96) * scale;
        rows.push(OracleRatio {
            neg_log_c: s.neg_log_c,
            avg_delay: s.avg_delay,
            ratio: s.avg_delay * scale,
            ratio_se: se,
            censored_frac: s.censored_frac,
        });
    }
    let last = rows.last().expect("non-empty grid");
    let band = settings.oracle_band;
    let in_band = last.ratio >= band[0] && last.ratio <= band[1] && last.censored_frac == 0.0;
    let monotone = rows.windows(2).all(|w| {
        let slack = 2.0 * (w[0].ratio_se.powi(2) + w[1].ratio_se.powi(2)).sqrt();
        (w[1].ratio - 1.0).abs() <= (w[0].ratio - 1.0).abs() + slack
    });
    Ok(OracleDelayCheck {
        config: cfg.name.clone(),
        i_star: report.i_star,
        rows,
        band,
        in_band,
        monotone,
    })
}

fn oracle_delay_suite(config: Option<&ExperimentConfig>, settings: &VerifySettings, workers: usize) -> SuiteReport {
    let mut tally = Tally::new("oracle-delay", "ratio at the largest -ln c", true);
    let fallback;
    let cfg = match config {
        Some(c) if c.palette().is_some() && c.policies.iter().any(|p| p.kind == PolicyKind::AdhmOracle) => c,
        _ => {
            fallback = presets::load_preset("oracle_m5k2", &[]).expect("shipped preset is valid");
            &fallback
        }
    };
    match oracle_delay_check(cfg, settings, workers) {
        Ok(check) => {
            let last = check.rows.last().map_or(f64::NAN, |r| r.ratio);
            let ok = check.in_band && check.monotone;
            let snapshot = serde_json::to_value(&check).expect("serializable");
            tally.record(last, ok, || snapshot.clone());
            tally.report.worst = last;
            tally.report.details = Some(snapshot);
        }
        Err(e) => tally.error(json!({"config": cfg.name, "error": e.to_string()})),
    }
    tally.finish()
}

/// Run the named suites (all when `only` is empty). Oracle settings and
/// tolerances come from `settings`; the oracle world comes from `config`
/// when it has one, else from the shipped oracle preset.
pub fn run_suites(
    only: &[String],
    config: Option<&ExperimentConfig>,
    settings: &VerifySettings,
    workers: usize,
) -> Result<Vec<SuiteReport>> {
    for name in only {
        if !SUITES.contains(&name.as_str()) {
            return Err(crate::SearchError::invalid(
                "--only",
                format!("unknown suite {name:?}; expected one of {}", SUITES.join(", ")),
            ));
        }
    }
    let wanted = |s: &str| only.is_empty() || only.iter().any(|o| o == s);
    let mut reports = Vec::new();
    for suite in SUITES {
        if !wanted(suite) {
            continue;
        }
        log::info!("verify: running {suite}");
        reports.push(match suite {
            "kl-closed-form" => kl_closed_form_suite(settings),
            "mixture-kl" => mixture_kl_suite(settings),
            "theorem2" => theorem2_suite(settings),
            "rate-monotone" => rate_monotone_suite(settings),
            _ => oracle_delay_suite(config, settings, workers),
        });
    }
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> VerifySettings {
        VerifySettings {
            kl_pairs: 10,
            mixture_instances: 20,
            palettes: 20,
            ..VerifySettings::default()
        }
    }

    #[test]
    fn analytic_suites_pass_at_default_tolerance() {
        let s = small();
        for r in [kl_closed_form_suite(&s), mixture_kl_suite(&s), theorem2_suite(&s), rate_monotone_suite(&s)] {
            assert!(r.passed, "{}", serde_json::to_string_pretty(&r).unwrap());
            assert!(r.checked > 0);
        }
    }

    #[test]
    fn negative_tolerance_fails_every_analytic_suite() {
        let s = VerifySettings { tol: -1.0, ..small() };
        for r in [kl_closed_form_suite(&s), mixture_kl_suite(&s), theorem2_suite(&s), rate_monotone_suite(&s)] {
            assert!(!r.passed, "{}", r.suite);
            assert!(!r.failures.is_empty() && r.failures.len() <= MAX_FAILURES);
        }
    }

    #[test]
    fn unknown_suite_is_rejected() {
        assert!(run_suites(&["nope".into()], None, &small(), 1).is_err());
        let only = run_suites(&["mixture-kl".into()], None, &small(), 1).unwrap();
        assert_eq!(only.len(), 1);
        assert_eq!(only[0].suite, "mixture-kl");
    }
}
