//! `aht`: run, sweep, verify and summarize sequential anomaly searches.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use hmm_search::harness::{
    presets, read_csv_file, run_sweep, run_trial, seeds::trial_seed, write_csv_file,
    write_json_file, CsvRow, ExperimentConfig, SweepResult,
};
use hmm_search::verify::{run_suites, SuiteReport, SUITES};
use hmm_search::SearchError;

#[derive(Parser)]
#[command(name = "aht", version, about = "Sequential search for a hidden-Markov anomalous process")]
struct Cli {
    /// Log filter (error, warn, info, debug, trace or env_logger syntax).
    #[arg(long, global = true, default_value = "warn")]
    log_level: String,

    /// Worker threads for Monte Carlo trials (0 = one per core).
    #[arg(long, global = true, env = "AHT_WORKERS", default_value_t = 0)]
    workers: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Config file, or the name of a shipped preset.
    #[arg(long, short)]
    config: String,

    /// Override a config value by dotted path, e.g. `--set trials=100`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,

    /// Override the base seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run individual trials of one policy and print each outcome as JSON.
    Run {
        #[command(flatten)]
        config: ConfigArgs,
        /// Policy label (defaults to the first policy).
        #[arg(long)]
        policy: Option<String>,
        /// Grid value of -ln c (defaults to the first grid value).
        #[arg(long)]
        neg_log_c: Option<f64>,
        #[arg(long, default_value_t = 1)]
        trials: usize,
        /// Replay a single trial from its seed.
        #[arg(long, conflicts_with = "trials")]
        trial_seed: Option<u64>,
    },
    /// Run every policy over the cost grid and write CSV and JSON summaries.
    Sweep {
        #[command(flatten)]
        config: ConfigArgs,
        /// Output directory.
        #[arg(long, short, default_value = "results")]
        out: PathBuf,
    },
    /// Run the numerical verification suites.
    Verify {
        /// Config supplying `[verify]` settings and the oracle world
        /// (defaults to the oracle preset).
        #[arg(long, short)]
        config: Option<String>,
        /// Override a config value, e.g. `--set verify.tol=1e-8`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        /// Run only these suites.
        #[arg(long, value_delimiter = ',', value_parser = clap::builder::PossibleValuesParser::new(SUITES))]
        only: Vec<String>,
        /// Write the full report as JSON.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Summarize sweep CSV files.
    Analyze {
        #[arg(required = true)]
        csv: Vec<PathBuf>,
    },
    /// List the shipped presets.
    Presets {
        /// Print the full TOML of one preset.
        #[arg(long)]
        show: Option<String>,
    },
}

struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl Failure {
    fn usage(error: anyhow::Error) -> Self {
        Self { code: 2, error }
    }

    fn runtime(error: anyhow::Error) -> Self {
        Self { code: 1, error }
    }
}

impl From<SearchError> for Failure {
    fn from(e: SearchError) -> Self {
        let code = if e.is_config_error() { 2 } else { 1 };
        Self { code, error: e.into() }
    }
}

type Outcome = Result<ExitCode, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new()
        .parse_filters(&cli.log_level)
        .format_timestamp(None)
        .init();
    match dispatch(cli) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

fn dispatch(cli: Cli) -> Outcome {
    match cli.command {
        Command::Run {
            config,
            policy,
            neg_log_c,
            trials,
            trial_seed,
        } => cmd_run(&config, policy, neg_log_c, trials, trial_seed),
        Command::Sweep { config, out } => cmd_sweep(&config, &out, cli.workers),
        Command::Verify {
            config,
            overrides,
            only,
            out,
        } => cmd_verify(config.as_deref(), &overrides, &only, out, cli.workers),
        Command::Analyze { csv } => cmd_analyze(&csv),
        Command::Presets { show } => cmd_presets(show.as_deref()),
    }
}

fn load(spec: &str, overrides: &[String]) -> Result<ExperimentConfig, Failure> {
    let (origin, text) = presets::resolve(spec).map_err(|e| Failure::usage(e.into()))?;
    log::info!("config {origin}");
    Ok(ExperimentConfig::from_toml(&text, &origin, overrides)?)
}

fn load_args(args: &ConfigArgs) -> Result<ExperimentConfig, Failure> {
    let mut overrides = args.overrides.clone();
    if let Some(seed) = args.seed {
        overrides.push(format!("base_seed={seed}"));
    }
    load(&args.config, &overrides)
}

fn cmd_run(
    args: &ConfigArgs,
    policy: Option<String>,
    neg_log_c: Option<f64>,
    trials: usize,
    replay: Option<u64>,
) -> Outcome {
    let config = load_args(args)?;
    let spec = match &policy {
        Some(label) => config.policy(label).ok_or_else(|| {
            let known: Vec<&str> = config.policies.iter().map(|p| p.label()).collect();
            Failure::usage(anyhow!("no policy labelled {label:?}; config has {known:?}"))
        })?,
        None => &config.policies[0],
    };
    let v = neg_log_c.unwrap_or(config.neg_log_c[0]);
    let c_index = config.neg_log_c.iter().position(|x| *x == v).ok_or_else(|| {
        Failure::usage(anyhow!("-ln c = {v} is not in the grid {:?}", config.neg_log_c))
    })?;
    let c = (-v).exp();
    let seeds: Vec<u64> = match replay {
        Some(s) => vec![s],
        None => (0..trials)
            .map(|k| trial_seed(config.base_seed, spec.label(), c_index, k))
            .collect(),
    };
    for seed in seeds {
        let outcome = run_trial(&config, spec, c, seed)?;
        println!("{}", serde_json::to_string(&outcome).expect("outcomes serialize"));
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_sweep(args: &ConfigArgs, out: &PathBuf, workers: usize) -> Outcome {
    let config = load_args(args)?;
    std::fs::create_dir_all(out)
        .with_context(|| format!("creating output directory {}", out.display()))
        .map_err(Failure::runtime)?;
    let result = run_sweep(&config, workers)?;
    let csv = out.join(format!("{}.csv", config.name));
    let json = out.join(format!("{}.json", config.name));
    write_csv_file(&result, &csv)?;
    write_json_file(&result, &json)?;
    print_sweep(&result);
    println!("wrote {} and {}", csv.display(), json.display());
    Ok(ExitCode::SUCCESS)
}

fn print_sweep(result: &SweepResult) {
    println!(
        "{:<12} {:>7} {:>10} {:>23} {:>9} {:>11} {:>10} {:>8}",
        "policy", "-ln c", "delay", "95% CI", "error", "bayes_risk", "samples", "idle"
    );
    for r in &result.rows {
        println!(
            "{:<12} {:>7} {:>10.3} [{:>10.3},{:>10.3}] {:>9.5} {:>11.4e} {:>10.3} {:>8.3}",
            r.policy,
            r.neg_log_c,
            r.avg_delay,
            r.delay_ci.lo,
            r.delay_ci.hi,
            r.error_rate,
            r.bayes_risk,
            r.avg_samples,
            r.avg_idle
        );
    }
}

fn cmd_verify(
    spec: Option<&str>,
    overrides: &[String],
    only: &[String],
    out: Option<PathBuf>,
    workers: usize,
) -> Outcome {
    let config = load(spec.unwrap_or("oracle_m5k2"), overrides)?;
    let reports = run_suites(only, Some(&config), &config.verify, workers)?;
    for r in &reports {
        print_suite(r);
    }
    if let Some(path) = out {
        let text = serde_json::to_string_pretty(&reports).expect("reports serialize");
        std::fs::write(&path, text + "\n")
            .with_context(|| format!("writing {}", path.display()))
            .map_err(Failure::runtime)?;
    }
    let failed = reports.iter().filter(|r| !r.passed).count();
    if failed == 0 {
        println!("all {} suites passed", reports.len());
        Ok(ExitCode::SUCCESS)
    } else {
        println!("{failed} of {} suites failed", reports.len());
        Ok(ExitCode::from(1))
    }
}

fn print_suite(r: &SuiteReport) {
    println!(
        "{} {:<15} checked {:>4}  failed {:>4}  {} = {:.3e}",
        if r.passed { "PASS" } else { "FAIL" },
        r.suite,
        r.checked,
        r.failed,
        r.metric,
        r.worst
    );
    if let Some(details) = &r.details {
        if let Some(rows) = details.get("rows").and_then(|v| v.as_array()) {
            for row in rows {
                println!(
                    "     -ln c = {:>5}: delay {:>9.3}, ratio {:.4} ± {:.4}",
                    row["neg_log_c"], row["avg_delay"].as_f64().unwrap_or(f64::NAN),
                    row["ratio"].as_f64().unwrap_or(f64::NAN),
                    row["ratio_se"].as_f64().unwrap_or(f64::NAN)
                );
            }
        }
    }
    for f in &r.failures {
        println!("     failing instance: {f}");
    }
}

fn cmd_analyze(paths: &[PathBuf]) -> Outcome {
    for path in paths {
        let rows = read_csv_file(path)?;
        if rows.is_empty() {
            return Err(Failure::usage(anyhow!("{} has no data rows", path.display())));
        }
        println!("{}", path.display());
        analyze_rows(&rows);
    }
    Ok(ExitCode::SUCCESS)
}

fn analyze_rows(rows: &[CsvRow]) {
    let mut policies: Vec<&str> = Vec::new();
    let mut grid: Vec<f64> = Vec::new();
    for r in rows {
        if !policies.contains(&r.policy.as_str()) {
            policies.push(&r.policy);
        }
        if !grid.contains(&r.neg_log_c) {
            grid.push(r.neg_log_c);
        }
    }
    grid.sort_by(f64::total_cmp);
    println!(
        "  {:>7}  {:<40}  {:<40}",
        "-ln c", "policies by delay", "policies by bayes risk"
    );
    for v in &grid {
        let mut at: Vec<&CsvRow> = rows.iter().filter(|r| r.neg_log_c == *v).collect();
        at.sort_by(|a, b| a.avg_delay.total_cmp(&b.avg_delay));
        let by_delay: Vec<String> = at.iter().map(|r| format!("{} {:.2}", r.policy, r.avg_delay)).collect();
        at.sort_by(|a, b| a.bayes_risk.total_cmp(&b.bayes_risk));
        let by_risk: Vec<String> = at.iter().map(|r| format!("{} {:.3e}", r.policy, r.bayes_risk)).collect();
        println!("  {:>7}  {:<40}  {:<40}", v, by_delay.join(" < "), by_risk.join(" < "));
    }
    for p in policies {
        let mine: Vec<&CsvRow> = rows.iter().filter(|r| r.policy == p).collect();
        let censored = mine.iter().map(|r| r.censored_frac).fold(0.0, f64::max);
        let monotone = mine
            .windows(2)
            .all(|w| w[1].neg_log_c < w[0].neg_log_c || w[1].avg_delay >= w[0].delay_ci_lo);
        println!(
            "  {p}: {} rows, max censored fraction {censored}, delay {} in -ln c",
            mine.len(),
            if monotone { "non-decreasing" } else { "NOT monotone" }
        );
    }
}

fn cmd_presets(show: Option<&str>) -> Outcome {
    if let Some(name) = show {
        let preset = presets::find(name)
            .ok_or_else(|| Failure::usage(anyhow!("no preset named {name:?}")))?;
        print!("{}", preset.text);
        return Ok(ExitCode::SUCCESS);
    }
    for p in presets::PRESETS {
        let config = presets::load_preset(p.name, &[])?;
        let labels: Vec<&str> = config.policies.iter().map(|s| s.label()).collect();
        println!("{:<16} {}  [{}]", p.name, config.description, labels.join(", "));
    }
    Ok(ExitCode::SUCCESS)
}
