//! Command-line front end: log ingestion, model fitting/evaluation,
//! simulation sweeps, and schedule planning, all file-driven and seeded.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use serde_json::json;

use lqlab::log_store::{self, Dialect, TimeUnit};
use lqlab::lqn_sim::{self, item_label, Action, SimConfig};
use lqlab::memory_models::{training_rows, FitMetadata, FittedModel, ModelSpec};
use lqlab::model_eval;
use lqlab::planner;

#[derive(Parser)]
#[command(name = "lqlab", version, about = "Leitner-queue scheduling laboratory")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum DialectArg {
    Mnemosyne,
    #[value(name = "self")]
    SelfAssessment,
}

#[derive(Clone, Copy, ValueEnum)]
enum TimeUnitArg {
    Days,
    Seconds,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse raw review logs into per-pair interaction histories.
    Ingest {
        #[arg(long)]
        logs: PathBuf,
        #[arg(long, value_enum)]
        dialect: DialectArg,
        #[arg(long, value_enum, default_value = "seconds")]
        time_unit: TimeUnitArg,
        /// Iteratively drop users/items with fewer interactions than this.
        #[arg(long, default_value_t = 5)]
        min_interactions: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit recall models on all histories and write them as JSON.
    Fit {
        #[arg(long)]
        histories: PathBuf,
        /// Comma-separated model ids (1-14) or names.
        #[arg(long)]
        models: String,
        /// Penalty for the MAP-fitted families.
        #[arg(long, default_value_t = 0.1)]
        l2: f64,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Cross-validated model comparison (overall and per-deck AUC).
    Eval {
        #[arg(long)]
        histories: PathBuf,
        #[arg(long)]
        models: String,
        #[arg(long, default_value_t = 10)]
        folds: usize,
        #[arg(long, default_value_t = 0.2)]
        test_frac: f64,
        #[arg(long, default_value_t = 0.1)]
        trunc_frac: f64,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum, default_value = "csv")]
        format: FormatArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one seeded simulation from a JSON config.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        /// Also write the event trace as CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Sweep the arrival rate over seeded trials and aggregate.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated rates; overrides the config's grid.
        #[arg(long)]
        rates: Option<String>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve the static planning problem (or emit sensitivity tables).
    Plan {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        decks: Option<usize>,
        #[arg(long)]
        budget: Option<f64>,
        #[arg(long)]
        theta: Option<f64>,
        /// Comma-separated difficulty grid: emit lambda*(theta) CSV instead.
        #[arg(long)]
        theta_grid: Option<String>,
        /// Comma-separated budget grid: emit lambda*(budget) CSV instead.
        #[arg(long)]
        budget_grid: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Plan across difficulty bins coupled by the shared budget.
    PlanMulti {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        decks: Option<usize>,
        #[arg(long)]
        budget: Option<f64>,
        /// Comma-separated difficulty per bin.
        #[arg(long)]
        thetas: Option<String>,
        /// Optional comma-separated positive weight per bin.
        #[arg(long)]
        weights: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Deserialize)]
struct SweepSpec {
    base: SimConfig,
    rates: Vec<f64>,
    trials: usize,
}

/// Optional parameter file for `plan` / `plan-multi`.
#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct PlanSpec {
    decks: Option<usize>,
    budget: Option<f64>,
    theta: Option<f64>,
    theta_grid: Option<Vec<f64>>,
    budget_grid: Option<Vec<f64>>,
    thetas: Option<Vec<f64>>,
    weights: Option<Vec<f64>>,
}

fn resolve_seed(flag: Option<u64>) -> u64 {
    flag.or_else(|| std::env::var("LQN_SEED").ok().and_then(|s| s.parse().ok()))
        .unwrap_or(0)
}

fn parse_list(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("bad number `{t}`: {e}")))
        .collect()
}

fn parse_models(s: &str) -> Result<Vec<ModelSpec>, String> {
    let mut specs = Vec::new();
    for tok in s.split(',') {
        let spec = ModelSpec::parse(tok.trim()).map_err(|e| e.to_string())?;
        if specs.contains(&spec) {
            eprintln!("warning: duplicate model `{}` ignored", tok.trim());
        } else {
            specs.push(spec);
        }
    }
    if specs.is_empty() {
        return Err("no models given".into());
    }
    Ok(specs)
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn write_output(path: &Path, bytes: &[u8]) -> Result<(), String> {
    fs::write(path, bytes).map_err(|e| format!("{}: {e}", path.display()))
}

/// Every output gets a sibling manifest with the resolved parameters, the
/// seed, and the tool version so the run can be reproduced exactly.
fn write_manifest(out: &Path, command: &str, seed: u64, params: serde_json::Value) -> Result<(), String> {
    let manifest = json!({
        "tool_version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "seed": seed,
        "params": params,
    });
    let path = out.with_extension(format!(
        "{}manifest.json",
        out.extension().map(|e| format!("{}.", e.to_string_lossy())).unwrap_or_default()
    ));
    write_output(&path, serde_json::to_string_pretty(&manifest).map_err(|e| e.to_string())?.as_bytes())
}

fn fmt_opt<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn run(cli: Cli) -> Result<(), String> {
    match cli.cmd {
        Cmd::Ingest { logs, dialect, time_unit, min_interactions, out } => {
            let dialect = match dialect {
                DialectArg::Mnemosyne => Dialect::Mnemosyne,
                DialectArg::SelfAssessment => Dialect::SelfAssessment,
            };
            let time_unit = match time_unit {
                TimeUnitArg::Days => TimeUnit::Days,
                TimeUnitArg::Seconds => TimeUnit::Seconds,
            };
            let file = fs::File::open(&logs).map_err(|e| format!("{}: {e}", logs.display()))?;
            let set = log_store::parse_logs(file, dialect, time_unit).map_err(|e| e.to_string())?;
            let set = log_store::filter_min_interactions(set, min_interactions);
            let histories = log_store::build_histories(&set).map_err(|e| e.to_string())?;
            let users: std::collections::BTreeSet<&str> =
                histories.iter().map(|h| h.user_id.as_str()).collect();
            let items: std::collections::BTreeSet<&str> =
                histories.iter().map(|h| h.item_id.as_str()).collect();
            let interactions: usize = histories.iter().map(|h| h.interactions.len()).sum();
            let recalls: usize = histories
                .iter()
                .flat_map(|h| &h.interactions)
                .filter(|i| i.outcome)
                .count();
            write_output(&out, serde_json::to_string_pretty(&histories).map_err(|e| e.to_string())?.as_bytes())?;
            write_manifest(&out, "ingest", 0, json!({
                "logs": logs.display().to_string(),
                "dialect": dialect,
                "time_unit": time_unit,
                "min_interactions": min_interactions,
            }))?;
            println!(
                "users: {}\nitems: {}\npairs: {}\ninteractions: {}\nrecall rate: {:.4}",
                users.len(),
                items.len(),
                histories.len(),
                interactions,
                if interactions > 0 { recalls as f64 / interactions as f64 } else { 0.0 }
            );
            Ok(())
        }

        Cmd::Fit { histories, models, l2, seed, out } => {
            let seed = resolve_seed(seed);
            let specs = parse_models(&models)?;
            let hs: Vec<log_store::InteractionHistory> = read_json(&histories)?;
            let rows = training_rows(&hs);
            let fitted: Vec<FittedModel> = specs
                .iter()
                .map(|&spec| {
                    let l2_used = if spec.needs_l2() { l2 } else { 0.0 };
                    spec.fit(&rows, l2_used).map(|model| FittedModel {
                        spec,
                        model,
                        fit_metadata: FitMetadata { seed, l2: l2_used, time_unit: None },
                    })
                })
                .collect::<Result<_, _>>()
                .map_err(|e| e.to_string())?;
            write_output(&out, serde_json::to_string_pretty(&fitted).map_err(|e| e.to_string())?.as_bytes())?;
            write_manifest(&out, "fit", seed, json!({
                "histories": histories.display().to_string(),
                "models": specs.iter().map(|s| s.name()).collect::<Vec<_>>(),
                "l2": l2,
            }))?;
            for f in &fitted {
                println!("fitted {}", f.spec.name());
            }
            Ok(())
        }

        Cmd::Eval { histories, models, folds, test_frac, trunc_frac, seed, format, out } => {
            let seed = resolve_seed(seed);
            let specs = parse_models(&models)?;
            let hs: Vec<log_store::InteractionHistory> = read_json(&histories)?;
            let plan = model_eval::make_fold_plan(&hs, folds, test_frac, trunc_frac, seed)
                .map_err(|e| e.to_string())?;
            let report = model_eval::evaluate_models(&hs, &specs, &plan).map_err(|e| e.to_string())?;
            let bytes = match format {
                FormatArg::Csv => report.to_csv().into_bytes(),
                FormatArg::Json => serde_json::to_string_pretty(&report).map_err(|e| e.to_string())?.into_bytes(),
            };
            write_output(&out, &bytes)?;
            write_manifest(&out, "eval", seed, json!({
                "histories": histories.display().to_string(),
                "models": specs.iter().map(|s| s.name()).collect::<Vec<_>>(),
                "folds": folds,
                "test_frac": test_frac,
                "trunc_frac": trunc_frac,
            }))?;
            for m in &report.models {
                println!(
                    "{}: validation AUC {} +- {}, test AUC {}",
                    m.model,
                    fmt_opt(m.mean_validation_auc),
                    fmt_opt(m.stderr),
                    fmt_opt(m.test_auc),
                );
            }
            Ok(())
        }

        Cmd::Simulate { config, seed, out, trace } => {
            let mut cfg: SimConfig = read_json(&config)?;
            if let Some(s) = seed.or_else(|| std::env::var("LQN_SEED").ok().and_then(|s| s.parse().ok())) {
                cfg.seed = s;
            }
            if trace.is_some() {
                cfg.record_trace = true;
            }
            let result = lqn_sim::simulate(&cfg).map_err(|e| e.to_string())?;
            if let Some(trace_path) = trace {
                let mut csv = String::from("time,action,item_id,deck,outcome,q_after\n");
                for e in &result.trace {
                    let action = match e.action {
                        Action::Introduce => "introduce",
                        Action::Review => "review",
                        Action::Idle => "idle",
                    };
                    csv.push_str(&format!(
                        "{},{},{},{},{},{}\n",
                        e.time,
                        action,
                        fmt_opt(e.item.map(item_label)),
                        fmt_opt(e.deck),
                        fmt_opt(e.outcome.map(|o| if o { 1 } else { 0 })),
                        fmt_opt(e.q_after),
                    ));
                }
                write_output(&trace_path, csv.as_bytes())?;
            }
            let mut slim = result.clone();
            slim.trace.clear(); // the JSON result stays small; the trace is the CSV's job
            write_output(&out, serde_json::to_string_pretty(&slim).map_err(|e| e.to_string())?.as_bytes())?;
            write_manifest(&out, "simulate", cfg.seed, serde_json::to_value(&cfg).map_err(|e| e.to_string())?)?;
            println!(
                "introduced {}, mastered {}, lambda_out {}",
                result.introduced_count, result.mastered_count, result.lambda_out
            );
            Ok(())
        }

        Cmd::Sweep { config, rates, trials, seed, out } => {
            let spec: SweepSpec = read_json(&config)?;
            let seed = resolve_seed(seed);
            let rates = match rates {
                Some(s) => parse_list(&s)?,
                None => spec.rates,
            };
            let trials = trials.unwrap_or(spec.trials);
            let points = lqn_sim::sweep_arrival_rates(&spec.base, &rates, trials, seed);
            let n_occ = points.iter().map(|p| p.mean_occupancy.len()).max().unwrap_or(0);
            let mut csv = String::from("lambda_ext,mean_lambda_out,stderr");
            for k in 1..=n_occ {
                csv.push_str(&format!(",occ_{k}"));
            }
            csv.push_str(",mastered\n");
            for p in &points {
                if let Some(reason) = &p.skipped {
                    eprintln!("rate {} skipped: {reason}", p.lambda_ext);
                    csv.push_str(&format!("{}{}\n", p.lambda_ext, ",".repeat(n_occ + 3)));
                    continue;
                }
                csv.push_str(&format!("{},{},{}", p.lambda_ext, p.mean_lambda_out, p.stderr));
                for k in 0..n_occ {
                    csv.push_str(&format!(",{}", p.mean_occupancy.get(k).copied().unwrap_or(0.0)));
                }
                csv.push_str(&format!(",{}\n", p.mean_mastered));
            }
            write_output(&out, csv.as_bytes())?;
            write_manifest(&out, "sweep", seed, json!({
                "base": serde_json::to_value(&spec.base).map_err(|e| e.to_string())?,
                "rates": rates,
                "trials": trials,
            }))?;
            println!("swept {} rates x {} trials", rates.len(), trials);
            Ok(())
        }

        Cmd::Plan { config, decks, budget, theta, theta_grid, budget_grid, out } => {
            let file: PlanSpec = match &config {
                Some(p) => read_json(p)?,
                None => PlanSpec::default(),
            };
            let decks = decks.or(file.decks).ok_or("missing --decks")?;
            let theta_grid = match theta_grid {
                Some(s) => Some(parse_list(&s)?),
                None => file.theta_grid,
            };
            let budget_grid = match budget_grid {
                Some(s) => Some(parse_list(&s)?),
                None => file.budget_grid,
            };
            let sensitivity_csv = |points: &[planner::SensitivityPoint]| {
                let mut csv = String::from("param,lambda_star");
                for k in 1..=decks {
                    csv.push_str(&format!(",mu_{k}"));
                }
                csv.push('\n');
                for p in points {
                    csv.push_str(&format!("{},{}", p.param, p.lambda_star));
                    for m in &p.mu {
                        csv.push_str(&format!(",{m}"));
                    }
                    csv.push('\n');
                }
                csv
            };
            if let Some(grid) = theta_grid {
                let budget = budget.or(file.budget).ok_or("missing --budget")?;
                let points = planner::sensitivity_theta(decks, budget, &grid).map_err(|e| e.to_string())?;
                write_output(&out, sensitivity_csv(&points).as_bytes())?;
                write_manifest(&out, "plan", 0, json!({
                    "decks": decks, "budget": budget, "theta_grid": grid,
                }))?;
                return Ok(());
            }
            if let Some(grid) = budget_grid {
                let theta = theta.or(file.theta).ok_or("missing --theta")?;
                let points = planner::sensitivity_budget(decks, theta, &grid).map_err(|e| e.to_string())?;
                write_output(&out, sensitivity_csv(&points).as_bytes())?;
                write_manifest(&out, "plan", 0, json!({
                    "decks": decks, "theta": theta, "budget_grid": grid,
                }))?;
                return Ok(());
            }
            let budget = budget.or(file.budget).ok_or("missing --budget")?;
            let theta = theta.or(file.theta).ok_or("missing --theta")?;
            let (schedule, flow) = planner::optimize_schedule(decks, budget, theta).map_err(|e| e.to_string())?;
            print_plan_table(&schedule, &flow);
            write_output(
                &out,
                serde_json::to_string_pretty(&json!({ "schedule": schedule, "flow": flow }))
                    .map_err(|e| e.to_string())?
                    .as_bytes(),
            )?;
            write_manifest(&out, "plan", 0, json!({
                "decks": decks, "budget": budget, "theta": theta,
            }))?;
            Ok(())
        }

        Cmd::PlanMulti { config, decks, budget, thetas, weights, out } => {
            let file: PlanSpec = match &config {
                Some(p) => read_json(p)?,
                None => PlanSpec::default(),
            };
            let decks = decks.or(file.decks).ok_or("missing --decks")?;
            let budget = budget.or(file.budget).ok_or("missing --budget")?;
            let thetas = match thetas {
                Some(s) => parse_list(&s)?,
                None => file.thetas.ok_or("missing --thetas")?,
            };
            let weights = match weights {
                Some(s) => Some(parse_list(&s)?),
                None => file.weights,
            };
            let bins = planner::optimize_multi_difficulty(decks, budget, &thetas, weights.as_deref())
                .map_err(|e| e.to_string())?;
            for (i, (schedule, flow)) in bins.iter().enumerate() {
                println!("bin {} (theta {}):", i + 1, schedule.theta);
                print_plan_table(schedule, flow);
            }
            let value: Vec<serde_json::Value> = bins
                .iter()
                .map(|(s, f)| json!({ "schedule": s, "flow": f }))
                .collect();
            write_output(&out, serde_json::to_string_pretty(&value).map_err(|e| e.to_string())?.as_bytes())?;
            write_manifest(&out, "plan-multi", 0, json!({
                "decks": decks, "budget": budget, "thetas": thetas, "weights": weights,
            }))?;
            Ok(())
        }
    }
}

fn print_plan_table(schedule: &planner::Schedule, flow: &planner::FlowSolution) {
    println!(
        "lambda_ext = {}  budget used = {}",
        schedule.lambda_ext,
        schedule.lambda_ext + schedule.mu.iter().sum::<f64>()
    );
    println!(
        "{:>5} {:>12} {:>12} {:>10} {:>12} {:>12}",
        "deck", "mu", "lambda", "recall", "E[delay]", "E[queue]"
    );
    let delays = flow.expected_delays(&schedule.mu);
    let queues = flow.expected_queues(&schedule.mu);
    for k in 0..schedule.mu.len() {
        println!(
            "{:>5} {:>12.6} {:>12.6} {:>10.6} {:>12.4} {:>12.4}",
            k + 1,
            schedule.mu[k],
            flow.lambda[k],
            flow.recall[k],
            delays[k],
            queues[k]
        );
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
