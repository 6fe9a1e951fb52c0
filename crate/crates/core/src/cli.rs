//! The `trl` command line.
//!
//! Exit codes: 0 on success, 1 when the input fails validation (including
//! usage errors), 2 when a computation on valid input fails. In JSON mode
//! errors are written to stderr as `{"error": {...}}`.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::adversary::{attack, AttackBudget, AttackMode, Learner};
use crate::combinatorics::{behavior_set, relaxed_robust_dimension, sauer_check, vc_dimension};
use crate::error::{Error, Result};
use crate::experiment::{draw_trial, run_experiment, summary_json, write_records_csv, write_results};
use crate::learner::{RobustSelector, SelectionRule};
use crate::model::{Label, LabeledDataset};
use crate::scenario::{ExperimentConfig, Scenario};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Parser, Debug)]
#[command(name = "trl", version = crate::experiment::VERSION, about = "Transductive robust learning testbed")]
pub struct Cli {
    /// Overrides the scenario or config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for experiments (0 = one per core).
    #[arg(long, global = true, env = "TRL_THREADS")]
    threads: Option<usize>,
    #[arg(long, global = true, value_enum, default_value = "json")]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Checks a scenario file.
    Validate { scenario: PathBuf },
    /// VC dimension and relaxed robust dimensions for U and its inverse.
    Dims { scenario: PathBuf },
    /// Runs the selector once.
    Learn {
        scenario: PathBuf,
        /// Perturbed training pairs, `x:y,x:y,...` with y in {-1,1}.
        #[arg(long)]
        train: String,
        /// Perturbed test points, `x,x,...`.
        #[arg(long)]
        test: String,
        #[arg(long, default_value = "agnostic")]
        selector: SelectionRule,
    },
    /// Runs one attack; samples are drawn from the scenario when omitted.
    Attack(AttackArgs),
    /// Behavior set size against the Sauer-type bound.
    Sauer {
        scenario: PathBuf,
        /// Points `z_1,..,z_n`.
        #[arg(long)]
        points: String,
    },
    /// Full Monte-Carlo run; writes the trial CSV and the JSON summary.
    Experiment {
        config: PathBuf,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        summary: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct AttackArgs {
    scenario: PathBuf,
    /// Clean training pairs `x:y,...`.
    #[arg(long)]
    train: Option<String>,
    /// Clean test pairs `x:y,...`.
    #[arg(long)]
    test: Option<String>,
    #[arg(long, default_value = "agnostic")]
    selector: SelectionRule,
    #[arg(long, default_value = "exact")]
    mode: AttackMode,
    #[arg(long, default_value_t = 0)]
    restarts: usize,
    #[arg(long)]
    max_evaluations: Option<u64>,
    #[arg(long)]
    exact_cap: Option<u64>,
    /// Perturbs the training points too.
    #[arg(long)]
    attack_train: bool,
    /// Scores the worst member of Δ instead of the first.
    #[arg(long)]
    worst_member: bool,
}

fn parse_indices(text: &str) -> Result<Vec<usize>> {
    text.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse().map_err(|_| Error::Config(format!("`{t}` is not an instance index"))))
        .collect()
}

fn parse_pairs(text: &str) -> Result<Vec<(usize, Label)>> {
    text.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            let (x, y) = t
                .split_once(':')
                .ok_or_else(|| Error::Config(format!("`{t}` is not of the form x:y")))?;
            let x = x.trim().parse().map_err(|_| Error::Config(format!("`{x}` is not an instance index")))?;
            let y: i64 = y.trim().parse().map_err(|_| Error::Config(format!("`{y}` is not a label")))?;
            Ok((x, Label::from_sign(y)?))
        })
        .collect()
}

fn to_value<T: Serialize>(v: &T) -> Result<Value> {
    serde_json::to_value(v).map_err(|e| Error::Io(e.to_string()))
}

/// Flattens nested objects into dotted keys; arrays of scalars become
/// `;`-joined strings.
fn flatten(prefix: &str, value: &Value, out: &mut Vec<(String, String)>) {
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, v, out);
            }
        }
        Value::Array(items) if items.iter().all(|v| !v.is_object() && !v.is_array()) => {
            let joined = items.iter().map(scalar).collect::<Vec<_>>().join(";");
            out.push((prefix.to_string(), joined));
        }
        Value::Array(items) => {
            for (i, v) in items.iter().enumerate() {
                flatten(&format!("{prefix}.{i}"), v, out);
            }
        }
        other => out.push((prefix.to_string(), scalar(other))),
    }
}

fn scalar(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

fn emit(out: &mut dyn Write, format: Format, value: &Value) -> Result<()> {
    match format {
        Format::Json => {
            let text = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
            writeln!(out, "{text}")?;
        }
        Format::Csv => {
            let mut rows = Vec::new();
            flatten("", value, &mut rows);
            let mut wtr = csv::Writer::from_writer(out);
            wtr.write_record(["key", "value"])?;
            for (k, v) in rows {
                wtr.write_record([k, v])?;
            }
            wtr.flush()?;
        }
    }
    Ok(())
}

fn validate(path: &Path) -> Result<Value> {
    let s = Scenario::load(path)?;
    Ok(json!({
        "valid": true,
        "domain_size": s.domain.size(),
        "class_size": s.class.len(),
        "atoms": s.distribution.atoms().len(),
        "reflexive": s.relation.is_reflexive(),
        "max_degree": s.relation.max_degree(),
    }))
}

fn dims(path: &Path) -> Result<Value> {
    let s = Scenario::load(path)?;
    let vc = vc_dimension(&s.class)?;
    let (rdim_u, cert_u) = relaxed_robust_dimension(&s.class, &s.relation)?;
    let (rdim_inv, cert_inv) = relaxed_robust_dimension(&s.class, &s.relation.invert())?;
    Ok(json!({
        "vc": vc,
        "rdim_u": rdim_u,
        "rdim_u_inverse": rdim_inv,
        "certificate_u": to_value(&cert_u)?,
        "certificate_u_inverse": to_value(&cert_inv)?,
    }))
}

fn learn(path: &Path, train: &str, test: &str, rule: SelectionRule) -> Result<Value> {
    let s = Scenario::load(path)?;
    let train = LabeledDataset::new(&s.domain, parse_pairs(train)?)?;
    let test = parse_indices(test)?;
    for &z in &test {
        s.domain.check(z)?;
    }
    let selector = RobustSelector::new(&s.class, &s.relation)?;
    let r = selector.select(rule, &train, &test)?;
    Ok(json!({
        "selector": rule.to_string(),
        "chosen_index": r.chosen_index,
        "chosen": r.chosen.signs(),
        "objective": r.objective.value(),
        "objective_fraction": r.objective.to_string(),
        "delta_set_size": r.delta_set_size,
        "labels": r.labels.iter().map(|y| y.sign()).collect::<Vec<_>>(),
    }))
}

fn run_attack(args: &AttackArgs, seed: Option<u64>) -> Result<Value> {
    let s = Scenario::load(&args.scenario)?;
    let seed = seed.unwrap_or(s.spec.seed);
    let (drawn_train, drawn_test) = draw_trial(&s.distribution, s.spec.n, s.spec.m, seed, 0);
    let train = match &args.train {
        Some(t) => LabeledDataset::new(&s.domain, parse_pairs(t)?)?,
        None => drawn_train,
    };
    let test = match &args.test {
        Some(t) => LabeledDataset::new(&s.domain, parse_pairs(t)?)?,
        None => drawn_test,
    };
    let mut budget = AttackBudget {
        mode: args.mode,
        restarts: args.restarts,
        seed,
        ..AttackBudget::default()
    };
    if let Some(v) = args.max_evaluations {
        budget.max_evaluations = v;
    }
    if let Some(v) = args.exact_cap {
        budget.exact_cap = v;
    }
    let selector = RobustSelector::new(&s.class, &s.relation)?;
    let learner = Learner::Selector {
        selector: &selector,
        rule: args.selector,
        worst_member: args.worst_member,
    };
    let r = attack(learner, &train, &test, &s.relation, args.attack_train, &budget)?;
    Ok(json!({
        "clean_train": to_value(&train)?,
        "clean_test": to_value(&test)?,
        "perturbed_test": r.perturbed_test,
        "perturbed_train": r.perturbed_train.map(|p| p.instances()),
        "achieved_error": r.achieved_error.value(),
        "achieved_errors": r.achieved_error.errors,
        "evaluations": r.evaluations,
        "exact": r.exact,
        "hypothesis": r.hypothesis,
        "delta_size": r.delta_size,
    }))
}

fn sauer(path: &Path, points: &str) -> Result<Value> {
    let s = Scenario::load(path)?;
    let points = parse_indices(points)?;
    let check = sauer_check(&s.class, &s.relation, &points)?;
    let behaviors = behavior_set(&s.class, &s.relation, &points)?;
    let patterns: Vec<String> = behaviors
        .behaviors
        .iter()
        .map(|b| b.iter().map(|y| y.to_string()).collect::<Vec<_>>().join(" "))
        .collect();
    Ok(json!({
        "points": points,
        "behaviors": check.lhs,
        "bound": check.rhs.to_string(),
        "rdim": check.rdim,
        "holds": check.holds,
        "patterns": patterns,
    }))
}

fn experiment(
    cli: &Cli,
    path: &Path,
    csv: Option<&PathBuf>,
    summary: Option<&PathBuf>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<()> {
    let mut config = ExperimentConfig::load(path)?;
    if cli.seed.is_some() {
        config.seed = cli.seed;
    }
    let scenario = Scenario::load(&config.scenario)?;
    let output = run_experiment(&config, &scenario, cli.threads)?;
    let csv_path = csv.cloned().or(config.outputs.csv.clone());
    let summary_path = summary.cloned().or(config.outputs.summary.clone());
    match (&csv_path, &summary_path) {
        (Some(c), Some(s)) => write_results(&output.records, &output.summary, c, s)?,
        (Some(c), None) => {
            let file = std::fs::File::create(c).map_err(|e| Error::Io(format!("{}: {e}", c.display())))?;
            write_records_csv(std::io::BufWriter::new(file), &output.records)?;
        }
        (None, Some(s)) => std::fs::write(s, summary_json(&output.summary)?)?,
        (None, None) => {}
    }
    match cli.format {
        Format::Json => write!(out, "{}", summary_json(&output.summary)?)?,
        Format::Csv => write_records_csv(&mut *out, &output.records)?,
    }
    writeln!(err, "wall-clock: {:.3}s", output.elapsed.as_secs_f64())?;
    Ok(())
}

fn error_value(e: &Error) -> Value {
    let kind = if e.is_validation() { "validation" } else { "runtime" };
    let debug = format!("{e:?}");
    let code: String = debug.chars().take_while(|c| c.is_alphanumeric()).collect();
    let mut inner = Map::new();
    inner.insert("kind".into(), kind.into());
    inner.insert("code".into(), code.into());
    inner.insert("message".into(), e.to_string().into());
    json!({ "error": inner })
}

fn report(e: &Error, format: Format, err: &mut dyn Write) -> i32 {
    let _ = match format {
        Format::Json => writeln!(err, "{}", error_value(e)),
        Format::Csv => writeln!(err, "error: {e}"),
    };
    if e.is_validation() {
        1
    } else {
        2
    }
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = if code == 0 {
                write!(out, "{}", e.render())
            } else {
                write!(err, "{}", e.render())
            };
            return code;
        }
    };
    let result = match &cli.command {
        Command::Validate { scenario } => validate(scenario).and_then(|v| emit(out, cli.format, &v)),
        Command::Dims { scenario } => dims(scenario).and_then(|v| emit(out, cli.format, &v)),
        Command::Learn {
            scenario,
            train,
            test,
            selector,
        } => learn(scenario, train, test, *selector).and_then(|v| emit(out, cli.format, &v)),
        Command::Attack(args) => run_attack(args, cli.seed).and_then(|v| emit(out, cli.format, &v)),
        Command::Sauer { scenario, points } => sauer(scenario, points).and_then(|v| emit(out, cli.format, &v)),
        Command::Experiment { config, csv, summary } => {
            experiment(&cli, config, csv.as_ref(), summary.as_ref(), out, err)
        }
    };
    match result {
        Ok(()) => 0,
        Err(e) => report(&e, cli.format, err),
    }
}
