//! Monte-Carlo experiments: draw samples, attack the learner, compare the
//! attacked error with the bound, aggregate.
//!
//! Trial `t` draws from its own ChaCha20 stream (`seed`, stream `t`), so
//! the output does not depend on the number of worker threads. The summary
//! is computed from integer tallies only and contains no timing, which
//! keeps it byte-identical across runs.

use std::path::Path;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Binomial, DiscreteCDF};

use crate::adversary::{attack, AttackBudget, AttackMode, Learner};
use crate::bounds::{agnostic_bound, BoundReport};
use crate::combinatorics::{relaxed_robust_dimension, vc_dimension};
use crate::error::{Error, Result};
use crate::learner::{RobustSelector, SelectionRule};
use crate::model::{sample_dataset_with, FiniteDistribution, Label, LabeledDataset};
use crate::risk::{opt, robust_instability};
use crate::scenario::{ExperimentConfig, Scenario, ScenarioSpec};

/// Environment variable holding the default worker count.
pub const THREADS_ENV: &str = "TRL_THREADS";

/// Confidence level of the violation-count gate.
pub const GATE_LEVEL: f64 = 0.999;

pub const VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "+", env!("TRL_GIT_DESCRIBE"));

/// The generator for trial `trial`: one stream per trial under one key.
pub fn trial_rng(seed: u64, trial: usize) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

/// Clean training and test samples of one trial.
pub fn draw_trial(dist: &FiniteDistribution, n: usize, m: usize, seed: u64, trial: usize) -> (LabeledDataset, LabeledDataset) {
    let mut rng = trial_rng(seed, trial);
    let train = sample_dataset_with(dist, n, &mut rng);
    let test = sample_dataset_with(dist, m, &mut rng);
    (train, test)
}

/// Smallest `k` with `P[Binomial(trials, p) ≤ k] ≥ level`.
pub fn binomial_quantile(trials: u64, p: f64, level: f64) -> Result<u64> {
    let b = Binomial::new(p, trials).map_err(|e| Error::Config(format!("binomial({trials}, {p}): {e}")))?;
    Ok((0..=trials).find(|&k| b.cdf(k) >= level).unwrap_or(trials))
}

mod semi {
    use serde::{de::Error as _, Deserialize, Deserializer, Serializer};

    use crate::model::Label;

    fn join<T>(items: &[T], f: impl Fn(&T) -> String) -> String {
        items.iter().map(f).collect::<Vec<_>>().join(";")
    }

    fn split(text: &str) -> impl Iterator<Item = &str> {
        text.split(';').filter(|s| !s.is_empty())
    }

    pub mod indices {
        use super::*;

        pub fn serialize<S: Serializer>(v: &[usize], s: S) -> Result<S::Ok, S::Error> {
            s.serialize_str(&join(v, |x| x.to_string()))
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<usize>, D::Error> {
            let text = String::deserialize(d)?;
            split(&text).map(|t| t.parse().map_err(D::Error::custom)).collect()
        }
    }

    pub mod labels {
        use super::*;

        pub fn serialize<S: Serializer>(v: &[Label], s: S) -> Result<S::Ok, S::Error> {
            s.serialize_str(&join(v, |y| y.sign().to_string()))
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Label>, D::Error> {
            let text = String::deserialize(d)?;
            split(&text)
                .map(|t| {
                    let sign: i64 = t.parse().map_err(D::Error::custom)?;
                    Label::from_sign(sign).map_err(D::Error::custom)
                })
                .collect()
        }
    }
}

/// One Monte-Carlo draw. Vectors are written to CSV as `;`-joined values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    #[serde(with = "semi::indices")]
    pub train_x: Vec<usize>,
    #[serde(with = "semi::labels")]
    pub train_y: Vec<Label>,
    #[serde(with = "semi::indices")]
    pub test_x: Vec<usize>,
    #[serde(with = "semi::labels")]
    pub test_y: Vec<Label>,
    /// Chosen training perturbation; empty when infeasible.
    #[serde(with = "semi::indices")]
    pub perturbed_train: Vec<usize>,
    #[serde(with = "semi::indices")]
    pub perturbed_test: Vec<usize>,
    pub hypothesis: Option<usize>,
    pub delta_size: Option<usize>,
    pub attacked_errors: usize,
    pub attacked_error: f64,
    pub clean_errors: usize,
    pub clean_error: f64,
    /// Objective shared by the members of `Δ` at the chosen perturbation.
    pub delta_objective: Option<f64>,
    /// Most unstable test points of any member of `Δ` at the chosen perturbation.
    pub delta_unstable_max: Option<usize>,
    pub evaluations: u64,
    pub exact: bool,
    pub infeasible: bool,
    pub bound: f64,
    pub violation: bool,
}

/// The configuration as it affects results. Paths are left out so that
/// runs writing to different places still agree byte for byte.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub scenario: ScenarioSpec,
    pub selector: SelectionRule,
    pub attack: AttackBudget,
    pub attack_train: bool,
    pub worst_member: bool,
    pub trials: usize,
    pub seed: u64,
    pub vc_constant: f64,
}

/// Everything about a run that is fixed before the first trial.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunHeader {
    pub version: String,
    pub config: ConfigEcho,
    pub bounds: BoundReport,
    /// `realizable_eps` for the realizable rule, `agnostic_eps_rdim` otherwise.
    pub applicable_bound: f64,
    pub opt_composed: f64,
    pub opt_witness: usize,
    /// Largest violation count compatible with a violation rate of `δ`.
    pub gate_quantile: u64,
    /// Whether every attack was exhaustive.
    pub certifying: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    #[serde(flatten)]
    pub header: RunHeader,
    pub trials: usize,
    pub infeasible_trials: usize,
    /// Estimate of the transductive robust risk.
    pub mean_attacked_error: f64,
    pub mean_clean_error: f64,
    pub violation_count: usize,
    pub violation_frequency: f64,
    pub gate_passed: bool,
    pub total_evaluations: u64,
}

/// Aggregates trial records under a fixed header.
pub fn summarize(header: RunHeader, records: &[TrialRecord]) -> Result<ExperimentSummary> {
    if records.is_empty() {
        return Err(Error::Config("trials must be at least 1".into()));
    }
    let m = header.config.scenario.m;
    let t = records.len();
    let cells = (t * m) as f64;
    let violation_count = records.iter().filter(|r| r.violation).count();
    Ok(ExperimentSummary {
        trials: t,
        infeasible_trials: records.iter().filter(|r| r.infeasible).count(),
        mean_attacked_error: records.iter().map(|r| r.attacked_errors).sum::<usize>() as f64 / cells,
        mean_clean_error: records.iter().map(|r| r.clean_errors).sum::<usize>() as f64 / cells,
        violation_frequency: violation_count as f64 / t as f64,
        gate_passed: violation_count as u64 <= header.gate_quantile,
        violation_count,
        total_evaluations: records.iter().map(|r| r.evaluations).sum(),
        header,
    })
}

pub struct ExperimentOutput {
    pub records: Vec<TrialRecord>,
    pub summary: ExperimentSummary,
    pub elapsed: Duration,
}

fn resolve_threads(threads: Option<usize>) -> Result<usize> {
    match threads {
        Some(k) => Ok(k),
        None => match std::env::var(THREADS_ENV) {
            Ok(v) => v
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("{THREADS_ENV}={v} is not a thread count"))),
            Err(_) => Ok(0),
        },
    }
}

struct TrialContext<'a> {
    scenario: &'a Scenario,
    selector: RobustSelector<'a>,
    config: &'a ExperimentConfig,
    seed: u64,
    bound: f64,
}

impl TrialContext<'_> {
    fn run(&self, trial: usize) -> Result<TrialRecord> {
        let spec = &self.scenario.spec;
        let (train, test) = draw_trial(&self.scenario.distribution, spec.n, spec.m, self.seed, trial);
        let truth = test.labels();
        let test_x = test.instances();
        let rule = self.config.selector;
        let m = spec.m;
        let clean_errors = match self.selector.evaluate(rule, train.points(), &test_x, Some(&truth), self.config.worst_member) {
            Ok(e) => e.errors,
            Err(Error::Infeasible) => m,
            Err(e) => return Err(e),
        };
        let learner = Learner::Selector {
            selector: &self.selector,
            rule,
            worst_member: self.config.worst_member,
        };
        let mut record = TrialRecord {
            trial,
            train_x: train.instances(),
            train_y: train.labels(),
            test_x,
            test_y: truth,
            perturbed_train: Vec::new(),
            perturbed_test: Vec::new(),
            hypothesis: None,
            delta_size: None,
            attacked_errors: m,
            attacked_error: 1.0,
            clean_errors,
            clean_error: clean_errors as f64 / m as f64,
            delta_objective: None,
            delta_unstable_max: None,
            evaluations: 0,
            exact: self.config.attack.mode == AttackMode::Exact,
            infeasible: true,
            bound: self.bound,
            violation: 1.0 > self.bound,
        };
        let result = match attack(
            learner,
            &train,
            &test,
            &self.scenario.relation,
            self.config.attack_train,
            &self.config.attack,
        ) {
            Ok(r) => r,
            Err(Error::Infeasible) => return Ok(record),
            Err(e) => return Err(e),
        };
        let perturbed_train = match &result.perturbed_train {
            Some(p) => p.clone(),
            None => train.clone(),
        };
        let (members, objective) = self.selector.delta(rule, perturbed_train.points(), &result.perturbed_test)?;
        let mut unstable_max = 0;
        for &h in &members {
            let r = robust_instability(self.scenario.class.get(h), &result.perturbed_test, self.selector.inverse())?;
            unstable_max = unstable_max.max(r.errors);
        }
        record.perturbed_train = perturbed_train.instances();
        record.perturbed_test = result.perturbed_test;
        record.hypothesis = result.hypothesis;
        record.delta_size = result.delta_size;
        record.attacked_errors = result.achieved_error.errors;
        record.attacked_error = result.achieved_error.value();
        record.delta_objective = Some(objective.value());
        record.delta_unstable_max = Some(unstable_max);
        record.evaluations = result.evaluations;
        record.exact = result.exact;
        record.infeasible = false;
        record.violation = record.attacked_error > self.bound;
        Ok(record)
    }
}

/// Everything fixed before the trials run: the config echo, dimensions,
/// `OPT_{U⁻¹(U)}`, the bounds and the gate.
pub fn prepare(config: &ExperimentConfig, scenario: &Scenario) -> Result<RunHeader> {
    let spec = &scenario.spec;
    let best = opt(&scenario.class, &scenario.relation.compose_inverse(), &scenario.distribution);
    if config.selector == SelectionRule::Realizable && best.risk != 0.0 {
        return Err(Error::PreconditionViolated(format!(
            "realizable selector needs OPT over the composed perturbation set to be 0, got {}",
            best.risk
        )));
    }
    let vc = match config.vc {
        Some(v) => v,
        None => vc_dimension(&scenario.class)?,
    };
    let rdim = match config.rdim {
        Some(r) => r,
        None => relaxed_robust_dimension(&scenario.class, &scenario.relation.invert())?.0,
    };
    let opt_composed = best.risk.clamp(0.0, 1.0);
    let bounds = agnostic_bound(vc, rdim, opt_composed, spec.n, spec.delta, config.vc_constant)?;
    let applicable_bound = match config.selector {
        SelectionRule::Realizable => bounds.realizable_eps,
        SelectionRule::Agnostic => bounds.agnostic_eps_rdim,
    };
    let trials = config.trials.unwrap_or(spec.trials);
    if trials == 0 {
        return Err(Error::Config("trials must be at least 1".into()));
    }
    Ok(RunHeader {
        version: VERSION.to_string(),
        config: ConfigEcho {
            scenario: spec.clone(),
            selector: config.selector,
            attack: config.attack.clone(),
            attack_train: config.attack_train,
            worst_member: config.worst_member,
            trials,
            seed: config.seed.unwrap_or(spec.seed),
            vc_constant: config.vc_constant,
        },
        applicable_bound,
        opt_composed,
        opt_witness: best.witness,
        gate_quantile: binomial_quantile(trials as u64, spec.delta, GATE_LEVEL)?,
        certifying: config.attack.mode == AttackMode::Exact,
        bounds,
    })
}

/// Runs all trials on a local pool of `threads` workers (`None`: the
/// environment default, `Some(0)`: one per core).
pub fn run_experiment(config: &ExperimentConfig, scenario: &Scenario, threads: Option<usize>) -> Result<ExperimentOutput> {
    let start = Instant::now();
    let header = prepare(config, scenario)?;
    let ctx = TrialContext {
        scenario,
        selector: RobustSelector::new(&scenario.class, &scenario.relation)?,
        config,
        seed: header.config.seed,
        bound: header.applicable_bound,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(resolve_threads(threads)?)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let trials = header.config.trials;
    let records = pool.install(|| (0..trials).into_par_iter().map(|t| ctx.run(t)).collect::<Result<Vec<_>>>())?;
    let summary = summarize(header, &records)?;
    Ok(ExperimentOutput {
        records,
        summary,
        elapsed: start.elapsed(),
    })
}

pub const CSV_COLUMNS: [&str; 20] = [
    "trial",
    "train_x",
    "train_y",
    "test_x",
    "test_y",
    "perturbed_train",
    "perturbed_test",
    "hypothesis",
    "delta_size",
    "attacked_errors",
    "attacked_error",
    "clean_errors",
    "clean_error",
    "delta_objective",
    "delta_unstable_max",
    "evaluations",
    "exact",
    "infeasible",
    "bound",
    "violation",
];

pub fn write_records_csv<W: std::io::Write>(out: W, records: &[TrialRecord]) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    wtr.write_record(CSV_COLUMNS)?;
    for r in records {
        wtr.serialize(r)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_records_csv<R: std::io::Read>(input: R) -> Result<Vec<TrialRecord>> {
    let mut rdr = csv::Reader::from_reader(input);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header != CSV_COLUMNS {
        return Err(Error::Config(format!("unexpected CSV header {header:?}")));
    }
    rdr.deserialize().map(|r| r.map_err(Error::from)).collect()
}

pub fn summary_json(summary: &ExperimentSummary) -> Result<String> {
    let mut text = serde_json::to_string_pretty(summary).map_err(|e| Error::Io(e.to_string()))?;
    text.push('\n');
    Ok(text)
}

/// Writes the per-trial CSV and the JSON summary.
pub fn write_results(records: &[TrialRecord], summary: &ExperimentSummary, csv_path: &Path, summary_path: &Path) -> Result<()> {
    for path in [csv_path, summary_path] {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
    }
    let file = std::fs::File::create(csv_path).map_err(|e| Error::Io(format!("{}: {e}", csv_path.display())))?;
    write_records_csv(std::io::BufWriter::new(file), records)?;
    std::fs::write(summary_path, summary_json(summary)?)
        .map_err(|e| Error::Io(format!("{}: {e}", summary_path.display())))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scenario(text: &str) -> Scenario {
        Scenario::from_json(text).unwrap()
    }

    const REALIZABLE: &str = r#"{
        "domain_size": 10,
        "class": {"family": "thresholds"},
        "perturbation": {"family": "interval_ball", "radius": 1},
        "distribution": [[0, -1, 0.5], [9, 1, 0.5]],
        "n": 2, "m": 2, "delta": 0.05, "trials": 20, "seed": 3
    }"#;

    #[test]
    fn binomial_gate_values() {
        assert_eq!(binomial_quantile(500, 0.05, GATE_LEVEL).unwrap(), 41);
        assert_eq!(binomial_quantile(500, 0.1, GATE_LEVEL).unwrap(), 72);
        assert_eq!(binomial_quantile(10, 0.5, 0.5).unwrap(), 5);
    }

    #[test]
    fn trial_streams_are_independent_of_order() {
        let s = scenario(REALIZABLE);
        let a = draw_trial(&s.distribution, 2, 2, 3, 5);
        let _ = draw_trial(&s.distribution, 2, 2, 3, 4);
        assert_eq!(a, draw_trial(&s.distribution, 2, 2, 3, 5));
        let distinct: std::collections::BTreeSet<_> =
            (0..20).map(|t| draw_trial(&s.distribution, 4, 4, 3, t)).map(|(a, b)| (a.instances(), b.instances())).collect();
        assert!(distinct.len() > 5);
    }

    #[test]
    fn realizable_run_has_zero_attacked_error() {
        let s = scenario(REALIZABLE);
        let config = ExperimentConfig::new("unused", SelectionRule::Realizable);
        let out = run_experiment(&config, &s, Some(2)).unwrap();
        assert_eq!(out.summary.trials, 20);
        assert_eq!(out.summary.violation_count, 0);
        assert_eq!(out.summary.header.opt_witness, 3);
        assert!(out.summary.gate_passed);
        let mut both_sides = 0;
        for r in &out.records {
            assert!(!r.infeasible);
            assert_eq!(r.delta_unstable_max, Some(0));
            assert!(r.attacked_errors >= r.clean_errors);
            // with both atoms in the training sample every member of Δ is
            // -1 on U⁻¹(z) for z near 0 and +1 on U⁻¹(z) for z near 9
            if r.train_y.contains(&Label::Neg) && r.train_y.contains(&Label::Pos) {
                both_sides += 1;
                assert_eq!(r.attacked_errors, 0, "{r:?}");
            }
        }
        assert!(both_sides > 0);
    }

    #[test]
    fn realizable_precondition_is_checked() {
        let noisy = REALIZABLE.replace("[[0, -1, 0.5], [9, 1, 0.5]]", "[[0, -1, 0.4], [0, 1, 0.1], [9, 1, 0.5]]");
        let s = scenario(&noisy);
        let config = ExperimentConfig::new("unused", SelectionRule::Realizable);
        assert!(matches!(run_experiment(&config, &s, Some(1)), Err(Error::PreconditionViolated(_))));
        let agnostic = ExperimentConfig::new("unused", SelectionRule::Agnostic);
        assert!(run_experiment(&agnostic, &s, Some(1)).is_ok());
    }

    #[test]
    fn csv_round_trip_recomputes_summary() {
        let s = scenario(REALIZABLE);
        let config = ExperimentConfig::new("unused", SelectionRule::Agnostic);
        let out = run_experiment(&config, &s, Some(1)).unwrap();
        let mut buf = Vec::new();
        write_records_csv(&mut buf, &out.records).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().count(), 21);
        let back = read_records_csv(&buf[..]).unwrap();
        assert_eq!(back, out.records);
        let json = summary_json(&out.summary).unwrap();
        let parsed: ExperimentSummary = serde_json::from_str(&json).unwrap();
        assert_eq!(summarize(parsed.header.clone(), &back).unwrap(), parsed);
    }

    #[test]
    fn empty_records_give_header_only_csv() {
        let mut buf = Vec::new();
        write_records_csv(&mut buf, &[]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1);
        assert!(text.starts_with("trial,train_x"));
        assert!(read_records_csv(text.as_bytes()).unwrap().is_empty());
    }
}
