//! White-box adversary against the deterministic learner.
//!
//! A candidate is one perturbation per attacked coordinate: the training
//! coordinates (when the train set is attacked) come first, then the test
//! coordinates. Exact mode walks the whole product `∏ U(x_i)` as an
//! odometer in lexicographic order and keeps the first strict maximum, so
//! ties resolve to the lexicographically smallest candidate. Greedy modes
//! return a feasible candidate and hence a lower bound on the supremum.

use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learner::{RobustSelector, SelectionRule};
use crate::model::{HypothesisClass, Label, LabeledDataset, Predictor};
use crate::perturb::PerturbationRelation;
use crate::risk::EmpiricalRisk;

pub const DEFAULT_EXACT_CAP: u64 = 10_000_000;
pub const DEFAULT_MAX_EVALUATIONS: u64 = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackMode {
    Exact,
    /// Coordinate ascent from the natural start only.
    Greedy,
    /// Coordinate ascent from the natural start plus `restarts` uniformly
    /// random starts.
    #[serde(alias = "random-restart")]
    RandomRestart,
}

impl FromStr for AttackMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Self::Exact),
            "greedy" => Ok(Self::Greedy),
            "random_restart" | "random-restart" => Ok(Self::RandomRestart),
            other => Err(Error::Config(format!("unknown attack mode `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AttackBudget {
    pub mode: AttackMode,
    pub restarts: usize,
    /// Evaluation cap for the greedy modes; 0 means unlimited.
    pub max_evaluations: u64,
    /// Largest product space exact mode will enumerate.
    pub exact_cap: u64,
    pub seed: u64,
}

impl Default for AttackBudget {
    fn default() -> Self {
        Self {
            mode: AttackMode::Exact,
            restarts: 0,
            max_evaluations: DEFAULT_MAX_EVALUATIONS,
            exact_cap: DEFAULT_EXACT_CAP,
            seed: 0,
        }
    }
}

impl AttackBudget {
    pub fn exact() -> Self {
        Self::default()
    }

    pub fn greedy() -> Self {
        Self {
            mode: AttackMode::Greedy,
            ..Self::default()
        }
    }

    pub fn random_restart(restarts: usize, seed: u64) -> Self {
        Self {
            mode: AttackMode::RandomRestart,
            restarts,
            seed,
            ..Self::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttackResult {
    pub perturbed_test: Vec<usize>,
    pub perturbed_train: Option<LabeledDataset>,
    pub achieved_error: EmpiricalRisk,
    pub evaluations: u64,
    pub exact: bool,
    /// Class index the learner output at the maximizer (selector targets).
    pub hypothesis: Option<usize>,
    pub delta_size: Option<usize>,
}

/// What the adversary attacks.
#[derive(Clone, Copy)]
pub enum Learner<'s, 'c> {
    /// The transductive selector, rerun on every candidate. With
    /// `worst_member`, the error counted is the largest over all of `Δ`
    /// instead of the canonical member's.
    Selector {
        selector: &'s RobustSelector<'c>,
        rule: SelectionRule,
        worst_member: bool,
    },
    /// A predictor committed before the perturbations are chosen.
    Fixed(&'s dyn Predictor),
}

struct Outcome {
    errors: usize,
    hypothesis: Option<usize>,
    delta_size: Option<usize>,
}

struct Space<'a> {
    learner: Learner<'a, 'a>,
    choices: Vec<&'a [usize]>,
    train: &'a LabeledDataset,
    test_labels: Vec<Label>,
    attack_train: bool,
    train_buf: Vec<(usize, Label)>,
}

impl<'a> Space<'a> {
    fn n_train(&self) -> usize {
        if self.attack_train {
            self.train.len()
        } else {
            0
        }
    }

    fn evaluate(&mut self, candidate: &[usize]) -> Result<Outcome> {
        let split = self.n_train();
        let test = &candidate[split..];
        match self.learner {
            Learner::Fixed(p) => Ok(Outcome {
                errors: test
                    .iter()
                    .zip(&self.test_labels)
                    .filter(|&(&z, &y)| p.predict(z) != y)
                    .count(),
                hypothesis: None,
                delta_size: None,
            }),
            Learner::Selector {
                selector,
                rule,
                worst_member,
            } => {
                if self.attack_train {
                    for (slot, (&z, &(_, y))) in self.train_buf.iter_mut().zip(candidate[..split].iter().zip(self.train.points())) {
                        *slot = (z, y);
                    }
                }
                let train = if self.attack_train {
                    &self.train_buf[..]
                } else {
                    self.train.points()
                };
                let eval = selector.evaluate(rule, train, test, Some(&self.test_labels), worst_member)?;
                Ok(Outcome {
                    errors: eval.errors,
                    hypothesis: Some(eval.hypothesis),
                    delta_size: Some(eval.delta_size),
                })
            }
        }
    }

    fn result(&self, best: &[usize], outcome: Outcome, evaluations: u64, exact: bool) -> AttackResult {
        let split = self.n_train();
        AttackResult {
            perturbed_test: best[split..].to_vec(),
            perturbed_train: self.attack_train.then(|| self.train.with_instances(&best[..split])),
            achieved_error: EmpiricalRisk::new(outcome.errors, self.test_labels.len()),
            evaluations,
            exact,
            hypothesis: outcome.hypothesis,
            delta_size: outcome.delta_size,
        }
    }

    fn exact(&mut self, cap: u64) -> Result<AttackResult> {
        let candidates = self
            .choices
            .iter()
            .fold(1u128, |acc, c| acc.saturating_mul(c.len() as u128));
        if candidates > cap as u128 {
            return Err(Error::BudgetExceeded {
                candidates,
                cap: cap as u128,
            });
        }
        let m = self.test_labels.len();
        let k = self.choices.len();
        let mut digits = vec![0usize; k];
        let mut candidate: Vec<usize> = self.choices.iter().map(|c| c[0]).collect();
        let mut best_candidate = candidate.clone();
        let mut best = self.evaluate(&candidate)?;
        let mut evaluations = 1u64;
        'search: while best.errors < m {
            // advance the odometer; the last coordinate moves fastest
            let mut i = k;
            loop {
                if i == 0 {
                    break 'search;
                }
                i -= 1;
                digits[i] += 1;
                if digits[i] < self.choices[i].len() {
                    candidate[i] = self.choices[i][digits[i]];
                    break;
                }
                digits[i] = 0;
                candidate[i] = self.choices[i][0];
            }
            let outcome = self.evaluate(&candidate)?;
            evaluations += 1;
            if outcome.errors > best.errors {
                best = outcome;
                best_candidate.copy_from_slice(&candidate);
            }
        }
        Ok(self.result(&best_candidate, best, evaluations, true))
    }

    /// Coordinate ascent from `start`: each step moves one coordinate to its
    /// best strictly improving value, sweeping until a pass changes nothing.
    fn ascend(&mut self, start: Vec<usize>, evaluations: &mut u64, limit: u64) -> Result<(Vec<usize>, Outcome)> {
        let m = self.test_labels.len();
        let mut current = start;
        let mut value = self.evaluate(&current)?;
        *evaluations += 1;
        let mut improved = true;
        while improved && value.errors < m {
            improved = false;
            for i in 0..current.len() {
                let original = current[i];
                let mut step: Option<(usize, Outcome)> = None;
                for &v in self.choices[i] {
                    if v == original {
                        continue;
                    }
                    if limit > 0 && *evaluations >= limit {
                        current[i] = original;
                        if let Some((v, o)) = step {
                            current[i] = v;
                            value = o;
                        }
                        return Ok((current, value));
                    }
                    current[i] = v;
                    let o = self.evaluate(&current)?;
                    *evaluations += 1;
                    let target = step.as_ref().map_or(value.errors, |(_, s)| s.errors);
                    if o.errors > target {
                        step = Some((v, o));
                    }
                }
                current[i] = original;
                if let Some((v, o)) = step {
                    current[i] = v;
                    value = o;
                    improved = true;
                    if value.errors == m {
                        break;
                    }
                }
            }
        }
        Ok((current, value))
    }

    fn greedy(&mut self, natural: Vec<usize>, restarts: usize, seed: u64, limit: u64) -> Result<AttackResult> {
        let mut evaluations = 0u64;
        let (mut best_candidate, mut best) = self.ascend(natural, &mut evaluations, limit)?;
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        for _ in 0..restarts {
            if best.errors == self.test_labels.len() || (limit > 0 && evaluations >= limit) {
                break;
            }
            let start: Vec<usize> = self
                .choices
                .iter()
                .map(|c| c[rng.random_range(0..c.len())])
                .collect();
            let (candidate, outcome) = self.ascend(start, &mut evaluations, limit)?;
            if outcome.errors > best.errors || (outcome.errors == best.errors && candidate < best_candidate) {
                best = outcome;
                best_candidate = candidate;
            }
        }
        Ok(self.result(&best_candidate, best, evaluations, false))
    }
}

fn check_points(rel: &PerturbationRelation, data: &LabeledDataset) -> Result<()> {
    for &(x, _) in data.points() {
        rel.domain().check(x)?;
    }
    Ok(())
}

/// Maximizes the learner's test error over perturbations of the test set
/// (and of the training set when `attack_train`).
pub fn attack(
    learner: Learner<'_, '_>,
    clean_train: &LabeledDataset,
    clean_test: &LabeledDataset,
    rel: &PerturbationRelation,
    attack_train: bool,
    budget: &AttackBudget,
) -> Result<AttackResult> {
    if clean_test.is_empty() {
        return Err(Error::EmptyInput("test set"));
    }
    if matches!(learner, Learner::Selector { .. }) && clean_train.is_empty() {
        return Err(Error::EmptyInput("training set"));
    }
    check_points(rel, clean_train)?;
    check_points(rel, clean_test)?;
    let attacked = if attack_train { clean_train.points() } else { &[] };
    let sources: Vec<usize> = attacked
        .iter()
        .chain(clean_test.points())
        .map(|&(x, _)| x)
        .collect();
    let mut space = Space {
        learner,
        choices: sources.iter().map(|&x| rel.neighbors(x)).collect(),
        train: clean_train,
        test_labels: clean_test.labels(),
        attack_train,
        train_buf: clean_train.points().to_vec(),
    };
    match budget.mode {
        AttackMode::Exact => space.exact(budget.exact_cap),
        mode => {
            let natural = sources
                .iter()
                .map(|&x| if rel.contains(x, x) { x } else { rel.neighbors(x)[0] })
                .collect();
            let restarts = if mode == AttackMode::RandomRestart { budget.restarts } else { 0 };
            space.greedy(natural, restarts, budget.seed, budget.max_evaluations)
        }
    }
}

/// Attacks only the test points; the training input is taken as given.
pub fn attack_test(
    clean_test: &LabeledDataset,
    train_input: &LabeledDataset,
    rel: &PerturbationRelation,
    class: &HypothesisClass,
    rule: SelectionRule,
    budget: &AttackBudget,
) -> Result<AttackResult> {
    let selector = RobustSelector::new(class, rel)?;
    let learner = Learner::Selector {
        selector: &selector,
        rule,
        worst_member: false,
    };
    attack(learner, train_input, clean_test, rel, false, budget)
}

/// Attacks the training and test points jointly.
pub fn attack_train_and_test(
    clean_train: &LabeledDataset,
    clean_test: &LabeledDataset,
    rel: &PerturbationRelation,
    class: &HypothesisClass,
    rule: SelectionRule,
    budget: &AttackBudget,
) -> Result<AttackResult> {
    let selector = RobustSelector::new(class, rel)?;
    let learner = Learner::Selector {
        selector: &selector,
        rule,
        worst_member: false,
    };
    attack(learner, clean_train, clean_test, rel, true, budget)
}

/// `(1/m) Σ_i max_{z ∈ U(x̃_i)} 1{predictor(z) ≠ ỹ_i}`.
pub fn pointwise_sup_error<P: Predictor + ?Sized>(
    predictor: &P,
    clean_test: &LabeledDataset,
    rel: &PerturbationRelation,
) -> Result<EmpiricalRisk> {
    if clean_test.is_empty() {
        return Err(Error::EmptyInput("test set"));
    }
    check_points(rel, clean_test)?;
    let errors = clean_test
        .points()
        .iter()
        .filter(|&&(x, y)| rel.neighbors(x).iter().any(|&z| predictor.predict(z) != y))
        .count();
    Ok(EmpiricalRisk::new(errors, clean_test.len()))
}
