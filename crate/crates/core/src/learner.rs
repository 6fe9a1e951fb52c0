//! The transductive robust learner and the reductions between inductive and
//! transductive learning.
//!
//! Given perturbed training pairs `(z, y)` and perturbed test points `z̃`,
//! the learner looks for hypotheses that are robustly correct on `(z, y)`
//! and robustly stable on `z̃`, both with respect to the inverse image
//! `U⁻¹`. The realizable rule requires both robust risks to vanish; the
//! agnostic rule minimizes the larger of the two. Either way the set of
//! acceptable hypotheses (`Δ`) is represented by its first member in class
//! order plus its size; [`RobustSelector::delta`] materializes it when the
//! full set is needed.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Hypothesis, HypothesisClass, Label, LabeledDataset, Predictor};
use crate::perturb::PerturbationRelation;
use crate::risk::EmpiricalRisk;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionRule {
    /// Both robust risks must be zero; an empty `Δ` is an error.
    Realizable,
    /// Minimize `max{robust training error, test instability}`.
    Agnostic,
}

impl FromStr for SelectionRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "realizable" => Ok(Self::Realizable),
            "agnostic" => Ok(Self::Agnostic),
            other => Err(Error::Config(format!("unknown selector '{other}'"))),
        }
    }
}

impl fmt::Display for SelectionRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Realizable => "realizable",
            Self::Agnostic => "agnostic",
        })
    }
}

/// Perturbed training pairs, perturbed test points and the perturbation set.
#[derive(Clone, Debug)]
pub struct TransductiveInput {
    pub train: LabeledDataset,
    pub test: Vec<usize>,
    pub relation: PerturbationRelation,
}

impl TransductiveInput {
    pub fn new(train: LabeledDataset, test: Vec<usize>, relation: PerturbationRelation) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::EmptyInput("training set"));
        }
        if test.is_empty() {
            return Err(Error::EmptyInput("test set"));
        }
        Ok(Self { train, test, relation })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub chosen_index: usize,
    pub chosen: Hypothesis,
    /// `max{R(h; z, y), R(h; z̃)}` for the chosen member.
    pub objective: EmpiricalRisk,
    pub delta_set_size: usize,
    /// `chosen(z̃_i)` for every test point.
    pub labels: Vec<Label>,
}

/// Summary of one pass over the class for a fixed input.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Evaluation {
    /// Test errors of the reported member against the supplied truth.
    pub errors: usize,
    /// Class index of the reported member.
    pub hypothesis: usize,
    pub delta_size: usize,
}

/// A learner prepared for one class and one perturbation set. Holds `U⁻¹`
/// and, per hypothesis and instance, which labels the hypothesis takes on
/// `U⁻¹(z)`, so both robust risks cost one lookup per point.
#[derive(Clone, Debug)]
pub struct RobustSelector<'a> {
    class: &'a HypothesisClass,
    relation: PerturbationRelation,
    inverse: PerturbationRelation,
    size: usize,
    masks: Vec<u8>,
}

impl<'a> RobustSelector<'a> {
    pub fn new(class: &'a HypothesisClass, relation: &PerturbationRelation) -> Result<Self> {
        let size = relation.domain().size();
        if class.domain_size() != size {
            return Err(Error::DimensionMismatch {
                what: "hypothesis class".into(),
                expected: size,
                found: class.domain_size(),
            });
        }
        let inverse = relation.invert();
        let mut masks = vec![0u8; class.len() * size];
        for (i, h) in class.iter().enumerate() {
            for z in 0..size {
                masks[i * size + z] = inverse
                    .neighbors(z)
                    .iter()
                    .fold(0u8, |m, &x| m | h.get(x).bit());
            }
        }
        Ok(Self {
            class,
            relation: relation.clone(),
            inverse,
            size,
            masks,
        })
    }

    pub fn class(&self) -> &'a HypothesisClass {
        self.class
    }

    pub fn relation(&self) -> &PerturbationRelation {
        &self.relation
    }

    pub fn inverse(&self) -> &PerturbationRelation {
        &self.inverse
    }

    /// Some `x̃ ∈ U⁻¹(z)` has `h(x̃) ≠ y`.
    #[inline]
    pub fn robust_miss(&self, h: usize, z: usize, y: Label) -> bool {
        self.masks[h * self.size + z] & !y.bit() != 0
    }

    /// Some `x̃ ∈ U⁻¹(z)` has `h(x̃) ≠ h(z)`.
    #[inline]
    pub fn unstable(&self, h: usize, z: usize) -> bool {
        self.robust_miss(h, z, self.class.get(h).get(z))
    }

    fn check_input(&self, train: &[(usize, Label)], test: &[usize]) -> Result<()> {
        if train.is_empty() {
            return Err(Error::EmptyInput("training set"));
        }
        if test.is_empty() {
            return Err(Error::EmptyInput("test set"));
        }
        for &x in train.iter().map(|(x, _)| x).chain(test) {
            if x >= self.size {
                return Err(Error::IndexOutOfDomain {
                    index: x,
                    size: self.size,
                });
            }
        }
        Ok(())
    }

    /// `max{R_{U⁻¹}(h; z, y), R_{U⁻¹}(h; z̃)}` for class member `h`.
    pub fn objective(&self, h: usize, train: &[(usize, Label)], test: &[usize]) -> EmpiricalRisk {
        let misses = train.iter().filter(|&&(z, y)| self.robust_miss(h, z, y)).count();
        let unstable = test.iter().filter(|&&z| self.unstable(h, z)).count();
        EmpiricalRisk::new(misses, train.len()).max(EmpiricalRisk::new(unstable, test.len()))
    }

    /// One pass over the class. Reports the first member of `Δ` and, when
    /// `worst_member` is set, instead the member of `Δ` with the most test
    /// errors against `truth` (first such in class order).
    pub fn evaluate(
        &self,
        rule: SelectionRule,
        train: &[(usize, Label)],
        test: &[usize],
        truth: Option<&[Label]>,
        worst_member: bool,
    ) -> Result<Evaluation> {
        self.check_input(train, test)?;
        let test_errors = |h: usize| -> usize {
            truth.map_or(0, |t| {
                let hyp = self.class.get(h);
                test.iter().zip(t).filter(|&(&z, &y)| hyp.get(z) != y).count()
            })
        };
        let mut best: Option<EmpiricalRisk> = None;
        let mut report = Evaluation {
            errors: 0,
            hypothesis: 0,
            delta_size: 0,
        };
        for h in 0..self.class.len() {
            let obj = self.objective(h, train, test);
            if rule == SelectionRule::Realizable && !obj.is_zero() {
                continue;
            }
            match best {
                Some(b) if obj > b => continue,
                Some(b) if obj == b => {
                    report.delta_size += 1;
                    if worst_member {
                        let e = test_errors(h);
                        if e > report.errors {
                            report.errors = e;
                            report.hypothesis = h;
                        }
                    }
                }
                _ => {
                    best = Some(obj);
                    report = Evaluation {
                        errors: test_errors(h),
                        hypothesis: h,
                        delta_size: 1,
                    };
                }
            }
        }
        if best.is_none() {
            return Err(Error::Infeasible);
        }
        Ok(report)
    }

    /// Runs the selector and returns the canonical (first) member of `Δ`.
    pub fn select(&self, rule: SelectionRule, train: &LabeledDataset, test: &[usize]) -> Result<SelectionResult> {
        let eval = self.evaluate(rule, train.points(), test, None, false)?;
        let chosen = self.class.get(eval.hypothesis).clone();
        Ok(SelectionResult {
            chosen_index: eval.hypothesis,
            objective: self.objective(eval.hypothesis, train.points(), test),
            delta_set_size: eval.delta_size,
            labels: chosen.apply(test),
            chosen,
        })
    }

    /// All members of `Δ` in class order, and their common objective.
    pub fn delta(
        &self,
        rule: SelectionRule,
        train: &[(usize, Label)],
        test: &[usize],
    ) -> Result<(Vec<usize>, EmpiricalRisk)> {
        self.check_input(train, test)?;
        let objectives: Vec<EmpiricalRisk> = (0..self.class.len())
            .map(|h| self.objective(h, train, test))
            .collect();
        let best = match rule {
            SelectionRule::Realizable => EmpiricalRisk::zero(1),
            SelectionRule::Agnostic => *objectives.iter().min().expect("class is non-empty"),
        };
        let members: Vec<usize> = (0..objectives.len()).filter(|&h| objectives[h] == best).collect();
        if members.is_empty() {
            return Err(Error::Infeasible);
        }
        Ok((members, best))
    }
}

/// The realizable selector: the first member robustly correct on the
/// training pairs and robustly stable on the test points.
pub fn select_realizable(input: &TransductiveInput, class: &HypothesisClass) -> Result<SelectionResult> {
    RobustSelector::new(class, &input.relation)?.select(SelectionRule::Realizable, &input.train, &input.test)
}

/// The agnostic selector: the first minimizer of the larger robust risk.
pub fn select_agnostic(input: &TransductiveInput, class: &HypothesisClass) -> Result<SelectionResult> {
    RobustSelector::new(class, &input.relation)?.select(SelectionRule::Agnostic, &input.train, &input.test)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Projection {
    pub index: usize,
    pub hypothesis: Hypothesis,
    pub labeling: Vec<Label>,
    pub distance: usize,
}

/// Projects a test labeling onto the closest proper labeling
/// `{h(z̃) : h ∈ H}` in Hamming distance, first minimizer in class order.
pub fn project_proper(labels: &[Label], test: &[usize], class: &HypothesisClass) -> Result<Projection> {
    if labels.len() != test.len() {
        return Err(Error::DimensionMismatch {
            what: "labeling".into(),
            expected: test.len(),
            found: labels.len(),
        });
    }
    let size = class.domain_size();
    if let Some(&x) = test.iter().find(|&&x| x >= size) {
        return Err(Error::IndexOutOfDomain { index: x, size });
    }
    let (index, distance) = class
        .iter()
        .enumerate()
        .map(|(i, h)| (i, hamming(&h.apply(test), labels)))
        .min_by_key(|&(i, dist)| (dist, i))
        .expect("class is non-empty");
    let hypothesis = class.get(index).clone();
    Ok(Projection {
        index,
        labeling: hypothesis.apply(test),
        hypothesis,
        distance,
    })
}

pub fn hamming(a: &[Label], b: &[Label]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}

/// Inductive predictor that runs the agnostic transductive learner on the
/// single test point it is asked about. Returned as a full table over `X`.
pub fn inductive_from_transductive_pointwise(
    train: &LabeledDataset,
    rel: &PerturbationRelation,
    class: &HypothesisClass,
) -> Result<Hypothesis> {
    let selector = RobustSelector::new(class, rel)?;
    rel.domain()
        .instances()
        .map(|x| {
            let eval = selector.evaluate(SelectionRule::Agnostic, train.points(), &[x], None, false)?;
            Ok(class.get(eval.hypothesis).get(x))
        })
        .collect::<Result<Vec<_>>>()
        .map(Hypothesis::new)
}

/// Uses an inductive predictor transductively: each test point is labeled
/// on its own and the rest of the test set is ignored.
pub fn transductive_from_inductive<P: Predictor + ?Sized>(
    predictor: &P,
    _train: &LabeledDataset,
    test: &[usize],
) -> Vec<Label> {
    test.iter().map(|&x| predictor.predict(x)).collect()
}

/// Inductive prediction at `x` by random splitting: a random `⌊n/2⌋` of the
/// training pairs become the labeled input, another `⌊n/2⌋-1` become
/// unlabeled test points, `x` is inserted among them at a uniformly random
/// position, and the agnostic selector's label for `x` is returned.
pub fn inductive_from_transductive_split(
    train: &LabeledDataset,
    rel: &PerturbationRelation,
    class: &HypothesisClass,
    x: usize,
    seed: u64,
) -> Result<Label> {
    let n = train.len();
    if n < 2 {
        return Err(Error::TrainTooSmall(n));
    }
    rel.domain().check(x)?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let half = n / 2;
    let labeled: Vec<(usize, Label)> = order[..half].iter().map(|&i| train.points()[i]).collect();
    let mut test: Vec<usize> = order[half..2 * half - 1].iter().map(|&i| train.points()[i].0).collect();
    let slot = rng.random_range(0..=test.len());
    test.insert(slot, x);
    let selector = RobustSelector::new(class, rel)?;
    let eval = selector.evaluate(SelectionRule::Agnostic, &labeled, &test, None, false)?;
    Ok(class.get(eval.hypothesis).get(x))
}
