//! Scenario and experiment-config files.
//!
//! ```json
//! {
//!   "domain_size": 10,
//!   "class": {"family": "thresholds"},
//!   "perturbation": {"family": "interval_ball", "radius": 1},
//!   "distribution": [[0, -1, 0.5], [9, 1, 0.5]],
//!   "n": 4, "m": 4, "delta": 0.05, "trials": 500, "seed": 7
//! }
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::adversary::AttackBudget;
use crate::bounds::DEFAULT_VC_CONSTANT;
use crate::error::{Error, Result};
use crate::learner::SelectionRule;
use crate::model::{validate_scenario, FiniteDistribution, FiniteDomain, Hypothesis, HypothesisClass};
use crate::perturb::PerturbationRelation;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassFamilyName {
    Thresholds,
    All,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ClassSpec {
    Family { family: ClassFamilyName },
    Explicit { explicit: Vec<Vec<i64>> },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelationFamilyName {
    IntervalBall,
    Identity,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PerturbationSpec {
    Family {
        family: RelationFamilyName,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        radius: Option<usize>,
    },
    Explicit {
        explicit: Vec<Vec<usize>>,
    },
}

/// The on-disk form of a scenario.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub domain_size: usize,
    pub class: ClassSpec,
    pub perturbation: PerturbationSpec,
    pub distribution: Vec<(usize, i64, f64)>,
    pub n: usize,
    pub m: usize,
    pub delta: f64,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_trials() -> usize {
    1
}

/// A validated scenario.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub spec: ScenarioSpec,
    pub domain: FiniteDomain,
    pub class: HypothesisClass,
    pub relation: PerturbationRelation,
    pub distribution: FiniteDistribution,
}

impl Scenario {
    pub fn from_spec(spec: ScenarioSpec) -> Result<Self> {
        let domain = FiniteDomain::new(spec.domain_size)?;
        let class = match &spec.class {
            ClassSpec::Family {
                family: ClassFamilyName::Thresholds,
            } => HypothesisClass::thresholds(domain),
            ClassSpec::Family {
                family: ClassFamilyName::All,
            } => HypothesisClass::all_functions(domain)?,
            ClassSpec::Explicit { explicit } => HypothesisClass::new(
                explicit
                    .iter()
                    .map(|signs| Hypothesis::from_signs(signs))
                    .collect::<Result<_>>()?,
            )?,
        };
        let relation = match &spec.perturbation {
            PerturbationSpec::Family {
                family: RelationFamilyName::IntervalBall,
                radius,
            } => {
                let radius = radius.ok_or_else(|| Error::Config("interval_ball needs a radius".into()))?;
                PerturbationRelation::interval_ball(domain, radius)
            }
            PerturbationSpec::Family {
                family: RelationFamilyName::Identity,
                ..
            } => PerturbationRelation::identity(domain),
            PerturbationSpec::Explicit { explicit } => PerturbationRelation::new(domain, explicit.clone())?,
        };
        let distribution = FiniteDistribution::from_triples(&spec.distribution)?;
        validate_scenario(&domain, &class, &distribution)?;
        if spec.n == 0 {
            return Err(Error::EmptyInput("training sample size n"));
        }
        if spec.m == 0 {
            return Err(Error::EmptyInput("test sample size m"));
        }
        if spec.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if !(spec.delta > 0.0 && spec.delta < 1.0) {
            return Err(Error::BadDelta(spec.delta));
        }
        Ok(Self {
            spec,
            domain,
            class,
            relation,
            distribution,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: ScenarioSpec =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("scenario: {e}")))?;
        Self::from_spec(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputPaths {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub summary: Option<PathBuf>,
}

/// The on-disk form of an experiment. `trials` and `seed` override the
/// scenario's values; `vc` and `rdim` override the brute-force dimensions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: PathBuf,
    pub selector: SelectionRule,
    #[serde(default)]
    pub attack: AttackBudget,
    #[serde(default = "yes")]
    pub attack_train: bool,
    #[serde(default)]
    pub worst_member: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default = "default_vc_constant")]
    pub vc_constant: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vc: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rdim: Option<usize>,
    #[serde(default)]
    pub outputs: OutputPaths,
}

fn yes() -> bool {
    true
}

fn default_vc_constant() -> f64 {
    DEFAULT_VC_CONSTANT
}

impl ExperimentConfig {
    pub fn new(scenario: impl Into<PathBuf>, selector: SelectionRule) -> Self {
        Self {
            scenario: scenario.into(),
            selector,
            attack: AttackBudget::default(),
            attack_train: true,
            worst_member: false,
            trials: None,
            seed: None,
            vc_constant: DEFAULT_VC_CONSTANT,
            vc: None,
            rdim: None,
            outputs: OutputPaths::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text).map_err(|e| Error::Config(format!("experiment config: {e}")))?;
        if config.trials == Some(0) {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        Ok(config)
    }

    /// Reads a config and resolves its relative paths against the config's
    /// own directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let mut config = Self::from_json(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        resolve(&mut config.scenario);
        if let Some(p) = config.outputs.csv.as_mut() {
            resolve(p);
        }
        if let Some(p) = config.outputs.summary.as_mut() {
            resolve(p);
        }
        Ok(config)
    }
}
