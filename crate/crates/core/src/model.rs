//! Shared data model: the finite instance space, sign-valued hypotheses,
//! hypothesis classes, labeled samples and finite distributions.

use std::collections::HashMap;
use std::fmt;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Tolerance used when checking that probabilities sum to one.
pub const PROBABILITY_TOLERANCE: f64 = 1e-12;

/// A binary label. `Neg < Pos`, which fixes the binary order of labelings.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Neg,
    Pos,
}

impl Label {
    pub fn from_sign(sign: i64) -> Result<Self> {
        match sign {
            -1 => Ok(Label::Neg),
            1 => Ok(Label::Pos),
            other => Err(Error::InvalidLabel(other)),
        }
    }

    pub fn sign(self) -> i8 {
        match self {
            Label::Neg => -1,
            Label::Pos => 1,
        }
    }

    pub fn flip(self) -> Self {
        match self {
            Label::Neg => Label::Pos,
            Label::Pos => Label::Neg,
        }
    }

    /// Bit used by label masks: `Neg -> 0b01`, `Pos -> 0b10`.
    pub(crate) fn bit(self) -> u8 {
        match self {
            Label::Neg => 0b01,
            Label::Pos => 0b10,
        }
    }

    /// The `i`-th label of the labeling numbered `code` in binary order
    /// (bit clear means `Neg`).
    pub fn from_code_bit(code: u64, i: usize) -> Self {
        if code >> i & 1 == 1 {
            Label::Pos
        } else {
            Label::Neg
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Neg => "-1",
            Label::Pos => "+1",
        })
    }
}

impl Serialize for Label {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_i8(self.sign())
    }
}

impl<'de> Deserialize<'de> for Label {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let v = i64::deserialize(deserializer)?;
        Label::from_sign(v).map_err(serde::de::Error::custom)
    }
}

/// The instance space `{0, .., size-1}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FiniteDomain {
    size: usize,
}

impl FiniteDomain {
    pub fn new(size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::EmptyDomain);
        }
        Ok(Self { size })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn contains(&self, x: usize) -> bool {
        x < self.size
    }

    pub fn check(&self, x: usize) -> Result<()> {
        if self.contains(x) {
            Ok(())
        } else {
            Err(Error::IndexOutOfDomain {
                index: x,
                size: self.size,
            })
        }
    }

    pub fn instances(&self) -> std::ops::Range<usize> {
        0..self.size
    }
}

/// Anything that labels instances. Implemented by [`Hypothesis`] tables
/// and by plain closures.
pub trait Predictor {
    fn predict(&self, x: usize) -> Label;
}

impl<F: Fn(usize) -> Label> Predictor for F {
    fn predict(&self, x: usize) -> Label {
        self(x)
    }
}

/// A total labeling of the instance space, stored as a flat table.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Hypothesis(Vec<Label>);

impl Hypothesis {
    pub fn new(values: Vec<Label>) -> Self {
        Self(values)
    }

    pub fn from_signs(signs: &[i64]) -> Result<Self> {
        signs
            .iter()
            .map(|&s| Label::from_sign(s))
            .collect::<Result<Vec<_>>>()
            .map(Self)
    }

    pub fn constant(size: usize, label: Label) -> Self {
        Self(vec![label; size])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    #[inline]
    pub fn get(&self, x: usize) -> Label {
        self.0[x]
    }

    pub fn values(&self) -> &[Label] {
        &self.0
    }

    /// The labeling `(h(x_1), .., h(x_k))` of a point sequence.
    pub fn apply(&self, points: &[usize]) -> Vec<Label> {
        points.iter().map(|&x| self.0[x]).collect()
    }

    pub fn signs(&self) -> Vec<i8> {
        self.0.iter().map(|l| l.sign()).collect()
    }
}

impl Predictor for Hypothesis {
    fn predict(&self, x: usize) -> Label {
        self.0[x]
    }
}

/// Named generated families.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassFamily {
    Thresholds,
    All,
    Explicit,
}

/// Maximum domain size for which the class of all functions is generated.
pub const ALL_FUNCTIONS_LIMIT: usize = 16;

/// An ordered list of distinct hypotheses. The order is the canonical
/// tie-breaking order for every selection in the crate.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HypothesisClass {
    members: Vec<Hypothesis>,
    family: ClassFamily,
}

impl HypothesisClass {
    /// Builds an explicit class. Members must be non-empty in number,
    /// pairwise distinct and of equal length.
    pub fn new(members: Vec<Hypothesis>) -> Result<Self> {
        Self::with_family(members, ClassFamily::Explicit)
    }

    fn with_family(members: Vec<Hypothesis>, family: ClassFamily) -> Result<Self> {
        let first = members.first().ok_or(Error::EmptyClass)?;
        let len = first.len();
        let mut seen: HashMap<&Hypothesis, usize> = HashMap::with_capacity(members.len());
        for (i, h) in members.iter().enumerate() {
            if h.len() != len {
                return Err(Error::DimensionMismatch {
                    what: format!("hypothesis {i}"),
                    expected: len,
                    found: h.len(),
                });
            }
            if let Some(&j) = seen.get(h) {
                return Err(Error::DuplicateHypothesis {
                    first: j,
                    second: i,
                });
            }
            seen.insert(h, i);
        }
        Ok(Self { members, family })
    }

    /// Thresholds `h_t(x) = +1 iff x >= t` for `t = 0..=|X|`, ordered by `t`.
    pub fn thresholds(domain: FiniteDomain) -> Self {
        let size = domain.size();
        let members = (0..=size)
            .map(|t| {
                Hypothesis::new(
                    (0..size)
                        .map(|x| if x >= t { Label::Pos } else { Label::Neg })
                        .collect(),
                )
            })
            .collect();
        Self {
            members,
            family: ClassFamily::Thresholds,
        }
    }

    /// All `2^|X|` labelings, ordered by their binary code (instance `x`
    /// is bit `x`, clear bit = `-1`).
    pub fn all_functions(domain: FiniteDomain) -> Result<Self> {
        let size = domain.size();
        if size > ALL_FUNCTIONS_LIMIT {
            return Err(Error::DomainTooLarge {
                size,
                limit: ALL_FUNCTIONS_LIMIT,
            });
        }
        let members = (0..1u64 << size)
            .map(|code| Hypothesis::new((0..size).map(|x| Label::from_code_bit(code, x)).collect()))
            .collect();
        Ok(Self {
            members,
            family: ClassFamily::All,
        })
    }

    pub fn family(&self) -> ClassFamily {
        self.family
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self) -> &[Hypothesis] {
        &self.members
    }

    pub fn get(&self, index: usize) -> &Hypothesis {
        &self.members[index]
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Hypothesis> {
        self.members.iter()
    }

    /// Length of every member (the domain size the class was built for).
    pub fn domain_size(&self) -> usize {
        self.members[0].len()
    }

    pub fn position(&self, h: &Hypothesis) -> Option<usize> {
        self.members.iter().position(|m| m == h)
    }
}

/// `make_threshold_class` under its operational name.
pub fn make_threshold_class(domain: FiniteDomain) -> HypothesisClass {
    HypothesisClass::thresholds(domain)
}

/// A sequence of labeled instances.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LabeledDataset {
    points: Vec<(usize, Label)>,
}

impl LabeledDataset {
    pub fn new(domain: &FiniteDomain, points: Vec<(usize, Label)>) -> Result<Self> {
        for &(x, _) in &points {
            domain.check(x)?;
        }
        Ok(Self { points })
    }

    /// Convenience constructor from `(index, ±1)` pairs.
    pub fn from_signs(domain: &FiniteDomain, points: &[(usize, i64)]) -> Result<Self> {
        let points = points
            .iter()
            .map(|&(x, s)| Label::from_sign(s).map(|l| (x, l)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(domain, points)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[(usize, Label)] {
        &self.points
    }

    pub fn instances(&self) -> Vec<usize> {
        self.points.iter().map(|&(x, _)| x).collect()
    }

    pub fn labels(&self) -> Vec<Label> {
        self.points.iter().map(|&(_, y)| y).collect()
    }

    /// Same labels, instances replaced pointwise (used for perturbed copies).
    pub fn with_instances(&self, instances: &[usize]) -> Self {
        debug_assert_eq!(instances.len(), self.points.len());
        Self {
            points: instances
                .iter()
                .zip(&self.points)
                .map(|(&z, &(_, y))| (z, y))
                .collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub x: usize,
    pub y: Label,
    pub p: f64,
}

/// A finite distribution over `X × {-1,+1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteDistribution {
    atoms: Vec<Atom>,
    sampler: WeightedIndex<f64>,
}

impl FiniteDistribution {
    /// Validates the atoms (distinct `(x, y)`, each `p` in `[0,1]`, total
    /// within [`PROBABILITY_TOLERANCE`] of one) and renormalizes.
    pub fn new(atoms: Vec<Atom>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::BadProbabilities("no atoms".into()));
        }
        let mut seen = HashMap::new();
        for (i, a) in atoms.iter().enumerate() {
            if !(0.0..=1.0).contains(&a.p) || !a.p.is_finite() {
                return Err(Error::BadProbabilities(format!(
                    "atom {i} has probability {}",
                    a.p
                )));
            }
            if let Some(j) = seen.insert((a.x, a.y), i) {
                return Err(Error::BadProbabilities(format!(
                    "atoms {j} and {i} share (x={}, y={})",
                    a.x, a.y
                )));
            }
        }
        let total: f64 = atoms.iter().map(|a| a.p).sum();
        if (total - 1.0).abs() > PROBABILITY_TOLERANCE {
            return Err(Error::BadProbabilities(format!(
                "probabilities sum to {total}"
            )));
        }
        let atoms: Vec<Atom> = atoms
            .into_iter()
            .map(|a| Atom { p: a.p / total, ..a })
            .collect();
        let sampler = WeightedIndex::new(atoms.iter().map(|a| a.p))
            .map_err(|e| Error::BadProbabilities(e.to_string()))?;
        Ok(Self { atoms, sampler })
    }

    /// Convenience constructor from `(x, ±1, p)` triples.
    pub fn from_triples(triples: &[(usize, i64, f64)]) -> Result<Self> {
        let atoms = triples
            .iter()
            .map(|&(x, s, p)| Label::from_sign(s).map(|y| Atom { x, y, p }))
            .collect::<Result<Vec<_>>>()?;
        Self::new(atoms)
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    /// Draws one labeled instance.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (usize, Label) {
        let a = &self.atoms[self.sampler.sample(rng)];
        (a.x, a.y)
    }
}

/// `n` i.i.d. draws from `dist` using the supplied generator.
pub fn sample_dataset_with<R: Rng + ?Sized>(
    dist: &FiniteDistribution,
    n: usize,
    rng: &mut R,
) -> LabeledDataset {
    LabeledDataset {
        points: (0..n).map(|_| dist.sample(rng)).collect(),
    }
}

/// `n` i.i.d. draws from `dist`, deterministic in `seed`.
pub fn sample_dataset(dist: &FiniteDistribution, n: usize, seed: u64) -> Result<LabeledDataset> {
    if n == 0 {
        return Err(Error::EmptyInput("requested sample"));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    Ok(sample_dataset_with(dist, n, &mut rng))
}

/// Checks the joint invariants of a domain, a class and a distribution.
pub fn validate_scenario(
    domain: &FiniteDomain,
    class: &HypothesisClass,
    dist: &FiniteDistribution,
) -> Result<()> {
    if class.is_empty() {
        return Err(Error::EmptyClass);
    }
    for (i, h) in class.iter().enumerate() {
        if h.len() != domain.size() {
            return Err(Error::DimensionMismatch {
                what: format!("hypothesis {i}"),
                expected: domain.size(),
                found: h.len(),
            });
        }
    }
    for a in dist.atoms() {
        domain.check(a.x)?;
    }
    let total: f64 = dist.atoms().iter().map(|a| a.p).sum();
    if (total - 1.0).abs() > PROBABILITY_TOLERANCE {
        return Err(Error::BadProbabilities(format!(
            "probabilities sum to {total}"
        )));
    }
    Ok(())
}
