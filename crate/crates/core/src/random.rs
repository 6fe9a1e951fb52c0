//! Random small instances for property sweeps and exploratory runs.

use std::collections::BTreeSet;

use rand::seq::index::sample;
use rand::Rng;

use crate::model::{Atom, FiniteDistribution, FiniteDomain, Hypothesis, HypothesisClass, Label, LabeledDataset};
use crate::perturb::PerturbationRelation;

pub fn random_label<R: Rng + ?Sized>(rng: &mut R) -> Label {
    if rng.random_bool(0.5) {
        Label::Pos
    } else {
        Label::Neg
    }
}

/// A relation on `|X| = size` whose rows hold between 1 and `max_degree`
/// distinct neighbors. With `reflexive`, every `x` is added to its own row.
pub fn random_relation<R: Rng + ?Sized>(
    rng: &mut R,
    domain: FiniteDomain,
    max_degree: usize,
    reflexive: bool,
) -> PerturbationRelation {
    let n = domain.size();
    let max_degree = max_degree.clamp(1, n);
    let rows = (0..n)
        .map(|x| {
            let k = rng.random_range(1..=max_degree);
            let mut row = sample(rng, n, k).into_vec();
            if reflexive {
                row.push(x);
            }
            row
        })
        .collect();
    PerturbationRelation::new(domain, rows).expect("generated rows are valid")
}

/// Between 1 and `max_size` distinct random hypotheses, capped by `2^|X|`.
pub fn random_class<R: Rng + ?Sized>(rng: &mut R, domain: FiniteDomain, max_size: usize) -> HypothesisClass {
    let n = domain.size();
    let cap = if n >= 20 { usize::MAX } else { 1usize << n };
    let target = rng.random_range(1..=max_size.min(cap));
    let mut seen = BTreeSet::new();
    let mut members = Vec::with_capacity(target);
    while members.len() < target {
        let h = Hypothesis::new((0..n).map(|_| random_label(rng)).collect());
        if seen.insert(h.clone()) {
            members.push(h);
        }
    }
    HypothesisClass::new(members).expect("members are distinct")
}

/// A distribution over `atoms` distinct random `(x, y)` pairs with random
/// positive weights.
pub fn random_distribution<R: Rng + ?Sized>(rng: &mut R, domain: FiniteDomain, atoms: usize) -> FiniteDistribution {
    let n = domain.size();
    let atoms = atoms.clamp(1, 2 * n);
    let picks = sample(rng, 2 * n, atoms).into_vec();
    let weights: Vec<f64> = (0..atoms).map(|_| rng.random_range(0.1..1.0)).collect();
    let total: f64 = weights.iter().sum();
    let atoms = picks
        .into_iter()
        .zip(weights)
        .map(|(code, w)| Atom {
            x: code / 2,
            y: if code % 2 == 1 { Label::Pos } else { Label::Neg },
            p: w / total,
        })
        .collect();
    FiniteDistribution::new(atoms).expect("weights are normalized")
}

pub fn random_points<R: Rng + ?Sized>(rng: &mut R, domain: FiniteDomain, len: usize) -> Vec<usize> {
    (0..len).map(|_| rng.random_range(0..domain.size())).collect()
}

pub fn random_labeled<R: Rng + ?Sized>(rng: &mut R, domain: FiniteDomain, len: usize) -> LabeledDataset {
    let points = (0..len)
        .map(|_| (rng.random_range(0..domain.size()), random_label(rng)))
        .collect();
    LabeledDataset::new(&domain, points).expect("points are in-domain")
}
