//! Random instance generators and a brute-force selector written without
//! the library's lookup tables.

#![allow(dead_code)]

use std::collections::BTreeSet;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use trl_core::model::{FiniteDomain, Hypothesis, HypothesisClass, Label, LabeledDataset};
use trl_core::perturb::PerturbationRelation;

pub fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

pub fn label<R: Rng>(rng: &mut R) -> Label {
    if rng.random_bool(0.5) {
        Label::Pos
    } else {
        Label::Neg
    }
}

/// Up to `max_members` distinct random hypotheses over a domain of `size`.
pub fn random_class<R: Rng>(rng: &mut R, size: usize, max_members: usize) -> HypothesisClass {
    let total = 1u64 << size;
    let want = rng.random_range(1..=max_members.min(total as usize));
    let mut codes = BTreeSet::new();
    while codes.len() < want {
        codes.insert(rng.random_range(0..total));
    }
    let members = codes
        .into_iter()
        .map(|code| Hypothesis::new((0..size).map(|i| Label::from_code_bit(code, i)).collect()))
        .collect();
    HypothesisClass::new(members).unwrap()
}

/// A relation with non-empty rows of at most `max_degree` points. With
/// `reflexive`, each row contains its own instance.
pub fn random_relation<R: Rng>(rng: &mut R, size: usize, max_degree: usize, reflexive: bool) -> PerturbationRelation {
    let domain = FiniteDomain::new(size).unwrap();
    let all: Vec<usize> = (0..size).collect();
    let rows = (0..size)
        .map(|x| {
            let degree = rng.random_range(1..=max_degree.min(size));
            let mut row: BTreeSet<usize> = all.choose_multiple(rng, degree).copied().collect();
            if reflexive && !row.contains(&x) {
                row.pop_last();
                row.insert(x);
            }
            row.into_iter().collect()
        })
        .collect();
    PerturbationRelation::new(domain, rows).unwrap()
}

pub fn random_points<R: Rng>(rng: &mut R, size: usize, len: usize) -> Vec<usize> {
    (0..len).map(|_| rng.random_range(0..size)).collect()
}

pub fn random_dataset<R: Rng>(rng: &mut R, size: usize, len: usize) -> LabeledDataset {
    let domain = FiniteDomain::new(size).unwrap();
    let points = (0..len).map(|_| (rng.random_range(0..size), label(rng))).collect();
    LabeledDataset::new(&domain, points).unwrap()
}

/// `U⁻¹` recomputed from the rows of `U`.
pub fn inverse_rows(rel: &PerturbationRelation) -> Vec<Vec<usize>> {
    let size = rel.domain().size();
    (0..size)
        .map(|z| (0..size).filter(|&x| rel.neighbors(x).contains(&z)).collect())
        .collect()
}

/// An unreduced fraction.
#[derive(Clone, Copy, Debug)]
pub struct Frac(pub usize, pub usize);

impl Frac {
    pub fn lt(self, other: Frac) -> bool {
        (self.0 as u128) * (other.1 as u128) < (other.0 as u128) * (self.1 as u128)
    }

    pub fn same(self, other: Frac) -> bool {
        (self.0 as u128) * (other.1 as u128) == (other.0 as u128) * (self.1 as u128)
    }
}

/// Minimax selection by two plain passes over the class. The first pass
/// finds the smallest objective, the second collects the members hitting it.
pub struct Minimax {
    pub objective: Frac,
    pub members: Vec<usize>,
}

pub fn brute_force_minimax(
    class: &HypothesisClass,
    rel: &PerturbationRelation,
    train: &[(usize, Label)],
    test: &[usize],
) -> Minimax {
    let inv = inverse_rows(rel);
    let score = |h: &Hypothesis| {
        let mut miss = 0;
        for &(z, y) in train {
            if inv[z].iter().any(|&x| h.get(x) != y) {
                miss += 1;
            }
        }
        let mut unstable = 0;
        for &z in test {
            if inv[z].iter().any(|&x| h.get(x) != h.get(z)) {
                unstable += 1;
            }
        }
        let a = Frac(miss, train.len());
        let b = Frac(unstable, test.len());
        if a.lt(b) {
            b
        } else {
            a
        }
    };
    let mut best: Option<Frac> = None;
    for h in class.iter() {
        let s = score(h);
        if best.is_none_or(|b| s.lt(b)) {
            best = Some(s);
        }
    }
    let best = best.expect("class is non-empty");
    let members = class
        .iter()
        .enumerate()
        .filter(|(_, h)| score(h).same(best))
        .map(|(i, _)| i)
        .collect();
    Minimax {
        objective: best,
        members,
    }
}

/// Members with zero robust training error and zero test instability.
pub fn brute_force_feasible(
    class: &HypothesisClass,
    rel: &PerturbationRelation,
    train: &[(usize, Label)],
    test: &[usize],
) -> Vec<usize> {
    let m = brute_force_minimax(class, rel, train, test);
    if m.objective.0 == 0 {
        m.members
    } else {
        Vec::new()
    }
}
