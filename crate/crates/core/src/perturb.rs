//! Perturbation sets as finite relations on the instance space, with the
//! inverse image and the "shares a perturbation" composition.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::FiniteDomain;

/// Largest domain for which a dense membership bitset is kept next to the
/// adjacency lists.
pub const BITSET_LIMIT: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelationKind {
    /// A perturbation set: every row is non-empty.
    Forward,
    /// An inverse image: rows may be empty.
    Inverse,
}

/// A relation on `{0, .., |X|-1}` stored as sorted adjacency lists plus, for
/// small domains, a bitset matrix. Both views are built together and never
/// mutated.
#[derive(Clone, Debug)]
pub struct PerturbationRelation {
    domain: FiniteDomain,
    rows: Vec<Vec<usize>>,
    bits: Option<BitMatrix>,
    kind: RelationKind,
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct BitMatrix {
    words: usize,
    data: Vec<u64>,
}

impl BitMatrix {
    fn new(rows: &[Vec<usize>], size: usize) -> Self {
        let words = size.div_ceil(64);
        let mut data = vec![0u64; words * size];
        for (x, row) in rows.iter().enumerate() {
            for &z in row {
                data[x * words + z / 64] |= 1 << (z % 64);
            }
        }
        Self { words, data }
    }

    #[inline]
    fn get(&self, x: usize, z: usize) -> bool {
        self.data[x * self.words + z / 64] >> (z % 64) & 1 == 1
    }
}

impl PartialEq for PerturbationRelation {
    fn eq(&self, other: &Self) -> bool {
        self.domain == other.domain && self.rows == other.rows
    }
}

impl Eq for PerturbationRelation {}

impl PerturbationRelation {
    /// Builds a perturbation set from per-instance neighbor lists. Lists are
    /// sorted and deduplicated; each must be non-empty and in-domain.
    pub fn new(domain: FiniteDomain, rows: Vec<Vec<usize>>) -> Result<Self> {
        let rel = Self::build(domain, rows, RelationKind::Forward)?;
        if let Some(x) = rel.rows.iter().position(|r| r.is_empty()) {
            return Err(Error::EmptyPerturbationSet(x));
        }
        Ok(rel)
    }

    /// Builds a relation that may have empty rows, tagged as an inverse.
    pub fn new_inverse(domain: FiniteDomain, rows: Vec<Vec<usize>>) -> Result<Self> {
        Self::build(domain, rows, RelationKind::Inverse)
    }

    fn build(domain: FiniteDomain, mut rows: Vec<Vec<usize>>, kind: RelationKind) -> Result<Self> {
        if rows.len() != domain.size() {
            return Err(Error::DimensionMismatch {
                what: "perturbation relation".into(),
                expected: domain.size(),
                found: rows.len(),
            });
        }
        for row in rows.iter_mut() {
            for &z in row.iter() {
                domain.check(z)?;
            }
            row.sort_unstable();
            row.dedup();
        }
        let bits = (domain.size() <= BITSET_LIMIT).then(|| BitMatrix::new(&rows, domain.size()));
        Ok(Self {
            domain,
            rows,
            bits,
            kind,
        })
    }

    /// `U(x) = {x}`.
    pub fn identity(domain: FiniteDomain) -> Self {
        let rows = domain.instances().map(|x| vec![x]).collect();
        Self::build(domain, rows, RelationKind::Forward).expect("identity is valid")
    }

    /// `U(x) = {x-r, .., x+r} ∩ X`.
    pub fn interval_ball(domain: FiniteDomain, radius: usize) -> Self {
        let last = domain.size() - 1;
        let rows = domain
            .instances()
            .map(|x| (x.saturating_sub(radius)..=(x + radius).min(last)).collect())
            .collect();
        Self::build(domain, rows, RelationKind::Forward).expect("interval ball is valid")
    }

    pub fn domain(&self) -> FiniteDomain {
        self.domain
    }

    pub fn kind(&self) -> RelationKind {
        self.kind
    }

    pub fn is_inverse(&self) -> bool {
        self.kind == RelationKind::Inverse
    }

    /// The sorted neighbor list of `x`.
    #[inline]
    pub fn neighbors(&self, x: usize) -> &[usize] {
        &self.rows[x]
    }

    pub fn rows(&self) -> &[Vec<usize>] {
        &self.rows
    }

    /// Whether `z` is related to `x` (`z ∈ U(x)`).
    #[inline]
    pub fn contains(&self, x: usize, z: usize) -> bool {
        match &self.bits {
            Some(bits) => bits.get(x, z),
            None => self.rows[x].binary_search(&z).is_ok(),
        }
    }

    pub fn is_reflexive(&self) -> bool {
        self.domain.instances().all(|x| self.contains(x, x))
    }

    pub fn max_degree(&self) -> usize {
        self.rows.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Whether `self(x) ⊆ other(x)` for every `x`.
    pub fn is_subrelation_of(&self, other: &Self) -> bool {
        self.domain == other.domain
            && self
                .domain
                .instances()
                .all(|x| self.rows[x].iter().all(|&z| other.contains(x, z)))
    }

    /// `U⁻¹(z) = {x : z ∈ U(x)}`. Inverting a forward relation yields an
    /// inverse-tagged one (rows may be empty) and vice versa.
    pub fn invert(&self) -> Self {
        let mut rows = vec![Vec::new(); self.domain.size()];
        for (x, row) in self.rows.iter().enumerate() {
            for &z in row {
                rows[z].push(x);
            }
        }
        let kind = match self.kind {
            RelationKind::Forward => RelationKind::Inverse,
            RelationKind::Inverse => RelationKind::Forward,
        };
        Self::build(self.domain, rows, kind).expect("inverse of a valid relation is valid")
    }

    /// `U⁻¹(U)(x) = ∪_{z ∈ U(x)} U⁻¹(z)`: all `x̃` with `U(x) ∩ U(x̃) ≠ ∅`.
    pub fn compose_inverse(&self) -> Self {
        let inverse = self.invert();
        let rows = self
            .rows
            .iter()
            .map(|row| {
                let mut acc: Vec<usize> = row
                    .iter()
                    .flat_map(|&z| inverse.neighbors(z).iter().copied())
                    .collect();
                acc.sort_unstable();
                acc.dedup();
                acc
            })
            .collect();
        Self::build(self.domain, rows, self.kind).expect("composition of a valid relation is valid")
    }
}

/// Whether `inverse` is exactly the inverse image of `forward`:
/// `z ∈ forward(x) ⇔ x ∈ inverse(z)` for every pair.
pub fn is_dual_pair(forward: &PerturbationRelation, inverse: &PerturbationRelation) -> bool {
    if forward.domain() != inverse.domain() {
        return false;
    }
    let domain = forward.domain();
    domain.instances().all(|x| {
        domain
            .instances()
            .all(|z| forward.contains(x, z) == inverse.contains(z, x))
    })
}

/// Self-test of [`PerturbationRelation::invert`] against the membership duality.
pub fn membership_dual_check(rel: &PerturbationRelation) -> bool {
    is_dual_pair(rel, &rel.invert())
}
