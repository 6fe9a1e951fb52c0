//! Exhaustive combinatorial dimensions over finite domains.
//!
//! * [`vc_dimension`]: classical shattering.
//! * [`relaxed_robust_dimension`]: a sequence `z_1..z_k` is relaxed
//!   `V`-robustly shattered when every labeling `y` admits witnesses `x_i`
//!   with `z_i ∈ V(x_i)` and one `h ∈ H` constant `y_i` on each `V(x_i)`.
//! * [`behavior_set`] / [`sauer_check`]: the labelings of a point sequence
//!   realizable with such witnesses, and the Sauer-type bound
//!   `Σ_{i ≤ rdim} C(n, i)` on their number.
//!
//! All searches are brute force behind hard size gates.

use std::collections::BTreeSet;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{HypothesisClass, Label};
use crate::perturb::PerturbationRelation;

/// Largest domain (and point sequence) accepted by the exhaustive searches.
pub const MAX_EXHAUSTIVE_DOMAIN: usize = 16;

fn gate(size: usize) -> Result<()> {
    if size > MAX_EXHAUSTIVE_DOMAIN {
        Err(Error::DomainTooLarge {
            size,
            limit: MAX_EXHAUSTIVE_DOMAIN,
        })
    } else {
        Ok(())
    }
}

fn check_class(class: &HypothesisClass, size: usize) -> Result<()> {
    if class.domain_size() != size {
        return Err(Error::DimensionMismatch {
            what: "hypothesis class".into(),
            expected: size,
            found: class.domain_size(),
        });
    }
    Ok(())
}

/// Visits all `k`-subsets of `0..n` in lexicographic order until `f`
/// returns `true`; returns whether it did.
fn any_combination(n: usize, k: usize, mut f: impl FnMut(&[usize]) -> bool) -> bool {
    if k > n {
        return false;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        if f(&idx) {
            return true;
        }
        let Some(i) = (0..k).rev().find(|&i| idx[i] != i + n - k) else {
            return false;
        };
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Classical VC dimension by subset enumeration, `k` ascending.
pub fn vc_dimension(class: &HypothesisClass) -> Result<usize> {
    let n = class.domain_size();
    gate(n)?;
    let mut dim = 0;
    for k in 1..=n {
        if class.len() < 1 << k {
            break;
        }
        let shattered = any_combination(n, k, |subset| {
            let patterns: BTreeSet<u64> = class
                .iter()
                .map(|h| {
                    subset
                        .iter()
                        .enumerate()
                        .fold(0u64, |code, (i, &x)| code | ((h.get(x) == Label::Pos) as u64) << i)
                })
                .collect();
            patterns.len() == 1 << k
        });
        if !shattered {
            break;
        }
        dim = k;
    }
    Ok(dim)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelingWitness {
    pub labeling: Vec<Label>,
    /// `x_i^{y_i}` for every point.
    pub instances: Vec<usize>,
    /// Class index of the hypothesis constant `y_i` on every `V(x_i^{y_i})`.
    pub hypothesis: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShatterCertificate {
    pub dimension: usize,
    pub points: Vec<usize>,
    /// One entry per labeling, in binary order (bit clear = `-1`).
    pub witnesses: Vec<LabelingWitness>,
}

/// Per hypothesis, point and label: the first `x` with `z ∈ V(x)` on whose
/// `V(x)` the hypothesis is constantly that label.
struct WitnessTable {
    size: usize,
    table: Vec<[Option<usize>; 2]>,
}

impl WitnessTable {
    fn new(class: &HypothesisClass, rel: &PerturbationRelation) -> Self {
        let size = rel.domain().size();
        let inverse = rel.invert();
        let mut table = vec![[None, None]; class.len() * size];
        for (h, hyp) in class.iter().enumerate() {
            // label bits h is constant on over V(x); an empty row allows both
            let constant: Vec<u8> = rel
                .rows()
                .iter()
                .map(|row| row.iter().fold(0b11, |acc, &z| acc & hyp.get(z).bit()))
                .collect();
            for z in 0..size {
                for &x in inverse.neighbors(z) {
                    for (slot, label) in table[h * size + z].iter_mut().zip([Label::Neg, Label::Pos]) {
                        if slot.is_none() && constant[x] & label.bit() != 0 {
                            *slot = Some(x);
                        }
                    }
                }
            }
        }
        Self { size, table }
    }

    #[inline]
    fn get(&self, h: usize, z: usize, y: Label) -> Option<usize> {
        self.table[h * self.size + z][(y == Label::Pos) as usize]
    }

    fn witness(&self, classes: usize, points: &[usize], labeling: &[Label]) -> Option<LabelingWitness> {
        (0..classes).find_map(|h| {
            points
                .iter()
                .zip(labeling)
                .map(|(&z, &y)| self.get(h, z, y))
                .collect::<Option<Vec<_>>>()
                .map(|instances| LabelingWitness {
                    labeling: labeling.to_vec(),
                    instances,
                    hypothesis: h,
                })
        })
    }

    fn certificate(&self, classes: usize, points: &[usize]) -> Option<ShatterCertificate> {
        let k = points.len();
        let witnesses = (0..1u64 << k)
            .map(|code| {
                let labeling: Vec<Label> = (0..k).map(|i| Label::from_code_bit(code, i)).collect();
                self.witness(classes, points, &labeling)
            })
            .collect::<Option<Vec<_>>>()?;
        Some(ShatterCertificate {
            dimension: k,
            points: points.to_vec(),
            witnesses,
        })
    }
}

/// Certificate that `points` are relaxed `rel`-robustly shattered, if they are.
pub fn relaxed_shattering_certificate(
    class: &HypothesisClass,
    rel: &PerturbationRelation,
    points: &[usize],
) -> Result<Option<ShatterCertificate>> {
    let size = rel.domain().size();
    check_class(class, size)?;
    gate(size)?;
    gate(points.len())?;
    for &z in points {
        rel.domain().check(z)?;
    }
    Ok(WitnessTable::new(class, rel).certificate(class.len(), points))
}

/// Largest `k` with a relaxed `rel`-robustly shattered `k`-set, and the
/// lexicographically first certificate for it (k ascending, point sets
/// lexicographic, labelings in binary order, hypotheses in class order,
/// witness instances ascending).
pub fn relaxed_robust_dimension(
    class: &HypothesisClass,
    rel: &PerturbationRelation,
) -> Result<(usize, ShatterCertificate)> {
    let size = rel.domain().size();
    check_class(class, size)?;
    gate(size)?;
    let table = WitnessTable::new(class, rel);
    let mut best = table.certificate(class.len(), &[]).expect("the empty set is shattered");
    for k in 1..=size {
        if class.len() < 1 << k {
            break;
        }
        let mut found = None;
        any_combination(size, k, |subset| {
            found = table.certificate(class.len(), subset);
            found.is_some()
        });
        match found {
            Some(cert) => best = cert,
            None => break,
        }
    }
    Ok((best.dimension, best))
}

/// Re-validates every witness condition of a certificate straight from the
/// definition, without the lookup tables used by the search.
pub fn verify_certificate(class: &HypothesisClass, rel: &PerturbationRelation, cert: &ShatterCertificate) -> bool {
    let k = cert.points.len();
    if cert.dimension != k || cert.witnesses.len() != 1 << k {
        return false;
    }
    let mut labelings = BTreeSet::new();
    for w in &cert.witnesses {
        if w.labeling.len() != k || w.instances.len() != k || w.hypothesis >= class.len() {
            return false;
        }
        let h = class.get(w.hypothesis);
        for i in 0..k {
            let x = w.instances[i];
            if x >= rel.domain().size() || !rel.contains(x, cert.points[i]) {
                return false;
            }
            if rel.neighbors(x).iter().any(|&u| h.get(u) != w.labeling[i]) {
                return false;
            }
        }
        labelings.insert(w.labeling.clone());
    }
    labelings.len() == 1 << k
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BehaviorSet {
    pub points: Vec<usize>,
    pub behaviors: BTreeSet<Vec<Label>>,
}

impl BehaviorSet {
    pub fn len(&self) -> usize {
        self.behaviors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.behaviors.is_empty()
    }
}

fn check_points(rel: &PerturbationRelation, class: &HypothesisClass, points: &[usize]) -> Result<()> {
    check_class(class, rel.domain().size())?;
    gate(points.len())?;
    for &z in points {
        rel.domain().check(z)?;
    }
    Ok(())
}

/// Labelings `(h(z_1), .., h(z_n))` for which some `h ∈ H` has, for every
/// `i`, an `x_i` with `z_i ∈ U(x_i)` and `h` constant on `U(x_i)`.
pub fn behavior_set(class: &HypothesisClass, rel: &PerturbationRelation, points: &[usize]) -> Result<BehaviorSet> {
    check_points(rel, class, points)?;
    let inverse = rel.invert();
    let mut behaviors = BTreeSet::new();
    for h in class.iter() {
        let stable_at = |x: usize| {
            let row = rel.neighbors(x);
            row.iter().all(|&u| h.get(u) == h.get(row[0]))
        };
        let ok = points
            .iter()
            .all(|&z| inverse.neighbors(z).iter().any(|&x| stable_at(x)));
        if ok {
            behaviors.insert(h.apply(points));
        }
    }
    Ok(BehaviorSet {
        points: points.to_vec(),
        behaviors,
    })
}

/// Labelings `(h(x_1), .., h(x_n))` for which some `h ∈ H` has, for every
/// `i`, a `z_i ∈ U(x_i)` with `h` constant on `U⁻¹(z_i)` (necessarily with
/// value `h(x_i)`, since `x_i ∈ U⁻¹(z_i)`).
pub fn realizable_behavior_set(
    class: &HypothesisClass,
    rel: &PerturbationRelation,
    points: &[usize],
) -> Result<BehaviorSet> {
    check_points(rel, class, points)?;
    let inverse = rel.invert();
    let mut behaviors = BTreeSet::new();
    for h in class.iter() {
        let ok = points.iter().all(|&x| {
            rel.neighbors(x)
                .iter()
                .any(|&z| inverse.neighbors(z).iter().all(|&u| h.get(u) == h.get(x)))
        });
        if ok {
            behaviors.insert(h.apply(points));
        }
    }
    Ok(BehaviorSet {
        points: points.to_vec(),
        behaviors,
    })
}

/// `Σ_{i=0}^{d} C(n, i)`, exact.
pub fn binomial_prefix_sum(n: usize, d: usize) -> BigUint {
    let mut total = BigUint::zero();
    let mut term = BigUint::one();
    for i in 0..=d.min(n) {
        if i > 0 {
            term = term * BigUint::from(n - i + 1) / BigUint::from(i);
        }
        total += &term;
    }
    total
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SauerCheck {
    pub lhs: usize,
    #[serde(with = "decimal")]
    pub rhs: BigUint,
    pub rdim: usize,
    pub holds: bool,
}

/// Exact integers travel as decimal strings.
mod decimal {
    use num_bigint::BigUint;
    use serde::{de::Error as _, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(value: &BigUint, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(value)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigUint, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(D::Error::custom)
    }
}

/// Compares `|behavior_set|` with `Σ_{i ≤ rdim_U(H)} C(n, i)`.
pub fn sauer_check(class: &HypothesisClass, rel: &PerturbationRelation, points: &[usize]) -> Result<SauerCheck> {
    let behaviors = behavior_set(class, rel, points)?;
    let (rdim, _) = relaxed_robust_dimension(class, rel)?;
    let rhs = binomial_prefix_sum(points.len(), rdim);
    let lhs = behaviors.len();
    Ok(SauerCheck {
        holds: BigUint::from(lhs) <= rhs,
        lhs,
        rhs,
        rdim,
    })
}
