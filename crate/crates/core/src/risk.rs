//! Risk functionals: empirical 0-1 error, the two robust empirical risks
//! under an inverse relation, the population robust risk and its minimum
//! over a class.
//!
//! Empirical risks are exact fractions whose denominator is the sample
//! length. Population quantities are exact sums over the atoms of a
//! finite distribution, returned as `f64`.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{FiniteDistribution, Hypothesis, HypothesisClass, LabeledDataset};
use crate::perturb::PerturbationRelation;

/// An empirical risk `errors / total`, kept unreduced.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct EmpiricalRisk {
    pub errors: usize,
    pub total: usize,
}

impl EmpiricalRisk {
    pub fn new(errors: usize, total: usize) -> Self {
        debug_assert!(total > 0 && errors <= total);
        Self { errors, total }
    }

    pub fn zero(total: usize) -> Self {
        Self::new(0, total)
    }

    pub fn value(&self) -> f64 {
        self.errors as f64 / self.total as f64
    }

    pub fn is_zero(&self) -> bool {
        self.errors == 0
    }
}

impl PartialEq for EmpiricalRisk {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for EmpiricalRisk {}

impl PartialOrd for EmpiricalRisk {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for EmpiricalRisk {
    fn cmp(&self, other: &Self) -> Ordering {
        ((self.errors as u128) * other.total as u128).cmp(&((other.errors as u128) * self.total as u128))
    }
}

impl fmt::Display for EmpiricalRisk {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.errors, self.total)
    }
}

/// Standard 0-1 error of `h` on `data`.
pub fn err(h: &Hypothesis, data: &LabeledDataset) -> Result<EmpiricalRisk> {
    if data.is_empty() {
        return Err(Error::EmptyInput("dataset"));
    }
    let errors = data.points().iter().filter(|&&(x, y)| h.get(x) != y).count();
    Ok(EmpiricalRisk::new(errors, data.len()))
}

/// Fraction of `(z_i, y_i)` for which some `x̃ ∈ U⁻¹(z_i)` has `h(x̃) ≠ y_i`.
/// `inverse` is `U⁻¹`; an empty row contributes nothing.
pub fn robust_err_labeled(
    h: &Hypothesis,
    z: &LabeledDataset,
    inverse: &PerturbationRelation,
) -> Result<EmpiricalRisk> {
    if z.is_empty() {
        return Err(Error::EmptyInput("dataset"));
    }
    let errors = z
        .points()
        .iter()
        .filter(|&&(zi, y)| inverse.neighbors(zi).iter().any(|&x| h.get(x) != y))
        .count();
    Ok(EmpiricalRisk::new(errors, z.len()))
}

/// Fraction of `z_i` for which some `x̃ ∈ U⁻¹(z_i)` has `h(x̃) ≠ h(z_i)`.
pub fn robust_instability(
    h: &Hypothesis,
    z: &[usize],
    inverse: &PerturbationRelation,
) -> Result<EmpiricalRisk> {
    if z.is_empty() {
        return Err(Error::EmptyInput("test sequence"));
    }
    let errors = z
        .iter()
        .filter(|&&zi| {
            let own = h.get(zi);
            inverse.neighbors(zi).iter().any(|&x| h.get(x) != own)
        })
        .count();
    Ok(EmpiricalRisk::new(errors, z.len()))
}

/// Population 0-1 risk `P[h(x) ≠ y]`.
pub fn population_risk(h: &Hypothesis, dist: &FiniteDistribution) -> f64 {
    dist.atoms()
        .iter()
        .filter(|a| h.get(a.x) != a.y)
        .fold(0.0, |acc, a| acc + a.p)
}

/// `R_V(h; D) = Σ p(x,y) · 1{∃ z ∈ V(x): h(z) ≠ y}`.
pub fn population_robust_risk(
    h: &Hypothesis,
    rel: &PerturbationRelation,
    dist: &FiniteDistribution,
) -> f64 {
    dist.atoms()
        .iter()
        .filter(|a| rel.neighbors(a.x).iter().any(|&z| h.get(z) != a.y))
        .fold(0.0, |acc, a| acc + a.p)
}

/// Minimum robust risk over a class, with the first minimizer in class order.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptResult {
    pub risk: f64,
    pub witness: usize,
}

/// `OPT_V = min_{h ∈ H} R_V(h; D)`. Pass `U` for `OPT_U` and
/// `U.compose_inverse()` for `OPT_{U⁻¹(U)}`.
pub fn opt(class: &HypothesisClass, rel: &PerturbationRelation, dist: &FiniteDistribution) -> OptResult {
    let mut best = OptResult {
        risk: f64::INFINITY,
        witness: 0,
    };
    for (i, h) in class.iter().enumerate() {
        let r = population_robust_risk(h, rel, dist);
        if r < best.risk {
            best = OptResult { risk: r, witness: i };
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_threshold_class, FiniteDomain, Label};

    fn d(n: usize) -> FiniteDomain {
        FiniteDomain::new(n).unwrap()
    }

    #[test]
    fn fractions_compare_exactly() {
        assert_eq!(EmpiricalRisk::new(1, 2), EmpiricalRisk::new(2, 4));
        assert!(EmpiricalRisk::new(1, 3) < EmpiricalRisk::new(1, 2));
        assert_eq!(EmpiricalRisk::new(0, 3), EmpiricalRisk::new(0, 7));
    }

    #[test]
    fn zero_one_error() {
        let domain = d(5);
        let class = make_threshold_class(domain);
        let data = LabeledDataset::from_signs(&domain, &[(0, -1), (4, 1)]).unwrap();
        assert!(err(class.get(3), &data).unwrap().is_zero());

        let all_pos = Hypothesis::constant(5, Label::Pos);
        let wrong = LabeledDataset::from_signs(&domain, &[(0, -1), (1, -1)]).unwrap();
        assert_eq!(err(&all_pos, &wrong).unwrap(), EmpiricalRisk::new(1, 1));

        let half = LabeledDataset::from_signs(&domain, &[(2, 1), (3, 1)]).unwrap();
        let r = err(class.get(3), &half).unwrap();
        assert_eq!((r.errors, r.total), (1, 2));

        let empty = LabeledDataset::new(&domain, vec![]).unwrap();
        assert_eq!(err(class.get(0), &empty), Err(Error::EmptyInput("dataset")));
    }

    #[test]
    fn robust_labeled_error_examples() {
        let domain = d(10);
        let class = make_threshold_class(domain);
        let inv = PerturbationRelation::interval_ball(domain, 1).invert();
        let z = LabeledDataset::from_signs(&domain, &[(1, -1), (8, 1)]).unwrap();
        assert!(robust_err_labeled(class.get(3), &z, &inv).unwrap().is_zero());

        let d5 = d(5);
        let class5 = make_threshold_class(d5);
        let inv5 = PerturbationRelation::interval_ball(d5, 1).invert();
        let z1 = LabeledDataset::from_signs(&d5, &[(1, -1)]).unwrap();
        assert_eq!(robust_err_labeled(class5.get(2), &z1, &inv5).unwrap(), EmpiricalRisk::new(1, 1));
    }

    #[test]
    fn empty_inverse_row_contributes_nothing() {
        let domain = d(2);
        let u = PerturbationRelation::new(domain, vec![vec![1], vec![1]]).unwrap();
        let inv = u.invert();
        let h = Hypothesis::from_signs(&[1, 1]).unwrap();
        let z = LabeledDataset::from_signs(&domain, &[(0, -1)]).unwrap();
        assert!(robust_err_labeled(&h, &z, &inv).unwrap().is_zero());
        assert!(robust_instability(&h, &[0], &inv).unwrap().is_zero());
    }

    #[test]
    fn instability_examples() {
        let d5 = d(5);
        let class5 = make_threshold_class(d5);
        let inv5 = PerturbationRelation::interval_ball(d5, 1).invert();
        assert_eq!(robust_instability(class5.get(3), &[2], &inv5).unwrap(), EmpiricalRisk::new(1, 1));

        let d10 = d(10);
        let class10 = make_threshold_class(d10);
        let inv10 = PerturbationRelation::interval_ball(d10, 1).invert();
        assert!(robust_instability(class10.get(3), &[0], &inv10).unwrap().is_zero());

        let constant = Hypothesis::constant(10, Label::Neg);
        assert!(robust_instability(&constant, &[0, 4, 9], &inv10).unwrap().is_zero());
        assert_eq!(
            robust_instability(&constant, &[], &inv10),
            Err(Error::EmptyInput("test sequence"))
        );
    }

    #[test]
    fn population_examples() {
        let domain = d(10);
        let class = make_threshold_class(domain);
        let radius2 = PerturbationRelation::interval_ball(domain, 1).compose_inverse();
        let dist = FiniteDistribution::from_triples(&[(0, -1, 0.5), (9, 1, 0.5)]).unwrap();
        assert_eq!(population_robust_risk(class.get(5), &radius2, &dist), 0.0);

        let skewed = FiniteDistribution::from_triples(&[(0, -1, 0.3), (9, 1, 0.7)]).unwrap();
        let all_pos = Hypothesis::constant(10, Label::Pos);
        assert!((population_robust_risk(&all_pos, &radius2, &skewed) - 0.3).abs() < 1e-15);

        let id = PerturbationRelation::identity(domain);
        for h in class.iter() {
            assert_eq!(population_robust_risk(h, &id, &skewed), population_risk(h, &skewed));
        }
    }

    #[test]
    fn opt_realizable_witness() {
        let domain = d(10);
        let class = make_threshold_class(domain);
        let composed = PerturbationRelation::interval_ball(domain, 1).compose_inverse();
        let dist = FiniteDistribution::from_triples(&[(0, -1, 0.5), (9, 1, 0.5)]).unwrap();
        let best = opt(&class, &composed, &dist);
        assert_eq!(best.risk, 0.0);
        assert!(best.risk.is_sign_positive());
        assert_eq!(best.witness, 3);
        let minimizers: Vec<usize> = (0..class.len())
            .filter(|&i| population_robust_risk(class.get(i), &composed, &dist) == 0.0)
            .collect();
        assert_eq!(minimizers, vec![3, 4, 5, 6, 7]);
    }

    #[test]
    fn all_functions_interpolate_without_adversary() {
        let domain = d(4);
        let class = HypothesisClass::all_functions(domain).unwrap();
        let dist = FiniteDistribution::from_triples(&[(0, -1, 0.25), (1, 1, 0.25), (2, 1, 0.25), (3, -1, 0.25)])
            .unwrap();
        assert_eq!(opt(&class, &PerturbationRelation::identity(domain), &dist).risk, 0.0);
    }
}
