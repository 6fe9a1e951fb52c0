mod common;

use proptest::prelude::*;
use rand::Rng;

use trl_core::adversary::{attack, AttackBudget, Learner};
use trl_core::combinatorics::{behavior_set, realizable_behavior_set, relaxed_robust_dimension, verify_certificate};
use trl_core::learner::{
    hamming, inductive_from_transductive_pointwise, project_proper, transductive_from_inductive, RobustSelector,
    SelectionRule,
};
use trl_core::model::{FiniteDistribution, Label, LabeledDataset};
use trl_core::risk::{opt, robust_err_labeled, robust_instability};
use trl_core::Error;

use common::*;

/// Test errors of the agnostic selector's first minimizer, for every
/// candidate perturbation of train and test, visited last to first.
fn reverse_enumeration_max(
    class: &trl_core::model::HypothesisClass,
    rel: &trl_core::perturb::PerturbationRelation,
    train: &LabeledDataset,
    test: &LabeledDataset,
) -> usize {
    let sources: Vec<usize> = train.instances().into_iter().chain(test.instances()).collect();
    let rows: Vec<&[usize]> = sources.iter().map(|&x| rel.neighbors(x)).collect();
    let total: usize = rows.iter().map(|r| r.len()).product();
    let n = train.len();
    let mut best = 0;
    for code in (0..total).rev() {
        let mut rest = code;
        let mut pick = vec![0; rows.len()];
        for (i, row) in rows.iter().enumerate().rev() {
            pick[i] = row[rest % row.len()];
            rest /= row.len();
        }
        let z: Vec<(usize, Label)> = pick[..n].iter().copied().zip(train.labels()).collect();
        let zt = &pick[n..];
        let h = class.get(brute_force_minimax(class, rel, &z, zt).members[0]);
        best = best.max(hamming(&h.apply(zt), &test.labels()));
    }
    best
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn realizable_behaviors_are_behaviors_of_the_inverse(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let size = rng.random_range(1..=6);
        let class = random_class(&mut rng, size, 16);
        let reflexive = rng.random_bool(0.5);
        let rel = random_relation(&mut rng, size, 3, reflexive);
        let k = rng.random_range(1..=5);
        let points = random_points(&mut rng, size, k);
        let realizable = realizable_behavior_set(&class, &rel, &points).unwrap();
        let inverse = behavior_set(&class, &rel.invert(), &points).unwrap();
        prop_assert_eq!(&realizable.behaviors, &inverse.behaviors);
        let plain = behavior_set(&class, &rel, &points).unwrap();
        for b in plain.behaviors.iter().chain(&realizable.behaviors) {
            prop_assert!(class.iter().any(|h| &h.apply(&points) == b));
        }
        prop_assert!(plain.len() <= class.len());
    }

    #[test]
    fn composed_optimum_dominates(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let size = rng.random_range(1..=8);
        let class = random_class(&mut rng, size, 16);
        let rel = random_relation(&mut rng, size, 3, true);
        let composed = rel.compose_inverse();
        prop_assert!(rel.is_subrelation_of(&composed));
        let atoms: Vec<(usize, i64, f64)> = (0..size)
            .map(|x| (x, label(&mut rng).sign() as i64, 1.0 / size as f64))
            .collect();
        let dist = FiniteDistribution::from_triples(&atoms).unwrap();
        prop_assert!(opt(&class, &rel, &dist).risk <= opt(&class, &composed, &dist).risk + 1e-12);
    }

    #[test]
    fn realizable_selection_agrees_with_risks(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let size = rng.random_range(1..=6);
        let class = random_class(&mut rng, size, 20);
        let reflexive = rng.random_bool(0.5);
        let rel = random_relation(&mut rng, size, 3, reflexive);
        let n = rng.random_range(1..=4);
        let m = rng.random_range(1..=4);
        let train = random_dataset(&mut rng, size, n);
        let test = random_points(&mut rng, size, m);
        let selector = RobustSelector::new(&class, &rel).unwrap();
        let feasible = brute_force_feasible(&class, &rel, train.points(), &test);
        match selector.select(SelectionRule::Realizable, &train, &test) {
            Ok(r) => {
                prop_assert_eq!(r.chosen_index, feasible[0]);
                prop_assert_eq!(r.delta_set_size, feasible.len());
                let inverse = rel.invert();
                prop_assert!(robust_err_labeled(&r.chosen, &train, &inverse).unwrap().is_zero());
                prop_assert!(robust_instability(&r.chosen, &test, &inverse).unwrap().is_zero());
                let (members, _) = selector.delta(SelectionRule::Realizable, train.points(), &test).unwrap();
                prop_assert_eq!(members, feasible);
            }
            Err(e) => {
                prop_assert_eq!(e, Error::Infeasible);
                prop_assert!(feasible.is_empty());
            }
        }
    }

    #[test]
    fn exact_attack_matches_reverse_enumeration(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let size = rng.random_range(2..=5);
        let class = random_class(&mut rng, size, 10);
        let reflexive = rng.random_bool(0.5);
        let rel = random_relation(&mut rng, size, 3, reflexive);
        let n = rng.random_range(1..=2);
        let m = rng.random_range(1..=3);
        let train = random_dataset(&mut rng, size, n);
        let test = random_dataset(&mut rng, size, m);
        let selector = RobustSelector::new(&class, &rel).unwrap();
        let learner = Learner::Selector { selector: &selector, rule: SelectionRule::Agnostic, worst_member: false };
        let r = attack(learner, &train, &test, &rel, true, &AttackBudget::exact()).unwrap();
        prop_assert!(r.exact);
        prop_assert_eq!(r.achieved_error.errors, reverse_enumeration_max(&class, &rel, &train, &test));

        let z: Vec<(usize, Label)> = r.perturbed_train.as_ref().unwrap().instances().into_iter().zip(train.labels()).collect();
        let h = brute_force_minimax(&class, &rel, &z, &r.perturbed_test).members[0];
        prop_assert_eq!(r.hypothesis, Some(h));
        prop_assert_eq!(hamming(&class.get(h).apply(&r.perturbed_test), &test.labels()), r.achieved_error.errors);
    }

    #[test]
    fn pointwise_reduction_round_trips(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let size = rng.random_range(1..=6);
        let class = random_class(&mut rng, size, 16);
        let reflexive = rng.random_bool(0.5);
        let rel = random_relation(&mut rng, size, 3, reflexive);
        let n = rng.random_range(1..=4);
        let train = random_dataset(&mut rng, size, n);
        let m = rng.random_range(1..=5);
        let test = random_points(&mut rng, size, m);
        let predictor = inductive_from_transductive_pointwise(&train, &rel, &class).unwrap();
        let labels = transductive_from_inductive(&predictor, &train, &test);
        for (&x, &y) in test.iter().zip(&labels) {
            let first = brute_force_minimax(&class, &rel, train.points(), &[x]).members[0];
            prop_assert_eq!(class.get(first).get(x), y);
        }
    }

    #[test]
    fn projection_within_twice_any_proper_labeling(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let size = rng.random_range(1..=6);
        let class = random_class(&mut rng, size, 20);
        let m = rng.random_range(1..=6);
        let test = random_points(&mut rng, size, m);
        let input: Vec<Label> = (0..m).map(|_| label(&mut rng)).collect();
        let p = project_proper(&input, &test, &class).unwrap();
        prop_assert_eq!(p.distance, hamming(&p.labeling, &input));
        for h in class.iter() {
            let g = h.apply(&test);
            prop_assert!(p.distance <= hamming(&g, &input));
            prop_assert!(hamming(&p.labeling, &g) <= 2 * hamming(&input, &g));
        }
    }

    #[test]
    fn dimension_certificates_verify(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let size = rng.random_range(1..=6);
        let class = random_class(&mut rng, size, 20);
        let reflexive = rng.random_bool(0.5);
        let rel = random_relation(&mut rng, size, 3, reflexive);
        let (dim, cert) = relaxed_robust_dimension(&class, &rel).unwrap();
        prop_assert_eq!(cert.dimension, dim);
        prop_assert!(verify_certificate(&class, &rel, &cert));
        prop_assert!(1usize << dim <= class.len());
    }
}
