use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sample_design::oracle::binomial;
use sample_design::problem::random_small_instance;
use sample_design::solver::{primal_value, SingularPolicy};
use sample_design::{exhaustive_best_subset, OracleConfig, ProblemInstance, SelectionWeights, SymMatrix};

/// Recursive enumeration with LU inverses; `None` when every subset is singular.
fn reference_best(inst: &ProblemInstance) -> Option<(f64, Vec<usize>)> {
    fn walk(inst: &ProblemInstance, start: usize, chosen: &mut Vec<usize>, best: &mut Option<(f64, Vec<usize>)>) {
        if chosen.len() == inst.k {
            let a = chosen.iter().fold(DMatrix::zeros(inst.p, inst.p), |acc, &i| acc + inst.fims[i].as_matrix());
            let eig = a.clone().symmetric_eigen().eigenvalues;
            if eig.min() <= 1e-12 * eig.max().max(0.0) {
                return;
            }
            let inv = a.lu().try_inverse().unwrap();
            let v: f64 = (0..inst.p).map(|p| inst.psi[p] * inv[(p, p)]).sum();
            if best.as_ref().is_none_or(|(b, _)| v < *b) {
                *best = Some((v, chosen.clone()));
            }
            return;
        }
        for i in start..inst.n {
            chosen.push(i);
            walk(inst, i + 1, chosen, best);
            chosen.pop();
        }
    }
    let mut best = None;
    walk(inst, 0, &mut Vec::new(), &mut best);
    best
}

fn instance(seed: u64) -> ProblemInstance {
    random_small_instance(&mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(150))]

    #[test]
    fn agrees_with_reference_enumeration(seed in any::<u64>()) {
        let inst = instance(seed);
        let res = exhaustive_best_subset(&inst, &OracleConfig::default()).unwrap();
        let (value, subset) = reference_best(&inst).unwrap();
        prop_assert!((res.best_value - value).abs() <= 1e-9 * value);
        prop_assert!(res.ties.contains(&subset));
        prop_assert_eq!(res.evaluated, binomial(inst.n, inst.k));
        let w = SelectionWeights::from_indices(inst.n, &res.best_subset);
        prop_assert!((primal_value(&inst, &w, SingularPolicy::Ridge).unwrap() - res.best_value).abs() <= 1e-12 * res.best_value);
    }

    #[test]
    fn extra_candidate_never_hurts(seed in any::<u64>()) {
        let inst = instance(seed);
        let before = exhaustive_best_subset(&inst, &OracleConfig::default()).unwrap().best_value;
        let mut fims = inst.fims.clone();
        fims.push(SymMatrix::outer(&vec![0.7; inst.p], 1.0));
        let grown = ProblemInstance::new(inst.k, fims, inst.psi.clone());
        let after = exhaustive_best_subset(&grown, &OracleConfig::default()).unwrap().best_value;
        prop_assert!(after <= before * (1.0 + 1e-12));
    }

    #[test]
    fn scaling_fims_divides_the_value(seed in any::<u64>(), c in 0.01f64..100.0) {
        let inst = instance(seed);
        let base = exhaustive_best_subset(&inst, &OracleConfig::default()).unwrap();
        let scaled = ProblemInstance::new(inst.k, inst.fims.iter().map(|f| f.scaled(c)).collect(), inst.psi.clone());
        let res = exhaustive_best_subset(&scaled, &OracleConfig::default()).unwrap();
        prop_assert!((res.best_value - base.best_value / c).abs() <= 1e-9 * res.best_value);
        prop_assert!(base.ties.contains(&res.best_subset));
    }

    #[test]
    fn scaling_weights_multiplies_the_value(seed in any::<u64>(), c in 0.01f64..100.0) {
        let inst = instance(seed);
        let base = exhaustive_best_subset(&inst, &OracleConfig::default()).unwrap();
        let scaled = ProblemInstance::new(inst.k, inst.fims.clone(), inst.psi.iter().map(|w| w * c).collect());
        let res = exhaustive_best_subset(&scaled, &OracleConfig::default()).unwrap();
        prop_assert!((res.best_value - base.best_value * c).abs() <= 1e-9 * res.best_value);
        prop_assert!(base.ties.contains(&res.best_subset));
    }
}

#[test]
fn singular_subsets_are_skipped_not_ridged() {
    // Rank-one FIMs in two dimensions; only pairs with distinct directions identify θ.
    let fims = vec![
        SymMatrix::outer(&[1.0, 0.0], 100.0),
        SymMatrix::outer(&[1.0, 0.0], 100.0),
        SymMatrix::outer(&[0.0, 1.0], 1.0),
    ];
    let inst = ProblemInstance::new(2, fims, vec![1.0, 1.0]);
    let res = exhaustive_best_subset(&inst, &OracleConfig::default()).unwrap();
    assert_eq!(res.singular_skipped, 1);
    assert_eq!(res.best_subset, vec![0, 2]);
    assert!((res.best_value - 1.01).abs() <= 1e-12);
    assert_eq!(res.ties, vec![vec![0, 2], vec![1, 2]]);
}

#[test]
fn cap_is_enforced() {
    let inst = ProblemInstance::new(10, vec![SymMatrix::identity(1); 30], vec![1.0]);
    let cfg = OracleConfig { cap: 1000, ..Default::default() };
    assert!(exhaustive_best_subset(&inst, &cfg).is_err());
}
