mod common;

use std::collections::BTreeSet;

use common::*;
use cpda_core::discovery::{intervention_parents, markovian_parents};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn alg1(raws: &[Raw], n: usize, j: usize) -> (BTreeSet<usize>, BTreeSet<usize>) {
    let set = to_set(n, raws);
    let view = set.all();
    let ipa = intervention_parents(&view, j);
    // Lower indices execute earlier, so ascending order is farthest first.
    let dist: Vec<usize> = ipa.iter().copied().collect();
    (ipa.clone(), markovian_parents(&ipa, &dist, &view, j))
}

#[test]
fn chain_keeps_only_the_nearest_ancestor() {
    let dag = structure(Family::Chain, 3);
    let raws = exhaustive_interventions(&dag, &[(1, 0), (1, 0)], 1);
    let (ipa, pa) = alg1(&raws, 3, 3);
    assert_eq!(ipa, BTreeSet::from([1, 2]));
    assert_eq!(pa, BTreeSet::from([2]));
}

#[test]
fn collider_keeps_both_causes() {
    let dag = structure(Family::Collider, 3);
    let raws = exhaustive_interventions(&dag, &[(1, 0), (1, 0)], 1);
    let (_, pa) = alg1(&raws, 3, 3);
    assert_eq!(pa, BTreeSet::from([1, 2]));
}

#[test]
fn single_candidate_with_different_conditionals_is_kept() {
    let dag = structure(Family::Chain, 3);
    let raws = exhaustive_interventions(&dag, &[(1, 1), (2, 1)], 1);
    let (_, pa) = alg1(&raws, 3, 2);
    assert_eq!(pa, BTreeSet::from([1]));
}

#[test]
fn markovian_parents_match_brute_force_minimal_sets() {
    let mut agree = 0;
    let mut report = Vec::new();
    for trial in 0..50u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(trial);
        let family = FAMILIES[trial as usize % FAMILIES.len()];
        let n = rng.random_range(family.sizes());
        let dag = structure(family, n);
        let weights = random_weights(&mut rng, dag.edge_count());
        let misses = rng.random_range(1..=2);
        let raws = exhaustive_interventions(&dag, &weights, misses);
        let mut trial_ok = true;
        for j in 1..=n {
            let (ipa_lib, pa) = alg1(&raws, n, j);
            let ipa_raw = ipa(&raws, j);
            let minimal = minimal_screening_sets(&raws, j, &ipa_raw);
            let ok = ipa_lib == ipa_raw && minimal.len() == 1 && minimal[0] == pa;
            if !ok {
                report.push(format!("trial {trial} {family:?} n={n} node {j}: alg {pa:?} oracle {minimal:?}"));
                trial_ok = false;
            }
        }
        agree += trial_ok as usize;
    }
    assert_eq!(agree, 50, "{}", report.join("\n"));
}

#[test]
fn markovian_parents_are_the_true_parents_on_canonical_structures() {
    for family in FAMILIES {
        for n in family.sizes() {
            let dag = structure(family, n);
            let weights = vec![(2, 1); dag.edge_count()];
            let raws = exhaustive_interventions(&dag, &weights, 1);
            for j in 1..=n {
                let (_, pa) = alg1(&raws, n, j);
                assert_eq!(&pa, dag.parents(j), "{family:?} n={n} node {j}");
            }
        }
    }
}
