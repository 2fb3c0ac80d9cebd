mod common;

use std::collections::BTreeSet;

use cpda_core::graph::Dag;
use proptest::prelude::*;

fn descendants(dag: &Dag, k: usize) -> BTreeSet<usize> {
    let mut out = BTreeSet::new();
    let mut stack = vec![k];
    while let Some(v) = stack.pop() {
        for c in dag.children(v) {
            if out.insert(c) {
                stack.push(c);
            }
        }
    }
    out
}

fn adjacent(dag: &Dag, v: usize) -> Vec<usize> {
    let mut out: Vec<usize> = dag.parents(v).iter().copied().collect();
    out.extend(dag.children(v));
    out
}

/// Every simple path from `x` to `y` in the skeleton is blocked by `z`.
fn separated_by_paths(dag: &Dag, x: &BTreeSet<usize>, y: &BTreeSet<usize>, z: &BTreeSet<usize>) -> bool {
    fn walk(dag: &Dag, path: &mut Vec<usize>, y: &BTreeSet<usize>, z: &BTreeSet<usize>) -> bool {
        let v = *path.last().unwrap();
        if path.len() > 1 && y.contains(&v) {
            return blocked(dag, path, z);
        }
        for w in adjacent(dag, v) {
            if path.contains(&w) {
                continue;
            }
            path.push(w);
            let ok = walk(dag, path, y, z);
            path.pop();
            if !ok {
                return false;
            }
        }
        true
    }
    fn blocked(dag: &Dag, path: &[usize], z: &BTreeSet<usize>) -> bool {
        (1..path.len() - 1).any(|i| {
            let (a, m, b) = (path[i - 1], path[i], path[i + 1]);
            let collider = dag.has_edge(a, m) && dag.has_edge(b, m);
            if collider {
                !z.contains(&m) && descendants(dag, m).is_disjoint(z)
            } else {
                z.contains(&m)
            }
        })
    }
    x.iter().all(|&s| walk(dag, &mut vec![s], y, z))
}

fn arb_case() -> impl Strategy<Value = (Dag, BTreeSet<usize>, BTreeSet<usize>, BTreeSet<usize>)> {
    (2usize..=7, any::<u64>(), 0.2f64..0.7).prop_flat_map(|(n, seed, density)| {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let dag = common::random_dag(&mut rng, n, density);
        // Each node goes to X, Y, Z or none.
        proptest::collection::vec(0u8..4, n).prop_filter_map("x and y nonempty", move |roles| {
            let pick = |r: u8| -> BTreeSet<usize> { (1..=n).filter(|&k| roles[k - 1] == r).collect() };
            let (x, y, z) = (pick(0), pick(1), pick(2));
            (!x.is_empty() && !y.is_empty()).then(|| (dag.clone(), x, y, z))
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn d_separation_matches_path_enumeration((dag, x, y, z) in arb_case()) {
        prop_assert_eq!(dag.d_separated(&x, &y, &z), separated_by_paths(&dag, &x, &y, &z));
    }

    #[test]
    fn d_separation_is_symmetric((dag, x, y, z) in arb_case()) {
        prop_assert_eq!(dag.d_separated(&x, &y, &z), dag.d_separated(&y, &x, &z));
    }
}

#[test]
fn textbook_cases() {
    let mut chain = Dag::new(3);
    chain.add_edge(1, 2);
    chain.add_edge(2, 3);
    let s = |v: &[usize]| v.iter().copied().collect::<BTreeSet<_>>();
    assert!(!chain.d_separated(&s(&[1]), &s(&[3]), &s(&[])));
    assert!(chain.d_separated(&s(&[1]), &s(&[3]), &s(&[2])));
    let mut collider = Dag::new(4);
    collider.add_edge(1, 3);
    collider.add_edge(2, 3);
    collider.add_edge(3, 4);
    assert!(collider.d_separated(&s(&[1]), &s(&[2]), &s(&[])));
    assert!(!collider.d_separated(&s(&[1]), &s(&[2]), &s(&[3])));
    assert!(!collider.d_separated(&s(&[1]), &s(&[2]), &s(&[4])));
}
