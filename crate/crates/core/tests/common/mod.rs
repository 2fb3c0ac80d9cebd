//! Synthetic structures, exhaustive intervention data and counting oracles
//! that do not go through the library's probability code.

#![allow(dead_code)]

use std::collections::BTreeSet;

use cpda_core::effects::{truncated_probability, Cpt};
use cpda_core::graph::Dag;
use cpda_core::observations::{Bits, Observation, ObservationSet};
use rand::{Rng, RngCore};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Chain,
    Fork,
    Collider,
    Diamond,
}

pub const FAMILIES: [Family; 4] = [Family::Chain, Family::Fork, Family::Collider, Family::Diamond];

impl Family {
    pub fn sizes(self) -> std::ops::RangeInclusive<usize> {
        match self {
            Family::Diamond => 4..=6,
            _ => 3..=6,
        }
    }
}

/// Nodes are numbered in a topological order.
pub fn structure(f: Family, n: usize) -> Dag {
    let mut dag = Dag::new(n);
    match f {
        Family::Chain => (1..n).for_each(|k| dag.add_edge(k, k + 1)),
        Family::Fork => (2..=n).for_each(|k| dag.add_edge(1, k)),
        Family::Collider => (1..n).for_each(|k| dag.add_edge(k, n)),
        Family::Diamond => {
            dag.add_edge(1, 2);
            dag.add_edge(1, 3);
            dag.add_edge(2, 4);
            dag.add_edge(3, 4);
            (4..n).for_each(|k| dag.add_edge(k, k + 1));
        }
    }
    dag
}

/// A raw observation: mutated node and change bits (slot 0 unused).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Raw {
    pub mutated: usize,
    pub bits: Vec<bool>,
}

/// Every single-node intervention under every combination of per-edge
/// transmission outcomes. Each edge transmits with weight `t` and blocks
/// with weight `b` (small integers, so the data hold exact ratios). Each
/// intervention also has `misses` outcomes in which the mutation reproduced
/// the original value and nothing changed.
pub fn exhaustive_interventions(dag: &Dag, weights: &[(usize, usize)], misses: usize) -> Vec<Raw> {
    let n = dag.node_count();
    let edges = dag.edges();
    assert_eq!(edges.len(), weights.len());
    let order = dag.topological_order().expect("acyclic");
    let mut out = Vec::new();
    for k in 1..=n {
        for _ in 0..misses {
            out.push(Raw {
                mutated: k,
                bits: vec![false; n + 1],
            });
        }
        let mut outcome = vec![0usize; edges.len()];
        loop {
            let mut bits = vec![false; n + 1];
            bits[k] = true;
            for &v in &order {
                if v == k {
                    continue;
                }
                bits[v] = edges.iter().enumerate().any(|(e, &(p, c))| {
                    c == v && bits[p] && outcome[e] < weights[e].0
                });
            }
            out.push(Raw { mutated: k, bits });
            let mut e = 0;
            while e < edges.len() {
                outcome[e] += 1;
                if outcome[e] < weights[e].0 + weights[e].1 {
                    break;
                }
                outcome[e] = 0;
                e += 1;
            }
            if e == edges.len() {
                break;
            }
        }
    }
    out
}

pub fn random_weights(rng: &mut impl RngCore, edges: usize) -> Vec<(usize, usize)> {
    (0..edges)
        .map(|_| match rng.random_range(0..3) {
            0 => (1, 1),
            1 => (1, 2),
            _ => (2, 1),
        })
        .collect()
}

/// One test holding every raw observation at unit weight.
pub fn to_set(n: usize, raws: &[Raw]) -> ObservationSet {
    let mut ordinals = vec![0u32; n + 1];
    let obs = raws
        .iter()
        .map(|r| {
            let ordinal = ordinals[r.mutated];
            ordinals[r.mutated] += 1;
            Observation {
                mutated: r.mutated,
                ordinal,
                test: 0,
                changed: Bits::from_fn(n, |k| r.bits[k]),
                weight_den: 1,
            }
        })
        .collect();
    ObservationSet::new(n, vec!["t".into()], vec![Bits::from_fn(n, |_| true)], obs).unwrap()
}

/// Exact ratio `num/den` of `j` changing given `cond`, over raws that do not
/// mutate `j`; `None` when nothing satisfies `cond`.
pub fn ratio(raws: &[Raw], j: usize, cond: &[(usize, bool)]) -> Option<(u64, u64)> {
    let (mut num, mut den) = (0u64, 0u64);
    for r in raws.iter().filter(|r| r.mutated != j) {
        if cond.iter().all(|&(k, v)| r.bits[k] == v) {
            den += 1;
            num += r.bits[j] as u64;
        }
    }
    (den > 0).then_some((num, den))
}

pub fn ratio_eq(a: (u64, u64), b: (u64, u64)) -> bool {
    a.0 * b.1 == b.0 * a.1
}

pub fn ratio_f(r: (u64, u64)) -> f64 {
    r.0 as f64 / r.1 as f64
}

/// Observed realizations of `nodes` over raws not mutating `j`.
pub fn realizations(raws: &[Raw], nodes: &[usize], j: usize) -> BTreeSet<Vec<bool>> {
    raws.iter()
        .filter(|r| r.mutated != j)
        .map(|r| nodes.iter().map(|&k| r.bits[k]).collect())
        .collect()
}

/// Intervention parents by scanning raws.
pub fn ipa(raws: &[Raw], j: usize) -> BTreeSet<usize> {
    raws.iter()
        .filter(|r| r.mutated != j && r.bits[j])
        .map(|r| r.mutated)
        .collect()
}

/// Whether `j` depends on `d` given some observed realization of `given`
/// where both conditionals are defined. With `given` empty, an undefined
/// side against a defined one also counts as dependence.
pub fn depends(raws: &[Raw], j: usize, d: usize, given: &[usize]) -> bool {
    if given.is_empty() {
        return match (ratio(raws, j, &[(d, false)]), ratio(raws, j, &[(d, true)])) {
            (Some(a), Some(b)) => !ratio_eq(a, b),
            (None, None) => false,
            _ => true,
        };
    }
    realizations(raws, given, j).into_iter().any(|r| {
        let mut cond: Vec<(usize, bool)> = given.iter().copied().zip(r).collect();
        cond.push((d, false));
        let p0 = ratio(raws, j, &cond);
        cond.last_mut().unwrap().1 = true;
        let p1 = ratio(raws, j, &cond);
        matches!((p0, p1), (Some(a), Some(b)) if !ratio_eq(a, b))
    })
}

/// All smallest subsets `P` of `ipa` such that `j` is independent of every
/// other member of `ipa` given `P`.
pub fn minimal_screening_sets(raws: &[Raw], j: usize, ipa: &BTreeSet<usize>) -> Vec<BTreeSet<usize>> {
    let items: Vec<usize> = ipa.iter().copied().collect();
    for size in 0..=items.len() {
        let mut found = Vec::new();
        for mask in 0u32..(1 << items.len()) {
            if mask.count_ones() as usize != size {
                continue;
            }
            let p: Vec<usize> = (0..items.len()).filter(|b| mask >> b & 1 == 1).map(|b| items[b]).collect();
            let screens = items
                .iter()
                .filter(|d| !p.contains(d))
                .all(|&d| !depends(raws, j, d, &p));
            if screens {
                found.push(p.into_iter().collect());
            }
        }
        if !found.is_empty() {
            return found;
        }
    }
    unreachable!("the full candidate set always screens")
}

/// Random DAG over `n` nodes with edges only from lower to higher index.
pub fn random_dag(rng: &mut impl RngCore, n: usize, density: f64) -> Dag {
    let mut dag = Dag::new(n);
    for c in 1..=n {
        for p in 1..c {
            if rng.random_bool(density) {
                dag.add_edge(p, c);
            }
        }
    }
    dag
}

/// Random raw observations: each node is mutated in turn and the others
/// change at random with a bias towards following a changed parent.
pub fn random_raws(rng: &mut impl RngCore, dag: &Dag, per_node: usize) -> Vec<Raw> {
    let n = dag.node_count();
    let mut out = Vec::new();
    for k in 1..=n {
        for _ in 0..per_node {
            let mut bits = vec![false; n + 1];
            bits[k] = rng.random_bool(0.9);
            for v in k + 1..=n {
                let pushed = dag.parents(v).iter().any(|&p| bits[p]);
                bits[v] = rng.random_bool(if pushed { 0.7 } else { 0.05 });
            }
            out.push(Raw { mutated: k, bits });
        }
    }
    out
}

/// Raws from `(mutated, bit string, count)` rows.
pub fn raws_from(rows: &[(usize, &str, usize)]) -> Vec<Raw> {
    let mut out = Vec::new();
    for &(mutated, bits, count) in rows {
        let mut v = vec![false];
        v.extend(bits.chars().map(|c| c == '1'));
        for _ in 0..count {
            out.push(Raw {
                mutated,
                bits: v.clone(),
            });
        }
    }
    out
}

/// `Σ_z [P(j|i=1,z) − P(j|i=0,z)] · Σ_{pa_i} P(z|i=0,pa_i) P(pa_i)`.
pub fn nde_by_strata(raws: &[Raw], dag: &Dag, i: usize, j: usize) -> f64 {
    let z: Vec<usize> = dag.parents(j).iter().copied().filter(|&k| k != i).collect();
    let pa_i: Vec<usize> = dag.parents(i).iter().copied().filter(|&k| k != j).collect();
    let pool: Vec<&Raw> = raws.iter().filter(|r| r.mutated != j).collect();
    let mut sum = 0.0;
    for zr in realizations(raws, &z, j) {
        let zc: Vec<(usize, bool)> = z.iter().copied().zip(zr.iter().copied()).collect();
        let with = |v: bool| {
            let mut c = zc.clone();
            c.insert(0, (i, v));
            ratio(raws, j, &c)
        };
        let (Some(p1), Some(p0)) = (with(true), with(false)) else {
            continue;
        };
        let mut w = 0.0;
        for pr in realizations(raws, &pa_i, j) {
            let pc: Vec<(usize, bool)> = pa_i.iter().copied().zip(pr).collect();
            let mass = pool.iter().filter(|o| pc.iter().all(|&(k, v)| o.bits[k] == v)).count() as f64;
            let mut given = pc.clone();
            given.push((i, false));
            let num = pool
                .iter()
                .filter(|o| given.iter().chain(&zc).all(|&(k, v)| o.bits[k] == v))
                .count() as f64;
            let den = pool.iter().filter(|o| given.iter().all(|&(k, v)| o.bits[k] == v)).count() as f64;
            if den > 0.0 {
                w += num / den * mass / pool.len() as f64;
            }
        }
        sum += (ratio_f(p1) - ratio_f(p0)) * w;
    }
    sum
}

/// Observation tables over `1 -> 2 -> 3`, `1 -> 3` as (mutated, bits, count).
pub const HAND_TABLES: [&[(usize, &str, usize)]; 3] = [
    &[(1, "111", 3), (1, "101", 2), (1, "110", 1), (1, "100", 2), (2, "011", 3), (2, "010", 1), (3, "001", 2)],
    &[(1, "111", 1), (1, "100", 1), (2, "011", 1), (2, "010", 2), (1, "000", 1), (2, "000", 1)],
    &[(1, "101", 4), (1, "111", 4), (2, "011", 1), (2, "010", 3), (1, "000", 2)],
];

pub fn hand_table_dag() -> Dag {
    let mut dag = Dag::new(3);
    dag.add_edge(1, 2);
    dag.add_edge(2, 3);
    dag.add_edge(1, 3);
    dag
}

/// Sum over every joint realization consistent with `x` of the product of
/// counted conditionals `P(v | pa_v)` for nodes outside `x`. Checks along
/// the way that `truncated_probability` agrees term by term.
pub fn truncated_total_by_counting(raws: &[Raw], dag: &Dag, x: &[(usize, bool)], cpts: &[Cpt]) -> f64 {
    let n = dag.node_count();
    let mut total = 0.0;
    for mask in 0u32..(1 << n) {
        let values: Vec<bool> = (0..=n).map(|k| k > 0 && mask >> (k - 1) & 1 == 1).collect();
        if x.iter().any(|&(k, v)| values[k] != v) {
            assert_eq!(truncated_probability(dag, cpts, x, &values), 0.0);
            continue;
        }
        let mut p = 1.0;
        for v in 1..=n {
            if x.iter().any(|&(k, _)| k == v) {
                continue;
            }
            let cond: Vec<(usize, bool)> = dag.parents(v).iter().map(|&q| (q, values[q])).collect();
            let p1 = ratio(raws, v, &cond).map(ratio_f).unwrap_or(0.0);
            p *= if values[v] { p1 } else { 1.0 - p1 };
        }
        assert!((p - truncated_probability(dag, cpts, x, &values)).abs() <= 1e-12);
        total += p;
    }
    total
}
