//! Interventional quantities over a learned structure: causal effect,
//! causal dependence, direct dependence, and the truncated factorization
//! check.
//!
//! All estimates use observed realizations only; terms whose conditioning
//! event has zero mass are skipped rather than renormalized.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::discovery::NodeSet;
use crate::graph::Dag;
use crate::minilang::NodeIdx;
use crate::observations::{Assignment, ObservationSet, View};

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum EffectError {
    #[error("source and target are the same node ({0})")]
    SameNode(NodeIdx),
    #[error("node {0} is not a parent of node {1}")]
    NotParent(NodeIdx, NodeIdx),
    #[error("joint enumeration over {0} nodes exceeds the limit of {1}")]
    TooManyNodes(usize, usize),
}

/// Adjustment set for the effect of intervening on `x` on `j`: the parents
/// of `x` (outside `x` and `j`), keeping only those not d-separated from `j`
/// given `x` and the other parents once the edges leaving `x` are cut.
pub fn adjustment_set(dag: &Dag, x: &NodeSet, j: NodeIdx) -> Vec<NodeIdx> {
    let mut pa_x = NodeSet::new();
    for &k in x {
        pa_x.extend(dag.parents(k).iter().copied());
    }
    pa_x.retain(|k| !x.contains(k) && *k != j);
    let cut = dag.without_outgoing(x);
    let target: NodeSet = [j].into_iter().collect();
    pa_x.iter()
        .copied()
        .filter(|&z| {
            let mut given = x.clone();
            given.extend(pa_x.iter().copied().filter(|&k| k != z));
            let zs: NodeSet = [z].into_iter().collect();
            !cut.d_separated(&zs, &target, &given)
        })
        .collect()
}

/// Result of an interventional query.
#[derive(Debug, Clone, PartialEq)]
pub struct Effect {
    /// `None` when no adjustment stratum had positive conditioning mass.
    pub value: Option<f64>,
    pub adjustment: Vec<NodeIdx>,
}

/// `P(S_j = 1 | do(x))` by the adjustment formula
/// `Σ_z P(S_j=1 | x, z) P(z)` over observations not mutating `j`.
pub fn causal_effect(view: &View, dag: &Dag, x: &Assignment, j: NodeIdx) -> Effect {
    let xs: NodeSet = x.iter().map(|&(k, _)| k).collect();
    let adjustment = adjustment_set(dag, &xs, j);
    let value = adjusted(view, x, &adjustment, j);
    Effect { value, adjustment }
}

fn adjusted(view: &View, x: &Assignment, z: &[NodeIdx], j: NodeIdx) -> Option<f64> {
    let strata = view.realizations(z, Some(j));
    let total: u128 = strata.iter().map(|(_, m)| m).sum();
    let mut sum = 0.0;
    let mut defined = false;
    let mut cond: Vec<(NodeIdx, bool)> = x.to_vec();
    for (realization, mass) in strata {
        cond.truncate(x.len());
        cond.extend(z.iter().copied().zip(realization));
        if let Some(p) = view.prob_given(&[(j, true)], &cond, Some(j)).value() {
            sum += p * (mass as f64 / total as f64);
            defined = true;
        }
    }
    defined.then_some(sum)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ScoreKind {
    Causal,
    Direct,
}

impl ScoreKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ScoreKind::Causal => "causal",
            ScoreKind::Direct => "direct",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DependenceScore {
    pub source: NodeIdx,
    pub target: NodeIdx,
    pub kind: ScoreKind,
    pub value: f64,
    /// Set when an undefined operand was replaced by 0.
    pub undefined: bool,
}

/// `CD(i, j) = P(S_j=1 | do(S_i=1)) − P(S_j=1 | do(S_i=0))`. An undefined
/// side makes the score 0 with the flag set.
pub fn causal_dependence(view: &View, dag: &Dag, i: NodeIdx, j: NodeIdx) -> Result<DependenceScore, EffectError> {
    if i == j {
        return Err(EffectError::SameNode(i));
    }
    let xs: NodeSet = [i].into_iter().collect();
    let z = adjustment_set(dag, &xs, j);
    let on = adjusted(view, &[(i, true)], &z, j);
    let off = adjusted(view, &[(i, false)], &z, j);
    let (value, undefined) = match (on, off) {
        (Some(a), Some(b)) => (a - b, false),
        _ => (0.0, true),
    };
    Ok(DependenceScore {
        source: i,
        target: j,
        kind: ScoreKind::Causal,
        value,
        undefined,
    })
}

/// Natural direct effect of `i` on `j` within one input's observations:
/// `Σ_z [P(S_j=1 | i=1, z) − P(S_j=1 | i=0, z)] · P(z | do(i=0))` with
/// `Z = PA_j \ {i}` and `P(z | do(i=0)) = Σ_{pa_i} P(z | i=0, pa_i) P(pa_i)`.
/// With no mediators the weight is 1. `None` when no term is defined.
pub fn natural_direct_effect(view: &View, dag: &Dag, i: NodeIdx, j: NodeIdx) -> Option<f64> {
    let excl = Some(j);
    let z: Vec<NodeIdx> = dag.parents(j).iter().copied().filter(|&k| k != i).collect();
    let pa_i: Vec<NodeIdx> = dag.parents(i).iter().copied().filter(|&k| k != j).collect();
    let pa_strata = view.realizations(&pa_i, excl);
    let pa_total: u128 = pa_strata.iter().map(|(_, m)| m).sum();
    let mut sum = 0.0;
    let mut defined = false;
    let strata: Vec<Vec<bool>> = if z.is_empty() {
        alloc::vec![Vec::new()]
    } else {
        view.realizations(&z, excl).into_iter().map(|(r, _)| r).collect()
    };
    for zr in strata {
        let zc: Vec<(NodeIdx, bool)> = z.iter().copied().zip(zr).collect();
        let mut c1 = alloc::vec![(i, true)];
        c1.extend(zc.iter().copied());
        let mut c0 = alloc::vec![(i, false)];
        c0.extend(zc.iter().copied());
        let p1 = view.prob_given(&[(j, true)], &c1, excl).value();
        let p0 = view.prob_given(&[(j, true)], &c0, excl).value();
        let (Some(p1), Some(p0)) = (p1, p0) else {
            continue;
        };
        let weight = if z.is_empty() {
            1.0
        } else {
            let mut w = 0.0;
            for (par, mass) in &pa_strata {
                let mut given = alloc::vec![(i, false)];
                given.extend(pa_i.iter().copied().zip(par.iter().copied()));
                if let Some(p) = view.prob_given(&zc, &given, excl).value() {
                    w += p * (*mass as f64 / pa_total as f64);
                }
            }
            w
        };
        sum += (p1 - p0) * weight;
        defined = true;
    }
    defined.then_some(sum)
}

/// `DD(i, j)`: the natural direct effect averaged over the inputs whose
/// oracle run executed `j`. Inputs with no defined term contribute 0 and
/// set the flag.
pub fn direct_dependence(set: &ObservationSet, dag: &Dag, i: NodeIdx, j: NodeIdx) -> Result<DependenceScore, EffectError> {
    if !dag.has_edge(i, j) {
        return Err(EffectError::NotParent(i, j));
    }
    let tests = set.covering_tests(j);
    let mut sum = 0.0;
    let mut undefined = tests.is_empty();
    for &t in &tests {
        match natural_direct_effect(&set.for_test(t), dag, i, j) {
            Some(v) => sum += v,
            None => undefined = true,
        }
    }
    let value = if tests.is_empty() {
        0.0
    } else {
        sum / tests.len() as f64
    };
    Ok(DependenceScore {
        source: i,
        target: j,
        kind: ScoreKind::Direct,
        value,
        undefined,
    })
}

/// Direct dependence of every structure edge, in edge order.
pub fn direct_dependences(set: &ObservationSet, dag: &Dag) -> Vec<DependenceScore> {
    dag.edges()
        .into_iter()
        .map(|(i, j)| direct_dependence(set, dag, i, j).expect("edge of the structure"))
        .collect()
}

/// `P(S_i = 1 | pa_i)` for each observed parent realization of one node.
/// An unobserved realization reads as "never changes" (`P(S_i = 1) = 0`).
#[derive(Debug, Clone, PartialEq)]
pub struct Cpt {
    pub parents: Vec<NodeIdx>,
    pub p_true: BTreeMap<Vec<bool>, f64>,
}

impl Cpt {
    pub fn p(&self, node_value: bool, parent_values: &[bool]) -> f64 {
        let p1 = self.p_true.get(parent_values).copied().unwrap_or(0.0);
        if node_value {
            p1
        } else {
            1.0 - p1
        }
    }
}

/// Fits a table per node over the observations not mutating that node.
pub fn fit_cpts(view: &View, dag: &Dag) -> Vec<Cpt> {
    dag.nodes()
        .map(|k| {
            let parents: Vec<NodeIdx> = dag.parents(k).iter().copied().collect();
            let mut p_true = BTreeMap::new();
            for (r, _) in view.realizations(&parents, Some(k)) {
                let given: Vec<(NodeIdx, bool)> = parents.iter().copied().zip(r.iter().copied()).collect();
                if let Some(p) = view.prob_given(&[(k, true)], &given, Some(k)).value() {
                    p_true.insert(r, p);
                }
            }
            Cpt { parents, p_true }
        })
        .collect()
}

/// Probability of the joint realization `values` (indexed by node, slot 0
/// unused) after intervening with `x`: the product of `P(v_i | pa_i)` over
/// nodes outside `x`, or 0 when `values` disagrees with `x`.
pub fn truncated_probability(dag: &Dag, cpts: &[Cpt], x: &Assignment, values: &[bool]) -> f64 {
    if x.iter().any(|&(k, v)| values[k] != v) {
        return 0.0;
    }
    let mut p = 1.0;
    let mut parent_values = Vec::new();
    for k in dag.nodes() {
        if x.iter().any(|&(q, _)| q == k) {
            continue;
        }
        let cpt = &cpts[k - 1];
        parent_values.clear();
        parent_values.extend(cpt.parents.iter().map(|&q| values[q]));
        p *= cpt.p(values[k], &parent_values);
        if p == 0.0 {
            break;
        }
    }
    p
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FactorizationReport {
    /// Sum of the truncated product over realizations consistent with the
    /// intervention.
    pub total: f64,
    /// Probability assigned to realizations inconsistent with it.
    pub inconsistent_mass: f64,
    /// `total` is 1 within the probability tolerance and
    /// `inconsistent_mass` is 0.
    pub ok: bool,
}

pub const MAX_ENUMERATED_NODES: usize = 24;

/// Enumerates every joint realization and sums [`truncated_probability`].
pub fn verify_truncated_factorization(
    dag: &Dag,
    cpts: &[Cpt],
    x: &Assignment,
) -> Result<FactorizationReport, EffectError> {
    let n = dag.node_count();
    if n > MAX_ENUMERATED_NODES {
        return Err(EffectError::TooManyNodes(n, MAX_ENUMERATED_NODES));
    }
    let mut total = 0.0;
    let mut inconsistent_mass = 0.0;
    let mut values = alloc::vec![false; n + 1];
    for mask in 0u64..(1u64 << n) {
        for (k, v) in values.iter_mut().enumerate().skip(1) {
            *v = mask >> (k - 1) & 1 == 1;
        }
        let p = truncated_probability(dag, cpts, x, &values);
        if x.iter().all(|&(k, v)| values[k] == v) {
            total += p;
        } else {
            inconsistent_mass += p;
        }
    }
    Ok(FactorizationReport {
        total,
        inconsistent_mass,
        ok: libm::fabs(total - 1.0) <= crate::observations::PROB_TOLERANCE && inconsistent_mass == 0.0,
    })
}
