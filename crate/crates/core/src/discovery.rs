//! Causal structure learning from intervention observations.
//!
//! For every node `j`: intervention parents are the nodes whose mutation
//! ever changed `j`; the candidates are the intervention parents that also
//! pass the safe-parent filter; the Markovian parents are then extracted by
//! iterated conditional-independence tests, farthest candidate first.
//! Finally edges contradicting a reverse intervention dependence are
//! dropped to make the graph acyclic.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use crate::graph::Dag;
use crate::minilang::{
    index_nodes, node_contexts, stmt_exprs, walk_stmts, ExprKind, Node, NodeIdx, NodeKind, Program,
};
use crate::observations::{ObservationSet, View};

pub type NodeSet = BTreeSet<NodeIdx>;

/// `k ∈ IPA_j` iff some observation mutating `k` changed `j`.
pub fn intervention_parents(view: &View, j: NodeIdx) -> NodeSet {
    view.intervention_parents(j).into_iter().collect()
}

/// Safe-parent sets of every node (`result[j - 1]`), from call-graph facts:
///
/// * nodes of the same function, plus the parameters of its callers;
/// * for a parameter, additionally every node of its callers (the argument
///   values are computed there);
/// * return nodes of user functions called by the node's statement;
/// * every assignment node of a global the node's statement reads.
pub fn safe_parents(p: &Program) -> Vec<NodeSet> {
    let nodes = index_nodes(p);
    let contexts = node_contexts(p);
    let mut by_function: BTreeMap<&str, NodeSet> = BTreeMap::new();
    let mut params: BTreeMap<&str, NodeSet> = BTreeMap::new();
    let mut returns: BTreeMap<&str, NodeSet> = BTreeMap::new();
    let mut global_nodes: BTreeMap<&str, NodeSet> = BTreeMap::new();
    for n in &nodes {
        let f = n.location.function.as_str();
        by_function.entry(f).or_default().insert(n.index);
        match n.kind {
            NodeKind::Parameter => {
                params.entry(f).or_default().insert(n.index);
            }
            NodeKind::Return => {
                returns.entry(f).or_default().insert(n.index);
            }
            NodeKind::AssignLhs if p.is_global(&n.variable) => {
                global_nodes.entry(n.variable.as_str()).or_default().insert(n.index);
            }
            _ => {}
        }
    }
    let callers = callers(p);
    let empty = NodeSet::new();
    nodes
        .iter()
        .zip(&contexts)
        .map(|(n, ctx)| {
            let f = n.location.function.as_str();
            let mut spa = by_function.get(f).cloned().unwrap_or_default();
            for caller in callers.get(f).into_iter().flatten() {
                spa.extend(params.get(caller.as_str()).unwrap_or(&empty));
                if n.kind == NodeKind::Parameter {
                    spa.extend(by_function.get(caller.as_str()).unwrap_or(&empty));
                }
            }
            for callee in &ctx.callees {
                spa.extend(returns.get(callee.as_str()).unwrap_or(&empty));
            }
            for g in &ctx.globals_read {
                spa.extend(global_nodes.get(g.as_str()).unwrap_or(&empty));
            }
            spa.remove(&n.index);
            spa
        })
        .collect()
}

/// Functions calling each function (global initializers count as the
/// `<global>` caller).
fn callers(p: &Program) -> BTreeMap<alloc::string::String, BTreeSet<alloc::string::String>> {
    let mut out: BTreeMap<_, BTreeSet<_>> = BTreeMap::new();
    let mut note = |caller: &str, e: &crate::minilang::Expr| {
        e.walk(&mut |sub| {
            if let ExprKind::Call(name, _) = &sub.kind {
                if p.function(name).is_some() {
                    out.entry(name.clone()).or_default().insert(caller.into());
                }
            }
        })
    };
    for g in &p.globals {
        note(crate::minilang::GLOBAL_SCOPE, &g.init);
    }
    for f in &p.functions {
        walk_stmts(&f.body, &mut |s| {
            for e in stmt_exprs(s) {
                note(&f.name, e);
            }
        });
    }
    out
}

/// Orders `candidates` from farthest to nearest with respect to `j` in an
/// oracle hit trace.
///
/// A candidate hit before `j`'s first hit is ranked by its last such hit:
/// earlier means farther. Candidates never hit before `j` come after those,
/// ordered by their first later hit (never-hit candidates last). Ties break
/// by node index. When `j` never occurs the whole trace counts as "before".
pub fn distance_order(trace: &[NodeIdx], j: NodeIdx, candidates: &NodeSet) -> Vec<NodeIdx> {
    let first_j = trace.iter().position(|&k| k == j).unwrap_or(trace.len());
    let mut keyed: Vec<((u8, usize), NodeIdx)> = candidates
        .iter()
        .map(|&k| {
            let before = trace[..first_j].iter().rposition(|&v| v == k);
            let key = match before {
                Some(pos) => (0, pos),
                None => match trace[first_j..].iter().position(|&v| v == k) {
                    Some(pos) => (1, pos),
                    None => (2, 0),
                },
            };
            (key, k)
        })
        .collect();
    keyed.sort();
    keyed.into_iter().map(|(_, k)| k).collect()
}

/// Markovian parents of `j` among `ipa`, by iterated removal of candidates
/// that `j` is conditionally independent of.
///
/// `dist` lists candidates farthest first; `view` holds the observations of
/// the inputs covering `j`. Probabilities are conditioned over observations
/// that do not mutate `j`. Undefined probabilities compare equal to each
/// other; in the multi-candidate test a realization where exactly one side
/// is undefined carries no evidence and is skipped.
pub fn markovian_parents(ipa: &NodeSet, dist: &[NodeIdx], view: &View, j: NodeIdx) -> NodeSet {
    markovian_parents_traced(ipa, dist, view, j).0
}

/// A candidate dropped by the Markovian search, with the other candidates
/// it was found independent of `j` given.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Exclusion {
    pub node: NodeIdx,
    pub given: Vec<NodeIdx>,
}

/// [`markovian_parents`], also returning each exclusion in order.
pub fn markovian_parents_traced(
    ipa: &NodeSet,
    dist: &[NodeIdx],
    view: &View,
    j: NodeIdx,
) -> (NodeSet, Vec<Exclusion>) {
    let mut pa = NodeSet::new();
    let mut cand = ipa.clone();
    let mut excluded = Vec::new();
    while !cand.is_empty() && cand != pa {
        let remain: NodeSet = cand.difference(&pa).copied().collect();
        let d = dist
            .iter()
            .copied()
            .find(|k| remain.contains(k))
            .unwrap_or_else(|| *remain.first().expect("remain is nonempty"));
        let other: Vec<NodeIdx> = cand.iter().copied().filter(|&k| k != d).collect();
        let is_parent = if other.is_empty() {
            let p0 = view.cond_prob_change(j, &[(d, false)]);
            let p1 = view.cond_prob_change(j, &[(d, true)]);
            !p0.approx_eq(p1)
        } else {
            depends_given_some_realization(view, j, d, &other)
        };
        if is_parent {
            pa.insert(d);
        } else {
            cand.remove(&d);
            pa.clear();
            excluded.push(Exclusion { node: d, given: other });
        }
    }
    (pa, excluded)
}

/// Whether `P(S_j=1 | d=0, s_other) != P(S_j=1 | d=1, s_other)` for some
/// observed realization `s_other` of `other` where both sides are defined.
pub fn depends_given_some_realization(view: &View, j: NodeIdx, d: NodeIdx, other: &[NodeIdx]) -> bool {
    for (realization, _) in view.realizations(other, Some(j)) {
        let mut cond: Vec<(NodeIdx, bool)> = other.iter().copied().zip(realization).collect();
        cond.push((d, false));
        let p0 = view.cond_prob_change(j, &cond);
        cond.last_mut().unwrap().1 = true;
        let p1 = view.cond_prob_change(j, &cond);
        if p0.is_defined() && p1.is_defined() && !p0.approx_eq(p1) {
            return true;
        }
    }
    false
}

/// Everything learned about one node's parents.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParentReport {
    pub node: NodeIdx,
    pub ipa: NodeSet,
    /// `ipa ∩ spa`, the input to the Markovian search.
    pub candidates: NodeSet,
    pub parents: NodeSet,
    pub exclusions: Vec<Exclusion>,
}

/// Learns the parents of one node. `spa` is its safe-parent set (`None`
/// disables the filter) and `traces[t]` the oracle hit trace of test `t`.
pub fn learn_parents(
    set: &ObservationSet,
    traces: &[Vec<NodeIdx>],
    spa: Option<&NodeSet>,
    j: NodeIdx,
) -> ParentReport {
    let ipa = intervention_parents(&set.all(), j);
    let candidates: NodeSet = match spa {
        Some(spa) => ipa.intersection(spa).copied().collect(),
        None => ipa.clone(),
    };
    let covering = set.covering_tests(j);
    let view = set.for_tests(&covering);
    let trace: &[NodeIdx] = covering
        .first()
        .and_then(|&t| traces.get(t))
        .map(Vec::as_slice)
        .unwrap_or(&[]);
    let dist = distance_order(trace, j, &candidates);
    let (parents, exclusions) = markovian_parents_traced(&candidates, &dist, &view, j);
    ParentReport {
        node: j,
        ipa,
        candidates,
        parents,
        exclusions,
    }
}

/// Why an edge was dropped while making the structure acyclic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RemovalReason {
    /// The child is itself an intervention parent of the parent.
    ReverseDependence,
    /// The edge closed a cycle the reverse-dependence rule left behind and
    /// had the smallest dependence gap on it.
    CycleFallback,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EdgeRemoval {
    pub parent: NodeIdx,
    pub child: NodeIdx,
    pub reason: RemovalReason,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CausalStructure {
    pub dag: Dag,
    pub ipa: Vec<NodeSet>,
    pub candidates: Vec<NodeSet>,
    pub exclusions: Vec<Vec<Exclusion>>,
    /// Edges removed by cycle elimination, in removal order.
    pub removals: Vec<EdgeRemoval>,
}

impl CausalStructure {
    pub fn node_count(&self) -> usize {
        self.dag.node_count()
    }

    pub fn parents(&self, j: NodeIdx) -> &NodeSet {
        self.dag.parents(j)
    }

    pub fn edges(&self) -> Vec<(NodeIdx, NodeIdx)> {
        self.dag.edges()
    }
}

/// `|P(S_j=1 | S_i=1) − P(S_j=1 | S_i=0)|` over the inputs covering `j`;
/// undefined sides count as zero gap.
fn dependence_gap(set: &ObservationSet, i: NodeIdx, j: NodeIdx) -> f64 {
    let view = set.covering(j);
    match (
        view.cond_prob_change(j, &[(i, true)]).value(),
        view.cond_prob_change(j, &[(i, false)]).value(),
    ) {
        (Some(a), Some(b)) => libm::fabs(a - b),
        _ => 0.0,
    }
}

/// Combines per-node parent reports into an acyclic structure.
///
/// Edge `i → j` is dropped whenever `j ∈ IPA_i` (pairs visited in ascending
/// order). Any cycle that survives is broken by repeatedly dropping its edge
/// with the smallest dependence gap (ties: smallest `(i, j)`).
pub fn assemble_structure(set: &ObservationSet, reports: Vec<ParentReport>) -> CausalStructure {
    let n = reports.len();
    let mut dag = Dag::new(n);
    let mut ipa = alloc::vec![NodeSet::new(); n];
    let mut candidates = alloc::vec![NodeSet::new(); n];
    let mut exclusions = alloc::vec![Vec::new(); n];
    for r in reports {
        for &p in &r.parents {
            dag.add_edge(p, r.node);
        }
        ipa[r.node - 1] = r.ipa;
        candidates[r.node - 1] = r.candidates;
        exclusions[r.node - 1] = r.exclusions;
    }
    let mut removals = Vec::new();
    for (i, j) in dag.edges() {
        if ipa[i - 1].contains(&j) {
            dag.remove_edge(i, j);
            removals.push(EdgeRemoval {
                parent: i,
                child: j,
                reason: RemovalReason::ReverseDependence,
            });
        }
    }
    while let Some(cycle) = dag.find_cycle() {
        let (i, j) = cycle
            .iter()
            .copied()
            .min_by(|&(a, b), &(c, d)| {
                dependence_gap(set, a, b)
                    .total_cmp(&dependence_gap(set, c, d))
                    .then((a, b).cmp(&(c, d)))
            })
            .expect("cycle has edges");
        dag.remove_edge(i, j);
        removals.push(EdgeRemoval {
            parent: i,
            child: j,
            reason: RemovalReason::CycleFallback,
        });
    }
    CausalStructure {
        dag,
        ipa,
        candidates,
        exclusions,
        removals,
    }
}

/// Learns the causal structure over all columns of `set`.
///
/// `spa[j - 1]` restricts the candidates of node `j` (pass `None` to use the
/// intervention parents unfiltered); `traces[t]` is the oracle hit trace of
/// test `t`.
pub fn build_structure(set: &ObservationSet, traces: &[Vec<NodeIdx>], spa: Option<&[NodeSet]>) -> CausalStructure {
    let reports = (1..=set.width())
        .map(|j| learn_parents(set, traces, spa.and_then(|s| s.get(j - 1)), j))
        .collect();
    assemble_structure(set, reports)
}

/// Safe-parent sets for every column of an observation set over `p`'s
/// nodes. An extra output column (if any) may depend on every node.
pub fn safe_parents_for_columns(p: &Program, width: usize) -> Vec<NodeSet> {
    let mut spa = safe_parents(p);
    let n = spa.len();
    while spa.len() < width {
        spa.push((1..=n).collect());
    }
    spa
}

/// Re-checks every exclusion made by the Markovian search against the
/// observations: the excluded candidate must show no defined dependence of
/// `j` given any observed realization of the candidates it was tested
/// against. Returns the violating `(candidate, j)` pairs.
pub fn screening_violations(set: &ObservationSet, s: &CausalStructure) -> Vec<(NodeIdx, NodeIdx)> {
    let mut out = Vec::new();
    for j in 1..=s.node_count() {
        let view = set.covering(j);
        for e in &s.exclusions[j - 1] {
            let violated = if e.given.is_empty() {
                let p0 = view.cond_prob_change(j, &[(e.node, false)]);
                let p1 = view.cond_prob_change(j, &[(e.node, true)]);
                !p0.approx_eq(p1)
            } else {
                depends_given_some_realization(&view, j, e.node, &e.given)
            };
            if violated {
                out.push((e.node, j));
            }
        }
    }
    out
}

/// Labels for reports: `Node` list lookup by index.
pub fn node_label(nodes: &[Node], k: NodeIdx) -> alloc::string::String {
    match nodes.get(k.wrapping_sub(1)) {
        Some(n) => alloc::format!("[{}] {}", k, n.variable),
        None => alloc::format!("[{}] <output>", k),
    }
}
