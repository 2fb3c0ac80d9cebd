//! Fault localization: causal-dependence suspiciousness over nodes, the
//! Ochiai spectrum baseline over statements, tie policies and acc@n.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use crate::effects::causal_dependence;
use crate::graph::Dag;
use crate::minilang::{walk_stmts, Node, NodeIdx, NodeKind, Program, StmtKind};
use crate::observations::{Bits, ObservationSet, PROB_TOLERANCE};
use crate::runtime::Verdict;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LocalizeError {
    #[error("no failing test")]
    NoFailingTest,
    #[error("the program has no return or print site to use as output")]
    NoOutput,
    #[error("output node {0} does not exist")]
    UnknownOutput(NodeIdx),
    #[error("the fault is not among the ranked elements")]
    FaultNotRanked,
    #[error("empty ranking")]
    EmptyRanking,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    Cdfl,
    SbflAvg,
    SbflMin,
    SbflMax,
    SbflLineOrder,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Cdfl => "cdfl",
            Method::SbflAvg => "sbfl-avg",
            Method::SbflMin => "sbfl-min",
            Method::SbflMax => "sbfl-max",
            Method::SbflLineOrder => "sbfl-lineorder",
        }
    }

    pub fn tie_policy(self) -> TiePolicy {
        match self {
            Method::Cdfl => TiePolicy::Listed,
            Method::SbflAvg => TiePolicy::Avg,
            Method::SbflMin => TiePolicy::Min,
            Method::SbflMax => TiePolicy::Max,
            Method::SbflLineOrder => TiePolicy::LineOrder,
        }
    }
}

/// A ranked element: a node (causal ranking) or a statement line
/// (spectrum ranking, `node` is `None`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankEntry {
    pub node: Option<NodeIdx>,
    pub line: u32,
    pub score: f64,
}

/// Entries sorted by descending score; equal scores keep a deterministic
/// order (node index for nodes, line for statements).
#[derive(Debug, Clone, PartialEq)]
pub struct Ranking {
    pub entries: Vec<RankEntry>,
}

fn same_score(a: f64, b: f64) -> bool {
    libm::fabs(a - b) <= PROB_TOLERANCE
}

impl Ranking {
    fn sorted(mut entries: Vec<RankEntry>) -> Ranking {
        entries.sort_by(|a, b| {
            b.score
                .total_cmp(&a.score)
                .then(a.node.cmp(&b.node))
                .then(a.line.cmp(&b.line))
        });
        Ranking { entries }
    }

    /// Adjacent pairs with equal scores.
    pub fn tie_count(&self) -> usize {
        self.entries
            .windows(2)
            .filter(|w| same_score(w[0].score, w[1].score))
            .count()
    }

    /// 1-based position of each entry, with tied groups sharing their mean
    /// position.
    pub fn average_ranks(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.entries.len());
        let mut start = 0;
        while start < self.entries.len() {
            let mut end = start + 1;
            while end < self.entries.len() && same_score(self.entries[start].score, self.entries[end].score) {
                end += 1;
            }
            let mean = (start + 1 + end) as f64 / 2.0;
            out.extend(core::iter::repeat_n(mean, end - start));
            start = end;
        }
        out
    }

    pub fn score_of_node(&self, k: NodeIdx) -> Option<f64> {
        self.entries.iter().find(|e| e.node == Some(k)).map(|e| e.score)
    }

    pub fn score_of_line(&self, line: u32) -> Option<f64> {
        self.entries.iter().find(|e| e.line == line).map(|e| e.score)
    }
}

/// The node whose change stands for a change of outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OutputSelection {
    pub node: NodeIdx,
    /// The node is an extra observation column tracking the observable
    /// output rather than a program node.
    pub synthetic: bool,
}

/// The entry function's return node when it is the only output; otherwise
/// (prints, or several returns in the entry function) an extra column
/// `n + 1` tracking the observable output. `forced` overrides the choice.
pub fn select_output_node(
    p: &Program,
    nodes: &[Node],
    forced: Option<NodeIdx>,
) -> Result<OutputSelection, LocalizeError> {
    let n = nodes.len();
    if let Some(k) = forced {
        if k == 0 || k > n + 1 {
            return Err(LocalizeError::UnknownOutput(k));
        }
        return Ok(OutputSelection {
            node: k,
            synthetic: k == n + 1,
        });
    }
    let mut prints = false;
    for f in &p.functions {
        walk_stmts(&f.body, &mut |s| {
            if matches!(s.kind, StmtKind::Print(_)) {
                prints = true;
            }
        });
    }
    let returns: Vec<NodeIdx> = nodes
        .iter()
        .filter(|x| x.kind == NodeKind::Return && x.location.function == p.entry)
        .map(|x| x.index)
        .collect();
    match (prints, returns.as_slice()) {
        (false, [k]) => Ok(OutputSelection {
            node: *k,
            synthetic: false,
        }),
        (false, []) => Err(LocalizeError::NoOutput),
        _ => Ok(OutputSelection {
            node: n + 1,
            synthetic: true,
        }),
    }
}

/// Per-node suspiciousness with diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct CdflResult {
    pub ranking: Ranking,
    /// Adjacent equal scores before the node-index tiebreak.
    pub raw_ties: usize,
    /// Per-test causal dependences that were undefined and read as 0.
    pub undefined_terms: usize,
}

/// `susp(i)` = mean over failing tests of `CD(i, out)` within that test's
/// observations, minus the same mean over passing tests (0 when there are
/// none). Every node except `out` and any extra column is ranked.
pub fn cdfl_scores(
    set: &ObservationSet,
    dag: &Dag,
    nodes: &[Node],
    out: NodeIdx,
    failing: &[usize],
    passing: &[usize],
) -> Result<CdflResult, LocalizeError> {
    if failing.is_empty() {
        return Err(LocalizeError::NoFailingTest);
    }
    let fail_views: Vec<_> = failing.iter().map(|&t| set.for_test(t)).collect();
    let pass_views: Vec<_> = passing.iter().map(|&t| set.for_test(t)).collect();
    let mut undefined_terms = 0;
    let mut mean = |views: &[crate::observations::View], i: NodeIdx| -> f64 {
        if views.is_empty() {
            return 0.0;
        }
        let mut sum = 0.0;
        for v in views {
            let cd = causal_dependence(v, dag, i, out).expect("distinct nodes");
            undefined_terms += cd.undefined as usize;
            sum += cd.value;
        }
        sum / views.len() as f64
    };
    let mut entries = Vec::new();
    for node in nodes.iter().filter(|x| x.index != out) {
        let score = mean(&fail_views, node.index) - mean(&pass_views, node.index);
        entries.push(RankEntry {
            node: Some(node.index),
            line: node.location.line,
            score,
        });
    }
    let ranking = Ranking::sorted(entries);
    let raw_ties = ranking.tie_count();
    Ok(CdflResult {
        ranking,
        raw_ties,
        undefined_terms,
    })
}

/// `e_f / sqrt((e_f + n_f)(e_f + e_p))`, 0 on a zero denominator.
pub fn ochiai(ef: usize, nf: usize, ep: usize) -> f64 {
    let den = ((ef + nf) * (ef + ep)) as f64;
    if den == 0.0 {
        0.0
    } else {
        ef as f64 / libm::sqrt(den)
    }
}

/// Ochiai scores over the statement lines hosting nodes other than `out`.
/// A line counts as executed by a test when any of those nodes executed.
pub fn sbfl_ochiai(nodes: &[Node], coverage: &[Bits], verdicts: &[Verdict], out: Option<NodeIdx>) -> Ranking {
    let nodes: Vec<&Node> = nodes.iter().filter(|x| Some(x.index) != out).collect();
    let lines: BTreeSet<u32> = nodes.iter().map(|x| x.location.line).collect();
    let entries = lines
        .into_iter()
        .map(|line| {
            let (mut ef, mut nf, mut ep) = (0, 0, 0);
            for (cov, v) in coverage.iter().zip(verdicts) {
                let hit = nodes.iter().any(|x| x.location.line == line && cov.get(x.index));
                match (v, hit) {
                    (Verdict::Fail, true) => ef += 1,
                    (Verdict::Fail, false) => nf += 1,
                    (Verdict::Pass, true) => ep += 1,
                    (Verdict::Pass, false) => {}
                }
            }
            RankEntry {
                node: None,
                line,
                score: ochiai(ef, nf, ep),
            }
        })
        .collect();
    Ranking::sorted(entries)
}

/// The faulty elements of a program.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FaultSpec {
    pub nodes: BTreeSet<NodeIdx>,
    pub lines: BTreeSet<u32>,
    pub description: String,
}

impl FaultSpec {
    /// Fault at the given nodes; lines are taken from their locations.
    pub fn at_nodes(nodes: &[Node], faulty: &[NodeIdx], description: impl Into<String>) -> FaultSpec {
        FaultSpec {
            nodes: faulty.iter().copied().collect(),
            lines: faulty.iter().map(|&k| nodes[k - 1].location.line).collect(),
            description: description.into(),
        }
    }

    pub fn matches(&self, e: &RankEntry) -> bool {
        match e.node {
            Some(k) => self.nodes.contains(&k),
            None => self.lines.contains(&e.line),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TiePolicy {
    /// Mean position of the tied group.
    Avg,
    /// First position of the tied group.
    Min,
    /// Last position of the tied group.
    Max,
    /// Ties ordered by source line.
    LineOrder,
    /// The ranking's own order.
    Listed,
}

/// Rank (1-based, possibly fractional for `Avg`) of the best-ranked faulty
/// element under `policy`.
pub fn apply_tiebreaker(r: &Ranking, policy: TiePolicy, fault: &FaultSpec) -> Result<f64, LocalizeError> {
    if r.entries.is_empty() {
        return Err(LocalizeError::EmptyRanking);
    }
    let mut best: Option<f64> = None;
    let mut start = 0;
    while start < r.entries.len() {
        let mut end = start + 1;
        while end < r.entries.len() && same_score(r.entries[start].score, r.entries[end].score) {
            end += 1;
        }
        let group = &r.entries[start..end];
        if group.iter().any(|e| fault.matches(e)) {
            let (first, last) = ((start + 1) as f64, end as f64);
            let rank = match policy {
                TiePolicy::Min => first,
                TiePolicy::Max => last,
                TiePolicy::Avg => (first + last) / 2.0,
                TiePolicy::Listed => (start + 1 + group.iter().position(|e| fault.matches(e)).unwrap()) as f64,
                TiePolicy::LineOrder => {
                    let mut order: Vec<&RankEntry> = group.iter().collect();
                    order.sort_by_key(|e| (e.line, e.node));
                    (start + 1 + order.iter().position(|e| fault.matches(e)).unwrap()) as f64
                }
            };
            best = Some(best.map_or(rank, |b: f64| b.min(rank)));
            break;
        }
        start = end;
    }
    best.ok_or(LocalizeError::FaultNotRanked)
}

/// Number of ranks at most `n`.
pub fn acc_at_n(ranks: &[f64], n: usize) -> usize {
    ranks.iter().filter(|&&r| r <= n as f64).count()
}

/// Per-method ranks of one fault, for reports.
#[derive(Debug, Clone, PartialEq)]
pub struct FaultRanks {
    pub program: String,
    pub ranks: Vec<(Method, f64)>,
}
