//! The dependence model: a causal structure whose edges carry direct
//! dependence weights, with band filtering, model diffs and DOT rendering.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use crate::discovery::CausalStructure;
use crate::effects::{DependenceScore, ScoreKind};
use crate::minilang::{Node, NodeIdx};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CpdmError {
    #[error("no direct dependence given for edge {0} -> {1}")]
    MissingWeight(NodeIdx, NodeIdx),
    #[error("weight given for {0} -> {1}, which is not an edge of the structure")]
    UnexpectedWeight(NodeIdx, NodeIdx),
    #[error("invalid band {lo}..{hi}")]
    InvalidBand { lo: f64, hi: f64 },
    #[error("models cover different node sets ({0} vs {1} nodes)")]
    UniverseMismatch(usize, usize),
}

/// Where a model came from.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Provenance {
    pub suite: String,
    pub nmpn: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedEdge {
    pub parent: NodeIdx,
    pub child: NodeIdx,
    pub weight: f64,
    /// The weight averaged in an undefined per-input term.
    pub undefined: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cpdm {
    /// `labels[k - 1]` names node `k` (its variable).
    pub labels: Vec<String>,
    /// Sorted by (parent, child).
    pub edges: Vec<WeightedEdge>,
    pub provenance: Provenance,
}

/// Variable names of `nodes`, plus `out` for each extra column up to `width`.
pub fn node_labels(nodes: &[Node], width: usize) -> Vec<String> {
    let mut labels: Vec<String> = nodes.iter().map(|n| n.variable.clone()).collect();
    while labels.len() < width {
        labels.push(String::from("<output>"));
    }
    labels
}

/// Annotates every structure edge with its direct dependence.
pub fn build_cpdm(
    s: &CausalStructure,
    dd: &[DependenceScore],
    labels: Vec<String>,
    provenance: Provenance,
) -> Result<Cpdm, CpdmError> {
    let mut weights: BTreeMap<(NodeIdx, NodeIdx), &DependenceScore> = BTreeMap::new();
    for d in dd.iter().filter(|d| d.kind == ScoreKind::Direct) {
        if !s.dag.has_edge(d.source, d.target) {
            return Err(CpdmError::UnexpectedWeight(d.source, d.target));
        }
        weights.insert((d.source, d.target), d);
    }
    let edges = s
        .edges()
        .into_iter()
        .map(|(i, j)| {
            let d = weights.get(&(i, j)).ok_or(CpdmError::MissingWeight(i, j))?;
            Ok(WeightedEdge {
                parent: i,
                child: j,
                weight: d.value,
                undefined: d.undefined,
            })
        })
        .collect::<Result<Vec<_>, CpdmError>>()?;
    Ok(Cpdm {
        labels,
        edges,
        provenance,
    })
}

impl Cpdm {
    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    pub fn weight(&self, parent: NodeIdx, child: NodeIdx) -> Option<f64> {
        self.edges
            .iter()
            .find(|e| e.parent == parent && e.child == child)
            .map(|e| e.weight)
    }

    pub fn has_edge(&self, parent: NodeIdx, child: NodeIdx) -> bool {
        self.weight(parent, child).is_some()
    }

    pub fn label(&self, k: NodeIdx) -> String {
        alloc::format!("[{}] {}", k, self.labels[k - 1])
    }
}

/// An interval of weights. Bounds are exclusive unless marked inclusive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Band {
    pub lo: f64,
    pub hi: f64,
    pub lo_inclusive: bool,
    pub hi_inclusive: bool,
}

impl Band {
    pub fn new(lo: f64, hi: f64, lo_inclusive: bool, hi_inclusive: bool) -> Result<Band, CpdmError> {
        if !(lo.is_finite() && hi.is_finite() && lo >= 0.0 && lo < hi) {
            return Err(CpdmError::InvalidBand { lo, hi });
        }
        Ok(Band {
            lo,
            hi,
            lo_inclusive,
            hi_inclusive,
        })
    }

    /// `lo < w < hi`.
    pub fn open(lo: f64, hi: f64) -> Result<Band, CpdmError> {
        Band::new(lo, hi, false, false)
    }

    /// Parses `LO:HI` (strict bounds, except that an upper bound of 1 or
    /// more is inclusive) or interval notation such as `(0.8,1]`.
    pub fn parse(text: &str) -> Result<Band, CpdmError> {
        let t = text.trim();
        let bad = || CpdmError::InvalidBand {
            lo: f64::NAN,
            hi: f64::NAN,
        };
        let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
        if let Some((lo, hi)) = t.split_once(':') {
            let hi = num(hi)?;
            return Band::new(num(lo)?, hi, false, hi >= 1.0);
        }
        let lo_inclusive = match t.chars().next() {
            Some('[') => true,
            Some('(') => false,
            _ => return Err(bad()),
        };
        let hi_inclusive = match t.chars().last() {
            Some(']') => true,
            Some(')') => false,
            _ => return Err(bad()),
        };
        let inner = &t[1..t.len() - 1];
        let (lo, hi) = inner.split_once(',').ok_or_else(bad)?;
        Band::new(num(lo)?, num(hi)?, lo_inclusive, hi_inclusive)
    }

    pub fn contains(&self, w: f64) -> bool {
        let above = if self.lo_inclusive { w >= self.lo } else { w > self.lo };
        let below = if self.hi_inclusive { w <= self.hi } else { w < self.hi };
        above && below
    }
}

/// The model restricted to edges whose weight lies in `band`.
pub fn filter_band(m: &Cpdm, band: &Band) -> Cpdm {
    Cpdm {
        labels: m.labels.clone(),
        edges: m.edges.iter().copied().filter(|e| band.contains(e.weight)).collect(),
        provenance: m.provenance.clone(),
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ModelDiff {
    pub node_count: usize,
    pub only_a: Vec<WeightedEdge>,
    pub only_b: Vec<WeightedEdge>,
    /// Edges of both models: (parent, child, weight in a, weight in b).
    pub both: Vec<(NodeIdx, NodeIdx, f64, f64)>,
}

impl ModelDiff {
    pub fn in_only_a(&self, parent: NodeIdx, child: NodeIdx) -> bool {
        self.only_a.iter().any(|e| e.parent == parent && e.child == child)
    }

    pub fn in_only_b(&self, parent: NodeIdx, child: NodeIdx) -> bool {
        self.only_b.iter().any(|e| e.parent == parent && e.child == child)
    }
}

pub fn diff_models(a: &Cpdm, b: &Cpdm) -> Result<ModelDiff, CpdmError> {
    if a.node_count() != b.node_count() {
        return Err(CpdmError::UniverseMismatch(a.node_count(), b.node_count()));
    }
    let mut diff = ModelDiff {
        node_count: a.node_count(),
        ..ModelDiff::default()
    };
    for e in &a.edges {
        match b.weight(e.parent, e.child) {
            Some(wb) => diff.both.push((e.parent, e.child, e.weight, wb)),
            None => diff.only_a.push(*e),
        }
    }
    diff.only_b = b
        .edges
        .iter()
        .copied()
        .filter(|e| !a.has_edge(e.parent, e.child))
        .collect();
    Ok(diff)
}

/// Number of pen-width classes.
pub const WIDTH_CLASSES: u8 = 5;

/// Pen-width class 1..=5 of a weight: the fifth of `[0, 1]` it falls in,
/// after clamping.
pub fn width_class(weight: f64) -> u8 {
    let w = weight.clamp(0.0, 1.0);
    (libm::floor(w * WIDTH_CLASSES as f64) as u8).min(WIDTH_CLASSES - 1) + 1
}

fn pen_width(class: u8) -> f64 {
    [0.5, 1.0, 2.0, 3.5, 5.0][class as usize - 1]
}

fn gray_level(class: u8) -> u8 {
    [80, 62, 44, 22, 0][class as usize - 1]
}

#[derive(Debug, Clone, Default)]
pub struct DotOptions {
    pub name: Option<String>,
    /// Print the weight next to each edge.
    pub edge_labels: bool,
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

fn write_nodes(out: &mut String, labels: &[String]) {
    for (k, label) in labels.iter().enumerate() {
        let _ = writeln!(out, "  n{} [label=\"[{}] {}\"];", k + 1, k + 1, escape(label));
    }
}

/// DOT text for a model: thicker and darker edges for larger weights.
/// Returns the text and the edges whose negative weight was clamped to 0.
pub fn export_dot(m: &Cpdm, opts: &DotOptions) -> (String, Vec<(NodeIdx, NodeIdx)>) {
    let mut out = String::new();
    let name = opts.name.as_deref().unwrap_or("cpdm");
    let _ = writeln!(out, "digraph \"{}\" {{", escape(name));
    out.push_str("  node [shape=box, fontname=\"Helvetica\"];\n");
    write_nodes(&mut out, &m.labels);
    let mut clamped = Vec::new();
    for e in &m.edges {
        if e.weight < 0.0 {
            clamped.push((e.parent, e.child));
        }
        let class = width_class(e.weight);
        let _ = write!(
            out,
            "  n{} -> n{} [penwidth={}, color=\"gray{}\"",
            e.parent,
            e.child,
            pen_width(class),
            gray_level(class)
        );
        if opts.edge_labels {
            let _ = write!(out, ", label=\"{:.3}\"", e.weight);
        }
        out.push_str("];\n");
    }
    out.push_str("}\n");
    (out, clamped)
}

/// DOT text for a diff: edges only in `a` solid red, only in `b` dashed
/// blue, in both gray.
pub fn export_diff_dot(d: &ModelDiff, labels: &[String], opts: &DotOptions) -> String {
    let mut out = String::new();
    let name = opts.name.as_deref().unwrap_or("cpdm_diff");
    let _ = writeln!(out, "digraph \"{}\" {{", escape(name));
    out.push_str("  node [shape=box, fontname=\"Helvetica\"];\n");
    write_nodes(&mut out, labels);
    let mut styled: Vec<(NodeIdx, NodeIdx, &str)> = Vec::new();
    styled.extend(d.only_a.iter().map(|e| (e.parent, e.child, "color=\"red\", style=solid")));
    styled.extend(d.only_b.iter().map(|e| (e.parent, e.child, "color=\"blue\", style=dashed")));
    styled.extend(d.both.iter().map(|&(i, j, _, _)| (i, j, "color=\"gray60\", style=solid")));
    styled.sort_by_key(|&(i, j, _)| (i, j));
    for (i, j, style) in styled {
        let _ = writeln!(out, "  n{} -> n{} [{}];", i, j, style);
    }
    out.push_str("}\n");
    out
}
