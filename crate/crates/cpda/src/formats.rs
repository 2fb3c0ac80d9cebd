//! On-disk formats for observations, structures, models, scores, rankings,
//! corpus manifests and configuration.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use cpda_core::cdfl::{Method, Ranking};
use cpda_core::cpdm::{Cpdm, Provenance, WeightedEdge};
use cpda_core::effects::DependenceScore;
use cpda_core::graph::Dag;
use cpda_core::observations::{Bits, Observation, ObservationSet};

pub const MODEL_SCHEMA_VERSION: u32 = 1;
pub const OBSERVATIONS_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported schema version {found} (expected {expected})")]
    Schema { found: u32, expected: u32 },
    #[error("{0}")]
    Invalid(String),
}

fn line_err(line: usize, message: impl Into<String>) -> FormatError {
    FormatError::Line {
        line,
        message: message.into(),
    }
}

const OBSERVATIONS_HEADER: &str = "mutated,ordinal,test,weight,changed";

/// Observation rows: mutated node, sample ordinal, test id, weight as
/// `1/den`, change bits (node 1 first).
pub fn write_observations_csv(set: &ObservationSet) -> String {
    let mut out = String::from(OBSERVATIONS_HEADER);
    out.push('\n');
    for o in set.observations() {
        let _ = writeln!(
            out,
            "{},{},{},1/{},{}",
            o.mutated,
            o.ordinal,
            csv_field(&set.tests()[o.test]),
            o.weight_den,
            o.changed.to_bit_string()
        );
    }
    out
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum MetaRecord {
    Header { schema_version: u32, width: usize, tests: usize },
    Test { index: usize, id: String, coverage: String },
}

/// Width, test ids and per-test coverage, one JSON object per line.
pub fn write_observations_meta(set: &ObservationSet) -> String {
    let mut out = String::new();
    let header = MetaRecord::Header {
        schema_version: OBSERVATIONS_SCHEMA_VERSION,
        width: set.width(),
        tests: set.tests().len(),
    };
    out.push_str(&serde_json::to_string(&header).expect("serializable"));
    out.push('\n');
    for (index, id) in set.tests().iter().enumerate() {
        let rec = MetaRecord::Test {
            index,
            id: id.clone(),
            coverage: set.coverage(index).to_bit_string(),
        };
        out.push_str(&serde_json::to_string(&rec).expect("serializable"));
        out.push('\n');
    }
    out
}

pub fn read_observations(csv: &str, meta: &str) -> Result<ObservationSet, FormatError> {
    let mut width = None;
    let mut tests: Vec<(usize, String, Bits)> = Vec::new();
    for (n, line) in meta.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<MetaRecord>(line)? {
            MetaRecord::Header {
                schema_version,
                width: w,
                ..
            } => {
                if schema_version != OBSERVATIONS_SCHEMA_VERSION {
                    return Err(FormatError::Schema {
                        found: schema_version,
                        expected: OBSERVATIONS_SCHEMA_VERSION,
                    });
                }
                width = Some(w);
            }
            MetaRecord::Test { index, id, coverage } => {
                let bits = Bits::parse_bit_string(&coverage).ok_or_else(|| line_err(n + 1, "invalid coverage bits"))?;
                tests.push((index, id, bits));
            }
        }
    }
    let width = width.ok_or_else(|| FormatError::Invalid("metadata has no header record".into()))?;
    tests.sort_by_key(|t| t.0);
    if tests.iter().enumerate().any(|(k, t)| t.0 != k) {
        return Err(FormatError::Invalid("test indices are not 0..n".into()));
    }
    let ids: Vec<String> = tests.iter().map(|t| t.1.clone()).collect();
    let index: BTreeMap<&str, usize> = ids.iter().enumerate().map(|(k, id)| (id.as_str(), k)).collect();
    let mut observations = Vec::new();
    let mut lines = csv.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == OBSERVATIONS_HEADER => {}
        _ => return Err(line_err(1, format!("expected header '{OBSERVATIONS_HEADER}'"))),
    }
    for (n, line) in lines {
        let ln = n + 1;
        if line.is_empty() {
            continue;
        }
        let fields = split_csv(line).map_err(|m| line_err(ln, m))?;
        let [mutated, ordinal, test, weight, changed] = fields.as_slice() else {
            return Err(line_err(ln, "expected 5 fields"));
        };
        let num = |s: &str, what: &str| s.parse::<u64>().map_err(|_| line_err(ln, format!("invalid {what} '{s}'")));
        let weight_den = weight
            .strip_prefix("1/")
            .ok_or_else(|| line_err(ln, "weight must be written as 1/N"))
            .and_then(|d| num(d, "weight"))?;
        observations.push(Observation {
            mutated: num(mutated, "node")? as usize,
            ordinal: num(ordinal, "ordinal")? as u32,
            test: *index
                .get(test.as_str())
                .ok_or_else(|| line_err(ln, format!("unknown test '{test}'")))?,
            changed: Bits::parse_bit_string(changed).ok_or_else(|| line_err(ln, "invalid change bits"))?,
            weight_den: u32::try_from(weight_den).map_err(|_| line_err(ln, "weight out of range"))?,
        });
    }
    let coverage = tests.into_iter().map(|t| t.2).collect();
    ObservationSet::new(width, ids, coverage, observations).map_err(|e| FormatError::Invalid(e.to_string()))
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn split_csv(line: &str) -> Result<Vec<String>, String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut chars = line.chars().peekable();
    let mut quoted = false;
    while let Some(c) = chars.next() {
        match (quoted, c) {
            (true, '"') if chars.peek() == Some(&'"') => {
                cur.push('"');
                chars.next();
            }
            (true, '"') => quoted = false,
            (false, '"') if cur.is_empty() => quoted = true,
            (false, ',') => out.push(std::mem::take(&mut cur)),
            (_, c) => cur.push(c),
        }
    }
    if quoted {
        return Err("unterminated quoted field".into());
    }
    out.push(cur);
    Ok(out)
}

/// One `parent child` pair per line, sorted.
pub fn write_edge_list(dag: &Dag) -> String {
    let mut out = String::new();
    for (p, c) in dag.edges() {
        let _ = writeln!(out, "{p} {c}");
    }
    out
}

pub fn read_edge_list(text: &str, node_count: usize) -> Result<Dag, FormatError> {
    let mut dag = Dag::new(node_count);
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut it = line.split_whitespace().map(|w| w.parse::<usize>());
        let (Some(Ok(p)), Some(Ok(c)), None) = (it.next(), it.next(), it.next()) else {
            return Err(line_err(n + 1, "expected 'parent child'"));
        };
        if p == 0 || c == 0 || p > node_count || c > node_count || p == c {
            return Err(line_err(n + 1, format!("invalid edge {p} -> {c}")));
        }
        dag.add_edge(p, c);
    }
    Ok(dag)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ModelFile {
    schema_version: u32,
    suite: String,
    nmpn: usize,
    seed: u64,
    nodes: Vec<ModelNode>,
    edges: Vec<ModelEdge>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ModelNode {
    index: usize,
    label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ModelEdge {
    parent: usize,
    child: usize,
    weight: f64,
    undefined: bool,
}

pub fn write_model_json(m: &Cpdm) -> String {
    let file = ModelFile {
        schema_version: MODEL_SCHEMA_VERSION,
        suite: m.provenance.suite.clone(),
        nmpn: m.provenance.nmpn,
        seed: m.provenance.seed,
        nodes: m
            .labels
            .iter()
            .enumerate()
            .map(|(k, l)| ModelNode {
                index: k + 1,
                label: l.clone(),
            })
            .collect(),
        edges: m
            .edges
            .iter()
            .map(|e| ModelEdge {
                parent: e.parent,
                child: e.child,
                weight: e.weight,
                undefined: e.undefined,
            })
            .collect(),
    };
    let mut s = serde_json::to_string_pretty(&file).expect("serializable");
    s.push('\n');
    s
}

pub fn read_model_json(text: &str) -> Result<Cpdm, FormatError> {
    let file: ModelFile = serde_json::from_str(text)?;
    if file.schema_version != MODEL_SCHEMA_VERSION {
        return Err(FormatError::Schema {
            found: file.schema_version,
            expected: MODEL_SCHEMA_VERSION,
        });
    }
    let n = file.nodes.len();
    if file.nodes.iter().enumerate().any(|(k, node)| node.index != k + 1) {
        return Err(FormatError::Invalid("node indices are not 1..n in order".into()));
    }
    let mut edges: Vec<WeightedEdge> = Vec::with_capacity(file.edges.len());
    for e in &file.edges {
        if e.parent == 0 || e.child == 0 || e.parent > n || e.child > n || e.parent == e.child {
            return Err(FormatError::Invalid(format!("invalid edge {} -> {}", e.parent, e.child)));
        }
        if !e.weight.is_finite() {
            return Err(FormatError::Invalid(format!("non-finite weight on {} -> {}", e.parent, e.child)));
        }
        edges.push(WeightedEdge {
            parent: e.parent,
            child: e.child,
            weight: e.weight,
            undefined: e.undefined,
        });
    }
    edges.sort_by_key(|e| (e.parent, e.child));
    if edges.windows(2).any(|w| (w[0].parent, w[0].child) == (w[1].parent, w[1].child)) {
        return Err(FormatError::Invalid("duplicate edge".into()));
    }
    Ok(Cpdm {
        labels: file.nodes.into_iter().map(|n| n.label).collect(),
        edges,
        provenance: Provenance {
            suite: file.suite,
            nmpn: file.nmpn,
            seed: file.seed,
        },
    })
}

/// `source,target,kind,value,flag` with `flag` set to `undefined` when an
/// undefined operand was replaced by 0.
pub fn write_scores_csv(scores: &[DependenceScore]) -> String {
    let mut out = String::from("source,target,kind,value,flag\n");
    for s in scores {
        let _ = writeln!(
            out,
            "{},{},{},{:?},{}",
            s.source,
            s.target,
            s.kind.as_str(),
            s.value,
            if s.undefined { "undefined" } else { "" }
        );
    }
    out
}

/// `rank,node,line,score,method`; tied entries share the average rank of
/// their group.
pub fn write_ranking_csv(r: &Ranking, method: Method) -> String {
    let mut out = String::from("rank,node,line,score,method\n");
    let ranks = r.average_ranks();
    for (e, rank) in r.entries.iter().zip(ranks) {
        let node = e.node.map(|k| k.to_string()).unwrap_or_default();
        let _ = writeln!(out, "{rank},{node},{},{:?},{}", e.line, e.score, method.as_str());
    }
    out
}

/// One corpus entry: program and suite paths relative to the manifest, and
/// the seeded fault.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub name: String,
    pub program: String,
    pub suite: String,
    pub fault: ManifestFault,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestFault {
    /// Source lines holding the fault.
    pub lines: Vec<u32>,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub entries: Vec<ManifestEntry>,
}

pub fn read_manifest(text: &str) -> Result<Manifest, FormatError> {
    let m: Manifest = serde_json::from_str(text)?;
    if m.entries.is_empty() {
        return Err(FormatError::Invalid("manifest lists no programs".into()));
    }
    for e in &m.entries {
        if e.fault.lines.is_empty() {
            return Err(FormatError::Invalid(format!("entry '{}' names no fault line", e.name)));
        }
    }
    Ok(m)
}

/// Flat `key = value` configuration; `#` starts a comment line.
pub fn read_config(text: &str) -> Result<BTreeMap<String, String>, FormatError> {
    let mut out = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| line_err(n + 1, "expected 'key = value'"))?;
        let k = k.trim();
        if k.is_empty() {
            return Err(line_err(n + 1, "empty key"));
        }
        if out.insert(k.to_string(), v.trim().to_string()).is_some() {
            return Err(line_err(n + 1, format!("duplicate key '{k}'")));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_fields_round_trip() {
        let ids = ["plain", "a,b", "say \"hi\""];
        for id in ids {
            assert_eq!(split_csv(&csv_field(id)).unwrap(), vec![id.to_string()]);
        }
    }

    #[test]
    fn config_rejects_duplicates() {
        assert!(read_config("seed = 1\nseed = 2\n").is_err());
        let c = read_config("# c\nseed = 3\nnmpn=10\n").unwrap();
        assert_eq!(c["seed"], "3");
        assert_eq!(c["nmpn"], "10");
    }
}
