//! Fault localization over a corpus of seeded-fault programs.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use cpda_core::cdfl::{acc_at_n, apply_tiebreaker, FaultRanks, FaultSpec, Method};

use crate::cache::RunCache;
use crate::formats::{Manifest, ManifestEntry};
use crate::pipeline::{localize, Localization, Options, PipelineError};
use crate::suite::parse_suite;

pub const METHODS: [Method; 5] = [
    Method::Cdfl,
    Method::SbflAvg,
    Method::SbflMin,
    Method::SbflMax,
    Method::SbflLineOrder,
];

#[derive(Debug, Clone)]
pub struct EntryOutcome {
    pub ranks: FaultRanks,
    pub failing: usize,
    pub raw_ties: usize,
    pub localization: Localization,
}

impl EntryOutcome {
    pub fn rank(&self, m: Method) -> f64 {
        self.ranks
            .ranks
            .iter()
            .find(|(k, _)| *k == m)
            .map(|(_, r)| *r)
            .expect("every method is ranked")
    }
}

#[derive(Debug, Clone, Default)]
pub struct CorpusOutcome {
    pub entries: Vec<EntryOutcome>,
    /// Entries without a failing test, with the notice shown for them.
    pub skipped: Vec<(String, String)>,
}

impl CorpusOutcome {
    pub fn acc_at(&self, m: Method, n: usize) -> usize {
        let ranks: Vec<f64> = self.entries.iter().map(|e| e.rank(m)).collect();
        acc_at_n(&ranks, n)
    }

    pub fn raw_ties(&self) -> usize {
        self.entries.iter().map(|e| e.raw_ties).sum()
    }
}

fn io_err(what: &Path) -> impl Fn(std::io::Error) -> PipelineError + '_ {
    move |e| PipelineError {
        stage: "io",
        cause: format!("{}: {e}", what.display()),
    }
}

/// Localizes one entry; `Ok(None)` when its suite has no failing test.
pub fn run_entry(
    dir: &Path,
    entry: &ManifestEntry,
    opts: &Options,
    cache: &mut RunCache,
) -> Result<Option<EntryOutcome>, PipelineError> {
    let program_path = dir.join(&entry.program);
    let suite_path = dir.join(&entry.suite);
    let source = fs::read_to_string(&program_path).map_err(io_err(&program_path))?;
    let suite_text = fs::read_to_string(&suite_path).map_err(io_err(&suite_path))?;
    let suite = parse_suite(&suite_text).map_err(|e| PipelineError {
        stage: "suite",
        cause: e.to_string(),
    })?;
    let l = match localize(&source, &suite.inputs(), opts, None, cache) {
        Ok(l) => l,
        Err(e) if e.is_no_failing_test() => return Ok(None),
        Err(e) => return Err(e),
    };
    let faulty: Vec<usize> = l
        .collection
        .nodes
        .iter()
        .filter(|n| entry.fault.lines.contains(&n.location.line))
        .map(|n| n.index)
        .collect();
    let fault = FaultSpec {
        nodes: faulty.into_iter().collect(),
        lines: entry.fault.lines.iter().copied().collect(),
        description: entry.fault.description.clone(),
    };
    let mut ranks = Vec::new();
    for m in METHODS {
        let r = if m == Method::Cdfl { &l.cdfl.ranking } else { &l.sbfl };
        let rank = apply_tiebreaker(r, m.tie_policy(), &fault).map_err(|e| PipelineError {
            stage: "rank",
            cause: format!("{}: {e}", entry.name),
        })?;
        ranks.push((m, rank));
    }
    Ok(Some(EntryOutcome {
        ranks: FaultRanks {
            program: entry.name.clone(),
            ranks,
        },
        failing: l.failing.len(),
        raw_ties: l.cdfl.raw_ties,
        localization: l,
    }))
}

/// Runs every entry of `manifest`, whose paths are relative to `dir`.
pub fn run_corpus(
    dir: &Path,
    manifest: &Manifest,
    opts: &Options,
    cache: &mut RunCache,
) -> Result<CorpusOutcome, PipelineError> {
    let mut out = CorpusOutcome::default();
    for e in &manifest.entries {
        match run_entry(dir, e, opts, cache)? {
            Some(o) => out.entries.push(o),
            None => out
                .skipped
                .push((e.name.clone(), format!("{}: no failing test, skipped", e.name))),
        }
    }
    Ok(out)
}

/// `program,failing,method,rank` rows.
pub fn ranks_csv(o: &CorpusOutcome) -> String {
    let mut out = String::from("program,failing,method,rank\n");
    for e in &o.entries {
        for (m, r) in &e.ranks.ranks {
            let _ = writeln!(out, "{},{},{},{r}", e.ranks.program, e.failing, m.as_str());
        }
    }
    out
}

/// acc@n per method for `ns`, one row per method.
pub fn accuracy_csv(o: &CorpusOutcome, ns: &[usize]) -> String {
    let mut out = String::from("method");
    for n in ns {
        let _ = write!(out, ",acc@{n}");
    }
    out.push('\n');
    for m in METHODS {
        out.push_str(m.as_str());
        for &n in ns {
            let _ = write!(out, ",{}", o.acc_at(m, n));
        }
        out.push('\n');
    }
    out
}
