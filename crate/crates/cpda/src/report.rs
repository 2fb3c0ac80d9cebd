//! Plain-text diagnostics written next to every result.

use std::fmt::Write as _;

use cpda_core::discovery::{screening_violations, RemovalReason};

use crate::pipeline::{Analysis, Collection, Localization, Options};

fn collection_section(out: &mut String, c: &Collection, opts: &Options) {
    let s = &c.stats;
    let _ = writeln!(out, "nodes: {}", c.nodes.len());
    let _ = writeln!(out, "tests: {}", c.tests.len());
    let _ = writeln!(out, "mutations per node: {}", opts.nmpn);
    let _ = writeln!(out, "seed: {}", opts.seed);
    let _ = writeln!(out, "mutant runs: {}", s.mutant_runs);
    let _ = writeln!(out, "cache hits: {}", s.cache_hits);
    let _ = writeln!(out, "runtime errors: {}", s.runtime_errors);
    let _ = writeln!(
        out,
        "timeouts: {}{}",
        s.timeouts,
        if opts.drop_timeouts { " (left out of the observations)" } else { "" }
    );
    let _ = writeln!(out, "observations: {}", c.set.observations().len());
    for (k, e) in &c.plan.skipped {
        let _ = writeln!(out, "not mutated: node {k}: {e}");
    }
    if opts.output_column {
        let _ = writeln!(out, "output column: {} (tracks the observable output)", c.set.width());
    }
}

fn removals_section(out: &mut String, a: &cpda_core::discovery::CausalStructure) {
    for r in &a.removals {
        let why = match r.reason {
            RemovalReason::ReverseDependence => "mutual dependence",
            RemovalReason::CycleFallback => "cycle fallback",
        };
        let _ = writeln!(out, "edge removed: {} -> {} ({why})", r.parent, r.child);
    }
}

pub fn analysis_report(a: &Analysis, opts: &Options) -> String {
    let mut out = String::new();
    collection_section(&mut out, &a.collection, opts);
    let _ = writeln!(out, "edges: {}", a.structure.edges().len());
    removals_section(&mut out, &a.structure);
    for (i, j) in screening_violations(&a.collection.set, &a.structure) {
        let _ = writeln!(out, "screening violated: {i} -> {j}");
    }
    let undefined: Vec<_> = a.dd.iter().filter(|d| d.undefined).collect();
    let _ = writeln!(out, "direct dependences with undefined terms: {}", undefined.len());
    for d in undefined {
        let _ = writeln!(out, "undefined term: {} -> {}", d.source, d.target);
    }
    let _ = writeln!(out, "direct dependence averages over the tests covering the child");
    out
}

pub fn localization_report(l: &Localization, opts: &Options) -> String {
    let mut out = String::new();
    let opts = Options {
        output_column: l.output.synthetic,
        ..opts.clone()
    };
    collection_section(&mut out, &l.collection, &opts);
    let _ = writeln!(
        out,
        "output node: {}{}",
        l.output.node,
        if l.output.synthetic { " (observable output column)" } else { "" }
    );
    let _ = writeln!(out, "failing tests: {}", l.failing.len());
    let _ = writeln!(out, "passing tests: {}", l.passing.len());
    let _ = writeln!(out, "tests without verdict: {}", l.unjudged.len());
    removals_section(&mut out, &l.structure);
    let _ = writeln!(out, "causal ranking raw ties: {}", l.cdfl.raw_ties);
    let _ = writeln!(out, "causal dependences with undefined terms: {}", l.cdfl.undefined_terms);
    let _ = writeln!(out, "spectrum ranking ties: {}", l.sbfl.tie_count());
    out
}
