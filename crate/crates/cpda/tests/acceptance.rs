//! Acceptance gate: one PASS/FAIL line per criterion.
//!
//! The process exits non-zero when any criterion's outcome differs from
//! `EXPECTED_FAILURES`, in either direction.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use common::*;
use cpda::cache::RunCache;
use cpda::corpus::run_corpus;
use cpda::formats::{read_edge_list, read_manifest, read_observations};
use cpda::pipeline::{analyze, collect, localize, Analysis, Options};
use cpda::suite::parse_suite;
use cpda_core::cdfl::Method;
use cpda_core::cpdm::diff_models;
use cpda_core::discovery::{intervention_parents, markovian_parents};
use cpda_core::effects::{causal_dependence, causal_effect, fit_cpts, natural_direct_effect, verify_truncated_factorization};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Criteria known not to hold, with the analysis in the project notes.
const EXPECTED_FAILURES: &[u8] = &[2, 3];

const TOL: f64 = 1e-9;
const SEED: u64 = 0;

fn data(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(rel)
}

fn read(rel: &str) -> String {
    fs::read_to_string(data(rel)).unwrap()
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

/// CDFL ranks of the three assignments and the SBFL tie on the `+ 1` fault.
fn mod_plus_one() -> Outcome {
    let start = Instant::now();
    let suite = parse_suite(&read("mod_plus_one.suite")).unwrap();
    let opts = Options { seed: SEED, ..Options::default() };
    let l = localize(&read("mod_plus_one.mini"), &suite.inputs(), &opts, None, &mut RunCache::in_memory()).unwrap();
    let elapsed = start.elapsed();
    let var = |node: Option<usize>| node.map(|k| l.collection.nodes[k - 1].variable.clone()).unwrap_or_default();
    let order: Vec<String> = l.cdfl.ranking.entries.iter().map(|e| var(e.node)).collect();
    let ranks_ok = order == ["c", "a", "b"] && l.cdfl.raw_ties == 0;
    let sbfl: Vec<f64> = [2, 3, 4]
        .iter()
        .map(|&line| l.sbfl.entries.iter().find(|e| e.line == line).map(|e| e.score).unwrap_or(f64::NAN))
        .collect();
    let tied = sbfl.iter().all(|s| (s - sbfl[0]).abs() <= TOL);
    let fast = elapsed < Duration::from_secs(5);
    outcome(
        ranks_ok && tied && fast,
        format!("cdfl order {order:?} (want [c, a, b]); sbfl {sbfl:?} tied={tied}; {elapsed:.2?} < 5s"),
    )
}

/// Line 1 scores 0 and ranks last; lines 2-3 share a positive score 0.5 +- 0.1.
fn trailing_space() -> Outcome {
    let start = Instant::now();
    let suite = parse_suite(&read("trailing_space.suite")).unwrap();
    let opts = Options { seed: SEED, ..Options::default() };
    let l = localize(&read("trailing_space.mini"), &suite.inputs(), &opts, None, &mut RunCache::in_memory()).unwrap();
    let elapsed = start.elapsed();
    // Program lines 2..=4 are the three statements of the listing.
    let score = |line: u32| {
        l.cdfl.ranking.entries.iter().find(|e| e.line == line).map(|e| e.score).unwrap_or(f64::NAN)
    };
    let (s1, s2, s3) = (score(2), score(3), score(4));
    let last = l.cdfl.ranking.entries.last().map(|e| e.line) == Some(2) && s1 < s2 - TOL && s1 < s3 - TOL;
    let pass = s1.abs() <= TOL
        && (s2 - s3).abs() <= TOL
        && s2 > 0.0
        && (s2 - 0.5).abs() <= 0.1
        && last
        && elapsed < Duration::from_secs(5);
    outcome(
        pass,
        format!("susp line1 {s1:.4} line2 {s2:.4} line3 {s3:.4} (want 0, 0.5, 0.5); line1 last={last}; {elapsed:.2?}"),
    )
}

/// Qualitative structure and weight claims on the word-count program.
fn wc(analysis_out: &mut Option<Analysis>) -> Outcome {
    let start = Instant::now();
    let src = read("wc.mini");
    let suite = parse_suite(&read("wc.suite")).unwrap();
    let opts = Options { nmpn: 100, seed: SEED, drop_timeouts: true, ..Options::default() };
    let mut cache = RunCache::in_memory();
    let full = analyze(&src, &suite.inputs(), "wc", &opts, &mut cache).unwrap();
    let m = &full.model;
    let loop_body = [7, 8, 9, 10, 11, 12, 13, 14, 16, 17, 18, 19, 20];
    let extra: Vec<usize> = loop_body.iter().copied().filter(|&k| m.has_edge(5, k)).collect();
    let a = m.has_edge(5, 15) && extra.is_empty();
    let present: Vec<usize> = [8, 10, 17].into_iter().filter(|&k| m.has_edge(15, k)).collect();
    let b = present.is_empty();
    let w = |p, c| m.weight(p, c).unwrap_or(f64::NAN);
    let c = w(19, 10) > w(20, 10);
    let d = w(4, 11) > w(13, 11) && w(13, 11) > w(14, 11);
    let mut group = |name: &str| analyze(&src, &suite.group(name).inputs(), name, &opts, &mut cache).unwrap().model;
    let (oc, ow, ol, ml) = (group("onechar"), group("oneword"), group("oneline"), group("multiline"));
    let dw = diff_models(&ow, &oc).unwrap();
    let e = [13, 15, 16].iter().all(|&k| {
        let out_a = dw.only_a.iter().any(|x| x.parent == k);
        let elsewhere = dw.only_b.iter().any(|x| x.parent == k) || dw.both.iter().any(|x| x.0 == k);
        out_a && !elsewhere
    });
    let dl = diff_models(&ml, &ol).unwrap();
    let f = dl.in_only_b(15, 8) && dl.in_only_a(16, 8) && dl.in_only_a(8, 9) && dl.in_only_a(2, 9);
    let elapsed = start.elapsed();
    *analysis_out = Some(full);
    outcome(
        a && b && c && d && e && f && elapsed < Duration::from_secs(600),
        format!(
            "(a) {a} [extra 5->{extra:?}] (b) {b} [15->{present:?}] (c) {c} (d) {d} (e) {e} (f) {f}; \
             N=100 seed {SEED}; {elapsed:.2?} < 600s"
        ),
    )
}

/// Markovian parents against brute-force minimal screening sets.
fn markovian_oracle() -> Outcome {
    let mut agree = 0;
    for trial in 0..50u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(trial);
        let family = FAMILIES[trial as usize % FAMILIES.len()];
        let n = rng.random_range(family.sizes());
        let dag = structure(family, n);
        let weights = random_weights(&mut rng, dag.edge_count());
        let misses = rng.random_range(1..=2);
        let raws = exhaustive_interventions(&dag, &weights, misses);
        let set = to_set(n, &raws);
        let view = set.all();
        let ok = (1..=n).all(|j| {
            let ipa_lib: BTreeSet<usize> = intervention_parents(&view, j);
            let dist: Vec<usize> = ipa_lib.iter().copied().collect();
            let pa = markovian_parents(&ipa_lib, &dist, &view, j);
            let minimal = minimal_screening_sets(&raws, j, &ipa(&raws, j));
            ipa_lib == ipa(&raws, j) && minimal.len() == 1 && minimal[0] == pa
        });
        agree += ok as usize;
    }
    outcome(agree == 50, format!("{agree}/50 trials agree"))
}

/// Truncated factorization, the parent-set identity on the wc model, and
/// the direct-effect expansion on hand tables.
fn identities(wc: &Analysis) -> Outcome {
    let mut worst = 0.0f64;
    let mut lib_ok = 0;
    for trial in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + trial);
        let n = rng.random_range(2..=6);
        let dag = random_dag(&mut rng, n, 0.5);
        let raws = random_raws(&mut rng, &dag, 12);
        let set = to_set(n, &raws);
        let cpts = fit_cpts(&set.all(), &dag);
        let size = rng.random_range(0..=2.min(n));
        let mut x: Vec<(usize, bool)> = Vec::new();
        while x.len() < size {
            let k = rng.random_range(1..=n);
            if x.iter().all(|&(q, _)| q != k) {
                x.push((k, rng.random_bool(0.5)));
            }
        }
        lib_ok += verify_truncated_factorization(&dag, &cpts, &x).unwrap().ok as usize;
        worst = worst.max((truncated_total_by_counting(&raws, &dag, &x, &cpts) - 1.0).abs());
    }
    let factorization = lib_ok == 100 && worst <= TOL;

    let view = wc.collection.set.all();
    let dag = &wc.structure.dag;
    let (mut checked, mut parent_worst) = (0, 0.0f64);
    for j in dag.nodes() {
        let pa: Vec<usize> = dag.parents(j).iter().copied().collect();
        if pa.is_empty() {
            continue;
        }
        for (r, _) in view.realizations(&pa, Some(j)) {
            let x: Vec<(usize, bool)> = pa.iter().copied().zip(r).collect();
            let lhs = causal_effect(&view, dag, &x, j).value;
            let rhs = view.cond_prob_change(j, &x).value();
            match (lhs, rhs) {
                (Some(a), Some(b)) => parent_worst = parent_worst.max((a - b).abs()),
                (None, None) => {}
                _ => parent_worst = f64::INFINITY,
            }
            checked += 1;
        }
    }
    let parent_identity = parent_worst <= TOL;

    let hand_dag = hand_table_dag();
    let mut nde_worst = 0.0f64;
    for rows in HAND_TABLES {
        let raws = raws_from(rows);
        let set = to_set(3, &raws);
        for (i, j) in [(1, 3), (2, 3)] {
            let lib = natural_direct_effect(&set.for_test(0), &hand_dag, i, j).unwrap_or(f64::NAN);
            nde_worst = nde_worst.max((lib - nde_by_strata(&raws, &hand_dag, i, j)).abs());
        }
    }
    let direct = nde_worst <= TOL;
    outcome(
        factorization && parent_identity && direct,
        format!(
            "factorization {lib_ok}/100 ok, max |sum-1| {worst:.1e}; do(pa)=cond over {checked} wc strata, \
             max diff {parent_worst:.1e}; direct-effect expansion max diff {nde_worst:.1e}"
        ),
    )
}

/// Adjusting for the common cause shrinks the naive association.
fn confounder() -> Outcome {
    let set = read_observations(&read("confounder/observations.csv"), &read("confounder/observations.meta.jsonl")).unwrap();
    let dag = read_edge_list(&read("confounder/structure.edges"), 3).unwrap();
    let view = set.all();
    let cd = causal_dependence(&view, &dag, 2, 3).unwrap().value;
    let naive = view.cond_prob_change(3, &[(2, true)]).value().unwrap()
        - view.cond_prob_change(3, &[(2, false)]).value().unwrap();
    // Counts from the table in the data directory's README, z = 1 in 10 of 16.
    let hand_cd = (6.0 / 7.0) * (10.0 / 16.0) + (2.0 / 4.0) * (6.0 / 16.0) - (2.0 / 3.0) * (10.0 / 16.0);
    let hand_naive = 8.0 / 11.0 - 2.0 / 5.0;
    let exact = (cd - hand_cd).abs() <= 1e-12 && (naive - hand_naive).abs() <= 1e-12;
    outcome(
        exact && cd.abs() < naive.abs(),
        format!("CD {cd:.6} (hand {hand_cd:.6}) vs naive {naive:.6} (hand {hand_naive:.6})"),
    )
}

/// acc@3 on the seeded-fault corpus.
fn corpus() -> Outcome {
    let dir = data("corpus");
    let manifest = read_manifest(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap();
    let run = |seed: u64| {
        let opts = Options { seed, ..Options::default() };
        run_corpus(&dir, &manifest, &opts, &mut RunCache::in_memory()).unwrap()
    };
    let o = run(SEED);
    let (cdfl, sbfl, ties) = (o.acc_at(Method::Cdfl, 3), o.acc_at(Method::SbflAvg, 3), o.raw_ties());
    let total = o.entries.len() + o.skipped.len();
    let sweep: Vec<usize> = (1..5).map(|s| run(s).acc_at(Method::Cdfl, 3)).collect();
    outcome(
        cdfl >= 8 && ties == 0 && sbfl < cdfl && total == 10,
        format!(
            "acc@3 cdfl {cdfl}/{total}, sbfl-avg {sbfl}/{total}, raw ties {ties} (seed {SEED}, nmpn 20); \
             cdfl acc@3 at seeds 1-4 {sweep:?} (diagnostic)"
        ),
    )
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    out.sort();
    out
}

/// Identical runs give identical bytes; fewer mutations give a prefix.
fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = tmp.path().join(name);
        let output = Command::new(env!("CARGO_BIN_EXE_cpda"))
            .args(["analyze", "--program"])
            .arg(data("wc.mini"))
            .arg("--suite")
            .arg(data("wc.suite"))
            .args(["--group", "oneline", "--nmpn", "20", "--seed", "0", "--no-cache", "--output-dir"])
            .arg(&out)
            .env_remove("CI")
            .output()
            .unwrap();
        assert!(output.status.success());
        files(&out)
    };
    let (a, b) = (run("first"), run("second"));
    let identical = a == b && a.len() == 6;

    let src = read("wc.mini");
    let tests = parse_suite(&read("wc.suite")).unwrap().inputs();
    let set = |nmpn: usize| {
        let opts = Options { nmpn, seed: SEED, ..Options::default() };
        collect(&src, &tests, &opts, &mut RunCache::in_memory()).unwrap()
    };
    let (ten, twenty) = (set(10), set(20));
    let key = |o: &cpda_core::observations::Observation| (o.mutated, o.ordinal, o.test, o.changed.clone());
    let long: BTreeSet<_> = twenty.set.observations().iter().map(key).collect();
    let short: Vec<_> = ten.set.observations().iter().map(key).collect();
    let subset = short.iter().all(|k| long.contains(k));
    let plans_prefix = ten
        .plan
        .per_node
        .iter()
        .zip(&twenty.plan.per_node)
        .all(|(s, l)| s.len() <= l.len() && s[..] == l[..s.len()]);
    outcome(
        identical && subset && plans_prefix,
        format!(
            "{} artifacts byte-identical={identical}; nmpn 10 ({} obs) within nmpn 20 ({} obs)={subset}; \
             per-node mutation prefix={plans_prefix}",
            a.len(),
            short.len(),
            long.len()
        ),
    )
}

fn main() -> ExitCode {
    let mut wc_analysis = None;
    let results: Vec<(u8, &str, Outcome)> = vec![
        (1, "mod-plus-one ranks", mod_plus_one()),
        (2, "trailing-space scores", trailing_space()),
        (3, "wc claims", wc(&mut wc_analysis)),
        (4, "markovian parent oracle", markovian_oracle()),
        (5, "identities", identities(wc_analysis.as_ref().unwrap())),
        (6, "confounding removal", confounder()),
        (7, "seeded-fault corpus", corpus()),
        (8, "determinism", determinism()),
    ];
    let mut unexpected = Vec::new();
    for (n, name, o) in &results {
        println!("criterion {n} {}: {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        if o.pass == EXPECTED_FAILURES.contains(n) {
            unexpected.push(*n);
        }
    }
    let passed = results.iter().filter(|r| r.2.pass).count();
    println!("acceptance: {passed}/{} criteria pass", results.len());
    if unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("acceptance: outcome differs from the recorded status for criteria {unexpected:?}");
        ExitCode::FAILURE
    }
}
