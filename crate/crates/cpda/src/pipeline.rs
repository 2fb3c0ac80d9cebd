//! The end-to-end analysis: parse, oracle runs, sampling, mutant runs on a
//! worker pool, observations, structure, direct dependences and the model.

use rayon::prelude::*;

use cpda_core::cdfl::{cdfl_scores, sbfl_ochiai, select_output_node, CdflResult, OutputSelection, Ranking};
use cpda_core::collect::{assemble_observations, change_vector, plan_mutations, Job, MutationPlan};
use cpda_core::cpdm::{build_cpdm, node_labels, Cpdm, Provenance};
use cpda_core::discovery::{assemble_structure, learn_parents, safe_parents_for_columns, CausalStructure};
use cpda_core::effects::{direct_dependence, DependenceScore};
use cpda_core::minilang::{index_nodes, parse, Node, NodeIdx, Program};
use cpda_core::observations::{Bits, ObservationSet};
use cpda_core::runtime::{run_mutant, run_oracle, RunResult, TestInput, Verdict};

use crate::cache::{program_digest, run_key, CachedRun, RunCache};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Options {
    /// Mutations sampled per node.
    pub nmpn: usize,
    pub seed: u64,
    /// Add a column tracking the observable output.
    pub output_column: bool,
    /// Restrict parent candidates to safe parents.
    pub safe_parents: bool,
    /// Leave runs that hit the step budget out of the observations.
    pub drop_timeouts: bool,
    /// Worker threads; `None` uses the global pool.
    pub jobs: Option<usize>,
}

impl Default for Options {
    fn default() -> Options {
        Options {
            nmpn: 20,
            seed: 0,
            output_column: false,
            safe_parents: true,
            drop_timeouts: false,
            jobs: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{stage}: {cause}")]
pub struct PipelineError {
    pub stage: &'static str,
    pub cause: String,
}

impl PipelineError {
    /// The suite had no failing test to localize.
    pub fn is_no_failing_test(&self) -> bool {
        self.stage == NO_FAILING_STAGE
    }
}

const NO_FAILING_STAGE: &str = "verdicts";

fn stage<E: std::fmt::Display>(stage: &'static str) -> impl Fn(E) -> PipelineError {
    move |e| PipelineError {
        stage,
        cause: e.to_string(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RunStats {
    pub mutant_runs: usize,
    pub cache_hits: usize,
    pub timeouts: usize,
    pub runtime_errors: usize,
}

/// Observations and everything needed to interpret them.
#[derive(Debug, Clone)]
pub struct Collection {
    pub program: Program,
    pub nodes: Vec<Node>,
    pub tests: Vec<TestInput>,
    pub oracles: Vec<RunResult>,
    pub plan: MutationPlan,
    pub set: ObservationSet,
    pub stats: RunStats,
}

#[derive(Debug, Clone)]
pub struct Analysis {
    pub collection: Collection,
    pub structure: CausalStructure,
    pub dd: Vec<DependenceScore>,
    pub model: Cpdm,
}

fn in_pool<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, PipelineError> {
    match jobs {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(stage("workers"))?;
            Ok(pool.install(f))
        }
    }
}

/// Parses `source`, runs the suite and collects observations.
pub fn collect(
    source: &str,
    tests: &[TestInput],
    opts: &Options,
    cache: &mut RunCache,
) -> Result<Collection, PipelineError> {
    let program = parse(source).map_err(stage("parse"))?;
    let nodes = index_nodes(&program);
    if tests.is_empty() {
        return Err(PipelineError {
            stage: "suite",
            cause: "the suite has no tests".into(),
        });
    }
    if opts.nmpn == 0 {
        return Err(PipelineError {
            stage: "config",
            cause: "the number of mutations per node must be at least 1".into(),
        });
    }
    let digest = program_digest(source);
    let p = &program;
    let (oracles, plan, outcomes, stats) = in_pool(opts.jobs, || -> Result<_, PipelineError> {
        let oracles: Vec<RunResult> = tests.par_iter().map(|t| run_oracle(p, t)).collect();
        let plan = plan_mutations(&nodes, &oracles, opts.nmpn, opts.seed).map_err(stage("sample"))?;
        let jobs = plan.jobs(tests.len());
        let keys: Vec<String> = jobs
            .par_iter()
            .map(|j| run_key(&digest, &tests[j.test], plan.spec(j), opts.seed))
            .collect();
        let cached: Vec<Option<CachedRun>> = keys.iter().map(|k| cache.get(k).cloned()).collect();
        let fresh: Vec<Option<CachedRun>> = jobs
            .par_iter()
            .zip(&cached)
            .map(|(j, hit)| {
                hit.is_none().then(|| {
                    let r = run_mutant(p, &tests[j.test], plan.spec(j));
                    CachedRun {
                        changed: change_vector(&oracles[j.test], &r, true),
                        status: r.status.label().to_string(),
                    }
                })
            })
            .collect();
        let mut stats = RunStats {
            mutant_runs: jobs.len(),
            ..RunStats::default()
        };
        let mut outcomes: Vec<(Job, CachedRun)> = Vec::with_capacity(jobs.len());
        for ((job, key), (hit, run)) in jobs.into_iter().zip(keys).zip(cached.into_iter().zip(fresh)) {
            let run = match (hit, run) {
                (Some(h), _) => {
                    stats.cache_hits += 1;
                    h
                }
                (None, Some(r)) => {
                    cache.insert(key, r.clone());
                    r
                }
                (None, None) => unreachable!("every job is cached or run"),
            };
            match run.status.as_str() {
                "timeout" => stats.timeouts += 1,
                "runtime-error" => stats.runtime_errors += 1,
                _ => {}
            }
            outcomes.push((job, run));
        }
        Ok((oracles, plan, outcomes, stats))
    })??;
    cache.flush().map_err(stage("cache"))?;
    let width = nodes.len() + opts.output_column as usize;
    let results = outcomes
        .into_iter()
        .filter(|(_, run)| !(opts.drop_timeouts && run.status == "timeout"))
        .map(|(job, run)| (job, run.changed.truncated(width)))
        .collect();
    let set = assemble_observations(tests, &oracles, &plan, opts.output_column, results).map_err(stage("observations"))?;
    Ok(Collection {
        program,
        nodes,
        tests: tests.to_vec(),
        oracles,
        plan,
        set,
        stats,
    })
}

/// Learns the structure over `set` with one worker task per node.
pub fn learn_structure(
    program: &Program,
    set: &ObservationSet,
    oracles: &[RunResult],
    opts: &Options,
) -> Result<CausalStructure, PipelineError> {
    let spa = opts.safe_parents.then(|| safe_parents_for_columns(program, set.width()));
    let traces: Vec<Vec<NodeIdx>> = oracles.iter().map(|o| o.trace.clone()).collect();
    in_pool(opts.jobs, || {
        let reports = (1..=set.width())
            .into_par_iter()
            .map(|j| learn_parents(set, &traces, spa.as_ref().and_then(|s| s.get(j - 1)), j))
            .collect();
        assemble_structure(set, reports)
    })
}

/// Direct dependence of every structure edge, in edge order.
pub fn edge_weights(set: &ObservationSet, s: &CausalStructure, jobs: Option<usize>) -> Result<Vec<DependenceScore>, PipelineError> {
    in_pool(jobs, || {
        s.edges()
            .par_iter()
            .map(|&(i, j)| direct_dependence(set, &s.dag, i, j).expect("edge of the structure"))
            .collect()
    })
}

/// The full analysis of one program over one suite.
pub fn analyze(
    source: &str,
    tests: &[TestInput],
    suite_name: &str,
    opts: &Options,
    cache: &mut RunCache,
) -> Result<Analysis, PipelineError> {
    let collection = collect(source, tests, opts, cache)?;
    let structure = learn_structure(&collection.program, &collection.set, &collection.oracles, opts)?;
    let dd = edge_weights(&collection.set, &structure, opts.jobs)?;
    let provenance = Provenance {
        suite: suite_name.to_string(),
        nmpn: opts.nmpn,
        seed: opts.seed,
    };
    let labels = node_labels(&collection.nodes, collection.set.width());
    let model = build_cpdm(&structure, &dd, labels, provenance).map_err(stage("model"))?;
    Ok(Analysis {
        collection,
        structure,
        dd,
        model,
    })
}

/// Fault localization results for one program and suite.
#[derive(Debug, Clone)]
pub struct Localization {
    pub collection: Collection,
    pub structure: CausalStructure,
    pub output: OutputSelection,
    pub failing: Vec<usize>,
    pub passing: Vec<usize>,
    /// Tests with neither a verdict nor an expected output.
    pub unjudged: Vec<usize>,
    pub cdfl: CdflResult,
    pub sbfl: Ranking,
}

/// Ranks suspects by causal dependence on the output and by Ochiai.
/// `out` overrides the output node.
pub fn localize(
    source: &str,
    tests: &[TestInput],
    opts: &Options,
    out: Option<NodeIdx>,
    cache: &mut RunCache,
) -> Result<Localization, PipelineError> {
    let program = parse(source).map_err(stage("parse"))?;
    let nodes = index_nodes(&program);
    let output = select_output_node(&program, &nodes, out).map_err(stage("output"))?;
    let opts = Options {
        output_column: output.synthetic,
        ..opts.clone()
    };
    let collection = collect(source, tests, &opts, cache)?;
    let (mut failing, mut passing, mut unjudged) = (Vec::new(), Vec::new(), Vec::new());
    for (t, (input, oracle)) in tests.iter().zip(&collection.oracles).enumerate() {
        match input.effective_verdict(oracle) {
            Some(Verdict::Fail) => failing.push(t),
            Some(Verdict::Pass) => passing.push(t),
            None => unjudged.push(t),
        }
    }
    if failing.is_empty() {
        return Err(PipelineError {
            stage: NO_FAILING_STAGE,
            cause: "no failing test".into(),
        });
    }
    let structure = learn_structure(&collection.program, &collection.set, &collection.oracles, &opts)?;
    let cdfl = cdfl_scores(&collection.set, &structure.dag, &collection.nodes, output.node, &failing, &passing)
        .map_err(stage("localize"))?;
    let judged: Vec<usize> = failing.iter().chain(&passing).copied().collect();
    let coverage: Vec<Bits> = judged.iter().map(|&t| collection.set.coverage(t).clone()).collect();
    let verdicts: Vec<Verdict> = judged
        .iter()
        .map(|t| if failing.contains(t) { Verdict::Fail } else { Verdict::Pass })
        .collect();
    let sbfl = sbfl_ochiai(&collection.nodes, &coverage, &verdicts, Some(output.node));
    Ok(Localization {
        collection,
        structure,
        output,
        failing,
        passing,
        unjudged,
        cdfl,
        sbfl,
    })
}
