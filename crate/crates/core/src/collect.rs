//! From a program and a suite to an observation set: oracle runs, mutation
//! sampling, mutant runs and change vectors.
//!
//! Everything here is sequential; the companion crate runs the same jobs on
//! a worker pool and merges them with [`assemble_observations`].

use alloc::string::String;
use alloc::vec::Vec;

use crate::minilang::{Node, NodeIdx, Program};
use crate::observations::{Bits, Observation, ObservationError, ObservationSet};
use crate::runtime::{run_mutant, run_oracle, sample_mutations, MutationSpec, RunResult, SampleError, TestInput};
use crate::value::{Domain, Scalar};

/// Mutation values chosen for every node.
#[derive(Debug, Clone, PartialEq)]
pub struct MutationPlan {
    /// `per_node[k - 1]` lists node `k`'s mutations in ordinal order.
    pub per_node: Vec<Vec<MutationSpec>>,
    /// Domain used for each node (declared, else inferred from the first
    /// oracle value); `None` when the node never executed.
    pub domains: Vec<Option<Domain>>,
    /// Nodes left without mutations, with the reason.
    pub skipped: Vec<(NodeIdx, SampleError)>,
}

/// One mutant run to perform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Job {
    pub node: NodeIdx,
    pub ordinal: u32,
    pub test: usize,
}

impl MutationPlan {
    /// All (node, ordinal, test) jobs in key order.
    pub fn jobs(&self, test_count: usize) -> Vec<Job> {
        let mut out = Vec::new();
        for (k, specs) in self.per_node.iter().enumerate() {
            for ordinal in 0..specs.len() {
                for test in 0..test_count {
                    out.push(Job {
                        node: k + 1,
                        ordinal: ordinal as u32,
                        test,
                    });
                }
            }
        }
        out
    }

    pub fn spec(&self, job: &Job) -> &MutationSpec {
        &self.per_node[job.node - 1][job.ordinal as usize]
    }
}

/// Values node `k` took across all oracle runs, in test order.
pub fn pooled_values(oracles: &[RunResult], k: NodeIdx) -> Vec<Scalar> {
    oracles
        .iter()
        .flat_map(|r| r.trajectory(k).iter().cloned())
        .collect()
}

/// Samples up to `n` mutations for every node from `seed`.
pub fn plan_mutations(nodes: &[Node], oracles: &[RunResult], n: usize, seed: u64) -> Result<MutationPlan, SampleError> {
    if n == 0 {
        return Err(SampleError::ZeroCount);
    }
    let mut per_node = Vec::with_capacity(nodes.len());
    let mut domains = Vec::with_capacity(nodes.len());
    let mut skipped = Vec::new();
    for node in nodes {
        let pooled = pooled_values(oracles, node.index);
        let domain = node.domain.or_else(|| pooled.first().map(Domain::of));
        domains.push(domain);
        let specs = match domain {
            None => {
                skipped.push((node.index, SampleError::NoOracleValues(node.index)));
                Vec::new()
            }
            Some(d) => match sample_mutations(node.index, d, &pooled, n, seed) {
                Ok(s) => s,
                Err(e) => {
                    skipped.push((node.index, e));
                    Vec::new()
                }
            },
        };
        per_node.push(specs);
    }
    Ok(MutationPlan {
        per_node,
        domains,
        skipped,
    })
}

/// Change vector of a mutant run: one entry per node, plus (when
/// `output_column`) a final entry set when the observable output changed.
pub fn change_vector(oracle: &RunResult, mutant: &RunResult, output_column: bool) -> Bits {
    let n = oracle.trajectories.len();
    let width = n + output_column as usize;
    let mut bits = Bits::new(width);
    for k in 1..=n {
        if oracle.trajectory(k) != mutant.trajectory(k) {
            bits.set(k, true);
        }
    }
    if output_column && oracle.observable_output() != mutant.observable_output() {
        bits.set(width, true);
    }
    bits
}

/// Coverage vector of an oracle run (the output column is always covered).
pub fn coverage_vector(oracle: &RunResult, output_column: bool) -> Bits {
    let n = oracle.trajectories.len();
    let width = n + output_column as usize;
    Bits::from_fn(width, |k| k > n || oracle.executed(k))
}

/// Builds the observation set from per-job change vectors. Results may
/// arrive in any order; they are sorted by job key.
pub fn assemble_observations(
    tests: &[TestInput],
    oracles: &[RunResult],
    plan: &MutationPlan,
    output_column: bool,
    mut results: Vec<(Job, Bits)>,
) -> Result<ObservationSet, ObservationError> {
    results.sort_by_key(|(job, _)| *job);
    let width = oracles
        .first()
        .map(|o| o.trajectories.len())
        .unwrap_or(plan.per_node.len())
        + output_column as usize;
    let coverage = oracles.iter().map(|o| coverage_vector(o, output_column)).collect();
    let observations = results
        .into_iter()
        .map(|(job, changed)| Observation {
            mutated: job.node,
            ordinal: job.ordinal,
            test: job.test,
            changed,
            weight_den: plan.per_node[job.node - 1].len() as u32,
        })
        .collect();
    let ids: Vec<String> = tests.iter().map(|t| t.id.clone()).collect();
    ObservationSet::new(width, ids, coverage, observations)
}

/// Everything produced while collecting observations.
#[derive(Debug, Clone)]
pub struct Collected {
    pub oracles: Vec<RunResult>,
    pub plan: MutationPlan,
    pub set: ObservationSet,
    /// Mutant runs that timed out or failed, counted per status label.
    pub timeouts: usize,
    pub runtime_errors: usize,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CollectError {
    #[error(transparent)]
    Sample(#[from] SampleError),
    #[error(transparent)]
    Observation(#[from] ObservationError),
}

/// Runs the oracle, samples mutations and runs every mutant sequentially.
pub fn collect(
    p: &Program,
    nodes: &[Node],
    tests: &[TestInput],
    n: usize,
    seed: u64,
    output_column: bool,
) -> Result<Collected, CollectError> {
    let oracles: Vec<RunResult> = tests.iter().map(|t| run_oracle(p, t)).collect();
    let plan = plan_mutations(nodes, &oracles, n, seed)?;
    let mut timeouts = 0;
    let mut runtime_errors = 0;
    let results = plan
        .jobs(tests.len())
        .into_iter()
        .map(|job| {
            let r = run_mutant(p, &tests[job.test], plan.spec(&job));
            match r.status {
                crate::runtime::RunStatus::Timeout => timeouts += 1,
                crate::runtime::RunStatus::RuntimeError(_) => runtime_errors += 1,
                crate::runtime::RunStatus::Ok => {}
            }
            (job, change_vector(&oracles[job.test], &r, output_column))
        })
        .collect();
    let set = assemble_observations(tests, &oracles, &plan, output_column, results)?;
    Ok(Collected {
        oracles,
        plan,
        set,
        timeouts,
        runtime_errors,
    })
}
