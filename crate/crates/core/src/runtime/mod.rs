//! Instrumented execution: oracle runs record every node's trajectory, mutant
//! runs additionally overwrite one node's value at every hit.

mod builtins;
mod interp;
mod sampling;

use alloc::string::String;
use alloc::vec::Vec;

use crate::minilang::{NodeIdx, Program};
use crate::value::Scalar;

pub use sampling::{sample_mutations, stream_seed, SampleError};

/// Interpreter steps allowed per run before it is cut off as a timeout.
pub const STEP_BUDGET: u64 = 1_000_000;

/// Maximum call depth.
pub const MAX_DEPTH: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestInput {
    pub id: String,
    /// Values consumed in order by `read()` and `getChar(v)`.
    pub tokens: Vec<Scalar>,
    /// Expected observable output (printed values, then the entry function's
    /// return value if it has one).
    pub expected: Option<Vec<Scalar>>,
    pub verdict: Option<Verdict>,
}

impl TestInput {
    pub fn new(id: impl Into<String>, tokens: Vec<Scalar>) -> TestInput {
        TestInput {
            id: id.into(),
            tokens,
            expected: None,
            verdict: None,
        }
    }

    /// Declared verdict, or the one implied by comparing the oracle run's
    /// observable output against the expected output.
    pub fn effective_verdict(&self, oracle: &RunResult) -> Option<Verdict> {
        if self.verdict.is_some() {
            return self.verdict;
        }
        let expected = self.expected.as_ref()?;
        if oracle.status == RunStatus::Ok && oracle.observable_output() == *expected {
            Some(Verdict::Pass)
        } else {
            Some(Verdict::Fail)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MutationValue {
    /// Flip a boolean node relative to the value it would have taken, at
    /// every hit.
    Negate,
    /// Overwrite the node with this value at every hit.
    Set(Scalar),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MutationSpec {
    pub target: NodeIdx,
    pub value: MutationValue,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RunStatus {
    Ok,
    Timeout,
    RuntimeError(String),
}

impl RunStatus {
    pub fn label(&self) -> &'static str {
        match self {
            RunStatus::Ok => "ok",
            RunStatus::Timeout => "timeout",
            RunStatus::RuntimeError(_) => "runtime-error",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    /// `trajectories[k - 1]` holds the values taken by node `k`, possibly
    /// partial when the run did not finish normally.
    pub trajectories: Vec<Vec<Scalar>>,
    /// Values printed by `print`.
    pub output: Vec<Scalar>,
    /// Value returned by the entry function, if any.
    pub ret: Option<Scalar>,
    pub status: RunStatus,
    /// Node hit sequence; recorded for oracle runs only.
    pub trace: Vec<NodeIdx>,
    pub steps: u64,
}

impl RunResult {
    pub fn trajectory(&self, node: NodeIdx) -> &[Scalar] {
        &self.trajectories[node - 1]
    }

    pub fn executed(&self, node: NodeIdx) -> bool {
        !self.trajectories[node - 1].is_empty()
    }

    /// Printed values followed by the entry function's return value.
    pub fn observable_output(&self) -> Vec<Scalar> {
        let mut out = self.output.clone();
        out.extend(self.ret.iter().cloned());
        out
    }
}

/// Runs `p` on `t` with no mutation active, recording the hit trace.
pub fn run_oracle(p: &Program, t: &TestInput) -> RunResult {
    interp::run(p, t, None, true, STEP_BUDGET)
}

/// Runs `p` on `t` with `m` applied at every hit of its target node.
pub fn run_mutant(p: &Program, t: &TestInput, m: &MutationSpec) -> RunResult {
    interp::run(p, t, Some(m), false, STEP_BUDGET)
}

/// As [`run_mutant`]/[`run_oracle`] with an explicit step budget.
pub fn run_with_budget(p: &Program, t: &TestInput, m: Option<&MutationSpec>, budget: u64) -> RunResult {
    interp::run(p, t, m, m.is_none(), budget)
}
