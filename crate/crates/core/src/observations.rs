//! Weighted behavior-change observations and the probability queries over
//! them.
//!
//! Each observation is one (mutated node, mutation value, test) run reduced
//! to a boolean vector: entry `k` is set when node `k`'s trajectory differs
//! from the oracle's. Observations are weighted by the reciprocal of the
//! number of mutation values sampled for the mutated node. Weights are kept
//! as exact integer masses over a common denominator so that probability
//! comparisons do not drift.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::minilang::NodeIdx;
use crate::runtime::RunResult;

/// Fixed-width bit vector indexed by 1-based node index.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Bits {
    len: usize,
    words: Vec<u64>,
}

impl Bits {
    pub fn new(len: usize) -> Bits {
        Bits {
            len,
            words: alloc::vec![0; len.div_ceil(64)],
        }
    }

    pub fn from_fn(len: usize, f: impl Fn(NodeIdx) -> bool) -> Bits {
        let mut b = Bits::new(len);
        for k in 1..=len {
            if f(k) {
                b.set(k, true);
            }
        }
        b
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Value at 1-based position `k`.
    pub fn get(&self, k: NodeIdx) -> bool {
        debug_assert!(k >= 1 && k <= self.len);
        let i = k - 1;
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn set(&mut self, k: NodeIdx, v: bool) {
        let i = k - 1;
        if v {
            self.words[i / 64] |= 1 << (i % 64);
        } else {
            self.words[i / 64] &= !(1 << (i % 64));
        }
    }

    /// The first `len` positions.
    pub fn truncated(&self, len: usize) -> Bits {
        Bits::from_fn(len.min(self.len), |k| self.get(k))
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// `'0'`/`'1'` characters, position 1 first.
    pub fn to_bit_string(&self) -> String {
        (1..=self.len).map(|k| if self.get(k) { '1' } else { '0' }).collect()
    }

    pub fn parse_bit_string(s: &str) -> Option<Bits> {
        let mut b = Bits::new(s.len());
        for (i, c) in s.chars().enumerate() {
            match c {
                '0' => {}
                '1' => b.set(i + 1, true),
                _ => return None,
            }
        }
        Some(b)
    }
}

/// Change vector of a mutant run against the oracle run: entry `k` is set
/// when node `k`'s trajectories differ in length or at any position.
pub fn diff_trajectories(oracle: &RunResult, mutant: &RunResult) -> Bits {
    let n = oracle.trajectories.len();
    debug_assert_eq!(n, mutant.trajectories.len());
    Bits::from_fn(n, |k| oracle.trajectories[k - 1] != mutant.trajectories[k - 1])
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Observation {
    pub mutated: NodeIdx,
    /// Position of the mutation value in the node's sample.
    pub ordinal: u32,
    /// Index into [`ObservationSet::tests`].
    pub test: usize,
    pub changed: Bits,
    /// The observation's weight is `1 / weight_den`.
    pub weight_den: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ObservationError {
    #[error("observation has weight denominator 0")]
    ZeroWeight,
    #[error("observation vector has {got} entries, expected {expected}")]
    Width { expected: usize, got: usize },
    #[error("observation refers to unknown test index {0}")]
    UnknownTest(usize),
    #[error("observation refers to node {0} outside the node range")]
    UnknownNode(NodeIdx),
    #[error("weight denominators have no common multiple below 2^64")]
    WeightOverflow,
    #[error("probability requested over an empty observation set")]
    Empty,
}

/// A probability backed by an exact ratio of integer masses, or the signal
/// that the conditioning event has zero mass.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Prob {
    Ratio { num: u128, den: u128 },
    Undefined,
}

/// Absolute tolerance for probability equality.
pub const PROB_TOLERANCE: f64 = 1e-9;

impl Prob {
    pub fn ratio(num: u128, den: u128) -> Prob {
        if den == 0 {
            Prob::Undefined
        } else {
            Prob::Ratio { num, den }
        }
    }

    pub fn value(self) -> Option<f64> {
        match self {
            Prob::Ratio { num, den } => Some(num as f64 / den as f64),
            Prob::Undefined => None,
        }
    }

    pub fn is_defined(self) -> bool {
        matches!(self, Prob::Ratio { .. })
    }

    /// Equality within [`PROB_TOLERANCE`]; two undefined values are equal.
    pub fn approx_eq(self, other: Prob) -> bool {
        match (self.value(), other.value()) {
            (Some(a), Some(b)) => libm::fabs(a - b) <= PROB_TOLERANCE,
            (None, None) => true,
            _ => false,
        }
    }
}

/// A conjunction of node change states, e.g. `[(3, true), (5, false)]`.
pub type Assignment = [(NodeIdx, bool)];

fn satisfies(bits: &Bits, a: &Assignment) -> bool {
    a.iter().all(|&(k, v)| bits.get(k) == v)
}

fn gcd(a: u128, b: u128) -> u128 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// All observations of a suite, plus per-test oracle coverage.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObservationSet {
    /// Number of columns in each change vector (node count, plus one when an
    /// output column is appended).
    width: usize,
    tests: Vec<String>,
    coverage: Vec<Bits>,
    observations: Vec<Observation>,
    unit: u128,
}

impl ObservationSet {
    /// Builds a set from observations. `coverage[t]` marks the nodes the
    /// oracle run of test `t` executed.
    pub fn new(
        width: usize,
        tests: Vec<String>,
        coverage: Vec<Bits>,
        observations: Vec<Observation>,
    ) -> Result<ObservationSet, ObservationError> {
        let mut unit: u128 = 1;
        for o in &observations {
            if o.weight_den == 0 {
                return Err(ObservationError::ZeroWeight);
            }
            if o.changed.len() != width {
                return Err(ObservationError::Width {
                    expected: width,
                    got: o.changed.len(),
                });
            }
            if o.test >= tests.len() {
                return Err(ObservationError::UnknownTest(o.test));
            }
            if o.mutated == 0 || o.mutated > width {
                return Err(ObservationError::UnknownNode(o.mutated));
            }
            let d = o.weight_den as u128;
            unit = unit / gcd(unit, d) * d;
            if unit > u64::MAX as u128 {
                return Err(ObservationError::WeightOverflow);
            }
        }
        for c in &coverage {
            if c.len() != width {
                return Err(ObservationError::Width {
                    expected: width,
                    got: c.len(),
                });
            }
        }
        Ok(ObservationSet {
            width,
            tests,
            coverage,
            observations,
            unit,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn tests(&self) -> &[String] {
        &self.tests
    }

    pub fn observations(&self) -> &[Observation] {
        &self.observations
    }

    pub fn coverage(&self, test: usize) -> &Bits {
        &self.coverage[test]
    }

    /// Tests whose oracle run executed `node`.
    pub fn covering_tests(&self, node: NodeIdx) -> Vec<usize> {
        (0..self.tests.len())
            .filter(|&t| self.coverage[t].get(node))
            .collect()
    }

    /// Integer mass of an observation: `unit / weight_den`.
    pub fn mass_of(&self, o: &Observation) -> u128 {
        self.unit / o.weight_den as u128
    }

    /// View over every observation.
    pub fn all(&self) -> View {
        self.view(|_| true)
    }

    /// View over the observations generated from test `t`.
    pub fn for_test(&self, t: usize) -> View {
        self.view(|o| o.test == t)
    }

    /// View over the observations generated from tests whose oracle run
    /// executed `node`.
    pub fn covering(&self, node: NodeIdx) -> View {
        self.view(|o| self.coverage[o.test].get(node))
    }

    /// View over the observations of the given tests.
    pub fn for_tests(&self, tests: &[usize]) -> View {
        self.view(|o| tests.contains(&o.test))
    }

    pub fn view(&self, keep: impl Fn(&Observation) -> bool) -> View {
        let mut grouped: BTreeMap<(NodeIdx, &Bits), u128> = BTreeMap::new();
        for o in self.observations.iter().filter(|o| keep(o)) {
            *grouped.entry((o.mutated, &o.changed)).or_insert(0) += self.mass_of(o);
        }
        View {
            width: self.width,
            entries: grouped
                .into_iter()
                .map(|((mutated, bits), mass)| Entry {
                    mutated,
                    bits: bits.clone(),
                    mass,
                })
                .collect(),
        }
    }

    /// The same observations with every weight denominator multiplied by
    /// `factor`; probabilities are unchanged.
    pub fn rescaled(&self, factor: u32) -> Result<ObservationSet, ObservationError> {
        let obs = self
            .observations
            .iter()
            .map(|o| Observation {
                weight_den: o.weight_den * factor,
                ..o.clone()
            })
            .collect();
        ObservationSet::new(self.width, self.tests.clone(), self.coverage.clone(), obs)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Entry {
    mutated: NodeIdx,
    bits: Bits,
    mass: u128,
}

/// A fixed subset of an [`ObservationSet`], compressed to distinct
/// (mutated node, change vector) pairs with summed masses.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct View {
    width: usize,
    entries: Vec<Entry>,
}

impl View {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn included(&self, exclude: Option<NodeIdx>) -> impl Iterator<Item = &Entry> {
        self.entries
            .iter()
            .filter(move |e| Some(e.mutated) != exclude)
    }

    /// Mass of observations satisfying `event`, skipping those that mutate
    /// `exclude`.
    pub fn mass(&self, event: &Assignment, exclude: Option<NodeIdx>) -> u128 {
        self.included(exclude)
            .filter(|e| satisfies(&e.bits, event))
            .map(|e| e.mass)
            .sum()
    }

    /// `P(event | given)` over the observations not mutating `exclude`.
    pub fn prob_given(&self, event: &Assignment, given: &Assignment, exclude: Option<NodeIdx>) -> Prob {
        let mut num = 0;
        let mut den = 0;
        for e in self.included(exclude) {
            if satisfies(&e.bits, given) {
                den += e.mass;
                if satisfies(&e.bits, event) {
                    num += e.mass;
                }
            }
        }
        Prob::ratio(num, den)
    }

    /// Probability that node `i` changed, over every observation.
    pub fn prob_change(&self, i: NodeIdx) -> Result<Prob, ObservationError> {
        if self.entries.is_empty() {
            return Err(ObservationError::Empty);
        }
        Ok(self.prob_given(&[(i, true)], &[], None))
    }

    /// `P(S_j = 1 | condition)` over the observations that do not mutate `j`.
    pub fn cond_prob_change(&self, j: NodeIdx, condition: &Assignment) -> Prob {
        self.prob_given(&[(j, true)], condition, Some(j))
    }

    /// Distinct realizations of `nodes` with positive mass, in ascending
    /// order, with their masses.
    pub fn realizations(&self, nodes: &[NodeIdx], exclude: Option<NodeIdx>) -> Vec<(Vec<bool>, u128)> {
        let mut out: BTreeMap<Vec<bool>, u128> = BTreeMap::new();
        for e in self.included(exclude) {
            let key: Vec<bool> = nodes.iter().map(|&k| e.bits.get(k)).collect();
            *out.entry(key).or_insert(0) += e.mass;
        }
        out.into_iter().filter(|(_, m)| *m > 0).collect()
    }

    /// Nodes whose mutation changed `j` in at least one observation.
    pub fn intervention_parents(&self, j: NodeIdx) -> Vec<NodeIdx> {
        let mut out: Vec<NodeIdx> = self
            .entries
            .iter()
            .filter(|e| e.mutated != j && e.bits.get(j))
            .map(|e| e.mutated)
            .collect();
        out.dedup();
        out
    }
}
