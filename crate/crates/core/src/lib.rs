//! Causal program dependence analysis for a small imperative language.
//!
//! The crate is `no_std` (it needs `alloc`). Every stage of the analysis is a
//! pure function over in-memory values:
//!
//! * [`minilang`] parses source text and indexes the instrumentable nodes.
//! * [`runtime`] interprets programs while recording node trajectories, and
//!   applies single-node value interventions.
//! * [`observations`] turns oracle and mutant runs into weighted change
//!   vectors and answers probability queries over them.
//! * [`discovery`] learns the causal structure (intervention parents, safe
//!   parents, Markovian parents, cycle elimination).
//! * [`effects`] estimates interventional quantities over a structure.
//! * [`cpdm`] assembles, filters and diffs weighted dependence models.
//! * [`cdfl`] ranks fault suspects by causal dependence, with an Ochiai
//!   baseline.
//! * [`collect`] chains oracle runs, sampling and mutant runs into an
//!   observation set.
//!
//! File formats, caching, parallel execution and the command line live in the
//! companion `cpda` crate.

#![cfg_attr(not(any(test, feature = "std")), no_std)]

extern crate alloc;

pub mod cdfl;
pub mod collect;
pub mod cpdm;
pub mod discovery;
pub mod effects;
pub mod graph;
pub mod minilang;
pub mod observations;
pub mod runtime;
pub mod value;

pub use minilang::{index_nodes, parse, Node, NodeIdx, NodeKind, Program};
pub use observations::{Observation, ObservationSet, Prob};
pub use runtime::{run_mutant, run_oracle, MutationSpec, MutationValue, RunResult, RunStatus, TestInput};
pub use value::{Domain, Scalar};
