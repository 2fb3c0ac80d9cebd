//! Files, caching, parallel execution and the command line around
//! `cpda-core`.

pub mod cache;
pub mod corpus;
pub mod formats;
pub mod pipeline;
pub mod report;
pub mod suite;
