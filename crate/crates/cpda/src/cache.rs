//! Content-addressed cache of mutant run outcomes.
//!
//! A run is keyed by the SHA-256 of the program text, the test input, the
//! mutation and the seed. The stored outcome is the change vector against
//! the oracle (always including the output column) and the run status.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use cpda_core::observations::Bits;
use cpda_core::runtime::MutationValue;
use cpda_core::{MutationSpec, TestInput};

use crate::suite::format_value;

pub const CACHE_FILE: &str = "runs.cache";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CachedRun {
    pub changed: Bits,
    pub status: String,
}

/// Loaded cache plus entries added since loading.
#[derive(Debug, Default)]
pub struct RunCache {
    path: Option<PathBuf>,
    entries: BTreeMap<String, CachedRun>,
    added: Vec<String>,
}

pub fn program_digest(source: &str) -> String {
    hex::encode(Sha256::digest(source.as_bytes()))
}

pub fn run_key(program_digest: &str, test: &TestInput, spec: &MutationSpec, seed: u64) -> String {
    let mut h = Sha256::new();
    h.update(program_digest.as_bytes());
    h.update([0]);
    h.update(test.id.as_bytes());
    for t in &test.tokens {
        h.update([0]);
        h.update(format_value(t).as_bytes());
    }
    h.update([1]);
    h.update(spec.target.to_le_bytes());
    match &spec.value {
        MutationValue::Negate => h.update(b"negate"),
        MutationValue::Set(v) => h.update(format_value(v).as_bytes()),
    }
    h.update(seed.to_le_bytes());
    hex::encode(h.finalize())
}

impl RunCache {
    /// A cache that stores nothing on disk.
    pub fn in_memory() -> RunCache {
        RunCache::default()
    }

    /// Opens `dir/runs.cache`, creating `dir` if needed. Malformed lines are
    /// ignored.
    pub fn open(dir: &Path) -> std::io::Result<RunCache> {
        fs::create_dir_all(dir)?;
        let path = dir.join(CACHE_FILE);
        let mut entries = BTreeMap::new();
        if let Ok(text) = fs::read_to_string(&path) {
            for line in text.lines() {
                let mut parts = line.split(' ');
                if let (Some(k), Some(b), Some(s), None) = (parts.next(), parts.next(), parts.next(), parts.next()) {
                    if let Some(changed) = Bits::parse_bit_string(b) {
                        entries.insert(
                            k.to_string(),
                            CachedRun {
                                changed,
                                status: s.to_string(),
                            },
                        );
                    }
                }
            }
        }
        Ok(RunCache {
            path: Some(path),
            entries,
            added: Vec::new(),
        })
    }

    pub fn get(&self, key: &str) -> Option<&CachedRun> {
        self.entries.get(key)
    }

    pub fn insert(&mut self, key: String, run: CachedRun) {
        if self.entries.insert(key.clone(), run).is_none() {
            self.added.push(key);
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Appends the entries added since opening.
    pub fn flush(&mut self) -> std::io::Result<()> {
        let Some(path) = &self.path else {
            self.added.clear();
            return Ok(());
        };
        if self.added.is_empty() {
            return Ok(());
        }
        let mut f = fs::OpenOptions::new().create(true).append(true).open(path)?;
        let mut buf = String::new();
        for k in self.added.drain(..) {
            let r = &self.entries[&k];
            buf.push_str(&format!("{} {} {}\n", k, r.changed.to_bit_string(), r.status));
        }
        f.write_all(buf.as_bytes())
    }
}
