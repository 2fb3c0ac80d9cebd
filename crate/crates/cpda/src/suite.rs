//! Test suite files.
//!
//! One test per line:
//!
//! ```text
//! # comment
//! [group]
//! <id> [pass|fail] : <tokens> [=> <expected values>]
//! ```
//!
//! Tokens are integers, floats, `true`/`false`, quoted strings (`'a'` or
//! `"ab c"`, with `\n`, `\t`, `\\`, `\'`, `\"` escapes) or `@"text"`, which
//! expands to the character code of each character of `text` (matching
//! character literals in programs). A `[group]` line tags the tests that
//! follow it. A verdict requires an expected output.

use std::fmt::Write as _;

use cpda_core::runtime::Verdict;
use cpda_core::{Scalar, TestInput};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("suite line {line}: {message}")]
pub struct SuiteError {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteTest {
    pub input: TestInput,
    pub group: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Suite {
    pub tests: Vec<SuiteTest>,
}

impl Suite {
    pub fn inputs(&self) -> Vec<TestInput> {
        self.tests.iter().map(|t| t.input.clone()).collect()
    }

    /// Tests of one group, in file order.
    pub fn group(&self, name: &str) -> Suite {
        Suite {
            tests: self
                .tests
                .iter()
                .filter(|t| t.group.as_deref() == Some(name))
                .cloned()
                .collect(),
        }
    }

    pub fn groups(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for t in &self.tests {
            if let Some(g) = &t.group {
                if !out.contains(g) {
                    out.push(g.clone());
                }
            }
        }
        out
    }
}

pub fn parse_suite(text: &str) -> Result<Suite, SuiteError> {
    let mut suite = Suite::default();
    let mut group = None;
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let err = |message: String| SuiteError { line, message };
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        if let Some(name) = trimmed.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            group = Some(name.trim().to_string());
            continue;
        }
        let (head, body) = trimmed
            .split_once(':')
            .ok_or_else(|| err("expected '<id> [verdict] : <tokens>'".into()))?;
        let mut words = head.split_whitespace();
        let id = words.next().ok_or_else(|| err("missing test id".into()))?;
        let verdict = match words.next() {
            None => None,
            Some("pass") => Some(Verdict::Pass),
            Some("fail") => Some(Verdict::Fail),
            Some(other) => return Err(err(format!("unknown verdict '{other}'"))),
        };
        if words.next().is_some() {
            return Err(err("unexpected text before ':'".into()));
        }
        if suite.tests.iter().any(|t| t.input.id == id) {
            return Err(err(format!("duplicate test id '{id}'")));
        }
        let values = scan_values(body).map_err(err)?;
        let (tokens, expected) = match values.iter().position(|v| matches!(v, Item::Arrow)) {
            Some(at) => (
                unwrap_scalars(&values[..at]).map_err(err)?,
                Some(unwrap_scalars(&values[at + 1..]).map_err(err)?),
            ),
            None => (unwrap_scalars(&values).map_err(err)?, None),
        };
        if verdict.is_some() && expected.is_none() {
            return Err(err("a verdict needs an expected output".into()));
        }
        let mut input = TestInput::new(id, tokens);
        input.expected = expected;
        input.verdict = verdict;
        suite.tests.push(SuiteTest {
            input,
            group: group.clone(),
        });
    }
    Ok(suite)
}

#[derive(Debug, Clone, PartialEq)]
enum Item {
    Value(Scalar),
    Arrow,
}

fn unwrap_scalars(items: &[Item]) -> Result<Vec<Scalar>, String> {
    items
        .iter()
        .map(|i| match i {
            Item::Value(v) => Ok(v.clone()),
            Item::Arrow => Err("'=>' may appear only once".to_string()),
        })
        .collect()
}

fn scan_values(text: &str) -> Result<Vec<Item>, String> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c == '=' && chars.get(i + 1) == Some(&'>') {
            out.push(Item::Arrow);
            i += 2;
        } else if c == '@' && matches!(chars.get(i + 1), Some('"') | Some('\'')) {
            let (s, next) = quoted(&chars, i + 1)?;
            out.extend(s.chars().map(|ch| Item::Value(Scalar::Int(ch as i64))));
            i = next;
        } else if c == '"' || c == '\'' {
            let (s, next) = quoted(&chars, i)?;
            out.push(Item::Value(Scalar::Str(s)));
            i = next;
        } else {
            let start = i;
            while i < chars.len() && !chars[i].is_whitespace() {
                i += 1;
            }
            let word: String = chars[start..i].iter().collect();
            out.push(Item::Value(bare(&word)?));
        }
    }
    Ok(out)
}

fn quoted(chars: &[char], open: usize) -> Result<(String, usize), String> {
    let q = chars[open];
    let mut s = String::new();
    let mut i = open + 1;
    loop {
        match chars.get(i) {
            None => return Err("unterminated string".into()),
            Some(&c) if c == q => return Ok((s, i + 1)),
            Some('\\') => {
                let e = match chars.get(i + 1) {
                    Some('n') => '\n',
                    Some('t') => '\t',
                    Some('\\') => '\\',
                    Some('\'') => '\'',
                    Some('"') => '"',
                    _ => return Err("invalid escape".into()),
                };
                s.push(e);
                i += 2;
            }
            Some(&c) => {
                s.push(c);
                i += 1;
            }
        }
    }
}

fn bare(word: &str) -> Result<Scalar, String> {
    match word {
        "true" => return Ok(Scalar::Bool(true)),
        "false" => return Ok(Scalar::Bool(false)),
        _ => {}
    }
    if let Ok(v) = word.parse::<i64>() {
        return Ok(Scalar::Int(v));
    }
    if word.contains(['.', 'e', 'E']) || word == "inf" || word == "-inf" {
        if let Ok(v) = word.parse::<f64>() {
            return Ok(Scalar::Float(v));
        }
    }
    Err(format!("cannot read token '{word}' (quote strings)"))
}

/// Text form of a value that [`parse_suite`] reads back identically.
pub fn format_value(v: &Scalar) -> String {
    match v {
        Scalar::Bool(b) => b.to_string(),
        Scalar::Int(i) => i.to_string(),
        Scalar::Float(f) => {
            let s = format!("{f:?}");
            if s.contains(['.', 'e', 'E']) || s.contains("inf") {
                s
            } else {
                format!("{s}.0")
            }
        }
        Scalar::Str(s) => {
            let mut out = String::from("\"");
            for c in s.chars() {
                match c {
                    '\n' => out.push_str("\\n"),
                    '\t' => out.push_str("\\t"),
                    '\\' => out.push_str("\\\\"),
                    '"' => out.push_str("\\\""),
                    c => out.push(c),
                }
            }
            out.push('"');
            out
        }
    }
}

/// Suite text for `tests`, one line each.
pub fn format_suite(suite: &Suite) -> String {
    let mut out = String::new();
    let mut group: Option<&str> = None;
    for t in &suite.tests {
        if t.group.as_deref() != group {
            if let Some(g) = &t.group {
                let _ = writeln!(out, "[{g}]");
            }
            group = t.group.as_deref();
        }
        out.push_str(&t.input.id);
        match t.input.verdict {
            Some(Verdict::Pass) => out.push_str(" pass"),
            Some(Verdict::Fail) => out.push_str(" fail"),
            None => {}
        }
        out.push_str(" :");
        for v in &t.input.tokens {
            let _ = write!(out, " {}", format_value(v));
        }
        if let Some(exp) = &t.input.expected {
            out.push_str(" =>");
            for v in exp {
                let _ = write!(out, " {}", format_value(v));
            }
        }
        out.push('\n');
    }
    out
}
