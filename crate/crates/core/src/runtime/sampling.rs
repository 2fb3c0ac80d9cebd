use alloc::string::String;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{MutationSpec, MutationValue};
use crate::minilang::NodeIdx;
use crate::value::{Domain, Scalar};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SampleError {
    #[error("number of mutations per node must be at least 1")]
    ZeroCount,
    #[error("node {0} has no oracle values to fit a sampling distribution")]
    NoOracleValues(NodeIdx),
}

const PURPOSE_VALUE: u64 = 1;
const PURPOSE_LENGTH: u64 = 2;
const PURPOSE_LETTER: u64 = 3;

const MAX_STRING_LEN: i64 = 64;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of the independent random stream for one (node, purpose) pair, so
/// samples of one node never depend on how many other nodes exist.
pub fn stream_seed(seed: u64, node: NodeIdx, purpose: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(seed) ^ node as u64) ^ purpose)
}

fn stream(seed: u64, node: NodeIdx, purpose: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(stream_seed(seed, node, purpose))
}

/// Mean and population standard deviation, with a zero deviation replaced
/// by 1.
fn fit(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let sd = libm::sqrt(var);
    let sd = if sd > 0.0 && sd.is_finite() { sd } else { 1.0 };
    (mean, sd)
}

fn round_to_i64(x: f64) -> i64 {
    let r = libm::round(x);
    if r >= i64::MAX as f64 {
        i64::MAX
    } else if r <= i64::MIN as f64 {
        i64::MIN
    } else {
        r as i64
    }
}

/// Draws up to `n` mutation values for `node`.
///
/// Boolean nodes get a single negation. Bounded integers get up to `n`
/// distinct uniform draws. Other domains draw `n` values from a Gaussian
/// fitted to the node's pooled oracle values (string nodes: a Gaussian over
/// lengths, letters uniform in `a..=z`). The first `k` draws do not depend on
/// `n`, so a smaller sample is always a prefix of a larger one.
pub fn sample_mutations(
    node: NodeIdx,
    domain: Domain,
    pooled: &[Scalar],
    n: usize,
    seed: u64,
) -> Result<Vec<MutationSpec>, SampleError> {
    if n == 0 {
        return Err(SampleError::ZeroCount);
    }
    let spec = |v: Scalar| MutationSpec {
        target: node,
        value: MutationValue::Set(v),
    };
    let mut rng = stream(seed, node, PURPOSE_VALUE);
    match domain {
        Domain::Bool => Ok(alloc::vec![MutationSpec {
            target: node,
            value: MutationValue::Negate,
        }]),
        Domain::BoundedInt { lo, hi } => {
            let size = (hi as i128 - lo as i128 + 1) as u128;
            let want = (n as u128).min(size) as usize;
            let mut drawn: Vec<i64> = Vec::with_capacity(want);
            while drawn.len() < want {
                let v = rng.random_range(lo..=hi);
                if !drawn.contains(&v) {
                    drawn.push(v);
                }
            }
            Ok(drawn.into_iter().map(|v| spec(Scalar::Int(v))).collect())
        }
        Domain::Int | Domain::Float => {
            let numeric = pooled.iter().filter_map(Scalar::as_f64);
            if numeric.clone().next().is_none() {
                return Err(SampleError::NoOracleValues(node));
            }
            let (mean, sd) = fit(numeric);
            let normal = Normal::new(mean, sd).expect("finite positive deviation");
            Ok((0..n)
                .map(|_| {
                    let x = normal.sample(&mut rng);
                    spec(if domain == Domain::Int {
                        Scalar::Int(round_to_i64(x))
                    } else {
                        Scalar::Float(x)
                    })
                })
                .collect())
        }
        Domain::Str => {
            let lengths = pooled.iter().filter_map(|v| match v {
                Scalar::Str(s) => Some(s.chars().count() as f64),
                _ => None,
            });
            if lengths.clone().next().is_none() {
                return Err(SampleError::NoOracleValues(node));
            }
            let (mean, sd) = fit(lengths);
            let normal = Normal::new(mean, sd).expect("finite positive deviation");
            let mut len_rng = stream(seed, node, PURPOSE_LENGTH);
            let mut letter_rng = stream(seed, node, PURPOSE_LETTER);
            Ok((0..n)
                .map(|_| {
                    let len = round_to_i64(normal.sample(&mut len_rng)).clamp(1, MAX_STRING_LEN);
                    let s: String = (0..len)
                        .map(|_| letter_rng.random_range(b'a'..=b'z') as char)
                        .collect();
                    spec(Scalar::Str(s))
                })
                .collect())
        }
    }
}
