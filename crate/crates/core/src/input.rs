//! Deterministic input generation and rank resolution.
//!
//! All randomness flows through ChaCha12 (`rand_chacha` 0.3). Per-trial
//! streams are derived as `seed ^ trial_index`, so parallel and serial runs
//! of a trial batch draw identical numbers.

use crate::error::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

/// The generator used everywhere in this crate.
pub type SelectRng = ChaCha12Rng;

pub fn rng_from_seed(seed: u64) -> SelectRng {
    SelectRng::seed_from_u64(seed)
}

/// Independent stream for one trial of a batch.
pub fn trial_rng(seed: u64, trial: u64) -> SelectRng {
    SelectRng::seed_from_u64(seed ^ trial)
}

/// A uniformly random permutation of `1..=n`, by Fisher-Yates.
///
/// Distinct integer keys realize the random-permutation input model; the
/// same `(n, seed)` always yields the same array.
pub fn make_input(n: usize, seed: u64) -> Result<Vec<u64>> {
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    let mut rng = rng_from_seed(seed);
    let mut keys: Vec<u64> = (1..=n as u64).collect();
    shuffle(&mut keys, &mut rng);
    Ok(keys)
}

/// Fisher-Yates shuffle.
pub fn shuffle<T>(items: &mut [T], rng: &mut SelectRng) {
    for i in (1..items.len()).rev() {
        let j = rng.gen_range(0..=i);
        items.swap(i, j);
    }
}

/// How the sought rank is specified.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RankSpec {
    /// A fixed 1-based rank `m`.
    Fixed(usize),
    /// The `ceil(alpha * n)`-th smallest for a quantile `alpha` in (0, 1).
    FixedQuantile(f64),
    /// A fresh uniform rank in `1..=n` per run.
    RandomRank,
}

/// Resolve a [`RankSpec`] to a concrete rank in `1..=n`.
pub fn resolve_rank(spec: &RankSpec, n: usize, rng: &mut SelectRng) -> Result<usize> {
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    match *spec {
        RankSpec::Fixed(m) => {
            if m == 0 || m > n {
                Err(Error::RankOutOfRange { rank: m, n })
            } else {
                Ok(m)
            }
        }
        RankSpec::FixedQuantile(alpha) => {
            if !(alpha > 0.0 && alpha < 1.0) {
                return Err(Error::QuantileOutOfRange(alpha));
            }
            let m = (alpha * n as f64).ceil() as usize;
            Ok(m.clamp(1, n))
        }
        RankSpec::RandomRank => Ok(rng.gen_range(1..=n)),
    }
}
