//! Seeded loss streams. Row `t` is the loss vector of round `t + 1`.

use super::rng::StreamRng;
use crate::error::{Error, Result};

pub type LossStream = Vec<Vec<f64>>;

/// Independent Bernoulli losses with the given per-expert means.
pub fn gen_stochastic(k: usize, means: &[f64], seed: u64, t: u64) -> Result<LossStream> {
    if means.len() != k {
        return Err(Error::DimensionMismatch { expected: k, got: means.len() });
    }
    if means.iter().any(|m| !(0.0..=1.0).contains(m)) {
        return Err(Error::InvalidArgument("means must lie in [0, 1]".into()));
    }
    let mut rng = StreamRng::new(seed);
    Ok((0..t)
        .map(|_| {
            means
                .iter()
                .map(|&m| if rng.bernoulli(m) { 1.0 } else { 0.0 })
                .collect()
        })
        .collect())
}

/// Expert `s mod K` has loss 0 during segment `s`, every other expert loss 1.
/// Each entry is flipped independently with probability `noise`.
pub fn gen_adversarial_shift(
    k: usize,
    segment_length: u64,
    noise: f64,
    seed: u64,
    t: u64,
) -> Result<LossStream> {
    if k == 0 {
        return Err(Error::InvalidArgument("need at least one expert".into()));
    }
    if segment_length == 0 {
        return Err(Error::InvalidArgument("segment length must be positive".into()));
    }
    if !(0.0..=1.0).contains(&noise) {
        return Err(Error::InvalidArgument("noise must lie in [0, 1]".into()));
    }
    let mut rng = StreamRng::new(seed);
    Ok((0..t)
        .map(|round| {
            let best = ((round / segment_length) % k as u64) as usize;
            (0..k)
                .map(|i| {
                    let base = if i == best { 0.0 } else { 1.0 };
                    if noise > 0.0 && rng.bernoulli(noise) {
                        1.0 - base
                    } else {
                        base
                    }
                })
                .collect()
        })
        .collect())
}

/// Losses uniform on `[0, 1)`.
pub fn gen_uniform(k: usize, seed: u64, t: u64) -> LossStream {
    let mut rng = StreamRng::new(seed);
    (0..t).map(|_| (0..k).map(|_| rng.uniform()).collect()).collect()
}

/// Losses uniform on `[−1, 1)`, for combinatorial games.
pub fn gen_signed_uniform(k: usize, seed: u64, t: u64) -> LossStream {
    let mut rng = StreamRng::new(seed);
    (0..t)
        .map(|_| (0..k).map(|_| 2.0 * rng.uniform() - 1.0).collect())
        .collect()
}
