use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use super::normal::quantile_unchecked;
use crate::error::{Error, Result};

/// A reproducible random stream keyed by `(master_seed, stream_index)`.
///
/// Backed by ChaCha8, a counter-based generator: the key is derived from the
/// master seed and the stream index selects one of 2^64 non-overlapping
/// streams, so replications can be handed to workers in any order and still
/// see the same numbers.
#[derive(Clone, Debug)]
pub struct RandomStream {
    master_seed: u64,
    stream_index: u64,
    rng: ChaCha8Rng,
}

impl RandomStream {
    pub fn new(master_seed: u64, stream_index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
        rng.set_stream(stream_index);
        Self {
            master_seed,
            stream_index,
            rng,
        }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn stream_index(&self) -> u64 {
        self.stream_index
    }

    /// Number of 32-bit words consumed so far.
    pub fn position(&self) -> u128 {
        self.rng.get_word_pos()
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform draw on the open interval (0, 1) with 53 bits of resolution.
    pub fn next_uniform(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }
}

/// Maps a uniform draw in (0, 1) to `N(mu, sigma²)` by the inverse CDF.
pub fn normal_from_uniform(u: f64, mu: f64, sigma: f64) -> Result<f64> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::domain(format!("sigma must be positive, got {sigma}")));
    }
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::domain(format!("uniform draw must lie in (0,1), got {u}")));
    }
    Ok(mu + sigma * quantile_unchecked(u))
}

/// One draw from `N(mu, sigma²)`; consumes exactly one 64-bit word.
pub fn sample_normal(stream: &mut RandomStream, mu: f64, sigma: f64) -> Result<f64> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::domain(format!("sigma must be positive, got {sigma}")));
    }
    Ok(mu + sigma * quantile_unchecked(stream.next_uniform()))
}
