//! Deterministic random substreams.
//!
//! Every unit of work (a trial, or a fixed-size chunk of samples) owns a
//! generator seeded from a SHA-256 digest of `(master seed, label, index)`.
//! Results therefore depend only on the work index, never on how rayon
//! schedules the chunks.

use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

/// Generator used inside a single substream.
pub type SubRng = Xoshiro256PlusPlus;

/// Number of samples drawn from one substream by the chunked drivers.
pub const CHUNK_SIZE: usize = 1 << 15;

/// A family of independent substreams identified by a master seed and a label.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Streams {
    seed: u64,
    label: String,
}

impl Streams {
    pub fn new(seed: u64, label: impl Into<String>) -> Self {
        Streams {
            seed,
            label: label.into(),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Derived family, e.g. one per experiment arm.
    pub fn child(&self, name: &str) -> Streams {
        Streams {
            seed: self.seed,
            label: format!("{}/{}", self.label, name),
        }
    }

    /// Generator for substream `index`.
    pub fn stream(&self, index: u64) -> SubRng {
        let mut hasher = Sha256::new();
        hasher.update(self.seed.to_le_bytes());
        hasher.update((self.label.len() as u64).to_le_bytes());
        hasher.update(self.label.as_bytes());
        hasher.update(index.to_le_bytes());
        let digest = hasher.finalize();
        let mut seed = [0u8; 32];
        seed.copy_from_slice(&digest);
        SubRng::from_seed(seed)
    }
}

/// Splits `total` draws into fixed chunks, runs `work(rng, len)` on each chunk
/// (possibly in parallel) and returns the per-chunk results in chunk order.
pub fn map_chunks<T, F>(streams: &Streams, total: usize, work: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut SubRng, usize) -> T + Sync,
{
    let chunks = total.div_ceil(CHUNK_SIZE);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let start = c * CHUNK_SIZE;
            let len = CHUNK_SIZE.min(total - start);
            let mut rng = streams.stream(c as u64);
            work(&mut rng, len)
        })
        .collect()
}

/// Folds fixed-size chunks into an accumulator and merges the partial
/// accumulators.
///
/// `merge` must be exactly associative and commutative (integer counts,
/// minima, maxima) for the result to be independent of scheduling.
pub fn fold_chunks<A, I, F, M>(streams: &Streams, total: usize, identity: I, fold: F, merge: M) -> A
where
    A: Send,
    I: Fn() -> A + Sync + Send,
    F: Fn(&mut A, &mut SubRng, usize) + Sync + Send,
    M: Fn(A, A) -> A + Sync + Send,
{
    let chunks = total.div_ceil(CHUNK_SIZE);
    (0..chunks)
        .into_par_iter()
        .fold(&identity, |mut acc, c| {
            let start = c * CHUNK_SIZE;
            let len = CHUNK_SIZE.min(total - start);
            let mut rng = streams.stream(c as u64);
            fold(&mut acc, &mut rng, len);
            acc
        })
        .reduce(&identity, &merge)
}

/// Runs `work(rng, index)` once per trial with the trial's own substream,
/// returning results in trial order.
pub fn map_trials<T, F>(streams: &Streams, trials: usize, work: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut SubRng, usize) -> T + Sync,
{
    (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = streams.stream(i as u64);
            work(&mut rng, i)
        })
        .collect()
}

/// [`map_trials`] with per-worker scratch state built by `init`.
///
/// The state must not carry information between trials (plans, buffers).
pub fn map_trials_with<S, T, I, F>(streams: &Streams, trials: usize, init: I, work: F) -> Vec<T>
where
    T: Send,
    I: Fn() -> S + Sync + Send,
    F: Fn(&mut S, &mut SubRng, usize) -> T + Sync + Send,
{
    (0..trials)
        .into_par_iter()
        .map_init(init, |state, i| {
            let mut rng = streams.stream(i as u64);
            work(state, &mut rng, i)
        })
        .collect()
}
