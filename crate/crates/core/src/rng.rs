//! Deterministic per-replicate random streams.
//!
//! Every replicate draws from its own ChaCha8 stream selected by the
//! replicate index, keyed by the master seed. Results therefore do not
//! depend on how replicates are scheduled across workers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type ReplicateRng = ChaCha8Rng;

/// Random stream for replicate `index` under `master_seed`.
pub fn replicate_rng(master_seed: u64, index: u64) -> ReplicateRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}

/// Runs `f` on a pool with `workers` threads, or on the global pool when `None`.
pub(crate) fn with_workers<R: Send>(workers: Option<usize>, f: impl FnOnce() -> R + Send) -> R {
    match workers {
        Some(k) if k > 0 => match rayon::ThreadPoolBuilder::new().num_threads(k).build() {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        },
        _ => f(),
    }
}
