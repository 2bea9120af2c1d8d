//! Kernel evaluation, Gram matrices, jittered symmetric solves and
//! inducing-point initialization.

mod factor;
mod kernel;
pub(crate) mod kmeans;

pub use factor::{floor_eigenvalues, psd_solve, symmetrize, PsdFactor, JITTER_ESCALATIONS};
pub use kernel::{gram, se_kernel, GramMatrix, GramRole, KernelConfig};
pub use kmeans::{kmeans_inducing, lloyd_kmeans, KMEANS_MAX_ITERS};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent deterministic random stream for a (seed, purpose) pair.
pub fn rng_stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
