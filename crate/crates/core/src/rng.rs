//! Seed derivation.
//!
//! Every replica owns a ChaCha8 generator keyed by `replica_seed(master, index)`.
//! Within a replica, independent substreams are selected with the ChaCha stream
//! id (see [`Stream`]), so sampling the initial ages never shifts the thinning
//! randomness and vice versa.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Purpose-specific substreams of one replica.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    InitialAges = 0,
    InitialActivity = 1,
    Delays = 2,
    Thinning = 3,
    MeanFieldSample = 4,
}

/// Human readable description of the scheme, echoed into run manifests.
pub const SCHEME: &str = "ChaCha8Rng::seed_from_u64(splitmix64(master ^ splitmix64(index + 1))), \
stream ids: 0 initial ages, 1 initial activity, 2 delays, 3 thinning, 4 mean-field sample";

pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of replica `index` under `master`. Distinct indices give unrelated seeds.
pub fn replica_seed(master: u64, index: u64) -> u64 {
    splitmix64(master ^ splitmix64(index.wrapping_add(1)))
}

pub fn stream(seed: u64, which: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(which as u64);
    rng
}
