//! Named, counter-addressed random streams.
//!
//! Every consumer of randomness asks for a stream by `(seed, name, index)`.
//! The stream is a ChaCha8 generator seeded from `seed` and positioned on a
//! stream id derived from the name and index, so a run can be resumed by
//! storing counters instead of generator internals.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Identifies the generator and the stream-id derivation. Stored with every
/// state file; changing either breaks replay of old runs.
pub const RNG_ALGORITHM: &str = "chacha8/fnv1a-stream/v1";

pub type StreamRng = ChaCha8Rng;

fn fnv1a(bytes: impl IntoIterator<Item = u8>, mut hash: u64) -> u64 {
    for b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

pub fn stream_id(name: &str, index: u64) -> u64 {
    let h = fnv1a(name.bytes(), 0xcbf2_9ce4_8422_2325);
    fnv1a(index.to_le_bytes(), h)
}

pub fn substream(seed: u64, name: &str, index: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id(name, index));
    rng
}
