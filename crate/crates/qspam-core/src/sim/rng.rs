//! Counter-based random streams: every (circuit, qubit) pair owns a ChaCha
//! stream and every shot a fixed word position inside it, so sampled counts
//! are identical for any thread count or shot schedule.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn seed_bytes(seed: u64) -> [u8; 32] {
    let mut out = [0u8; 32];
    let mut s = seed;
    for chunk in out.chunks_exact_mut(8) {
        s = splitmix64(s);
        chunk.copy_from_slice(&s.to_le_bytes());
    }
    out
}

/// Distinct stream index for a (circuit kind, lane) pair.
pub fn stream_id(kind: u64, lane: u64) -> u64 {
    splitmix64(kind.wrapping_mul(0x2545_F491_4F6C_DD1D).wrapping_add(lane))
}

/// One logical random stream, cheaply reset to any shot index.
#[derive(Clone)]
pub struct ShotStream {
    base: ChaCha8Rng,
}

/// Words of ChaCha state consumed per shot; two draws fit comfortably in
/// one block.
const WORDS_PER_SHOT: u128 = 16;

impl ShotStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut base = ChaCha8Rng::from_seed(seed_bytes(seed));
        base.set_stream(stream);
        Self { base }
    }

    /// RNG positioned at the start of the given shot's words.
    pub fn at_shot(&self, shot: u64) -> ChaCha8Rng {
        let mut rng = self.base.clone();
        rng.set_word_pos(u128::from(shot) * WORDS_PER_SHOT);
        rng
    }
}
