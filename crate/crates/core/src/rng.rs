//! Named random substreams derived from a single master seed.
//!
//! Every consumer draws from its own ChaCha20 stream: the key comes from the
//! master seed and the 64-bit stream id selects the substream. Two runs that
//! share a master seed therefore see identical info bits, sign bits and ASE
//! noise, whatever else differs between them (mapping scheme, thread count).

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

/// Stream id of the information bits.
pub const STREAM_INFO_BITS: u64 = 1;
/// Stream id of the PAS sign bits.
pub const STREAM_SIGN_BITS: u64 = 2;
/// Base stream id of the per-span amplifier noise; span `s` uses `BASE + s`.
pub const STREAM_ASE_BASE: u64 = 0x1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SeedStreams {
    master: u64,
}

impl SeedStreams {
    pub fn new(master: u64) -> Self {
        Self { master }
    }

    pub fn master(&self) -> u64 {
        self.master
    }

    pub fn stream(&self, id: u64) -> ChaCha20Rng {
        let mut rng = ChaCha20Rng::seed_from_u64(self.master);
        rng.set_stream(id);
        rng
    }

    pub fn info_bits(&self) -> ChaCha20Rng {
        self.stream(STREAM_INFO_BITS)
    }

    pub fn sign_bits(&self) -> ChaCha20Rng {
        self.stream(STREAM_SIGN_BITS)
    }

    pub fn ase(&self, span: usize) -> ChaCha20Rng {
        self.stream(STREAM_ASE_BASE + span as u64)
    }
}
