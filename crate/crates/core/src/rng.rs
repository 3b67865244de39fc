//! Counter-based random substreams.
//!
//! Every Monte Carlo draw comes from a ChaCha8 stream keyed by the run seed
//! and a domain tag, with the stream id set to the trial (or block) index.
//! The numbers a trial sees depend only on `(seed, domain, index)`, so trials
//! can run in any order or on any number of threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Domain tags separating independent uses of one seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    /// Superdense-coding trials for the message with this index.
    SdcMessage(u32),
    /// Discrimination blocks for (protocol, hypothesis).
    QiBlocks { protocol: u8, hypothesis: u8 },
}

impl Domain {
    fn tag(self) -> u64 {
        match self {
            Domain::SdcMessage(m) => (1u64 << 56) | u64::from(m),
            Domain::QiBlocks {
                protocol,
                hypothesis,
            } => (2u64 << 56) | (u64::from(protocol) << 8) | u64::from(hypothesis),
        }
    }
}

/// The generator for item `index` of `domain` under `seed`.
pub fn substream(seed: u64, domain: Domain, index: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&domain.tag().to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}
