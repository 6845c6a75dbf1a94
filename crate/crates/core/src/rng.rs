//! Seeded random streams.
//!
//! Every random quantity in a sweep comes from a ChaCha8 stream keyed by the
//! run seed and addressed by `(trial, purpose)`. Streams never overlap, so the
//! result of a trial does not depend on which worker runs it or in what order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a stream is used for. The discriminant is part of the stream id.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamPurpose {
    TxToRisPaths,
    RisToRxPaths,
    RandomRis,
    /// Pilot noise for one (i, j) block, by flat pair index.
    PilotNoise(usize),
}

impl StreamPurpose {
    fn tag(self) -> u64 {
        match self {
            StreamPurpose::TxToRisPaths => 1,
            StreamPurpose::RisToRxPaths => 2,
            StreamPurpose::RandomRis => 3,
            StreamPurpose::PilotNoise(pair) => {
                assert!(pair < 0xff00, "pair index {pair} exceeds the stream tag space");
                0x100 + pair as u64
            }
        }
    }
}

/// Independent generator for `(seed, trial, purpose)`.
pub fn substream(seed: u64, trial: u64, purpose: StreamPurpose) -> ChaCha8Rng {
    assert!(trial < (1 << 48), "trial index {trial} exceeds the stream id space");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((trial << 16) | purpose.tag());
    rng
}
