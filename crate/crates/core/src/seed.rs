//! Named random streams derived from a single global seed.
//!
//! Each stream is keyed by the global seed plus a path of labels (for example
//! `["segmentation", clip_id]`), hashed with SHA-256 into a ChaCha8 seed. No
//! stream consumes from another, so results do not depend on the order in
//! which workers pick up items.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type StreamRng = ChaCha8Rng;

pub const SNR: &str = "snr";
pub const PAIRING: &str = "pairing";
pub const SEGMENTATION: &str = "segmentation";
pub const RIR: &str = "rir";
pub const BOOTSTRAP: &str = "bootstrap";

/// A key component of a stream path.
pub trait StreamKey {
    fn feed(&self, hasher: &mut Sha256);
}

impl StreamKey for str {
    fn feed(&self, hasher: &mut Sha256) {
        hasher.update(b"s");
        hasher.update((self.len() as u64).to_le_bytes());
        hasher.update(self.as_bytes());
    }
}

impl StreamKey for String {
    fn feed(&self, hasher: &mut Sha256) {
        self.as_str().feed(hasher)
    }
}

impl StreamKey for &str {
    fn feed(&self, hasher: &mut Sha256) {
        (*self).feed(hasher)
    }
}

impl StreamKey for u64 {
    fn feed(&self, hasher: &mut Sha256) {
        hasher.update(b"u");
        hasher.update(self.to_le_bytes());
    }
}

impl StreamKey for usize {
    fn feed(&self, hasher: &mut Sha256) {
        (*self as u64).feed(hasher)
    }
}

/// Derives a 64-bit seed for the stream at `path` under `seed`.
pub fn derive_seed(seed: u64, path: &[&dyn StreamKey]) -> u64 {
    let digest = hash(seed, path);
    u64::from_le_bytes(digest[..8].try_into().expect("digest is 32 bytes"))
}

/// An independent generator for the stream at `path` under `seed`.
pub fn stream(seed: u64, path: &[&dyn StreamKey]) -> StreamRng {
    ChaCha8Rng::from_seed(hash(seed, path))
}

fn hash(seed: u64, path: &[&dyn StreamKey]) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(b"biodeno-stream-v1");
    h.update(seed.to_le_bytes());
    for key in path {
        key.feed(&mut h);
    }
    h.finalize().into()
}
