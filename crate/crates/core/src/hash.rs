//! Stateless hashing: edge colors for infinite tilings and per-tile seeds.

use sha2::{Digest, Sha256};

use crate::lattice::{ColorCount, EdgeColor};

/// Which family of lattice edges a hashed color belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EdgeKind {
    Horizontal,
    Vertical,
    /// Lattice vertices, for Corner Wang tilings.
    Corner,
}

impl EdgeKind {
    fn tag(self) -> u64 {
        match self {
            EdgeKind::Horizontal => 0x68,
            EdgeKind::Vertical => 0x76,
            EdgeKind::Corner => 0x63,
        }
    }
}

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Hashes a sequence of words; each word passes through the full mixer so
/// that neighbouring coordinates decorrelate.
pub fn hash_words(words: &[u64]) -> u64 {
    let mut h = 0x9e37_79b9_7f4a_7c15u64;
    for &w in words {
        h = mix64(h ^ mix64(w.wrapping_add(0x9e37_79b9_7f4a_7c15)));
    }
    h
}

/// Color of one edge of an infinite tiling. The result depends only on the
/// arguments, so any window of the plane can be evaluated on its own.
///
/// Reduction to `[0, C)` rejects the top partial block of the 64-bit range
/// so every color is exactly equally likely under a uniform mixer.
pub fn hash_edge_coloring(seed: u64, kind: EdgeKind, x: i64, y: i64, colors: ColorCount) -> EdgeColor {
    let c = colors.get() as u64;
    if c == 1 {
        return 0;
    }
    let zone = u64::MAX - (u64::MAX % c + 1) % c;
    let mut attempt = 0u64;
    loop {
        let v = hash_words(&[seed, kind.tag(), x as u64, y as u64, attempt]);
        if v <= zone {
            return (v % c) as EdgeColor;
        }
        attempt += 1;
    }
}

/// Stable 64-bit seed derived from a master seed and a list of labels.
pub fn derive_seed(master: u64, labels: &[&str]) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(master.to_le_bytes());
    for label in labels {
        hasher.update((label.len() as u64).to_le_bytes());
        hasher.update(label.as_bytes());
    }
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().unwrap())
}
