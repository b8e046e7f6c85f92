use serde::{Deserialize, Serialize};

use crate::linalg::normalized;
use crate::text::tokenize_with;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// Hashed bag-of-words text features, L2-normalized.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TextFeaturizer {
    pub hash_dim: usize,
    pub hash_seed: u64,
    pub lowercase: bool,
}

impl Default for TextFeaturizer {
    fn default() -> Self {
        Self {
            hash_dim: 1024,
            hash_seed: 0x5eed,
            lowercase: true,
        }
    }
}

impl TextFeaturizer {
    pub fn new(hash_dim: usize, hash_seed: u64) -> Self {
        Self {
            hash_dim,
            hash_seed,
            ..Self::default()
        }
    }

    /// Seeded FNV-1a style multiplicative hash of a token into `[0, hash_dim)`.
    pub fn bucket(&self, token: &str) -> usize {
        let mut h = FNV_OFFSET ^ self.hash_seed.wrapping_mul(FNV_PRIME);
        for &b in token.as_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(FNV_PRIME);
        }
        (h % self.hash_dim as u64) as usize
    }

    /// Count vector over hash buckets, scaled to unit length. Text without
    /// any token maps to the zero vector.
    pub fn featurize(&self, text: &str) -> Vec<f64> {
        let mut counts = vec![0.0; self.hash_dim];
        for tok in tokenize_with(text, self.lowercase) {
            counts[self.bucket(&tok)] += 1.0;
        }
        normalized(&counts)
    }
}
