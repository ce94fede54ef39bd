//! Loading pre-trained word vectors from whitespace-separated text files,
//! plus the deterministic out-of-vocabulary policy.

use crate::numerics::Vector;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};
use std::collections::HashMap;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: expected {expected} values, got {got}")]
    RaggedLine {
        path: String,
        line: usize,
        expected: usize,
        got: usize,
    },
    #[error("{path}:{line}: bad float {value:?}")]
    BadFloat {
        path: String,
        line: usize,
        value: String,
    },
}

/// token -> vector map with a fixed dimension.
#[derive(Clone, Debug)]
pub struct EmbeddingTable {
    pub dim: usize,
    map: HashMap<String, Vector<f64>>,
}

impl EmbeddingTable {
    pub fn new(dim: usize) -> Self {
        EmbeddingTable {
            dim,
            map: HashMap::new(),
        }
    }

    pub fn insert(&mut self, token: String, vector: Vector<f64>) {
        assert_eq!(vector.len(), self.dim);
        self.map.insert(token, vector);
    }

    pub fn get(&self, token: &str) -> Option<&Vector<f64>> {
        self.map.get(token)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// Vector for a token, falling back to the seeded Gaussian
    /// out-of-vocabulary vector.
    pub fn get_or_oov(&self, token: &str, oov_seed: u64) -> Vector<f64> {
        self.get(token)
            .cloned()
            .unwrap_or_else(|| oov_vector(self.dim, oov_seed, token))
    }
}

/// Deterministic out-of-vocabulary vector: Gaussian with sigma 0.1, seeded
/// from the run seed and the token so every occurrence agrees within a run.
pub fn oov_vector(dim: usize, seed: u64, token: &str) -> Vector<f64> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed ^ fnv1a(token.as_bytes()));
    let normal = Normal::new(0.0, 0.1).unwrap();
    (0..dim).map(|_| normal.sample(&mut rng)).collect()
}

/// FNV-1a over bytes; stable across runs and platforms, unlike the std
/// hasher.
fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// Loads `token v1 .. v_dim` lines. Duplicate tokens keep the last entry
/// with a warning; a wrong value count is an error with its line number.
pub fn load_embeddings(path: &Path, dim: usize) -> Result<EmbeddingTable, EmbeddingError> {
    let text = std::fs::read_to_string(path).map_err(|source| EmbeddingError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut table = EmbeddingTable::new(dim);
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split_whitespace();
        let token = fields.next().expect("non-empty line has a first field");
        let values: Vec<&str> = fields.collect();
        if values.len() != dim {
            return Err(EmbeddingError::RaggedLine {
                path: path.display().to_string(),
                line: idx + 1,
                expected: dim,
                got: values.len(),
            });
        }
        let mut vector = Vec::with_capacity(dim);
        for value in values {
            vector.push(
                value
                    .parse::<f64>()
                    .map_err(|_| EmbeddingError::BadFloat {
                        path: path.display().to_string(),
                        line: idx + 1,
                        value: value.to_string(),
                    })?,
            );
        }
        if table.get(token).is_some() {
            log::warn!("duplicate embedding for {token:?}; keeping the last entry");
        }
        table.insert(token.to_string(), Vector::new(vector));
    }
    Ok(table)
}
