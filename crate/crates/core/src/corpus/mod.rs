//! Data ingestion and reference models: treebank parsing, embedding
//! loading, a seeded synthetic sentiment grammar, and logistic-regression
//! gold standards.

pub mod embeddings;
pub mod logistic;
pub mod synthetic;
pub mod treebank;

pub use embeddings::{load_embeddings, EmbeddingError, EmbeddingTable};
pub use logistic::{
    train_logistic_bow, train_logistic_ngram, BowLogistic, LogisticConfig, LogisticError,
    NgramLogistic,
};
pub use synthetic::{gen_synthetic_corpus, SyntheticCorpus};
pub use treebank::{parse_ptb_tree, ParseError, TreebankNode};

use std::path::Path;
use thiserror::Error;

/// Words that mark a negation.
pub const NEGATION_WORDS: [&str; 11] = [
    "not", "n't", "lacks", "nobody", "nor", "nothing", "neither", "never", "none", "nowhere",
    "remotely",
];

/// Coarse sentiment derived from the 0..=4 fine labels.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Polarity {
    Neg,
    Neutral,
    Pos,
}

/// Maps a fine-grained label to its coarse polarity: {0,1} negative,
/// 2 neutral, {3,4} positive.
pub fn binarize_label(fine: u8) -> Result<Polarity, CorpusError> {
    match fine {
        0 | 1 => Ok(Polarity::Neg),
        2 => Ok(Polarity::Neutral),
        3 | 4 => Ok(Polarity::Pos),
        other => Err(CorpusError::LabelOutOfRange(other)),
    }
}

/// A review with its binary label (0 negative, 1 positive) and, when the
/// source provides one, its labeled parse tree.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledReview {
    pub tokens: Vec<String>,
    pub label: usize,
    pub tree: Option<TreebankNode>,
}

impl LabeledReview {
    /// Builds a review from a parsed tree. Returns `None` when the root is
    /// neutral (such reviews carry no binary label and are excluded).
    pub fn from_tree(tree: TreebankNode) -> Option<LabeledReview> {
        let label = match binarize_label(tree.label).ok()? {
            Polarity::Neg => 0,
            Polarity::Pos => 1,
            Polarity::Neutral => return None,
        };
        Some(LabeledReview {
            tokens: tree.tokens(),
            label,
            tree: Some(tree),
        })
    }
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("fine label {0} out of range 0..=4")]
    LabelOutOfRange(u8),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Malformed {
        path: String,
        line: usize,
        message: String,
    },
    #[error(transparent)]
    Tree(#[from] ParseError),
}

/// Loads a tree file (one s-expression per line). Neutral-rooted reviews
/// are dropped; blank lines are skipped.
pub fn load_tree_file(path: &Path) -> Result<Vec<LabeledReview>, CorpusError> {
    let text = std::fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut reviews = Vec::new();
    for line in text.lines() {
        if line.trim().is_empty() {
            continue;
        }
        let tree = parse_ptb_tree(line)?;
        if let Some(review) = LabeledReview::from_tree(tree) {
            reviews.push(review);
        }
    }
    Ok(reviews)
}

/// Loads a plain review file: one review per line, `label<TAB>tokens`,
/// label 0 or 1, tokens whitespace-separated. No trees attached.
pub fn load_review_file(path: &Path) -> Result<Vec<LabeledReview>, CorpusError> {
    let text = std::fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut reviews = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let malformed = |message: String| CorpusError::Malformed {
            path: path.display().to_string(),
            line: idx + 1,
            message,
        };
        let (label_str, rest) = line
            .split_once('\t')
            .ok_or_else(|| malformed("expected \"label<TAB>tokens\"".into()))?;
        let label: usize = label_str
            .trim()
            .parse()
            .map_err(|_| malformed(format!("bad label {label_str:?}")))?;
        if label > 1 {
            return Err(malformed(format!("label {label} is not 0 or 1")));
        }
        let tokens: Vec<String> = rest.split_whitespace().map(str::to_string).collect();
        if tokens.is_empty() {
            return Err(malformed("review has no tokens".into()));
        }
        reviews.push(LabeledReview {
            tokens,
            label,
            tree: None,
        });
    }
    Ok(reviews)
}

/// Writes reviews as a tree file when trees are present.
pub fn write_tree_file(path: &Path, reviews: &[LabeledReview]) -> Result<(), CorpusError> {
    let mut out = String::new();
    for review in reviews {
        let tree = review.tree.as_ref().expect("write_tree_file needs trees");
        out.push_str(&tree.serialize());
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })
}
