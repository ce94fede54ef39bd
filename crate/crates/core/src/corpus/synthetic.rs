//! Seeded synthetic sentiment corpus with phrase-labeled binary parse
//! trees.
//!
//! The grammar plants the structures the evaluation protocols look for:
//! polar unigrams in plain clauses, negators that flip the polarity of the
//! phrase they prefix, "A but B" contrasts whose label follows the second
//! clause, and reversal idioms ("used to be my favorite", "far from
//! terrible") whose strongly polar subphrase disagrees with the whole
//! phrase. Every node carries a fine 0..=4 label assigned by the generative
//! rules; roots that come out neutral are dropped.

use super::treebank::{NodeKind, TreebankNode};
use super::LabeledReview;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

pub const POS_WORDS: [&str; 12] = [
    "good",
    "great",
    "fun",
    "wonderful",
    "delightful",
    "charming",
    "engaging",
    "entertaining",
    "satisfying",
    "admirable",
    "superb",
    "intelligent",
];

pub const NEG_WORDS: [&str; 12] = [
    "bad",
    "terrible",
    "awful",
    "boring",
    "dull",
    "dreary",
    "tired",
    "bland",
    "horrible",
    "dreadful",
    "tedious",
    "shallow",
];

const SUBJECTS: [&[&str]; 7] = [
    &["the", "movie"],
    &["the", "film"],
    &["this", "story"],
    &["the", "plot"],
    &["the", "acting"],
    &["the", "script"],
    &["it"],
];

const COPULAS: [&str; 4] = ["was", "is", "felt", "seemed"];
const INTENSIFIERS: [&str; 3] = ["very", "really", "quite"];

/// Single-token negators usable in the copula slot. All the extraction
/// vocabulary shows up here so every listed word occurs in the corpus.
const NEGATOR_TOKENS: [&str; 10] = [
    "not", "n't", "never", "nothing", "lacks", "nobody", "nor", "neither", "none", "nowhere",
];

/// Train/valid/test splits generated from one seed.
#[derive(Clone, Debug)]
pub struct SyntheticCorpus {
    pub train: Vec<LabeledReview>,
    pub valid: Vec<LabeledReview>,
    pub test: Vec<LabeledReview>,
    /// Reviews dropped because their root came out neutral.
    pub dropped_neutral: usize,
}

impl SyntheticCorpus {
    pub fn all(&self) -> impl Iterator<Item = &LabeledReview> {
        self.train.iter().chain(&self.valid).chain(&self.test)
    }
}

fn leaf(label: u8, token: &str) -> TreebankNode {
    TreebankNode {
        label,
        start: 0,
        end: 0,
        kind: NodeKind::Leaf(token.to_string()),
    }
}

fn branch(label: u8, left: TreebankNode, right: TreebankNode) -> TreebankNode {
    TreebankNode {
        label,
        start: 0,
        end: 0,
        kind: NodeKind::Internal(Box::new(left), Box::new(right)),
    }
}

/// Right-branching spine of neutral tokens.
fn neutral_spine(tokens: &[&str]) -> TreebankNode {
    if tokens.len() == 1 {
        leaf(2, tokens[0])
    } else {
        branch(2, leaf(2, tokens[0]), neutral_spine(&tokens[1..]))
    }
}

fn flip(label: u8) -> u8 {
    match label {
        0 => 4,
        1 => 3,
        3 => 1,
        4 => 0,
        other => other,
    }
}

fn intensify(label: u8) -> u8 {
    match label {
        3 => 4,
        1 => 0,
        other => other,
    }
}

/// Assigns 1-based leaf positions and recomputes internal spans.
fn renumber(node: &mut TreebankNode, next: &mut usize) {
    match &mut node.kind {
        NodeKind::Leaf(_) => {
            node.start = *next;
            node.end = *next;
            *next += 1;
        }
        NodeKind::Internal(left, right) => {
            renumber(left, next);
            renumber(right, next);
            node.start = left.start;
            node.end = right.end;
        }
    }
}

struct Generator {
    rng: ChaCha20Rng,
}

impl Generator {
    fn polar_word(&mut self, positive: bool) -> TreebankNode {
        if positive {
            leaf(3, POS_WORDS.choose(&mut self.rng).unwrap())
        } else {
            leaf(1, NEG_WORDS.choose(&mut self.rng).unwrap())
        }
    }

    /// A sentiment phrase: a polar word, optionally intensified.
    fn sentiment_phrase(&mut self, positive: bool) -> TreebankNode {
        let word = self.polar_word(positive);
        if self.rng.random_bool(0.35) {
            let label = intensify(word.label);
            branch(
                label,
                leaf(2, INTENSIFIERS.choose(&mut self.rng).unwrap()),
                word,
            )
        } else {
            word
        }
    }

    fn subject(&mut self) -> TreebankNode {
        neutral_spine(SUBJECTS.choose(&mut self.rng).unwrap())
    }

    fn copula(&mut self) -> TreebankNode {
        leaf(2, COPULAS.choose(&mut self.rng).unwrap())
    }

    /// `SUBJ COP SENTPHRASE`, labeled by the sentiment phrase.
    fn plain_clause(&mut self, positive: bool) -> TreebankNode {
        let phrase = self.sentiment_phrase(positive);
        let label = phrase.label;
        let predicate = branch(label, self.copula(), phrase);
        branch(label, self.subject(), predicate)
    }

    /// The negation node itself: `(flip (neg...) (sentphrase))`.
    fn negation_node(&mut self, positive_inner: bool) -> TreebankNode {
        let phrase = self.sentiment_phrase(positive_inner);
        let label = flip(phrase.label);
        let negator = if self.rng.random_bool(0.15) {
            // Two-word negation openers.
            let pair: [&str; 2] = if self.rng.random_bool(0.5) {
                ["not", "remotely"]
            } else {
                ["never", "really"]
            };
            branch(2, leaf(2, pair[0]), leaf(2, pair[1]))
        } else {
            leaf(2, NEGATOR_TOKENS.choose(&mut self.rng).unwrap())
        };
        branch(label, negator, phrase)
    }

    /// `SUBJ COP NEG SENTPHRASE`, labeled by the flipped phrase.
    fn negated_clause(&mut self, positive_inner: bool) -> TreebankNode {
        let negation = self.negation_node(positive_inner);
        let label = negation.label;
        let predicate = branch(label, self.copula(), negation);
        branch(label, self.subject(), predicate)
    }

    /// `A but B` with independently drawn clause polarities. The second
    /// clause usually carries the review label (it dominates 80% of the
    /// time), so the first clause stays informative without being a
    /// deterministic giveaway.
    fn contrast(&mut self) -> TreebankNode {
        let a_positive = self.rng.random_bool(0.5);
        let b_positive = self.rng.random_bool(0.5);
        let a = self.plain_clause(a_positive);
        let b = self.plain_clause(b_positive);
        let label = if self.rng.random_bool(0.8) {
            b.label
        } else {
            a.label
        };
        let b_label = b.label;
        branch(label, a, branch(b_label, leaf(2, "but"), b))
    }

    /// `my favorite`-style positive phrase used in both the reversal idiom
    /// and its positive supports.
    fn favorite_phrase(&mut self) -> TreebankNode {
        if self.rng.random_bool(0.5) {
            branch(3, leaf(2, "my"), leaf(3, "favorite"))
        } else {
            branch(
                3,
                leaf(2, "my"),
                branch(3, leaf(3, "favorite"), leaf(2, "film")),
            )
        }
    }

    /// `SUBJ used to be <phrase>`: the idiom flips the inner phrase, so the
    /// model has to treat it as an interaction rather than a fixed offset.
    /// The inner phrase is positive most of the time, which keeps the
    /// surface n-gram statistics of the idiom clearly negative.
    fn faded_favorite(&mut self) -> TreebankNode {
        let inner = if self.rng.random_bool(0.9) {
            self.favorite_phrase()
        } else {
            self.mess_phrase()
        };
        let label = flip(inner.label);
        let opener = branch(2, leaf(2, "used"), branch(2, leaf(2, "to"), leaf(2, "be")));
        let reversal = branch(label, opener, inner);
        branch(label, self.subject(), reversal)
    }

    /// `a dreadful mess`-style negative phrase used in both the positive
    /// reversal idiom and its negative supports.
    fn mess_phrase(&mut self) -> TreebankNode {
        let det = if self.rng.random_bool(0.5) { "a" } else { "that" };
        branch(
            1,
            leaf(2, det),
            branch(1, leaf(1, "dreadful"), leaf(2, "mess")),
        )
    }

    /// `SUBJ COP far from <phrase>`: the mirror reversal idiom. Mostly a
    /// negative inner phrase (flipped positive), occasionally a positive
    /// one, so this flip is an interaction too.
    fn far_from(&mut self) -> TreebankNode {
        let inner = if !self.rng.random_bool(0.1) {
            if self.rng.random_bool(0.5) {
                self.mess_phrase()
            } else {
                self.polar_word(false)
            }
        } else {
            self.favorite_phrase()
        };
        let label = flip(inner.label);
        let opener = branch(2, leaf(2, "far"), leaf(2, "from"));
        let reversal = branch(label, opener, inner);
        let predicate = branch(label, self.copula(), reversal);
        branch(label, self.subject(), predicate)
    }

    /// Negative supports anchoring the reversal vocabulary:
    /// `SUBJ COP a dreadful mess`.
    fn support_negative(&mut self) -> TreebankNode {
        let phrase = self.mess_phrase();
        let predicate = branch(1, self.copula(), phrase);
        branch(1, self.subject(), predicate)
    }

    /// `worth the time` positive phrase.
    fn worth_phrase(&mut self) -> TreebankNode {
        branch(
            3,
            leaf(3, "worth"),
            branch(2, leaf(2, "the"), leaf(2, "time")),
        )
    }

    /// Positive supports that anchor the idiom vocabulary:
    /// `SUBJ COP my favorite` / `SUBJ COP worth the time`.
    fn support_positive(&mut self) -> TreebankNode {
        let phrase = if self.rng.random_bool(0.5) {
            self.favorite_phrase()
        } else {
            self.worth_phrase()
        };
        let predicate = branch(3, self.copula(), phrase);
        branch(3, self.subject(), predicate)
    }

    /// `SUBJ COP not worth the time`: a negation whose inner phrase is the
    /// positive idiom.
    fn not_worth(&mut self) -> TreebankNode {
        let phrase = self.worth_phrase();
        let negation = branch(1, leaf(2, "not"), phrase);
        let predicate = branch(1, self.copula(), negation);
        branch(1, self.subject(), predicate)
    }

    /// Neutral filler review; dropped later for carrying no binary label.
    fn neutral_review(&mut self) -> TreebankNode {
        let predicate = branch(2, self.copula(), neutral_spine(&["a", "movie"]));
        branch(2, self.subject(), predicate)
    }

    /// Short fragment reviews: a bare sentiment phrase, negation, or
    /// reversal with no subject around it. These anchor each word's and
    /// idiom's standalone contribution.
    fn fragment(&mut self) -> TreebankNode {
        let roll: f64 = self.rng.random();
        if roll < 0.5 {
            let positive = self.rng.random_bool(0.5);
            self.sentiment_phrase(positive)
        } else if roll < 0.75 {
            let positive_inner = self.rng.random_bool(0.5);
            self.negation_node(positive_inner)
        } else if roll < 0.875 {
            // The faded reversal without its subject.
            let inner = if self.rng.random_bool(0.9) {
                self.favorite_phrase()
            } else {
                self.mess_phrase()
            };
            let label = flip(inner.label);
            let opener = branch(2, leaf(2, "used"), branch(2, leaf(2, "to"), leaf(2, "be")));
            branch(label, opener, inner)
        } else {
            // The mirror reversal without its subject.
            let inner = if self.rng.random_bool(0.9) {
                if self.rng.random_bool(0.5) {
                    self.mess_phrase()
                } else {
                    self.polar_word(false)
                }
            } else {
                self.favorite_phrase()
            };
            let label = flip(inner.label);
            let opener = branch(2, leaf(2, "far"), leaf(2, "from"));
            branch(label, opener, inner)
        }
    }

    fn review(&mut self) -> TreebankNode {
        let roll: f64 = self.rng.random();
        let mut tree = if roll < 0.32 {
            let positive = self.rng.random_bool(0.5);
            self.plain_clause(positive)
        } else if roll < 0.46 {
            let positive_inner = self.rng.random_bool(0.5);
            self.negated_clause(positive_inner)
        } else if roll < 0.62 {
            self.contrast()
        } else if roll < 0.67 {
            self.faded_favorite()
        } else if roll < 0.72 {
            self.far_from()
        } else if roll < 0.77 {
            self.support_positive()
        } else if roll < 0.81 {
            self.support_negative()
        } else if roll < 0.85 {
            self.not_worth()
        } else if roll < 0.97 {
            self.fragment()
        } else {
            self.neutral_review()
        };
        if self.rng.random_bool(0.8) {
            let label = tree.label;
            tree = branch(label, tree, leaf(2, "."));
        }
        let mut next = 1;
        renumber(&mut tree, &mut next);
        tree
    }
}

/// Generates `size` reviews from `seed` and splits them 80/10/10.
/// Identical arguments produce identical corpora.
pub fn gen_synthetic_corpus(seed: u64, size: usize) -> SyntheticCorpus {
    assert!(size >= 1, "corpus size must be at least 1");
    let mut generator = Generator {
        rng: ChaCha20Rng::seed_from_u64(seed),
    };
    let mut reviews = Vec::with_capacity(size);
    let mut dropped_neutral = 0;
    while reviews.len() < size {
        let tree = generator.review();
        match LabeledReview::from_tree(tree) {
            Some(review) => reviews.push(review),
            None => dropped_neutral += 1,
        }
    }
    let n_valid = (size / 10).max(1);
    let n_test = (size / 10).max(1);
    let n_train = size - n_valid - n_test;
    let test = reviews.split_off(n_train + n_valid);
    let valid = reviews.split_off(n_train);
    SyntheticCorpus {
        train: reviews,
        valid,
        test,
        dropped_neutral,
    }
}
