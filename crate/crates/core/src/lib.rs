//! Attribution methods for LSTM sentiment classifiers.
//!
//! The centerpiece is contextual decomposition: an exact split of every
//! hidden and cell state of a trained LSTM into a part produced by a chosen
//! phrase and a part produced by everything else, which turns into
//! phrase-level logit contributions. Four word-importance baselines
//! (leave one out, gradient times input, integrated gradients, cell-state
//! decomposition) share the same forward/backward machinery so all methods
//! can be compared on one axis.
//!
//! The crate also ships the supporting cast needed to run comparisons end
//! to end at desk scale: a from-scratch LSTM with Adam training and early
//! stopping, a sentiment-treebank parser, a seeded synthetic sentiment
//! grammar, bag-of-vectors and n-gram logistic reference models, and the
//! evaluation protocols (unigram correlation, dissenting subphrases,
//! compositional phrase separation, negation interactions, phrase-embedding
//! neighbors).
//!
//! Core math is generic over the scalar type (`f32`/`f64` via
//! [`real::Real`]); the aliases at the crate root fix the `f64`
//! instantiation used by the pipelines and the CLI.

pub mod baselines;
pub mod cd;
pub mod corpus;
pub mod eval;
pub mod linearization;
pub mod lstm;
pub mod numerics;
pub(crate) mod optim;
pub mod real;

pub use real::Real;

/// Dense vector over the default `f64` scalar.
pub type Vector = numerics::Vector<f64>;
/// Row-major dense matrix over the default `f64` scalar.
pub type Matrix = numerics::Matrix<f64>;
/// LSTM + softmax weights over the default `f64` scalar.
pub type LstmParams = lstm::LstmParams<f64>;
/// Forward-pass record over the default `f64` scalar.
pub type ForwardTrace = lstm::ForwardTrace<f64>;
/// Phrase decomposition result over the default `f64` scalar.
pub type CdResult = cd::CdResult<f64>;
