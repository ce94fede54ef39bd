//! Logistic-regression reference models: a bag-of-vectors classifier over
//! summed (fine-tuned) embeddings, and an n-gram feature model whose
//! coefficients score phrases. Both train with Adam at learning rate 0.001
//! and early stopping, mirroring the LSTM trainer.

use super::embeddings::{oov_vector, EmbeddingTable};
use super::LabeledReview;
use crate::numerics::{stable_softmax, Matrix, Vector};
use crate::optim::Adam;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use std::collections::HashMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LogisticError {
    #[error("{0} dataset is empty")]
    EmptyDataset(&'static str),
    #[error("training data contains no examples of class {0}")]
    MissingClass(usize),
    #[error("label {0} outside 0..=1")]
    BadLabel(usize),
    #[error("training diverged (non-finite loss) at epoch {epoch}")]
    Diverged { epoch: usize },
}

/// Shared knobs for both reference models. The n-gram range (1..=3) and L2
/// strength (1e-4) are documented defaults, overridable here.
#[derive(Clone, Debug)]
pub struct LogisticConfig {
    pub embed_dim: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub max_epochs: usize,
    pub patience: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub ngram_min: usize,
    pub ngram_max: usize,
    pub l2: f64,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        LogisticConfig {
            embed_dim: 16,
            learning_rate: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            max_epochs: 60,
            patience: 5,
            batch_size: 32,
            seed: 0,
            ngram_min: 1,
            ngram_max: 3,
            l2: 1e-4,
        }
    }
}

fn check_data(train: &[LabeledReview], valid: &[LabeledReview]) -> Result<(), LogisticError> {
    if train.is_empty() {
        return Err(LogisticError::EmptyDataset("train"));
    }
    if valid.is_empty() {
        return Err(LogisticError::EmptyDataset("valid"));
    }
    for review in train.iter().chain(valid) {
        if review.label > 1 {
            return Err(LogisticError::BadLabel(review.label));
        }
    }
    for class in 0..2 {
        if !train.iter().any(|r| r.label == class) {
            return Err(LogisticError::MissingClass(class));
        }
    }
    Ok(())
}

/// Bag-of-vectors model: sum the word vectors, apply one linear layer to
/// two classes. Word vectors and linear parameters are both fine-tuned.
#[derive(Clone, Debug, PartialEq)]
pub struct BowLogistic {
    pub vocab: Vec<String>,
    pub embeddings: Matrix<f64>,
    /// 2 x embed_dim linear layer.
    pub weights: Matrix<f64>,
    pub bias: Vector<f64>,
    index: HashMap<String, usize>,
}

impl BowLogistic {
    fn feature(&self, tokens: &[String]) -> Vector<f64> {
        let mut sum = Vector::zeros(self.embeddings.cols());
        for tok in tokens {
            if let Some(&i) = self.index.get(tok) {
                sum.add_assign(&Vector::new(self.embeddings.row(i).to_vec()));
            }
        }
        sum
    }

    pub fn classify(&self, tokens: &[String]) -> Vector<f64> {
        stable_softmax(&self.weights.matvec(&self.feature(tokens)).add(&self.bias))
    }

    /// Effective positive-minus-negative coefficient of one vocabulary
    /// word: the logit difference its vector alone contributes.
    pub fn unigram_coefficient(&self, token: &str) -> Option<f64> {
        let i = *self.index.get(token)?;
        let z = self
            .weights
            .matvec(&Vector::new(self.embeddings.row(i).to_vec()));
        Some(z[1] - z[0])
    }
}

/// Trains the bag-of-vectors model. `init` seeds the word vectors (with
/// the out-of-vocabulary policy for missing tokens); otherwise all vectors
/// start from the seeded Gaussian.
pub fn train_logistic_bow(
    train: &[LabeledReview],
    valid: &[LabeledReview],
    cfg: &LogisticConfig,
    init: Option<&EmbeddingTable>,
) -> Result<(BowLogistic, f64), LogisticError> {
    check_data(train, valid)?;
    let mut vocab: Vec<String> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    for review in train.iter().chain(valid) {
        for tok in &review.tokens {
            if !index.contains_key(tok) {
                index.insert(tok.clone(), vocab.len());
                vocab.push(tok.clone());
            }
        }
    }

    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
    let mut embeddings = Matrix::zeros(vocab.len(), cfg.embed_dim);
    for (row, tok) in vocab.iter().enumerate() {
        let v = match init {
            Some(table) => table.get_or_oov(tok, cfg.seed),
            None => oov_vector(cfg.embed_dim, cfg.seed, tok),
        };
        for (col, &x) in v.iter().enumerate() {
            embeddings[(row, col)] = x;
        }
    }
    let scale = 1.0 / (cfg.embed_dim as f64).sqrt();
    let mut weights = Matrix::zeros(2, cfg.embed_dim);
    for r in 0..2 {
        for c in 0..cfg.embed_dim {
            weights[(r, c)] = rng.random_range(-scale..scale);
        }
    }
    let mut bias = Vector::zeros(2);

    let ids: Vec<Vec<usize>> = train
        .iter()
        .map(|r| r.tokens.iter().map(|t| index[t]).collect())
        .collect();

    let n_params = weights.data().len() + bias.len() + embeddings.data().len();
    let mut adam = Adam::new(
        n_params,
        cfg.learning_rate,
        cfg.beta1,
        cfg.beta2,
        cfg.epsilon,
    );

    let snapshot = |w: &Matrix<f64>, b: &Vector<f64>, e: &Matrix<f64>| BowLogistic {
        vocab: vocab.clone(),
        embeddings: e.clone(),
        weights: w.clone(),
        bias: b.clone(),
        index: index.clone(),
    };
    let valid_loss = |model: &BowLogistic| -> f64 {
        valid
            .iter()
            .map(|r| -model.classify(&r.tokens)[r.label].ln())
            .sum::<f64>()
            / valid.len() as f64
    };

    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut best: Option<(BowLogistic, f64)> = None;
    let mut stale = 0;
    for epoch in 1..=cfg.max_epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(cfg.batch_size) {
            let mut grad_w = Matrix::<f64>::zeros(2, cfg.embed_dim);
            let mut grad_b = Vector::<f64>::zeros(2);
            let mut grad_e = Matrix::<f64>::zeros(vocab.len(), cfg.embed_dim);
            for &k in batch {
                let mut feature = Vector::zeros(cfg.embed_dim);
                for &id in &ids[k] {
                    feature.add_assign(&Vector::new(embeddings.row(id).to_vec()));
                }
                let probs = stable_softmax(&weights.matvec(&feature).add(&bias));
                let loss = -probs[train[k].label].ln();
                if !loss.is_finite() {
                    return Err(LogisticError::Diverged { epoch });
                }
                let mut dz = probs;
                dz[train[k].label] -= 1.0;
                grad_w.add_outer(&dz, &feature);
                grad_b.add_assign(&dz);
                let dx = weights.matvec_t(&dz);
                for &id in &ids[k] {
                    for col in 0..cfg.embed_dim {
                        grad_e[(id, col)] += dx[col];
                    }
                }
            }
            let inv = 1.0 / batch.len() as f64;
            grad_w.scale_assign(inv);
            grad_b.scale_assign(inv);
            grad_e.scale_assign(inv);
            adam.step(
                &mut [weights.data_mut(), bias.as_mut_slice(), embeddings.data_mut()],
                &[grad_w.data(), grad_b.as_slice(), grad_e.data()],
            );
        }
        let model = snapshot(&weights, &bias, &embeddings);
        let loss = valid_loss(&model);
        if !loss.is_finite() {
            return Err(LogisticError::Diverged { epoch });
        }
        if best.as_ref().is_none_or(|(_, b)| loss < *b) {
            best = Some((model, loss));
            stale = 0;
        } else {
            stale += 1;
            if stale >= cfg.patience {
                break;
            }
        }
    }
    let (model, _) = best.expect("at least one epoch");
    let accuracy = valid
        .iter()
        .filter(|r| {
            let p = model.classify(&r.tokens);
            (p[1] >= p[0]) == (r.label == 1)
        })
        .count() as f64
        / valid.len() as f64;
    Ok((model, accuracy))
}

/// N-gram logistic regression: one coefficient per n-gram, a single
/// positive-class logit, L2 regularization.
#[derive(Clone, Debug)]
pub struct NgramLogistic {
    pub ngram_min: usize,
    pub ngram_max: usize,
    pub bias: f64,
    features: HashMap<Vec<String>, usize>,
    pub coefficients: Vec<f64>,
}

impl NgramLogistic {
    pub fn coefficient(&self, ngram: &[String]) -> f64 {
        self.features
            .get(ngram)
            .map_or(0.0, |&i| self.coefficients[i])
    }

    pub fn unigram_coefficient(&self, token: &str) -> f64 {
        self.coefficient(std::slice::from_ref(&token.to_string()))
    }

    /// Sum of the coefficients of every n-gram occurrence inside the
    /// phrase. No bias: an empty or fully unknown phrase scores 0.
    pub fn phrase_score(&self, tokens: &[String]) -> f64 {
        let mut score = 0.0;
        for n in self.ngram_min..=self.ngram_max {
            if n > tokens.len() {
                break;
            }
            for window in tokens.windows(n) {
                score += self.coefficient(window);
            }
        }
        score
    }

    /// Probability the review is positive.
    pub fn classify(&self, tokens: &[String]) -> f64 {
        crate::numerics::sigmoid(self.phrase_score(tokens) + self.bias)
    }
}

/// Trains the n-gram model with logistic loss plus `l2 * |w|^2`.
pub fn train_logistic_ngram(
    train: &[LabeledReview],
    valid: &[LabeledReview],
    cfg: &LogisticConfig,
) -> Result<(NgramLogistic, f64), LogisticError> {
    check_data(train, valid)?;
    // Feature indices in first-encounter order for determinism.
    let mut features: HashMap<Vec<String>, usize> = HashMap::new();
    let mut example_features: Vec<Vec<usize>> = Vec::with_capacity(train.len());
    for review in train {
        let mut ids = Vec::new();
        for n in cfg.ngram_min..=cfg.ngram_max {
            if n > review.tokens.len() {
                break;
            }
            for window in review.tokens.windows(n) {
                let next = features.len();
                let id = *features.entry(window.to_vec()).or_insert(next);
                ids.push(id);
            }
        }
        example_features.push(ids);
    }

    let n_features = features.len();
    let mut coefficients = vec![0.0f64; n_features];
    let mut bias = [0.0f64];
    let mut adam = Adam::new(
        n_features + 1,
        cfg.learning_rate,
        cfg.beta1,
        cfg.beta2,
        cfg.epsilon,
    );

    let model_of = |coeffs: &[f64], bias: f64| NgramLogistic {
        ngram_min: cfg.ngram_min,
        ngram_max: cfg.ngram_max,
        bias,
        features: features.clone(),
        coefficients: coeffs.to_vec(),
    };
    let valid_loss = |model: &NgramLogistic| -> f64 {
        valid
            .iter()
            .map(|r| {
                let p = model.classify(&r.tokens);
                if r.label == 1 {
                    -p.ln()
                } else {
                    -(1.0 - p).ln()
                }
            })
            .sum::<f64>()
            / valid.len() as f64
    };

    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut best: Option<(NgramLogistic, f64)> = None;
    let mut stale = 0;
    for epoch in 1..=cfg.max_epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(cfg.batch_size) {
            let mut grad_w = vec![0.0f64; n_features];
            let mut grad_b = 0.0f64;
            for &k in batch {
                let z: f64 = example_features[k]
                    .iter()
                    .map(|&i| coefficients[i])
                    .sum::<f64>()
                    + bias[0];
                let p = crate::numerics::sigmoid(z);
                if !p.is_finite() {
                    return Err(LogisticError::Diverged { epoch });
                }
                let dz = p - train[k].label as f64;
                for &i in &example_features[k] {
                    grad_w[i] += dz;
                }
                grad_b += dz;
            }
            let inv = 1.0 / batch.len() as f64;
            for (i, g) in grad_w.iter_mut().enumerate() {
                *g = *g * inv + 2.0 * cfg.l2 * coefficients[i];
            }
            grad_b *= inv;
            adam.step(
                &mut [&mut coefficients, &mut bias],
                &[&grad_w, &[grad_b]],
            );
        }
        let model = model_of(&coefficients, bias[0]);
        let loss = valid_loss(&model);
        if !loss.is_finite() {
            return Err(LogisticError::Diverged { epoch });
        }
        if best.as_ref().is_none_or(|(_, b)| loss < *b) {
            best = Some((model, loss));
            stale = 0;
        } else {
            stale += 1;
            if stale >= cfg.patience {
                break;
            }
        }
    }
    let (model, _) = best.expect("at least one epoch");
    let accuracy = valid
        .iter()
        .filter(|r| (model.classify(&r.tokens) >= 0.5) == (r.label == 1))
        .count() as f64
        / valid.len() as f64;
    Ok((model, accuracy))
}
