//! Adam training with early stopping on validation loss.
//!
//! The vocabulary and its embedding table are part of the model and are
//! fine-tuned together with the recurrent and softmax weights. Training is
//! deterministic for a fixed seed.

use super::{backward, forward, logits, LstmModel, LstmParams};
use crate::corpus::embeddings::{oov_vector, EmbeddingTable};
use crate::corpus::LabeledReview;
use crate::numerics::{stable_softmax, Matrix, Vector};
use crate::optim::{clip_global_norm, Adam};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use std::collections::HashMap;
use thiserror::Error;

/// Optimizer and schedule settings.
///
/// Defaults: learning rate 0.001 with Adam's standard moment constants,
/// batch size 16, global-norm gradient clip at 5.0, at most 40 epochs with
/// patience 3. Batch size, clip, and the epoch cap have no external source;
/// they live here so runs can override and logs can record them.
#[derive(Clone, Debug)]
pub struct TrainConfig {
    pub embed_dim: usize,
    pub hidden_dim: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub max_epochs: usize,
    /// Epochs without validation improvement before stopping.
    pub patience: usize,
    pub batch_size: usize,
    pub grad_clip: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            embed_dim: 16,
            hidden_dim: 16,
            learning_rate: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            max_epochs: 40,
            patience: 3,
            batch_size: 16,
            grad_clip: 5.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("{0} dataset is empty")]
    EmptyDataset(&'static str),
    #[error("label {0} outside 0..=1")]
    BadLabel(usize),
    #[error("bad config: {0}")]
    BadConfig(String),
    #[error("training diverged (non-finite loss) at epoch {epoch}")]
    Diverged { epoch: usize },
}

/// Per-epoch record of a training run.
#[derive(Clone, Debug)]
pub struct TrainLog {
    pub train_losses: Vec<f64>,
    pub valid_losses: Vec<f64>,
    /// 1-based epoch whose snapshot is returned.
    pub best_epoch: usize,
    pub epochs_run: usize,
    pub best_valid_loss: f64,
    /// Validation accuracy of the returned snapshot.
    pub valid_accuracy: f64,
}

/// Trains a binary LSTM classifier, returning the parameters (and
/// embeddings) that achieved the best validation loss.
pub fn train_lstm(
    train: &[LabeledReview],
    valid: &[LabeledReview],
    cfg: &TrainConfig,
    init_embeddings: Option<&EmbeddingTable>,
) -> Result<(LstmModel, TrainLog), TrainError> {
    if train.is_empty() {
        return Err(TrainError::EmptyDataset("train"));
    }
    if valid.is_empty() {
        return Err(TrainError::EmptyDataset("valid"));
    }
    if cfg.learning_rate <= 0.0 {
        return Err(TrainError::BadConfig("learning rate must be > 0".into()));
    }
    if cfg.patience == 0 {
        return Err(TrainError::BadConfig("patience must be >= 1".into()));
    }
    if let Some(table) = init_embeddings {
        if table.dim != cfg.embed_dim {
            return Err(TrainError::BadConfig(format!(
                "embedding table dim {} != embed_dim {}",
                table.dim, cfg.embed_dim
            )));
        }
    }
    for review in train.iter().chain(valid) {
        if review.label > 1 {
            return Err(TrainError::BadLabel(review.label));
        }
    }

    // Vocabulary in first-encounter order over train then valid.
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
        let v = match init_embeddings {
            Some(table) => table.get_or_oov(tok, cfg.seed),
            None => oov_vector(cfg.embed_dim, cfg.seed, tok),
        };
        for (col, &x) in v.iter().enumerate() {
            embeddings[(row, col)] = x;
        }
    }
    let scale = 1.0 / (cfg.hidden_dim as f64).sqrt();
    let mut params = LstmParams::<f64>::random(cfg.embed_dim, cfg.hidden_dim, 2, &mut rng, scale);

    let ids: Vec<Vec<usize>> = train
        .iter()
        .map(|r| r.tokens.iter().map(|t| index[t]).collect())
        .collect();
    let valid_ids: Vec<Vec<usize>> = valid
        .iter()
        .map(|r| r.tokens.iter().map(|t| index[t]).collect())
        .collect();

    let n_params: usize = param_slices(&params).iter().map(|s| s.len()).sum::<usize>()
        + embeddings.data().len();
    let mut adam = Adam::new(
        n_params,
        cfg.learning_rate,
        cfg.beta1,
        cfg.beta2,
        cfg.epsilon,
    );

    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut best: Option<(LstmParams<f64>, Matrix<f64>, f64, usize)> = None;
    let mut epochs_without_improvement = 0;
    let mut train_losses = Vec::new();
    let mut valid_losses = Vec::new();
    let mut epochs_run = 0;

    for epoch in 1..=cfg.max_epochs {
        epochs_run = epoch;
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;

        for batch in order.chunks(cfg.batch_size) {
            let mut grad_params = LstmParams::<f64>::zeros(cfg.embed_dim, cfg.hidden_dim, 2);
            let mut grad_emb = Matrix::<f64>::zeros(vocab.len(), cfg.embed_dim);

            for &example in batch {
                let token_ids = &ids[example];
                let xs: Vec<Vector<f64>> = token_ids
                    .iter()
                    .map(|&id| Vector::new(embeddings.row(id).to_vec()))
                    .collect();
                let trace = forward(&params, &xs).expect("non-empty review");
                let target = train[example].label;
                let grads = backward(&params, &trace, target).expect("valid label");
                let loss = -grads.probabilities[target].ln();
                if !loss.is_finite() {
                    return Err(TrainError::Diverged { epoch });
                }
                epoch_loss += loss;
                // Loss is -log p(target), so accumulate negated gradients.
                add_scaled(&mut grad_params, &grads.params, -1.0);
                for (t, &id) in token_ids.iter().enumerate() {
                    for col in 0..cfg.embed_dim {
                        grad_emb[(id, col)] -= grads.inputs[t][col];
                    }
                }
            }

            let inv = 1.0 / batch.len() as f64;
            scale_params(&mut grad_params, inv);
            grad_emb.scale_assign(inv);

            let mut grad_views = param_slices_mut(&mut grad_params);
            grad_views.push(grad_emb.data_mut());
            clip_global_norm(&mut grad_views, cfg.grad_clip);

            let grad_refs: Vec<&[f64]> = grad_views.iter().map(|s| &**s).collect();
            let mut param_views = param_slices_mut(&mut params);
            param_views.push(embeddings.data_mut());
            adam.step(&mut param_views, &grad_refs);
        }

        train_losses.push(epoch_loss / train.len() as f64);

        let (valid_loss, _) = evaluate(&params, &embeddings, &valid_ids, valid);
        if !valid_loss.is_finite() {
            return Err(TrainError::Diverged { epoch });
        }
        valid_losses.push(valid_loss);

        let improved = best.as_ref().is_none_or(|(_, _, loss, _)| valid_loss < *loss);
        if improved {
            best = Some((params.clone(), embeddings.clone(), valid_loss, epoch));
            epochs_without_improvement = 0;
        } else {
            epochs_without_improvement += 1;
            if epochs_without_improvement >= cfg.patience {
                break;
            }
        }
    }

    let (best_params, best_emb, best_valid_loss, best_epoch) =
        best.expect("at least one epoch ran");
    let (_, valid_accuracy) = evaluate(&best_params, &best_emb, &valid_ids, valid);
    let model = LstmModel::new(best_params, vocab, best_emb);
    Ok((
        model,
        TrainLog {
            train_losses,
            valid_losses,
            best_epoch,
            epochs_run,
            best_valid_loss,
            valid_accuracy,
        },
    ))
}

fn evaluate(
    params: &LstmParams<f64>,
    embeddings: &Matrix<f64>,
    ids: &[Vec<usize>],
    reviews: &[LabeledReview],
) -> (f64, f64) {
    let mut loss = 0.0;
    let mut correct = 0usize;
    for (token_ids, review) in ids.iter().zip(reviews) {
        let xs: Vec<Vector<f64>> = token_ids
            .iter()
            .map(|&id| Vector::new(embeddings.row(id).to_vec()))
            .collect();
        let trace = forward(params, &xs).expect("non-empty review");
        let probs = stable_softmax(&logits(params, &trace));
        loss -= probs[review.label].ln();
        let predicted = if probs[1] >= probs[0] { 1 } else { 0 };
        if predicted == review.label {
            correct += 1;
        }
    }
    (
        loss / reviews.len() as f64,
        correct as f64 / reviews.len() as f64,
    )
}

fn add_scaled(acc: &mut LstmParams<f64>, g: &LstmParams<f64>, s: f64) {
    let pairs: [(&mut Matrix<f64>, &Matrix<f64>); 9] = [
        (&mut acc.w_o, &g.w_o),
        (&mut acc.w_f, &g.w_f),
        (&mut acc.w_i, &g.w_i),
        (&mut acc.w_g, &g.w_g),
        (&mut acc.v_o, &g.v_o),
        (&mut acc.v_f, &g.v_f),
        (&mut acc.v_i, &g.v_i),
        (&mut acc.v_g, &g.v_g),
        (&mut acc.w_soft, &g.w_soft),
    ];
    for (a, b) in pairs {
        for (x, &y) in a.data_mut().iter_mut().zip(b.data()) {
            *x += s * y;
        }
    }
    let bias_pairs: [(&mut Vector<f64>, &Vector<f64>); 5] = [
        (&mut acc.b_o, &g.b_o),
        (&mut acc.b_f, &g.b_f),
        (&mut acc.b_i, &g.b_i),
        (&mut acc.b_g, &g.b_g),
        (&mut acc.b_soft, &g.b_soft),
    ];
    for (a, b) in bias_pairs {
        for (x, &y) in a.as_mut_slice().iter_mut().zip(b.iter()) {
            *x += s * y;
        }
    }
}

fn scale_params(p: &mut LstmParams<f64>, s: f64) {
    p.visit_mut(|m| m.scale_assign(s));
    p.visit_bias_mut(|v| v.scale_assign(s));
}

/// Parameter buffers in the fixed optimization order.
fn param_slices_mut(p: &mut LstmParams<f64>) -> Vec<&mut [f64]> {
    let LstmParams {
        w_o,
        w_f,
        w_i,
        w_g,
        v_o,
        v_f,
        v_i,
        v_g,
        b_o,
        b_f,
        b_i,
        b_g,
        w_soft,
        b_soft,
        ..
    } = p;
    vec![
        w_o.data_mut(),
        w_f.data_mut(),
        w_i.data_mut(),
        w_g.data_mut(),
        v_o.data_mut(),
        v_f.data_mut(),
        v_i.data_mut(),
        v_g.data_mut(),
        b_o.as_mut_slice(),
        b_f.as_mut_slice(),
        b_i.as_mut_slice(),
        b_g.as_mut_slice(),
        w_soft.data_mut(),
        b_soft.as_mut_slice(),
    ]
}

fn param_slices(p: &LstmParams<f64>) -> Vec<&[f64]> {
    vec![
        p.w_o.data(),
        p.w_f.data(),
        p.w_i.data(),
        p.w_g.data(),
        p.v_o.data(),
        p.v_f.data(),
        p.v_i.data(),
        p.v_g.data(),
        p.b_o.as_slice(),
        p.b_f.as_slice(),
        p.b_i.as_slice(),
        p.b_g.as_slice(),
        p.w_soft.data(),
        p.b_soft.as_slice(),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn review(tokens: &[&str], label: usize) -> LabeledReview {
        LabeledReview {
            tokens: tokens.iter().map(|s| s.to_string()).collect(),
            label,
            tree: None,
        }
    }

    #[test]
    fn memorizes_a_single_example() {
        let train = vec![review(&["good", "movie"], 1)];
        let cfg = TrainConfig {
            embed_dim: 4,
            hidden_dim: 4,
            learning_rate: 0.01,
            max_epochs: 300,
            patience: 300,
            ..TrainConfig::default()
        };
        let (_, log) = train_lstm(&train, &train, &cfg, None).unwrap();
        let first = log.train_losses[0];
        let last = *log.train_losses.last().unwrap();
        assert!(last < first, "loss should trend down: {first} -> {last}");
        assert!(last < 0.05, "memorization should drive loss near 0, got {last}");
    }

    #[test]
    fn patience_one_with_flat_validation_stops_after_one_extra_epoch() {
        // A learning rate this small produces updates below f64 resolution,
        // so the validation loss is constant across epochs.
        let train = vec![review(&["good"], 1), review(&["bad"], 0)];
        let cfg = TrainConfig {
            embed_dim: 2,
            hidden_dim: 2,
            learning_rate: 1e-300,
            max_epochs: 50,
            patience: 1,
            ..TrainConfig::default()
        };
        let (_, log) = train_lstm(&train, &train, &cfg, None).unwrap();
        assert_eq!(log.epochs_run, 2);
        assert_eq!(log.best_epoch, 1);
    }

    #[test]
    fn same_seed_gives_identical_models() {
        let train = vec![
            review(&["good", "movie"], 1),
            review(&["bad", "film"], 0),
            review(&["great", "plot"], 1),
            review(&["awful", "story"], 0),
        ];
        let cfg = TrainConfig {
            embed_dim: 4,
            hidden_dim: 4,
            max_epochs: 5,
            seed: 123,
            ..TrainConfig::default()
        };
        let (a, _) = train_lstm(&train, &train, &cfg, None).unwrap();
        let (b, _) = train_lstm(&train, &train, &cfg, None).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_bad_inputs() {
        let cfg = TrainConfig::default();
        assert!(matches!(
            train_lstm(&[], &[review(&["a"], 0)], &cfg, None),
            Err(TrainError::EmptyDataset("train"))
        ));
        assert!(matches!(
            train_lstm(&[review(&["a"], 3)], &[review(&["a"], 0)], &cfg, None),
            Err(TrainError::BadLabel(3))
        ));
        let bad = TrainConfig {
            patience: 0,
            ..TrainConfig::default()
        };
        assert!(matches!(
            train_lstm(&[review(&["a"], 0)], &[review(&["a"], 0)], &bad, None),
            Err(TrainError::BadConfig(_))
        ));
    }

    #[test]
    fn toy_model_separates_two_words() {
        let train = vec![
            review(&["good"], 1),
            review(&["bad"], 0),
            review(&["good"], 1),
            review(&["bad"], 0),
        ];
        let cfg = TrainConfig {
            embed_dim: 4,
            hidden_dim: 4,
            max_epochs: 150,
            patience: 150,
            seed: 7,
            ..TrainConfig::default()
        };
        let (model, log) = train_lstm(&train, &train, &cfg, None).unwrap();
        assert!(log.valid_accuracy == 1.0);
        let p_good = model.classify_tokens(&["good".into()]).unwrap();
        let p_bad = model.classify_tokens(&["bad".into()]).unwrap();
        assert!(p_good[1] > p_good[0]);
        assert!(p_bad[0] > p_bad[1]);
    }
}
