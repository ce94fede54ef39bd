//! Word-importance baselines sharing the LSTM forward/backward machinery:
//! leave one out, gradient times input, integrated gradients, and
//! cell-state decomposition, plus span aggregation by summing word scores.
//!
//! All scores use the positive-minus-negative orientation for two-class
//! models (class 1 positive, class 0 negative); the probability-based
//! methods take an explicit target class and are conventionally run with
//! target 1.

use crate::cd::PhraseSpan;
use crate::lstm::{backward, classify, forward, LstmError, LstmModel, LstmParams};
use crate::numerics::Vector;
use crate::real::Real;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BaselineError {
    #[error(transparent)]
    Lstm(#[from] LstmError),
    #[error("invalid span {start}:{end} for a length-{len} sequence")]
    InvalidSpan {
        start: usize,
        end: usize,
        len: usize,
    },
    #[error("baseline sequence length {baseline} != input length {input}")]
    BaselineLength { baseline: usize, input: usize },
    #[error("integrated gradients needs at least 1 step")]
    ZeroSteps,
    #[error("cell decomposition scalar orientation requires 2 classes, got {0}")]
    NotTwoClass(usize),
}

/// The attribution methods compared in this crate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Cd,
    LeaveOneOut,
    GradInput,
    IntegratedGradients,
    CellDecomp,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Cd,
        Method::LeaveOneOut,
        Method::GradInput,
        Method::IntegratedGradients,
        Method::CellDecomp,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Method::Cd => "cd",
            Method::LeaveOneOut => "loo",
            Method::GradInput => "grad_input",
            Method::IntegratedGradients => "integrated_gradients",
            Method::CellDecomp => "cell_decomp",
        }
    }
}

/// Per-span scores from one method on one input, with the bookkeeping the
/// evaluation protocols and renderers need.
#[derive(Clone, Debug)]
pub struct AttributionReport {
    pub method: Method,
    pub scores: Vec<(PhraseSpan, f64)>,
    /// Score orientation note; always positive minus negative here.
    pub orientation: &'static str,
    pub ig_steps: Option<usize>,
    pub baseline_token: Option<String>,
    pub rescale_std: Option<f64>,
    /// False when the method hit non-finite values on this input.
    pub usable: bool,
}

impl AttributionReport {
    pub fn new(method: Method, scores: Vec<(PhraseSpan, f64)>) -> Self {
        AttributionReport {
            method,
            scores,
            orientation: "positive-minus-negative",
            ig_steps: None,
            baseline_token: None,
            rescale_std: None,
            usable: true,
        }
    }
}

fn validate_span(span: PhraseSpan, len: usize) -> Result<(), BaselineError> {
    if span.start == 0 || span.start > span.end || span.end > len {
        return Err(BaselineError::InvalidSpan {
            start: span.start,
            end: span.end,
            len,
        });
    }
    Ok(())
}

/// Change in log probability of the target class when one word's embedding
/// is replaced by the zero vector: `log p(xs) - log p(xs with x_t := 0)`.
/// Recomputes the forward pass per word.
pub fn leave_one_out_scores<F: Real>(
    params: &LstmParams<F>,
    xs: &[Vector<F>],
    target_class: usize,
) -> Result<Vec<F>, BaselineError> {
    let base = classify(params, xs)?[target_class].ln();
    let mut scores = Vec::with_capacity(xs.len());
    for t in 0..xs.len() {
        let mut occluded = xs.to_vec();
        occluded[t] = Vector::zeros(xs[t].len());
        let p = classify(params, &occluded)?[target_class].ln();
        scores.push(base - p);
    }
    Ok(scores)
}

/// Leave-one-out at span granularity: the whole span's embeddings are
/// zeroed at once.
pub fn loo_phrase_score<F: Real>(
    params: &LstmParams<F>,
    xs: &[Vector<F>],
    span: PhraseSpan,
    target_class: usize,
) -> Result<F, BaselineError> {
    validate_span(span, xs.len())?;
    let base = classify(params, xs)?[target_class].ln();
    let mut occluded = xs.to_vec();
    for t in span.start..=span.end {
        occluded[t - 1] = Vector::zeros(xs[t - 1].len());
    }
    let p = classify(params, &occluded)?[target_class].ln();
    Ok(base - p)
}

/// Dot product of each word vector with the gradient of the target-class
/// probability with respect to it.
pub fn gradient_input_scores<F: Real>(
    params: &LstmParams<F>,
    xs: &[Vector<F>],
    target_class: usize,
) -> Result<Vec<F>, BaselineError> {
    let trace = forward(params, xs)?;
    let grads = backward(params, &trace, target_class)?;
    let p_target = grads.probabilities[target_class];
    Ok(xs
        .iter()
        .zip(&grads.inputs)
        .map(|(x, dlogp)| x.dot(dlogp) * p_target)
        .collect())
}

/// Everything integrated gradients produces for one input.
#[derive(Clone, Debug)]
pub struct IgOutcome<F> {
    /// Scores after the per-input standard-deviation rescaling (equal to
    /// `raw_scores` when rescaling was skipped).
    pub scores: Vec<F>,
    pub raw_scores: Vec<F>,
    /// `|sum(raw) - (p(input) - p(baseline))|`; shrinks as steps grow.
    pub completeness_gap: F,
    /// Standard deviation used for rescaling; `None` when it was zero.
    pub rescale_std: Option<F>,
    /// False when any score came out non-finite; such inputs are dropped
    /// from distribution-level comparisons.
    pub usable: bool,
}

/// Midpoint-rule path integral of the target-class probability gradient
/// from `baseline` to `xs`, per word (summed over embedding coordinates),
/// then rescaled by the standard deviation of the raw scores.
pub fn integrated_gradients_scores<F: Real>(
    params: &LstmParams<F>,
    xs: &[Vector<F>],
    target_class: usize,
    steps: usize,
    baseline: &[Vector<F>],
) -> Result<IgOutcome<F>, BaselineError> {
    if steps == 0 {
        return Err(BaselineError::ZeroSteps);
    }
    if baseline.len() != xs.len() {
        return Err(BaselineError::BaselineLength {
            baseline: baseline.len(),
            input: xs.len(),
        });
    }
    let t_len = xs.len();
    let deltas: Vec<Vector<F>> = xs.iter().zip(baseline).map(|(x, b)| x.sub(b)).collect();

    let mut mean_grads = vec![Vector::zeros(xs[0].len()); t_len];
    for k in 0..steps {
        let alpha = crate::real::real::<F>((k as f64 + 0.5) / steps as f64);
        let point: Vec<Vector<F>> = baseline
            .iter()
            .zip(&deltas)
            .map(|(b, d)| b.add(&d.scale(alpha)))
            .collect();
        let trace = forward(params, &point)?;
        let grads = backward(params, &trace, target_class)?;
        let p_target = grads.probabilities[target_class];
        for (acc, dlogp) in mean_grads.iter_mut().zip(&grads.inputs) {
            acc.add_assign(&dlogp.scale(p_target));
        }
    }
    let inv = F::one() / F::from_usize(steps).unwrap();
    let raw_scores: Vec<F> = deltas
        .iter()
        .zip(&mean_grads)
        .map(|(d, g)| d.dot(g) * inv)
        .collect();

    let p_input = classify(params, xs)?[target_class];
    let p_base = classify(params, baseline)?[target_class];
    let total: F = raw_scores.iter().copied().sum();
    let completeness_gap = (total - (p_input - p_base)).abs();

    let usable = raw_scores.iter().all(|s| s.is_finite());
    let n = F::from_usize(t_len).unwrap();
    let mean = total / n;
    let var = raw_scores
        .iter()
        .map(|&s| (s - mean) * (s - mean))
        .sum::<F>()
        / n;
    let std = var.sqrt();
    let (scores, rescale_std) = if usable && std > F::zero() {
        (raw_scores.iter().map(|&s| s / std).collect(), Some(std))
    } else {
        (raw_scores.clone(), None)
    };

    Ok(IgOutcome {
        scores,
        raw_scores,
        completeness_gap,
        rescale_std,
        usable,
    })
}

/// Baseline sequence for integrated gradients: the period token's embedding
/// repeated to the input length. Falls back to zero vectors with a warning
/// when the vocabulary has no period token.
pub fn period_baseline(model: &LstmModel, len: usize) -> (Vec<Vector<f64>>, Option<String>) {
    match model.embedding(".") {
        Some(v) => (vec![v; len], Some(".".to_string())),
        None => {
            log::warn!("no \".\" token in vocabulary; integrated gradients baseline is all zeros");
            (vec![Vector::zeros(model.params.d1); len], None)
        }
    }
}

/// Telescoping cell-state attribution: word `t` gets the
/// positive-minus-negative logit contribution of
/// `o_T * (tanh(c_t) - tanh(c_{t-1}))`. Scores sum to the full logit
/// difference `W_soft * h_T` exactly (additive logit-space form).
pub fn cell_decomposition_scores<F: Real>(
    params: &LstmParams<F>,
    xs: &[Vector<F>],
) -> Result<Vec<F>, BaselineError> {
    if params.n_classes != 2 {
        return Err(BaselineError::NotTwoClass(params.n_classes));
    }
    let trace = forward(params, xs)?;
    let o_final = &trace.steps.last().expect("non-empty").o;
    let mut scores = Vec::with_capacity(xs.len());
    let mut prev_tanh = Vector::zeros(params.d2);
    for step in &trace.steps {
        let cur_tanh = step.c.map(|x| x.tanh());
        let contribution = o_final.hadamard(&cur_tanh.sub(&prev_tanh));
        let logits = params.w_soft.matvec(&contribution);
        scores.push(logits[1] - logits[0]);
        prev_tanh = cur_tanh;
    }
    Ok(scores)
}

/// Aggregates word scores over a span by plain summation.
pub fn phrase_score_by_sum<F: Real>(
    word_scores: &[F],
    span: PhraseSpan,
) -> Result<F, BaselineError> {
    validate_span(span, word_scores.len())?;
    Ok(word_scores[span.start - 1..=span.end - 1]
        .iter()
        .copied()
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cd;
    use crate::corpus::LabeledReview;
    use crate::lstm::{train_lstm, logits, TrainConfig};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    fn vec64(xs: &[f64]) -> Vector<f64> {
        Vector::new(xs.to_vec())
    }

    fn random_inputs(rng: &mut ChaCha20Rng, t_len: usize, d1: usize) -> Vec<Vector<f64>> {
        (0..t_len)
            .map(|_| (0..d1).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect()
    }

    fn toy_model() -> crate::lstm::LstmModel {
        let review = |tokens: &[&str], label: usize| LabeledReview {
            tokens: tokens.iter().map(|s| s.to_string()).collect(),
            label,
            tree: None,
        };
        let train: Vec<LabeledReview> = (0..25)
            .flat_map(|_| {
                vec![
                    review(&["the", "plot", "was", "good", "."], 1),
                    review(&["the", "plot", "was", "bad", "."], 0),
                    review(&["a", "story", "was", "good", "."], 1),
                    review(&["a", "story", "was", "bad", "."], 0),
                ]
            })
            .collect();
        let cfg = TrainConfig {
            embed_dim: 8,
            hidden_dim: 8,
            max_epochs: 30,
            patience: 30,
            seed: 9,
            ..TrainConfig::default()
        };
        let (model, log) = train_lstm(&train, &train[..4], &cfg, None).unwrap();
        assert!(log.valid_accuracy > 0.9);
        model
    }

    #[test]
    fn loo_zero_vector_word_scores_zero() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let params = LstmParams::<f64>::random(3, 4, 2, &mut rng, 0.8);
        let mut xs = random_inputs(&mut rng, 4, 3);
        xs[2] = Vector::zeros(3);
        let scores = leave_one_out_scores(&params, &xs, 1).unwrap();
        assert_eq!(scores[2], 0.0);
        assert!(scores[0].abs() > 0.0);
    }

    #[test]
    fn zero_weight_model_gives_zero_scores_everywhere() {
        let params = LstmParams::<f64>::zeros(2, 3, 2);
        let xs = vec![vec64(&[0.4, -0.4]), vec64(&[1.0, 1.0])];
        assert!(leave_one_out_scores(&params, &xs, 1)
            .unwrap()
            .iter()
            .all(|&s| s == 0.0));
        assert_eq!(
            loo_phrase_score(&params, &xs, PhraseSpan::new(1, 2), 1).unwrap(),
            0.0
        );
        assert!(gradient_input_scores(&params, &xs, 1)
            .unwrap()
            .iter()
            .all(|&s| s == 0.0));
        assert!(cell_decomposition_scores(&params, &xs)
            .unwrap()
            .iter()
            .all(|&s| s == 0.0));
    }

    #[test]
    fn loo_word_and_phrase_consistency() {
        let model = toy_model();
        let tokens: Vec<String> = ["the", "plot", "was", "good", "."]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let xs = model.embed(&tokens);
        let words = leave_one_out_scores(&model.params, &xs, 1).unwrap();
        let single = loo_phrase_score(&model.params, &xs, PhraseSpan::new(4, 4), 1).unwrap();
        assert!((words[3] - single).abs() < 1e-12);

        // Sentiment word moves log-probability more than filler.
        assert!(words[3].abs() > words[0].abs());

        // Whole-input occlusion is not the sum of word occlusions.
        let whole = loo_phrase_score(&model.params, &xs, PhraseSpan::new(1, 5), 1).unwrap();
        let sum: f64 = words.iter().sum();
        assert!((whole - sum).abs() > 1e-6);
    }

    #[test]
    fn gradient_input_zero_embedding_scores_zero() {
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let params = LstmParams::<f64>::random(3, 4, 2, &mut rng, 0.8);
        let mut xs = random_inputs(&mut rng, 3, 3);
        xs[1] = Vector::zeros(3);
        let scores = gradient_input_scores(&params, &xs, 0).unwrap();
        assert_eq!(scores[1], 0.0);
    }

    #[test]
    fn gradient_input_matches_directional_finite_difference() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let params = LstmParams::<f64>::random(3, 4, 2, &mut rng, 0.7);
        let xs = random_inputs(&mut rng, 4, 3);
        let target = 1;
        let scores = gradient_input_scores(&params, &xs, target).unwrap();
        let eps = 1e-5;
        for t in 0..xs.len() {
            // Directional derivative along the word vector itself.
            let mut plus = xs.clone();
            plus[t] = xs[t].add(&xs[t].scale(eps));
            let mut minus = xs.clone();
            minus[t] = xs[t].sub(&xs[t].scale(eps));
            let fd = (classify(&params, &plus).unwrap()[target]
                - classify(&params, &minus).unwrap()[target])
                / (2.0 * eps);
            let denom = scores[t].abs().max(fd.abs()).max(1e-3);
            assert!(
                (scores[t] - fd).abs() / denom <= 1e-4,
                "word {t}: {} vs {fd}",
                scores[t]
            );
        }
    }

    #[test]
    fn ig_at_its_own_baseline_is_zero() {
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        let params = LstmParams::<f64>::random(2, 3, 2, &mut rng, 0.8);
        let xs = random_inputs(&mut rng, 3, 2);
        let out = integrated_gradients_scores(&params, &xs, 1, 1, &xs).unwrap();
        assert!(out.raw_scores.iter().all(|&s| s == 0.0));
        assert!(out.rescale_std.is_none(), "zero std skips rescaling");
        assert_eq!(out.completeness_gap, 0.0);
    }

    #[test]
    fn ig_completeness_tightens_with_steps() {
        let model = toy_model();
        let tokens: Vec<String> = ["the", "plot", "was", "good", "."]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let xs = model.embed(&tokens);
        let (baseline, tok) = period_baseline(&model, xs.len());
        assert_eq!(tok.as_deref(), Some("."));
        let coarse = integrated_gradients_scores(&model.params, &xs, 1, 3, &baseline).unwrap();
        let fine = integrated_gradients_scores(&model.params, &xs, 1, 300, &baseline).unwrap();
        assert!(fine.completeness_gap <= 1e-2, "gap {}", fine.completeness_gap);
        assert!(fine.completeness_gap <= coarse.completeness_gap + 1e-12);

        // Rescaled scores have unit standard deviation.
        let n = fine.scores.len() as f64;
        let mean: f64 = fine.scores.iter().sum::<f64>() / n;
        let var: f64 = fine.scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / n;
        assert!((var.sqrt() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn cell_decomposition_telescopes_to_the_full_logit_difference() {
        let mut rng = ChaCha20Rng::seed_from_u64(6);
        for _ in 0..10 {
            let d1 = rng.random_range(1..4);
            let d2 = rng.random_range(1..5);
            let t_len = rng.random_range(1..8);
            let params = LstmParams::<f64>::random(d1, d2, 2, &mut rng, 0.9);
            let xs = random_inputs(&mut rng, t_len, d1);
            let scores = cell_decomposition_scores(&params, &xs).unwrap();
            let trace = forward(&params, &xs).unwrap();
            let z = params.w_soft.matvec(trace.h_final());
            let full = z[1] - z[0];
            let sum: f64 = scores.iter().sum();
            assert!((sum - full).abs() < 1e-9, "{sum} vs {full}");
            if t_len == 1 {
                assert!((scores[0] - full).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn cell_decomposition_differs_from_cd_on_trained_model() {
        let model = toy_model();
        let tokens: Vec<String> = ["the", "plot", "was", "good", "."]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let xs = model.embed(&tokens);
        let cell = cell_decomposition_scores(&model.params, &xs).unwrap();
        let cd_scores = cd::word_scores(&model.params, &xs).unwrap();
        let max_diff = cell
            .iter()
            .zip(&cd_scores)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        assert!(max_diff > 1e-3, "methods should not coincide");
    }

    #[test]
    fn phrase_sum_behaves_linearly() {
        let scores = [1.0, -2.0, 0.5, 3.0];
        assert_eq!(
            phrase_score_by_sum(&scores, PhraseSpan::new(2, 2)).unwrap(),
            -2.0
        );
        let left = phrase_score_by_sum(&scores, PhraseSpan::new(1, 2)).unwrap();
        let right = phrase_score_by_sum(&scores, PhraseSpan::new(3, 4)).unwrap();
        let all = phrase_score_by_sum(&scores, PhraseSpan::new(1, 4)).unwrap();
        assert_eq!(left + right, all);
        assert!(matches!(
            phrase_score_by_sum(&scores, PhraseSpan::new(3, 9)),
            Err(BaselineError::InvalidSpan { .. })
        ));
    }

    #[test]
    fn full_span_cell_sum_equals_logit_reduction_on_toy_model() {
        let model = toy_model();
        let tokens: Vec<String> = ["the", "plot", "was", "bad", "."]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let xs = model.embed(&tokens);
        let scores = cell_decomposition_scores(&model.params, &xs).unwrap();
        let total = phrase_score_by_sum(&scores, PhraseSpan::new(1, xs.len())).unwrap();
        let trace = forward(&model.params, &xs).unwrap();
        let z = model.params.w_soft.matvec(trace.h_final());
        assert!((total - (z[1] - z[0])).abs() < 1e-9);
        // Full logits also include the softmax bias, which no word owns.
        let with_bias = logits(&model.params, &trace);
        assert!((with_bias[1] - with_bias[0]) != (z[1] - z[0]) || model.params.b_soft.max_abs() == 0.0);
    }
}
