//! Evaluation protocols: unigram score/coefficient correlation, dissenting
//! subphrases, compositional phrase separation, negation interactions, and
//! phrase-embedding nearest neighbors.
//!
//! Ground-truth polarities always come from labels (grammar or treebank) or
//! from the n-gram reference model, never from the attribution method under
//! test. All searches iterate reviews and spans in a fixed order, so every
//! protocol is deterministic. Probability-targeted methods are run against
//! the positive class (index 1).

pub mod report;

use crate::baselines::{
    cell_decomposition_scores, gradient_input_scores, integrated_gradients_scores,
    leave_one_out_scores, loo_phrase_score, period_baseline, phrase_score_by_sum, BaselineError,
    Method,
};
use crate::cd::{self, CdError, CdOptions, PhraseSpan};
use crate::corpus::{binarize_label, LabeledReview, NgramLogistic, Polarity, NEGATION_WORDS};
use crate::lstm::{LstmError, LstmModel};
use crate::numerics::Vector;
use std::collections::BTreeMap;
use thiserror::Error;

const POSITIVE_CLASS: usize = 1;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("samples have mismatched lengths {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least 2 paired observations, got {0}")]
    TooFewPoints(usize),
    #[error("{0} sample has zero variance")]
    ZeroVariance(&'static str),
    #[error("empty sample")]
    EmptySample,
    #[error("no vocabulary overlap between the model scores and coefficients")]
    EmptyOverlap,
    #[error("method {0:?} cannot produce interaction scores (only cd and loo can)")]
    UnsupportedInteractionMethod(Method),
    #[error("review has no parse tree")]
    MissingTree,
    #[error("reference model training failed: {0}")]
    Reference(String),
    #[error(transparent)]
    Cd(#[from] CdError),
    #[error(transparent)]
    Baseline(#[from] BaselineError),
    #[error(transparent)]
    Lstm(#[from] LstmError),
}

/// Settings shared by the protocols.
#[derive(Clone, Debug)]
pub struct EvalOptions {
    pub ig_steps: usize,
    pub bias_first: bool,
    /// Score unigrams per occurrence instead of averaging per word type.
    pub occurrence_level_unigrams: bool,
    /// Run negation interactions over the full review with absolute spans
    /// instead of over the phrase as its own input.
    pub negation_full_review: bool,
    /// Longest parse-node phrase admitted as a neighbor candidate.
    pub max_neighbor_phrase_len: usize,
    pub dissent: DissentThresholds,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            ig_steps: 300,
            bias_first: true,
            occurrence_level_unigrams: false,
            negation_full_review: false,
            max_neighbor_phrase_len: 4,
            dissent: DissentThresholds::default(),
        }
    }
}

/// Dissent search thresholds. The parent cut (absolute n-gram score over
/// 1.5, length at most 5) is fixed by the protocol; the subphrase cut is a
/// configurable counterpart, 1.5 by default.
#[derive(Clone, Copy, Debug)]
pub struct DissentThresholds {
    pub parent_min_abs: f64,
    pub sub_min_abs: f64,
    pub max_parent_len: usize,
}

impl Default for DissentThresholds {
    fn default() -> Self {
        DissentThresholds {
            parent_min_abs: 1.5,
            sub_min_abs: 1.5,
            max_parent_len: 5,
        }
    }
}

// ---- statistics ----

/// Pearson correlation coefficient.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64, EvalError> {
    if xs.len() != ys.len() {
        return Err(EvalError::LengthMismatch(xs.len(), ys.len()));
    }
    if xs.len() < 2 {
        return Err(EvalError::TooFewPoints(xs.len()));
    }
    let n = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var_x = 0.0;
    let mut var_y = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        cov += (x - mean_x) * (y - mean_y);
        var_x += (x - mean_x).powi(2);
        var_y += (y - mean_y).powi(2);
    }
    if var_x == 0.0 {
        return Err(EvalError::ZeroVariance("first"));
    }
    if var_y == 0.0 {
        return Err(EvalError::ZeroVariance("second"));
    }
    Ok(cov / (var_x * var_y).sqrt())
}

/// One-sided two-sample Kolmogorov-Smirnov statistic for the direction
/// "`a` stochastically larger than `b`": `sup_x (F_b(x) - F_a(x))`,
/// in `[0, 1]`.
pub fn ks_one_sided(a: &[f64], b: &[f64]) -> Result<f64, EvalError> {
    if a.is_empty() || b.is_empty() {
        return Err(EvalError::EmptySample);
    }
    let mut a_sorted = a.to_vec();
    let mut b_sorted = b.to_vec();
    a_sorted.sort_by(f64::total_cmp);
    b_sorted.sort_by(f64::total_cmp);
    let (na, nb) = (a_sorted.len() as f64, b_sorted.len() as f64);
    let mut ia = 0;
    let mut ib = 0;
    let mut statistic = 0.0f64;
    while ia < a_sorted.len() || ib < b_sorted.len() {
        let x = match (a_sorted.get(ia), b_sorted.get(ib)) {
            (Some(&x), Some(&y)) => x.min(y),
            (Some(&x), None) => x,
            (None, Some(&y)) => y,
            (None, None) => unreachable!(),
        };
        while ia < a_sorted.len() && a_sorted[ia] <= x {
            ia += 1;
        }
        while ib < b_sorted.len() && b_sorted[ib] <= x {
            ib += 1;
        }
        statistic = statistic.max(ib as f64 / nb - ia as f64 / na);
    }
    Ok(statistic.max(0.0))
}

// ---- method dispatch at the token level ----

/// Per-word scores of one method over one input. `None` means the method
/// flagged the input unusable (non-finite integrated-gradients output);
/// callers drop such inputs from distribution comparisons.
pub fn word_scores_for(
    model: &LstmModel,
    tokens: &[String],
    method: Method,
    opts: &EvalOptions,
) -> Result<Option<Vec<f64>>, EvalError> {
    let xs = model.embed(tokens);
    let scores = match method {
        Method::Cd => {
            let cd_opts = CdOptions {
                bias_first: opts.bias_first,
            };
            (1..=xs.len())
                .map(|t| {
                    cd::decompose_with(&model.params, &xs, PhraseSpan::new(t, t), cd_opts)?
                        .scalar_score()
                })
                .collect::<Result<Vec<f64>, CdError>>()?
        }
        Method::LeaveOneOut => leave_one_out_scores(&model.params, &xs, POSITIVE_CLASS)?,
        Method::GradInput => gradient_input_scores(&model.params, &xs, POSITIVE_CLASS)?,
        Method::IntegratedGradients => {
            let (baseline, _) = period_baseline(model, xs.len());
            let out = integrated_gradients_scores(
                &model.params,
                &xs,
                POSITIVE_CLASS,
                opts.ig_steps,
                &baseline,
            )?;
            if !out.usable {
                return Ok(None);
            }
            out.scores
        }
        Method::CellDecomp => cell_decomposition_scores(&model.params, &xs)?,
    };
    Ok(Some(scores))
}

/// Score of a span within `tokens` under one method: a dedicated span
/// decomposition for cd and loo, summed word scores for the others.
pub fn phrase_score_for(
    model: &LstmModel,
    tokens: &[String],
    span: PhraseSpan,
    method: Method,
    opts: &EvalOptions,
) -> Result<Option<f64>, EvalError> {
    match method {
        Method::Cd => {
            let xs = model.embed(tokens);
            let cd_opts = CdOptions {
                bias_first: opts.bias_first,
            };
            Ok(Some(
                cd::decompose_with(&model.params, &xs, span, cd_opts)?.scalar_score()?,
            ))
        }
        Method::LeaveOneOut => {
            let xs = model.embed(tokens);
            Ok(Some(loo_phrase_score(
                &model.params,
                &xs,
                span,
                POSITIVE_CLASS,
            )?))
        }
        _ => match word_scores_for(model, tokens, method, opts)? {
            Some(scores) => Ok(Some(phrase_score_by_sum(&scores, span)?)),
            None => Ok(None),
        },
    }
}

// ---- unigram correlation ----

/// One scatter point: a word, its reference coefficient, and its method
/// score (type-level average over validation occurrences by default).
#[derive(Clone, Debug)]
pub struct ScatterPoint {
    pub token: String,
    pub coefficient: f64,
    pub score: f64,
    pub occurrences: usize,
}

#[derive(Clone, Debug)]
pub struct UnigramCorrelation {
    pub r: f64,
    pub points: Vec<ScatterPoint>,
    /// Reviews skipped because the method flagged them unusable.
    pub skipped_reviews: usize,
}

/// Correlates per-word method scores on the validation reviews against
/// reference logistic coefficients.
pub fn unigram_correlation(
    model: &LstmModel,
    coefficients: &BTreeMap<String, f64>,
    valid: &[LabeledReview],
    method: Method,
    opts: &EvalOptions,
) -> Result<UnigramCorrelation, EvalError> {
    let mut sums: BTreeMap<&str, (f64, usize)> = BTreeMap::new();
    let mut occurrence_points: Vec<ScatterPoint> = Vec::new();
    let mut skipped = 0;
    for review in valid {
        let Some(scores) = word_scores_for(model, &review.tokens, method, opts)? else {
            skipped += 1;
            continue;
        };
        for (tok, &score) in review.tokens.iter().zip(&scores) {
            let Some(&coefficient) = coefficients.get(tok) else {
                continue;
            };
            if opts.occurrence_level_unigrams {
                occurrence_points.push(ScatterPoint {
                    token: tok.clone(),
                    coefficient,
                    score,
                    occurrences: 1,
                });
            } else {
                let entry = sums.entry(tok.as_str()).or_insert((0.0, 0));
                entry.0 += score;
                entry.1 += 1;
            }
        }
    }
    let points: Vec<ScatterPoint> = if opts.occurrence_level_unigrams {
        occurrence_points
    } else {
        sums.into_iter()
            .map(|(token, (sum, n))| ScatterPoint {
                token: token.to_string(),
                coefficient: coefficients[token],
                score: sum / n as f64,
                occurrences: n,
            })
            .collect()
    };
    if points.is_empty() {
        return Err(EvalError::EmptyOverlap);
    }
    let xs: Vec<f64> = points.iter().map(|p| p.coefficient).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.score).collect();
    let r = pearson(&xs, &ys)?;
    Ok(UnigramCorrelation {
        r,
        points,
        skipped_reviews: skipped,
    })
}

// ---- dissenting subphrases ----

/// A strongly polar subphrase inside a span of opposite strong polarity,
/// with its polarity fixed by the n-gram model and the method scores of
/// the subphrase (computed with the parent span as the input).
#[derive(Clone, Debug)]
pub struct DissentEntry {
    pub review: usize,
    pub parent: PhraseSpan,
    pub sub: PhraseSpan,
    /// Polarity of the subphrase per the n-gram model.
    pub polarity: Polarity,
    pub parent_ngram_score: f64,
    pub sub_ngram_score: f64,
    pub scores: Vec<(Method, Option<f64>)>,
}

/// Searches contiguous spans of at most `max_parent_len` words whose
/// absolute n-gram score crosses the parent threshold for subspans of
/// strong opposite polarity.
pub fn dissent_search(
    reviews: &[LabeledReview],
    ngram: &NgramLogistic,
    model: &LstmModel,
    methods: &[Method],
    opts: &EvalOptions,
) -> Result<Vec<DissentEntry>, EvalError> {
    let th = opts.dissent;
    let mut entries = Vec::new();
    for (review_id, review) in reviews.iter().enumerate() {
        let t_len = review.tokens.len();
        for start in 1..=t_len {
            for end in start..=(start + th.max_parent_len - 1).min(t_len) {
                let parent_tokens = &review.tokens[start - 1..end];
                let parent_score = ngram.phrase_score(parent_tokens);
                if parent_score.abs() <= th.parent_min_abs {
                    continue;
                }
                let mut subs: Vec<(PhraseSpan, f64)> = Vec::new();
                for sub_start in start..=end {
                    for sub_end in sub_start..=end {
                        if (sub_start, sub_end) == (start, end) {
                            continue;
                        }
                        let sub_tokens = &review.tokens[sub_start - 1..sub_end];
                        let sub_score = ngram.phrase_score(sub_tokens);
                        if sub_score.abs() > th.sub_min_abs
                            && sub_score.signum() != parent_score.signum()
                        {
                            subs.push((PhraseSpan::new(sub_start, sub_end), sub_score));
                        }
                    }
                }
                if subs.is_empty() {
                    continue;
                }
                // Word scores over the parent once per summed method.
                let mut cached: Vec<(Method, Option<Vec<f64>>)> = Vec::new();
                for &method in methods {
                    if !matches!(method, Method::Cd | Method::LeaveOneOut) {
                        cached.push((method, word_scores_for(model, parent_tokens, method, opts)?));
                    }
                }
                for (sub, sub_score) in subs {
                    // Score the subphrase with the parent as the input.
                    let rel = PhraseSpan::new(sub.start - start + 1, sub.end - start + 1);
                    let mut scores = Vec::with_capacity(methods.len());
                    for &method in methods {
                        let score = match method {
                            Method::Cd | Method::LeaveOneOut => {
                                phrase_score_for(model, parent_tokens, rel, method, opts)?
                            }
                            _ => {
                                let cache = &cached
                                    .iter()
                                    .find(|(m, _)| *m == method)
                                    .expect("cached above")
                                    .1;
                                match cache {
                                    Some(words) => Some(phrase_score_by_sum(words, rel)?),
                                    None => None,
                                }
                            }
                        };
                        scores.push((method, score));
                    }
                    entries.push(DissentEntry {
                        review: review_id,
                        parent: PhraseSpan::new(start, end),
                        sub,
                        polarity: if sub_score > 0.0 {
                            Polarity::Pos
                        } else {
                            Polarity::Neg
                        },
                        parent_ngram_score: parent_score,
                        sub_ngram_score: sub_score,
                        scores,
                    });
                }
            }
        }
    }
    Ok(entries)
}

/// KS separation of one method's scores between positive- and
/// negative-polarity entries (positive stochastically larger).
pub fn dissent_separation(entries: &[DissentEntry], method: Method) -> Result<f64, EvalError> {
    let collect = |polarity: Polarity| -> Vec<f64> {
        entries
            .iter()
            .filter(|e| e.polarity == polarity)
            .filter_map(|e| {
                e.scores
                    .iter()
                    .find(|(m, _)| *m == method)
                    .and_then(|(_, s)| *s)
            })
            .collect()
    };
    ks_one_sided(&collect(Polarity::Pos), &collect(Polarity::Neg))
}

// ---- high-level compositionality ----

/// A phrase whose label opposes the review label and spans between one and
/// two thirds of it, scored in the context of the full review.
#[derive(Clone, Debug)]
pub struct CompositionEntry {
    pub review: usize,
    pub span: PhraseSpan,
    /// The phrase's own polarity from its tree label.
    pub polarity: Polarity,
    pub scores: Vec<(Method, Option<f64>)>,
}

pub fn compositionality_search(
    reviews: &[LabeledReview],
    model: &LstmModel,
    methods: &[Method],
    opts: &EvalOptions,
) -> Result<Vec<CompositionEntry>, EvalError> {
    let mut entries = Vec::new();
    for (review_id, review) in reviews.iter().enumerate() {
        let Some(tree) = &review.tree else {
            return Err(EvalError::MissingTree);
        };
        let t_len = review.tokens.len() as f64;
        let review_polarity = if review.label == 1 {
            Polarity::Pos
        } else {
            Polarity::Neg
        };
        let mut qualifying: Vec<(PhraseSpan, Polarity)> = Vec::new();
        for node in tree.nodes() {
            let polarity = binarize_label(node.label).expect("parser enforces labels");
            if polarity == Polarity::Neutral || polarity == review_polarity {
                continue;
            }
            let len = node.len() as f64;
            if len < t_len / 3.0 || len > 2.0 * t_len / 3.0 {
                continue;
            }
            let span = PhraseSpan::new(node.start, node.end);
            if !qualifying.iter().any(|(s, _)| *s == span) {
                qualifying.push((span, polarity));
            }
        }
        if qualifying.is_empty() {
            continue;
        }
        // Word scores per review once, shared by all summed baselines.
        let mut cached: Vec<(Method, Option<Vec<f64>>)> = Vec::new();
        for &method in methods {
            if !matches!(method, Method::Cd | Method::LeaveOneOut) {
                cached.push((method, word_scores_for(model, &review.tokens, method, opts)?));
            }
        }
        for (span, polarity) in qualifying {
            let mut scores = Vec::with_capacity(methods.len());
            for &method in methods {
                let score = match method {
                    Method::Cd | Method::LeaveOneOut => {
                        phrase_score_for(model, &review.tokens, span, method, opts)?
                    }
                    _ => {
                        let cache = &cached
                            .iter()
                            .find(|(m, _)| *m == method)
                            .expect("cached above")
                            .1;
                        match cache {
                            Some(words) => Some(phrase_score_by_sum(words, span)?),
                            None => None,
                        }
                    }
                };
                scores.push((method, score));
            }
            entries.push(CompositionEntry {
                review: review_id,
                span,
                polarity,
                scores,
            });
        }
    }
    Ok(entries)
}

pub fn compositionality_separation(
    entries: &[CompositionEntry],
    method: Method,
) -> Result<f64, EvalError> {
    let collect = |polarity: Polarity| -> Vec<f64> {
        entries
            .iter()
            .filter(|e| e.polarity == polarity)
            .filter_map(|e| {
                e.scores
                    .iter()
                    .find(|(m, _)| *m == method)
                    .and_then(|(_, s)| *s)
            })
            .collect()
    };
    ks_one_sided(&collect(Polarity::Pos), &collect(Polarity::Neg))
}

// ---- negation interactions ----

/// One extracted negation: a short phrase whose first child opens with a
/// negation word and whose second child carries sentiment. The direction
/// (positive negation flips negative to positive and vice versa) comes
/// from the phrase's own label.
#[derive(Clone, Debug)]
pub struct NegationInstance {
    pub review: usize,
    pub full: PhraseSpan,
    pub negation_term: PhraseSpan,
    pub negated_child: PhraseSpan,
    pub direction: Polarity,
}

/// Scans parse trees for negation phrases: length under 10, a negation
/// word within the first two tokens of the first child, a non-neutral
/// phrase label for direction, and a second child that is non-neutral
/// itself or contains a non-neutral descendant (the label-noise rule).
pub fn extract_negations(reviews: &[LabeledReview]) -> Result<Vec<NegationInstance>, EvalError> {
    let mut instances = Vec::new();
    for (review_id, review) in reviews.iter().enumerate() {
        let Some(tree) = &review.tree else {
            return Err(EvalError::MissingTree);
        };
        for node in tree.nodes() {
            if node.len() >= 10 {
                continue;
            }
            let Some((left, right)) = node.children() else {
                continue;
            };
            let direction = match binarize_label(node.label).expect("parser enforces labels") {
                Polarity::Neutral => continue,
                polarity => polarity,
            };
            let opens_with_negation = left
                .tokens()
                .iter()
                .take(2)
                .any(|w| NEGATION_WORDS.contains(&w.as_str()));
            if !opens_with_negation {
                continue;
            }
            let second_non_neutral = right.nodes().iter().any(|n| {
                binarize_label(n.label).expect("parser enforces labels") != Polarity::Neutral
            });
            if !second_non_neutral {
                continue;
            }
            instances.push(NegationInstance {
                review: review_id,
                full: PhraseSpan::new(node.start, node.end),
                negation_term: PhraseSpan::new(left.start, left.end),
                negated_child: PhraseSpan::new(right.start, right.end),
                direction,
            });
        }
    }
    Ok(instances)
}

fn rebase(span: PhraseSpan, offset: usize) -> PhraseSpan {
    PhraseSpan::new(span.start - offset, span.end - offset)
}

/// Interaction score of a negation: score(full) - score(negated child) -
/// score(negation term), all on the same input. Only cd and loo can
/// produce these. By default the phrase is its own input; the full-review
/// mode scores the absolute spans inside the whole review instead.
pub fn negation_interaction(
    model: &LstmModel,
    review_tokens: &[String],
    instance: &NegationInstance,
    method: Method,
    opts: &EvalOptions,
) -> Result<f64, EvalError> {
    if !matches!(method, Method::Cd | Method::LeaveOneOut) {
        return Err(EvalError::UnsupportedInteractionMethod(method));
    }
    let (tokens, full, term, child) = if opts.negation_full_review {
        (
            review_tokens.to_vec(),
            instance.full,
            instance.negation_term,
            instance.negated_child,
        )
    } else {
        let offset = instance.full.start - 1;
        (
            review_tokens[instance.full.start - 1..instance.full.end].to_vec(),
            rebase(instance.full, offset),
            rebase(instance.negation_term, offset),
            rebase(instance.negated_child, offset),
        )
    };
    let score = |span: PhraseSpan| -> Result<f64, EvalError> {
        Ok(phrase_score_for(model, &tokens, span, method, opts)?
            .expect("cd and loo are always usable"))
    };
    Ok(score(full)? - score(child)? - score(term)?)
}

/// Reference interaction distribution: `parent - left - right` over all
/// binary parse nodes shorter than 5 tokens, under the same method and
/// input convention as [`negation_interaction`].
pub fn reference_interactions(
    model: &LstmModel,
    reviews: &[LabeledReview],
    method: Method,
    opts: &EvalOptions,
) -> Result<Vec<f64>, EvalError> {
    if !matches!(method, Method::Cd | Method::LeaveOneOut) {
        return Err(EvalError::UnsupportedInteractionMethod(method));
    }
    let mut scores = Vec::new();
    for (review_id, review) in reviews.iter().enumerate() {
        let Some(tree) = &review.tree else {
            return Err(EvalError::MissingTree);
        };
        for node in tree.nodes() {
            if node.len() >= 5 {
                continue;
            }
            let Some((left, right)) = node.children() else {
                continue;
            };
            let pseudo = NegationInstance {
                review: review_id,
                full: PhraseSpan::new(node.start, node.end),
                negation_term: PhraseSpan::new(left.start, left.end),
                negated_child: PhraseSpan::new(right.start, right.end),
                direction: Polarity::Neutral,
            };
            scores.push(negation_interaction(
                model,
                &review.tokens,
                &pseudo,
                method,
                opts,
            )?);
        }
    }
    Ok(scores)
}

// ---- phrase-embedding neighbors ----

#[derive(Clone, Debug)]
pub struct Neighbor {
    pub tokens: Vec<String>,
    pub similarity: f64,
}

pub fn cosine_similarity(a: &Vector<f64>, b: &Vector<f64>) -> f64 {
    let na = a.dot(a).sqrt();
    let nb = b.dot(b).sqrt();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    a.dot(b) / (na * nb)
}

/// Phrase embedding: the phrase part of the final hidden state with the
/// phrase as its own input and the span covering all of it.
pub fn phrase_embedding(
    model: &LstmModel,
    tokens: &[String],
    opts: &EvalOptions,
) -> Result<Vector<f64>, EvalError> {
    let xs = model.embed(tokens);
    let result = cd::decompose_with(
        &model.params,
        &xs,
        PhraseSpan::new(1, xs.len()),
        CdOptions {
            bias_first: opts.bias_first,
        },
    )?;
    Ok(result.beta_final)
}

/// Ranks corpus phrases (all words plus binary parse-node phrases up to
/// the configured length) by cosine similarity to the query's embedding.
///
/// `include_query` keeps an exact match of the query in the candidate
/// list; the CLI excludes it. Asking for more neighbors than exist returns
/// them all with a warning.
pub fn phrase_embedding_neighbors(
    model: &LstmModel,
    reviews: &[LabeledReview],
    query: &[String],
    k: usize,
    include_query: bool,
    opts: &EvalOptions,
) -> Result<Vec<Neighbor>, EvalError> {
    let mut candidates: Vec<Vec<String>> = Vec::new();
    let mut seen: std::collections::BTreeSet<Vec<String>> = std::collections::BTreeSet::new();
    for review in reviews {
        match &review.tree {
            Some(tree) => {
                for node in tree.nodes() {
                    if node.len() > opts.max_neighbor_phrase_len {
                        continue;
                    }
                    let tokens = node.tokens();
                    if seen.insert(tokens.clone()) {
                        candidates.push(tokens);
                    }
                }
            }
            None => {
                for tok in &review.tokens {
                    let single = vec![tok.clone()];
                    if seen.insert(single.clone()) {
                        candidates.push(single);
                    }
                }
            }
        }
    }
    if include_query {
        if seen.insert(query.to_vec()) {
            candidates.push(query.to_vec());
        }
    } else {
        candidates.retain(|c| c != query);
    }
    let query_embedding = phrase_embedding(model, query, opts)?;
    let mut neighbors: Vec<Neighbor> = Vec::with_capacity(candidates.len());
    for tokens in candidates {
        // An exact match is the query itself: similarity 1 by definition,
        // immune to rounding in the norm.
        let similarity = if tokens == query {
            1.0
        } else {
            let embedding = phrase_embedding(model, &tokens, opts)?;
            cosine_similarity(&query_embedding, &embedding).min(1.0)
        };
        neighbors.push(Neighbor { similarity, tokens });
    }
    neighbors.sort_by(|a, b| {
        b.similarity
            .total_cmp(&a.similarity)
            .then_with(|| (b.tokens == query).cmp(&(a.tokens == query)))
    });
    if k > neighbors.len() {
        log::warn!(
            "requested {k} neighbors but only {} candidates exist",
            neighbors.len()
        );
    }
    neighbors.truncate(k);
    Ok(neighbors)
}
