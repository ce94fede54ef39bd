//! Structured evaluation output: a serializable report covering every
//! protocol the supplied data supports, plus the five-level bucket edges
//! used by heat-map renderers.
//!
//! Report files are written by the CLI as a single `#`-prefixed header
//! line (carrying the timestamp, the only nondeterministic byte range)
//! followed by the JSON serialization of [`EvalReport`].

use super::{
    compositionality_search, compositionality_separation, dissent_search, dissent_separation,
    extract_negations, ks_one_sided, negation_interaction, reference_interactions,
    unigram_correlation, EvalError, EvalOptions,
};
use crate::baselines::{AttributionReport, Method};
use crate::corpus::{
    train_logistic_bow, train_logistic_ngram, LabeledReview, LogisticConfig, LogisticError,
    Polarity,
};
use crate::lstm::LstmModel;
use serde::Serialize;
use std::collections::BTreeMap;

impl From<LogisticError> for EvalError {
    fn from(e: LogisticError) -> Self {
        EvalError::Reference(e.to_string())
    }
}

/// Symmetric score thresholds for the five-level heat-map legend: scores
/// within `inner` of zero are neutral, beyond `outer` strongly polar.
/// Derived per score set from the quantiles of the nonzero magnitudes.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct BucketEdges {
    pub inner: f64,
    pub outer: f64,
}

pub fn five_level_buckets(scores: &[f64]) -> BucketEdges {
    let mut magnitudes: Vec<f64> = scores
        .iter()
        .map(|s| s.abs())
        .filter(|&m| m > 0.0)
        .collect();
    if magnitudes.is_empty() {
        return BucketEdges {
            inner: 0.0,
            outer: 0.0,
        };
    }
    magnitudes.sort_by(f64::total_cmp);
    let quantile = |p: f64| -> f64 {
        let idx = (p * (magnitudes.len() - 1) as f64).floor() as usize;
        magnitudes[idx]
    };
    BucketEdges {
        inner: quantile(0.5),
        outer: quantile(0.8),
    }
}

/// Bucket index in `-2..=2` (very negative .. very positive).
pub fn bucket_of(score: f64, edges: BucketEdges) -> i8 {
    let magnitude = score.abs();
    let level = if magnitude <= edges.inner {
        0
    } else if magnitude <= edges.outer {
        1
    } else {
        2
    };
    if score < 0.0 {
        -level
    } else {
        level
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MethodStatistic {
    pub method: String,
    pub value: f64,
    pub points: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScatterRow {
    pub token: String,
    pub coefficient: f64,
    pub score: f64,
    pub occurrences: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct UnigramSection {
    /// Pearson r per method against the reference unigram coefficients.
    pub correlations: Vec<MethodStatistic>,
    /// Scatter data for the first method (conventionally cd).
    pub scatter: Vec<ScatterRow>,
}

#[derive(Clone, Debug, Serialize)]
pub struct DissentRow {
    pub review: usize,
    pub parent_span: [usize; 2],
    pub sub_span: [usize; 2],
    pub sub_polarity: String,
    pub parent_ngram_score: f64,
    pub sub_ngram_score: f64,
    pub scores: Vec<(String, Option<f64>)>,
}

#[derive(Clone, Debug, Serialize)]
pub struct DissentSection {
    pub parent_threshold: f64,
    pub sub_threshold: f64,
    pub n_positive: usize,
    pub n_negative: usize,
    pub separation_ks: Vec<MethodStatistic>,
    pub rows: Vec<DissentRow>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CompositionSection {
    pub n_positive: usize,
    pub n_negative: usize,
    pub separation_ks: Vec<MethodStatistic>,
}

#[derive(Clone, Debug, Serialize)]
pub struct NegationSection {
    pub n_positive: usize,
    pub n_negative: usize,
    /// KS separation between positive- and negative-negation interactions,
    /// for the interaction-capable methods (cd and loo).
    pub separation_ks: Vec<MethodStatistic>,
    /// Quantiles (5, 25, 50, 75, 95) of the reference interaction
    /// distribution per method.
    pub reference_quantiles: Vec<(String, [f64; 5])>,
}

#[derive(Clone, Debug, Serialize)]
pub struct EvalReportConfig {
    pub methods: Vec<String>,
    pub ig_steps: usize,
    pub bias_first: bool,
    pub n_train: usize,
    pub n_valid: usize,
    pub n_test: usize,
    pub bow_valid_accuracy: f64,
    pub ngram_valid_accuracy: f64,
}

/// The full structured evaluation report.
#[derive(Clone, Debug, Serialize)]
pub struct EvalReport {
    pub config: EvalReportConfig,
    pub unigram: Option<UnigramSection>,
    pub dissent: Option<DissentSection>,
    pub compositionality: Option<CompositionSection>,
    pub negation: Option<NegationSection>,
    /// Sections skipped, with the reason (for example: no parse trees).
    pub skipped: Vec<String>,
}

fn polarity_name(p: Polarity) -> String {
    match p {
        Polarity::Pos => "pos".to_string(),
        Polarity::Neg => "neg".to_string(),
        Polarity::Neutral => "neutral".to_string(),
    }
}

fn quantiles5(sample: &mut [f64]) -> [f64; 5] {
    if sample.is_empty() {
        return [0.0; 5];
    }
    sample.sort_by(f64::total_cmp);
    let q = |p: f64| sample[(p * (sample.len() - 1) as f64).round() as usize];
    [q(0.05), q(0.25), q(0.5), q(0.75), q(0.95)]
}

/// Runs every protocol the data supports and assembles the report.
///
/// The reference models (bag-of-vectors and n-gram logistic regression) are
/// trained here from the same train/valid split; unigram correlations are
/// measured against the n-gram model's unigram coefficients.
pub fn run_full_eval(
    model: &LstmModel,
    train: &[LabeledReview],
    valid: &[LabeledReview],
    test: &[LabeledReview],
    methods: &[Method],
    opts: &EvalOptions,
    logistic_cfg: &LogisticConfig,
) -> Result<EvalReport, EvalError> {
    let mut skipped = Vec::new();

    let (ngram, ngram_accuracy) = train_logistic_ngram(train, valid, logistic_cfg)?;
    let (_bow, bow_accuracy) = train_logistic_bow(train, valid, logistic_cfg, None)?;
    // A unigram-only run of the n-gram trainer is a bag-of-words logistic
    // regression; its coefficients are the reference for the scatter.
    let words_cfg = LogisticConfig {
        ngram_min: 1,
        ngram_max: 1,
        ..logistic_cfg.clone()
    };
    let (bag_of_words, _) = train_logistic_ngram(train, valid, &words_cfg)?;

    let mut coefficients: BTreeMap<String, f64> = BTreeMap::new();
    for review in valid {
        for tok in &review.tokens {
            coefficients
                .entry(tok.clone())
                .or_insert_with(|| bag_of_words.unigram_coefficient(tok));
        }
    }
    let mut correlations = Vec::new();
    let mut scatter = Vec::new();
    for (i, &method) in methods.iter().enumerate() {
        let outcome = unigram_correlation(model, &coefficients, valid, method, opts)?;
        correlations.push(MethodStatistic {
            method: method.tag().to_string(),
            value: outcome.r,
            points: outcome.points.len(),
        });
        if i == 0 {
            scatter = outcome
                .points
                .iter()
                .map(|p| ScatterRow {
                    token: p.token.clone(),
                    coefficient: p.coefficient,
                    score: p.score,
                    occurrences: p.occurrences,
                })
                .collect();
        }
    }
    let unigram = Some(UnigramSection {
        correlations,
        scatter,
    });

    // Dissenting subphrases over the held-out reviews.
    let mut held_out: Vec<LabeledReview> = valid.to_vec();
    held_out.extend_from_slice(test);
    let entries = dissent_search(&held_out, &ngram, model, methods, opts)?;
    let dissent = if entries.is_empty() {
        skipped.push("dissent: no qualifying phrases found".to_string());
        None
    } else {
        let n_positive = entries
            .iter()
            .filter(|e| e.polarity == Polarity::Pos)
            .count();
        let n_negative = entries.len() - n_positive;
        let mut separation = Vec::new();
        if n_positive > 0 && n_negative > 0 {
            for &method in methods {
                separation.push(MethodStatistic {
                    method: method.tag().to_string(),
                    value: dissent_separation(&entries, method)?,
                    points: entries.len(),
                });
            }
        }
        let rows = entries
            .iter()
            .map(|e| DissentRow {
                review: e.review,
                parent_span: [e.parent.start, e.parent.end],
                sub_span: [e.sub.start, e.sub.end],
                sub_polarity: polarity_name(e.polarity),
                parent_ngram_score: e.parent_ngram_score,
                sub_ngram_score: e.sub_ngram_score,
                scores: e
                    .scores
                    .iter()
                    .map(|(m, s)| (m.tag().to_string(), *s))
                    .collect(),
            })
            .collect();
        Some(DissentSection {
            parent_threshold: opts.dissent.parent_min_abs,
            sub_threshold: opts.dissent.sub_min_abs,
            n_positive,
            n_negative,
            separation_ks: separation,
            rows,
        })
    };

    let has_trees = held_out.iter().all(|r| r.tree.is_some()) && !held_out.is_empty();

    // Compositionality needs phrase labels.
    let compositionality = if has_trees {
        let entries = compositionality_search(&held_out, model, methods, opts)?;
        if entries.is_empty() {
            skipped.push("compositionality: no opposing phrases found".to_string());
            None
        } else {
            let n_positive = entries
                .iter()
                .filter(|e| e.polarity == Polarity::Pos)
                .count();
            let n_negative = entries.len() - n_positive;
            let mut separation = Vec::new();
            if n_positive > 0 && n_negative > 0 {
                for &method in methods {
                    separation.push(MethodStatistic {
                        method: method.tag().to_string(),
                        value: compositionality_separation(&entries, method)?,
                        points: entries.len(),
                    });
                }
            }
            Some(CompositionSection {
                n_positive,
                n_negative,
                separation_ks: separation,
            })
        }
    } else {
        skipped.push("compositionality: skipped (corpus has no parse trees)".to_string());
        None
    };

    // Negation interactions over the training treebank.
    let train_has_trees = train.iter().all(|r| r.tree.is_some()) && !train.is_empty();
    let negation = if train_has_trees {
        let instances = extract_negations(train)?;
        if instances.is_empty() {
            skipped.push("negation: no negation phrases found".to_string());
            None
        } else {
            let interaction_methods: Vec<Method> = methods
                .iter()
                .copied()
                .filter(|m| matches!(m, Method::Cd | Method::LeaveOneOut))
                .collect();
            let n_positive = instances
                .iter()
                .filter(|i| i.direction == Polarity::Pos)
                .count();
            let n_negative = instances.len() - n_positive;
            let mut separation = Vec::new();
            let mut reference_quantiles = Vec::new();
            for &method in &interaction_methods {
                let mut pos = Vec::new();
                let mut neg = Vec::new();
                for instance in &instances {
                    let tokens = &train[instance.review].tokens;
                    let score = negation_interaction(model, tokens, instance, method, opts)?;
                    match instance.direction {
                        Polarity::Pos => pos.push(score),
                        Polarity::Neg => neg.push(score),
                        Polarity::Neutral => {}
                    }
                }
                if !pos.is_empty() && !neg.is_empty() {
                    separation.push(MethodStatistic {
                        method: method.tag().to_string(),
                        value: ks_one_sided(&pos, &neg)?,
                        points: pos.len() + neg.len(),
                    });
                }
                let mut reference = reference_interactions(model, train, method, opts)?;
                reference_quantiles
                    .push((method.tag().to_string(), quantiles5(&mut reference)));
            }
            Some(NegationSection {
                n_positive,
                n_negative,
                separation_ks: separation,
                reference_quantiles,
            })
        }
    } else {
        skipped.push("negation: skipped (corpus has no parse trees)".to_string());
        None
    };

    Ok(EvalReport {
        config: EvalReportConfig {
            methods: methods.iter().map(|m| m.tag().to_string()).collect(),
            ig_steps: opts.ig_steps,
            bias_first: opts.bias_first,
            n_train: train.len(),
            n_valid: valid.len(),
            n_test: test.len(),
            bow_valid_accuracy: bow_accuracy,
            ngram_valid_accuracy: ngram_accuracy,
        },
        unigram,
        dissent,
        compositionality,
        negation,
        skipped,
    })
}

/// Serializable attribution output for one sentence.
#[derive(Clone, Debug, Serialize)]
pub struct AttributionOutput {
    pub tokens: Vec<String>,
    pub rows: Vec<AttributionRow>,
}

#[derive(Clone, Debug, Serialize)]
pub struct AttributionRow {
    pub method: String,
    pub orientation: String,
    pub spans: Vec<[usize; 2]>,
    pub scores: Vec<f64>,
    pub bucket_edges: BucketEdges,
    pub ig_steps: Option<usize>,
    pub baseline_token: Option<String>,
    pub rescale_std: Option<f64>,
    pub usable: bool,
}

impl AttributionRow {
    pub fn from_report(report: &AttributionReport) -> Self {
        let scores: Vec<f64> = report.scores.iter().map(|(_, s)| *s).collect();
        AttributionRow {
            method: report.method.tag().to_string(),
            orientation: report.orientation.to_string(),
            spans: report
                .scores
                .iter()
                .map(|(span, _)| [span.start, span.end])
                .collect(),
            bucket_edges: five_level_buckets(&scores),
            scores,
            ig_steps: report.ig_steps,
            baseline_token: report.baseline_token.clone(),
            rescale_std: report.rescale_std,
            usable: report.usable,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn buckets_are_symmetric_and_ordered() {
        let scores = [0.1, -0.2, 0.5, -1.0, 2.0, -0.05, 0.3, 0.8];
        let edges = five_level_buckets(&scores);
        assert!(edges.inner > 0.0 && edges.outer >= edges.inner);
        assert_eq!(bucket_of(0.0, edges), 0);
        assert_eq!(bucket_of(2.5, edges), 2);
        assert_eq!(bucket_of(-2.5, edges), -2);
        assert_eq!(bucket_of(edges.inner, edges), 0);
        for s in &scores {
            assert_eq!(bucket_of(*s, edges), -bucket_of(-*s, edges));
        }
    }

    #[test]
    fn all_zero_scores_bucket_neutral() {
        let edges = five_level_buckets(&[0.0, 0.0]);
        assert_eq!(bucket_of(0.0, edges), 0);
    }
}
