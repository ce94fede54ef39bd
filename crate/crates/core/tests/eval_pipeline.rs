//! Pipeline-level checks that need a trained model: phrase-embedding
//! neighbors, the neutralized-negation control, and report section gating.
//! One model at the full desk scale is trained once and shared.

use ctxdecomp::baselines::Method;
use ctxdecomp::cd::PhraseSpan;
use ctxdecomp::corpus::{
    gen_synthetic_corpus, synthetic::POS_WORDS, LabeledReview, LogisticConfig, Polarity,
    SyntheticCorpus, NEGATION_WORDS,
};
use ctxdecomp::eval::report::run_full_eval;
use ctxdecomp::eval::{
    extract_negations, ks_one_sided, negation_interaction, phrase_embedding_neighbors,
    reference_interactions, EvalOptions, NegationInstance,
};
use ctxdecomp::lstm::{train_lstm, LstmModel, TrainConfig};
use std::sync::OnceLock;

fn trained_model() -> &'static (LstmModel, SyntheticCorpus) {
    static MODEL: OnceLock<(LstmModel, SyntheticCorpus)> = OnceLock::new();
    MODEL.get_or_init(|| {
        let corpus = gen_synthetic_corpus(17, 6250);
        let cfg = TrainConfig {
            embed_dim: 16,
            hidden_dim: 16,
            max_epochs: 40,
            patience: 4,
            seed: 17,
            ..TrainConfig::default()
        };
        let (model, log) = train_lstm(&corpus.train, &corpus.valid, &cfg, None).unwrap();
        assert!(log.valid_accuracy >= 0.95, "accuracy {}", log.valid_accuracy);
        (model, corpus)
    })
}

fn is_negated_positive(tokens: &[String]) -> bool {
    let has_flipper = tokens
        .iter()
        .any(|t| NEGATION_WORDS.contains(&t.as_str()) || t == "used" || t == "far");
    let has_positive = tokens
        .iter()
        .any(|t| POS_WORDS.contains(&t.as_str()) || t == "favorite" || t == "worth");
    has_flipper && has_positive
}

#[test]
fn neighbors_of_a_negated_positive_phrase_are_negated_positives() {
    let (model, corpus) = trained_model();
    let reviews: Vec<LabeledReview> = corpus
        .train
        .iter()
        .take(1500)
        .chain(&corpus.valid)
        .cloned()
        .collect();
    let query: Vec<String> = vec!["not".into(), "good".into()];
    let opts = EvalOptions::default();
    let neighbors =
        phrase_embedding_neighbors(model, &reviews, &query, 5, false, &opts).unwrap();
    assert_eq!(neighbors.len(), 5);
    let hits = neighbors
        .iter()
        .filter(|n| is_negated_positive(&n.tokens))
        .count();
    let listing: Vec<String> = neighbors
        .iter()
        .map(|n| format!("{} ({:.3})", n.tokens.join(" "), n.similarity))
        .collect();
    assert!(
        hits >= 3,
        "only {hits} of top 5 are negated positives: {listing:?}"
    );
    // The query itself was excluded.
    assert!(neighbors.iter().all(|n| n.tokens != query));
}

#[test]
fn query_included_ranks_itself_first_with_similarity_one() {
    let (model, corpus) = trained_model();
    let query: Vec<String> = vec!["not".into(), "good".into()];
    let opts = EvalOptions::default();
    let neighbors =
        phrase_embedding_neighbors(model, &corpus.valid, &query, 3, true, &opts).unwrap();
    assert_eq!(neighbors[0].tokens, query);
    assert_eq!(neighbors[0].similarity, 1.0);
}

#[test]
fn neutralized_negations_fall_back_into_the_reference_distribution() {
    let (model, corpus) = trained_model();
    let opts = EvalOptions::default();
    let instances = extract_negations(&corpus.train).unwrap();
    assert!(instances.len() > 100);

    // Controls: the negated child replaced by a single neutral token (a
    // rotating filler keeps the ensemble from collapsing to one string),
    // removing the interaction. Neutralization must erase the
    // direction signal and pull the scores back into the body of the
    // reference distribution, where the real instances live in its tails.
    let fillers = ["movie", "film", "plot", "story", "acting", "script", "it"];
    let mut pos_control = Vec::new();
    let mut neg_control = Vec::new();
    let mut pos_real = Vec::new();
    let mut neg_real = Vec::new();
    for (k, instance) in instances.iter().enumerate() {
        let tokens = &corpus.train[instance.review].tokens;
        let real = negation_interaction(model, tokens, instance, Method::Cd, &opts).unwrap();
        // The negated child is always the tail of the phrase; splice a
        // single neutral token into its place.
        let mut neutralized = tokens[..instance.negated_child.start - 1].to_vec();
        neutralized.push(fillers[k % fillers.len()].to_string());
        neutralized.extend_from_slice(&tokens[instance.negated_child.end..]);
        let spliced = NegationInstance {
            review: instance.review,
            full: PhraseSpan::new(instance.full.start, instance.negated_child.start),
            negation_term: instance.negation_term,
            negated_child: PhraseSpan::new(
                instance.negated_child.start,
                instance.negated_child.start,
            ),
            direction: instance.direction,
        };
        let control =
            negation_interaction(model, &neutralized, &spliced, Method::Cd, &opts).unwrap();
        match instance.direction {
            Polarity::Pos => {
                pos_real.push(real);
                pos_control.push(control);
            }
            Polarity::Neg => {
                neg_real.push(real);
                neg_control.push(control);
            }
            Polarity::Neutral => {}
        }
    }
    let mut reference = reference_interactions(model, &corpus.valid, Method::Cd, &opts).unwrap();
    reference.sort_by(f64::total_cmp);
    let quantile = |p: f64| reference[(p * (reference.len() - 1) as f64) as usize];
    let median = |v: &[f64]| {
        let mut s = v.to_vec();
        s.sort_by(f64::total_cmp);
        s[s.len() / 2]
    };

    // Direction signal: present in the real instances, gone after
    // neutralization.
    let real_ks = ks_one_sided(&pos_real, &neg_real).unwrap();
    let control_ks = ks_one_sided(&pos_control, &neg_control).unwrap();
    assert!(real_ks >= 0.6, "real negations should separate: {real_ks}");
    assert!(
        control_ks <= 0.2,
        "neutralized negations still separate by direction: KS {control_ks}"
    );

    // Placement: controls inside the reference interquartile range, real
    // instances out in the tails.
    let all_controls = [pos_control, neg_control].concat();
    let control_median = median(&all_controls);
    assert!(
        control_median >= quantile(0.25) && control_median <= quantile(0.75),
        "control median {control_median} outside reference IQR ({}, {})",
        quantile(0.25),
        quantile(0.75)
    );
    assert!(median(&pos_real) > quantile(0.75));
    assert!(median(&neg_real) < quantile(0.25));
}

#[test]
fn report_skips_tree_protocols_without_trees() {
    let (model, corpus) = trained_model();
    let strip = |rs: &[LabeledReview]| -> Vec<LabeledReview> {
        rs.iter()
            .map(|r| LabeledReview {
                tokens: r.tokens.clone(),
                label: r.label,
                tree: None,
            })
            .collect()
    };
    let train = strip(&corpus.train);
    let valid = strip(&corpus.valid);
    let test = strip(&corpus.test);
    let opts = EvalOptions {
        ig_steps: 10,
        ..EvalOptions::default()
    };
    let cfg = LogisticConfig {
        seed: 17,
        ..LogisticConfig::default()
    };
    let report = run_full_eval(
        model,
        &train,
        &valid,
        &test,
        &[Method::Cd, Method::LeaveOneOut],
        &opts,
        &cfg,
    )
    .unwrap();
    assert!(report.compositionality.is_none());
    assert!(report.negation.is_none());
    assert!(report
        .skipped
        .iter()
        .any(|s| s.starts_with("compositionality") && s.contains("skipped")));
    assert!(report
        .skipped
        .iter()
        .any(|s| s.starts_with("negation") && s.contains("skipped")));
    // Tree-free protocols still ran.
    assert!(report.unigram.is_some());
    assert!(report.dissent.is_some());
}

#[test]
fn dissent_and_composition_empty_on_degenerate_corpora() {
    let (model, _) = trained_model();
    let opts = EvalOptions::default();

    // All-agreeing labels: no phrase opposes its review.
    let agree = ctxdecomp::corpus::parse_ptb_tree("(3 (3 good) (3 great))").unwrap();
    let reviews = vec![LabeledReview::from_tree(agree).unwrap()];
    let entries =
        ctxdecomp::eval::compositionality_search(&reviews, model, &[Method::Cd], &opts).unwrap();
    assert!(entries.is_empty());

    // An n-gram model with no learned signal finds no dissent.
    let flat_corpus = vec![
        LabeledReview {
            tokens: vec!["x".into(), "y".into()],
            label: 1,
            tree: None,
        },
        LabeledReview {
            tokens: vec!["y".into(), "x".into()],
            label: 0,
            tree: None,
        },
    ];
    let cfg = LogisticConfig {
        max_epochs: 1,
        ..LogisticConfig::default()
    };
    let (flat_ngram, _) =
        ctxdecomp::corpus::train_logistic_ngram(&flat_corpus, &flat_corpus, &cfg).unwrap();
    let entries =
        ctxdecomp::eval::dissent_search(&flat_corpus, &flat_ngram, model, &[Method::Cd], &opts)
            .unwrap();
    assert!(entries.is_empty());
}

#[test]
fn full_review_negation_mode_also_separates_directions() {
    let (model, corpus) = trained_model();
    let opts = EvalOptions {
        negation_full_review: true,
        ..EvalOptions::default()
    };
    let instances = extract_negations(&corpus.train).unwrap();
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for instance in instances.iter().take(200) {
        let tokens = &corpus.train[instance.review].tokens;
        let score = negation_interaction(model, tokens, instance, Method::Cd, &opts).unwrap();
        match instance.direction {
            Polarity::Pos => pos.push(score),
            Polarity::Neg => neg.push(score),
            Polarity::Neutral => {}
        }
    }
    let ks = ks_one_sided(&pos, &neg).unwrap();
    assert!(ks >= 0.5, "full-review negation KS {ks}");
}

#[test]
fn spans_api_sanity() {
    // Rebased spans in phrase-as-input mode stay in range.
    let instance = NegationInstance {
        review: 0,
        full: PhraseSpan::new(3, 6),
        negation_term: PhraseSpan::new(3, 3),
        negated_child: PhraseSpan::new(4, 6),
        direction: Polarity::Pos,
    };
    assert_eq!(instance.full.len(), 4);
    assert!(instance.full.contains(4));
    assert!(!instance.full.contains(7));
}
