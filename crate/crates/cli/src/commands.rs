//! Subcommand implementations.

use crate::render;
use crate::{usage, MethodArg, RenderArg, UsageError};
use anyhow::Context;
use ctxdecomp::baselines::{
    cell_decomposition_scores, gradient_input_scores, integrated_gradients_scores,
    leave_one_out_scores, loo_phrase_score, period_baseline, phrase_score_by_sum,
    AttributionReport, Method,
};
use ctxdecomp::cd::{self, PhraseSpan};
use ctxdecomp::corpus::{
    gen_synthetic_corpus, load_review_file, load_tree_file, write_tree_file, LabeledReview,
    LogisticConfig,
};
use ctxdecomp::eval::report::{run_full_eval, AttributionOutput, AttributionRow};
use ctxdecomp::eval::{phrase_embedding_neighbors, EvalOptions};
use ctxdecomp::lstm::{load_model, save_model, train_lstm, LstmModel, TrainConfig};
use std::path::{Path, PathBuf};

/// `1:3`-style 1-based inclusive span argument.
fn parse_span(text: &str) -> anyhow::Result<PhraseSpan> {
    let (q, r) = text
        .split_once(':')
        .ok_or_else(|| UsageError(format!("span must look like q:r, got {text:?}")))?;
    let q: usize = q
        .trim()
        .parse()
        .map_err(|_| UsageError(format!("bad span start {q:?}")))?;
    let r: usize = r
        .trim()
        .parse()
        .map_err(|_| UsageError(format!("bad span end {r:?}")))?;
    Ok(PhraseSpan::new(q, r))
}

/// Formats with six significant digits for human-readable output; the
/// structured reports keep full precision.
pub fn sig6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (5 - magnitude).clamp(0, 12) as usize;
    format!("{x:.decimals$}")
}

fn timestamp_header() -> String {
    let secs = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    format!("# generated_at_unix {secs}\n")
}

fn require_readable(path: &Path, what: &str) -> anyhow::Result<()> {
    if !path.exists() {
        return usage(format!("{what} not found: {}", path.display()));
    }
    Ok(())
}

/// Reads train/valid/test splits from a directory: `<split>.trees` files
/// take precedence, `<split>.tsv` is the tree-less fallback. The test
/// split is optional.
fn load_data_dir(dir: &Path) -> anyhow::Result<(Vec<LabeledReview>, Vec<LabeledReview>, Vec<LabeledReview>)> {
    require_readable(dir, "data directory")?;
    let load_split = |name: &str| -> anyhow::Result<Option<Vec<LabeledReview>>> {
        let trees = dir.join(format!("{name}.trees"));
        if trees.exists() {
            return Ok(Some(load_tree_file(&trees)?));
        }
        let tsv = dir.join(format!("{name}.tsv"));
        if tsv.exists() {
            return Ok(Some(load_review_file(&tsv)?));
        }
        Ok(None)
    };
    let train = load_split("train")?
        .ok_or_else(|| UsageError(format!("no train.trees or train.tsv in {}", dir.display())))?;
    let valid = load_split("valid")?
        .ok_or_else(|| UsageError(format!("no valid.trees or valid.tsv in {}", dir.display())))?;
    let test = load_split("test")?.unwrap_or_default();
    Ok((train, valid, test))
}

fn load_model_checked(path: &Path) -> anyhow::Result<LstmModel> {
    require_readable(path, "model file")?;
    Ok(load_model(path)?)
}

pub fn gen_corpus(out: &Path, size: usize, seed: u64) -> anyhow::Result<()> {
    if size == 0 {
        return usage("--size must be at least 1");
    }
    std::fs::create_dir_all(out).context("creating output directory")?;
    let corpus = gen_synthetic_corpus(seed, size);
    write_tree_file(&out.join("train.trees"), &corpus.train)?;
    write_tree_file(&out.join("valid.trees"), &corpus.valid)?;
    write_tree_file(&out.join("test.trees"), &corpus.test)?;
    println!(
        "wrote {} train / {} valid / {} test reviews to {}",
        corpus.train.len(),
        corpus.valid.len(),
        corpus.test.len(),
        out.display()
    );
    Ok(())
}

pub struct TrainArgs {
    pub seed: u64,
    pub hidden: usize,
    pub embed: usize,
    pub epochs: usize,
    pub patience: usize,
    pub batch: usize,
    pub lr: f64,
    pub clip: f64,
    pub embeddings: Option<PathBuf>,
}

pub fn train(data: &Path, out: &Path, args: TrainArgs) -> anyhow::Result<()> {
    let (train, valid, _) = load_data_dir(data)?;
    let table = match &args.embeddings {
        Some(path) => {
            require_readable(path, "embedding file")?;
            Some(ctxdecomp::corpus::load_embeddings(path, args.embed)?)
        }
        None => None,
    };
    let cfg = TrainConfig {
        embed_dim: args.embed,
        hidden_dim: args.hidden,
        learning_rate: args.lr,
        max_epochs: args.epochs,
        patience: args.patience,
        batch_size: args.batch,
        grad_clip: args.clip,
        seed: args.seed,
        ..TrainConfig::default()
    };
    let (model, log) = train_lstm(&train, &valid, &cfg, table.as_ref())?;

    std::fs::create_dir_all(out).context("creating output directory")?;
    let model_path = out.join("model.ctxd");
    save_model(&model_path, &model)?;

    let mut log_text = timestamp_header();
    log_text.push_str(&format!(
        "config: seed {} hidden {} embed {} lr {} batch {} clip {} max_epochs {} patience {}\n",
        args.seed, args.hidden, args.embed, args.lr, args.batch, args.clip, args.epochs,
        args.patience
    ));
    for (epoch, (train_loss, valid_loss)) in
        log.train_losses.iter().zip(&log.valid_losses).enumerate()
    {
        log_text.push_str(&format!(
            "epoch {} train_loss {} valid_loss {}\n",
            epoch + 1,
            sig6(*train_loss),
            sig6(*valid_loss)
        ));
    }
    log_text.push_str(&format!(
        "stopped_after_epoch {} best_epoch {} best_valid_loss {} valid_accuracy {}\n",
        log.epochs_run,
        log.best_epoch,
        sig6(log.best_valid_loss),
        sig6(log.valid_accuracy)
    ));
    std::fs::write(out.join("train_log.txt"), &log_text).context("writing training log")?;

    println!(
        "model written to {} (best epoch {}, validation accuracy {})",
        model_path.display(),
        log.best_epoch,
        sig6(log.valid_accuracy)
    );
    Ok(())
}

fn methods_of(arg: MethodArg) -> Vec<Method> {
    match arg {
        MethodArg::Cd => vec![Method::Cd],
        MethodArg::Loo => vec![Method::LeaveOneOut],
        MethodArg::Grad => vec![Method::GradInput],
        MethodArg::Ig => vec![Method::IntegratedGradients],
        MethodArg::Cell => vec![Method::CellDecomp],
        MethodArg::All => Method::ALL.to_vec(),
    }
}

/// Builds the per-word (or per-span) report for one method on one sentence.
fn score_sentence(
    model: &LstmModel,
    tokens: &[String],
    method: Method,
    span: Option<PhraseSpan>,
    ig_steps: usize,
) -> anyhow::Result<AttributionReport> {
    let xs = model.embed(tokens);
    let target = 1;
    let mut report = match span {
        Some(span) => {
            let score = match method {
                Method::Cd => cd::decompose(&model.params, &xs, span)?.scalar_score()?,
                Method::LeaveOneOut => loo_phrase_score(&model.params, &xs, span, target)?,
                Method::GradInput => {
                    phrase_score_by_sum(&gradient_input_scores(&model.params, &xs, target)?, span)?
                }
                Method::IntegratedGradients => {
                    let (baseline, _) = period_baseline(model, xs.len());
                    let out = integrated_gradients_scores(
                        &model.params,
                        &xs,
                        target,
                        ig_steps,
                        &baseline,
                    )?;
                    phrase_score_by_sum(&out.scores, span)?
                }
                Method::CellDecomp => {
                    phrase_score_by_sum(&cell_decomposition_scores(&model.params, &xs)?, span)?
                }
            };
            AttributionReport::new(method, vec![(span, score)])
        }
        None => {
            let scores: Vec<f64> = match method {
                Method::Cd => cd::word_scores(&model.params, &xs)?,
                Method::LeaveOneOut => leave_one_out_scores(&model.params, &xs, target)?,
                Method::GradInput => gradient_input_scores(&model.params, &xs, target)?,
                Method::IntegratedGradients => {
                    let (baseline, _) = period_baseline(model, xs.len());
                    integrated_gradients_scores(&model.params, &xs, target, ig_steps, &baseline)?
                        .scores
                }
                Method::CellDecomp => cell_decomposition_scores(&model.params, &xs)?,
            };
            AttributionReport::new(
                method,
                scores
                    .into_iter()
                    .enumerate()
                    .map(|(t, s)| (PhraseSpan::new(t + 1, t + 1), s))
                    .collect(),
            )
        }
    };
    if method == Method::IntegratedGradients {
        report.ig_steps = Some(ig_steps);
        report.baseline_token = model.embedding(".").map(|_| ".".to_string());
    }
    Ok(report)
}

#[allow(clippy::too_many_arguments)]
pub fn attribute(
    model_path: &Path,
    sentence: Option<String>,
    data: Option<PathBuf>,
    method: MethodArg,
    span: Option<String>,
    ig_steps: usize,
    render_mode: RenderArg,
    out: Option<PathBuf>,
) -> anyhow::Result<()> {
    let model = load_model_checked(model_path)?;
    let sentences: Vec<Vec<String>> = match (sentence, data) {
        (Some(s), None) => vec![s.split_whitespace().map(str::to_string).collect()],
        (None, Some(path)) => {
            require_readable(&path, "sentence file")?;
            std::fs::read_to_string(&path)
                .with_context(|| format!("reading {}", path.display()))?
                .lines()
                .filter(|l| !l.trim().is_empty())
                .map(|l| l.split_whitespace().map(str::to_string).collect())
                .collect()
        }
        _ => return usage("provide exactly one of --sentence or --data"),
    };
    if sentences.is_empty() || sentences.iter().any(|s| s.is_empty()) {
        return usage("empty sentence");
    }
    let span = span.map(|s| parse_span(&s)).transpose()?;
    if let Some(span) = span {
        for tokens in &sentences {
            if span.start == 0 || span.start > span.end || span.end > tokens.len() {
                return usage(format!(
                    "span {}:{} outside sentence of length {}",
                    span.start,
                    span.end,
                    tokens.len()
                ));
            }
        }
    }
    let methods = methods_of(method);

    let mut outputs = Vec::new();
    for tokens in &sentences {
        let mut rows = Vec::new();
        for &m in &methods {
            let report = score_sentence(&model, tokens, m, span, ig_steps)?;
            rows.push(AttributionRow::from_report(&report));
        }
        outputs.push(AttributionOutput {
            tokens: tokens.clone(),
            rows,
        });
    }

    match render_mode {
        RenderArg::Ansi => {
            for output in &outputs {
                render::print_ansi(output);
            }
        }
        RenderArg::Html => {
            let dir = out.unwrap_or_else(|| PathBuf::from("."));
            std::fs::create_dir_all(&dir).context("creating output directory")?;
            let path = dir.join("attribution.html");
            std::fs::write(&path, render::html_page(&outputs)).context("writing html")?;
            println!("wrote {}", path.display());
        }
        RenderArg::Report => {
            let body = serde_json::to_string_pretty(&outputs)?;
            match out {
                Some(dir) => {
                    std::fs::create_dir_all(&dir).context("creating output directory")?;
                    let path = dir.join("attribution.txt");
                    std::fs::write(&path, format!("{}{body}\n", timestamp_header()))
                        .context("writing report")?;
                    println!("wrote {}", path.display());
                }
                None => println!("{body}"),
            }
        }
    }
    Ok(())
}

pub fn eval(
    model_path: &Path,
    data: &Path,
    out: &Path,
    method: MethodArg,
    ig_steps: usize,
    seed: u64,
) -> anyhow::Result<()> {
    let model = load_model_checked(model_path)?;
    let (train, valid, test) = load_data_dir(data)?;
    let methods = methods_of(method);
    let opts = EvalOptions {
        ig_steps,
        ..EvalOptions::default()
    };
    let logistic_cfg = LogisticConfig {
        seed,
        embed_dim: model.params.d1,
        ..LogisticConfig::default()
    };
    let report = run_full_eval(&model, &train, &valid, &test, &methods, &opts, &logistic_cfg)?;

    std::fs::create_dir_all(out).context("creating output directory")?;
    let path = out.join("eval_report.txt");
    let body = serde_json::to_string_pretty(&report)?;
    std::fs::write(&path, format!("{}{body}\n", timestamp_header())).context("writing report")?;

    println!("report written to {}", path.display());
    if let Some(unigram) = &report.unigram {
        for stat in &unigram.correlations {
            println!("unigram correlation {}: r = {}", stat.method, sig6(stat.value));
        }
    }
    if let Some(dissent) = &report.dissent {
        for stat in &dissent.separation_ks {
            println!("dissent separation {}: KS = {}", stat.method, sig6(stat.value));
        }
    }
    if let Some(composition) = &report.compositionality {
        for stat in &composition.separation_ks {
            println!(
                "compositionality separation {}: KS = {}",
                stat.method,
                sig6(stat.value)
            );
        }
    }
    if let Some(negation) = &report.negation {
        for stat in &negation.separation_ks {
            println!("negation separation {}: KS = {}", stat.method, sig6(stat.value));
        }
    }
    for note in &report.skipped {
        println!("note: {note}");
    }
    Ok(())
}

pub fn neighbors(model_path: &Path, data: &Path, query: &str, k: usize) -> anyhow::Result<()> {
    let model = load_model_checked(model_path)?;
    let (train, valid, _) = load_data_dir(data)?;
    let query_tokens: Vec<String> = query.split_whitespace().map(str::to_string).collect();
    if query_tokens.is_empty() {
        return usage("empty query");
    }
    if k == 0 {
        log::warn!("k is 0; nothing to list");
        println!("no neighbors requested (k = 0)");
        return Ok(());
    }
    let mut reviews = train;
    reviews.extend(valid);
    let result = phrase_embedding_neighbors(
        &model,
        &reviews,
        &query_tokens,
        k,
        false,
        &EvalOptions::default(),
    )?;
    println!("nearest neighbors of {:?}:", query_tokens.join(" "));
    for (rank, neighbor) in result.iter().enumerate() {
        println!(
            "{:>3}. {}  (cosine {})",
            rank + 1,
            neighbor.tokens.join(" "),
            sig6(neighbor.similarity)
        );
    }
    Ok(())
}
