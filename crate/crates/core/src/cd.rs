//! Contextual decomposition: splits every cell and hidden state of a
//! forward pass into a phrase part (beta) and a non-phrase part (gamma) for
//! a chosen token span, exactly — `beta_t + gamma_t` reconstructs `h_t` —
//! and reports the phrase's logit contribution `W_soft * beta_T`.
//!
//! Per step, each gate's pre-activation sum is split over its named inputs
//! with the permutation-averaged linearization (four terms inside the
//! phrase, where the current input counts as phrase material; three outside,
//! where it is folded into the non-phrase recurrent term). The forget and
//! update products are then expanded and every cross-term routed to beta
//! when all its factors are phrase-derived (previous beta states, in-phrase
//! input, at most one of the two update biases) and to gamma otherwise; the
//! pure-bias update product goes to gamma. The output gate itself is not
//! decomposed; the final tanh is split over (beta_c, gamma_c) with the
//! two-term linearization and multiplied by the full gate.

use crate::linearization::{
    linearize_pair_closed_form, linearize_with, LinearizeOptions, Term, TermGroup, TermLabel,
};
use crate::lstm::{forward, LstmError, LstmParams};
use crate::numerics::{Matrix, Nonlinearity, Vector};
use crate::real::Real;
use thiserror::Error;

/// Token span, 1-based inclusive on both ends.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PhraseSpan {
    pub start: usize,
    pub end: usize,
}

impl PhraseSpan {
    pub fn new(start: usize, end: usize) -> Self {
        PhraseSpan { start, end }
    }

    pub fn contains(&self, t: usize) -> bool {
        self.start <= t && t <= self.end
    }

    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn validate(&self, t_len: usize) -> Result<(), CdError> {
        if self.start == 0 || self.start > self.end || self.end > t_len {
            return Err(CdError::InvalidSpan {
                start: self.start,
                end: self.end,
                len: t_len,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum CdError {
    #[error("invalid span {start}:{end} for a length-{len} sequence")]
    InvalidSpan {
        start: usize,
        end: usize,
        len: usize,
    },
    #[error("non-finite decomposition state at step {step}")]
    NonFinite { step: usize },
    #[error(
        "scalar score requires exactly 2 classes, got {n_classes}; read beta_logits per class instead"
    )]
    NotTwoClass { n_classes: usize },
    #[error(transparent)]
    Forward(#[from] LstmError),
}

/// Per-step beta/gamma trails, index 0 holding `t = 1`.
#[derive(Clone, Debug)]
pub struct CdState<F> {
    pub beta_h: Vec<Vector<F>>,
    pub gamma_h: Vec<Vector<F>>,
    pub beta_c: Vec<Vector<F>>,
    pub gamma_c: Vec<Vector<F>>,
}

/// Decomposition of one (input, span) pair.
#[derive(Clone, Debug)]
pub struct CdResult<F> {
    pub span: PhraseSpan,
    /// Phrase part of the final hidden state (the phrase embedding).
    pub beta_final: Vector<F>,
    pub gamma_final: Vector<F>,
    /// `W_soft * beta_final`: the phrase's logit contribution.
    pub beta_logits: Vector<F>,
    pub gamma_logits: Vector<F>,
    /// The softmax bias, reported separately: it belongs to neither part.
    pub softmax_bias: Vector<F>,
    pub state: CdState<F>,
}

impl<F: Real> CdResult<F> {
    /// Positive-minus-negative logit contribution of the phrase
    /// (class 1 is positive, class 0 negative). Two-class models only.
    pub fn scalar_score(&self) -> Result<F, CdError> {
        if self.beta_logits.len() != 2 {
            return Err(CdError::NotTwoClass {
                n_classes: self.beta_logits.len(),
            });
        }
        Ok(self.beta_logits[1] - self.beta_logits[0])
    }

    /// Worst reconstruction error of the trails against a forward trace:
    /// max over t of both `|beta_t + gamma_t - h_t|` and the cell analog.
    pub fn max_reconstruction_error(&self, trace: &crate::lstm::ForwardTrace<F>) -> F {
        let mut worst = F::zero();
        for (t, step) in trace.steps.iter().enumerate() {
            let h = self.state.beta_h[t].add(&self.state.gamma_h[t]);
            let c = self.state.beta_c[t].add(&self.state.gamma_c[t]);
            worst = worst.max(h.sub(&step.h).max_abs());
            worst = worst.max(c.sub(&step.c).max_abs());
        }
        worst
    }
}

#[derive(Clone, Copy, Debug)]
pub struct CdOptions {
    /// Restrict linearization averages to bias-first orderings.
    pub bias_first: bool,
}

impl Default for CdOptions {
    fn default() -> Self {
        CdOptions { bias_first: true }
    }
}

/// Contributions of one gate's pre-activation summands.
struct GateSplit<F> {
    /// Present only inside the phrase, where the step input is its own term.
    input: Option<Vector<F>>,
    phrase: Vector<F>,
    other: Vector<F>,
    bias: Vector<F>,
}

impl<F: Real> GateSplit<F> {
    /// The gate factor multiplying phrase-derived cell state in the forget
    /// product: recurrent-phrase + bias, plus the input term in phrase.
    fn phrase_factor(&self) -> Vector<F> {
        let mut sum = self.phrase.add(&self.bias);
        if let Some(input) = &self.input {
            sum = sum.add(input);
        }
        sum
    }
}

fn split_gate<F: Real>(
    a_input: Vector<F>,
    a_phrase: Vector<F>,
    a_other: Vector<F>,
    bias: &Vector<F>,
    nonlinearity: Nonlinearity,
    in_phrase: bool,
    opts: LinearizeOptions,
) -> GateSplit<F> {
    if in_phrase {
        let group = TermGroup::new(
            vec![
                Term::new(TermLabel::Input, a_input),
                Term::new(TermLabel::PhraseRecurrent, a_phrase),
                Term::new(TermLabel::OtherRecurrent, a_other),
                Term::new(TermLabel::Bias, bias.clone()),
            ],
            nonlinearity,
        )
        .expect("valid four-term group");
        let mut parts = linearize_with(&group, opts);
        GateSplit {
            bias: parts.pop().unwrap(),
            other: parts.pop().unwrap(),
            phrase: parts.pop().unwrap(),
            input: Some(parts.pop().unwrap()),
        }
    } else {
        // Outside the phrase the step input is non-phrase material and is
        // folded into the non-phrase recurrent term.
        let group = TermGroup::new(
            vec![
                Term::new(TermLabel::PhraseRecurrent, a_phrase),
                Term::new(TermLabel::OtherRecurrent, a_input.add(&a_other)),
                Term::new(TermLabel::Bias, bias.clone()),
            ],
            nonlinearity,
        )
        .expect("valid three-term group");
        let mut parts = linearize_with(&group, opts);
        GateSplit {
            bias: parts.pop().unwrap(),
            other: parts.pop().unwrap(),
            phrase: parts.pop().unwrap(),
            input: None,
        }
    }
}

/// Decomposes the run of `params` over `xs` for `span` with default options.
pub fn decompose<F: Real>(
    params: &LstmParams<F>,
    xs: &[Vector<F>],
    span: PhraseSpan,
) -> Result<CdResult<F>, CdError> {
    decompose_with(params, xs, span, CdOptions::default())
}

pub fn decompose_with<F: Real>(
    params: &LstmParams<F>,
    xs: &[Vector<F>],
    span: PhraseSpan,
    opts: CdOptions,
) -> Result<CdResult<F>, CdError> {
    span.validate(xs.len())?;
    let trace = forward(params, xs)?;
    let lin_opts = LinearizeOptions {
        bias_first: opts.bias_first,
    };
    let d2 = params.d2;

    let mut beta_h = Vector::zeros(d2);
    let mut gamma_h = Vector::zeros(d2);
    let mut beta_c = Vector::zeros(d2);
    let mut gamma_c = Vector::zeros(d2);
    let mut state = CdState {
        beta_h: Vec::with_capacity(xs.len()),
        gamma_h: Vec::with_capacity(xs.len()),
        beta_c: Vec::with_capacity(xs.len()),
        gamma_c: Vec::with_capacity(xs.len()),
    };

    for (idx, step) in trace.steps.iter().enumerate() {
        let t = idx + 1;
        let in_phrase = span.contains(t);

        let pre = |w: &Matrix<F>, v: &Matrix<F>| (w.matvec(&step.x), v.matvec(&beta_h), v.matvec(&gamma_h));

        let (f_x, f_b, f_g) = pre(&params.w_f, &params.v_f);
        let f_split = split_gate(f_x, f_b, f_g, &params.b_f, Nonlinearity::Sigmoid, in_phrase, lin_opts);
        let (i_x, i_b, i_g) = pre(&params.w_i, &params.v_i);
        let i_split = split_gate(i_x, i_b, i_g, &params.b_i, Nonlinearity::Sigmoid, in_phrase, lin_opts);
        let (g_x, g_b, g_g) = pre(&params.w_g, &params.v_g);
        let g_split = split_gate(g_x, g_b, g_g, &params.b_g, Nonlinearity::Tanh, in_phrase, lin_opts);

        // Forget product f_t * c_{t-1}: phrase-derived gate factors keep the
        // phrase cell state; everything else is non-phrase.
        let beta_f = f_split.phrase_factor().hadamard(&beta_c);
        let gamma_f = f_split
            .other
            .hadamard(&beta_c)
            .add(&step.f.hadamard(&gamma_c));

        // Update product i_t * g_t: phrase side enumerates the products of
        // phrase-derived factors with at most one of the two biases; the
        // non-phrase side uses the inclusion-exclusion form around the full
        // gates plus the pure-bias product.
        let mut beta_u = i_split
            .phrase
            .hadamard(&g_split.phrase.add(&g_split.bias))
            .add(&i_split.bias.hadamard(&g_split.phrase));
        if in_phrase {
            let ix = i_split.input.as_ref().expect("input term in phrase");
            let gx = g_split.input.as_ref().expect("input term in phrase");
            beta_u = beta_u
                .add(&ix.hadamard(&gx.add(&g_split.phrase).add(&g_split.bias)))
                .add(&i_split.phrase.add(&i_split.bias).hadamard(gx));
        }
        let gamma_u = i_split
            .other
            .hadamard(&step.g)
            .add(&step.i.hadamard(&g_split.other))
            .sub(&i_split.other.hadamard(&g_split.other))
            .add(&i_split.bias.hadamard(&g_split.bias));

        beta_c = beta_f.add(&beta_u);
        gamma_c = gamma_f.add(&gamma_u);

        // Output stage: split tanh(c_t) over (beta_c, gamma_c) and multiply
        // by the full output gate.
        let l_beta = linearize_pair_closed_form(&beta_c, &gamma_c, Nonlinearity::Tanh);
        let l_gamma = linearize_pair_closed_form(&gamma_c, &beta_c, Nonlinearity::Tanh);
        beta_h = step.o.hadamard(&l_beta);
        gamma_h = step.o.hadamard(&l_gamma);

        if !(beta_h.is_finite() && gamma_h.is_finite() && beta_c.is_finite() && gamma_c.is_finite())
        {
            return Err(CdError::NonFinite { step: t });
        }

        state.beta_h.push(beta_h.clone());
        state.gamma_h.push(gamma_h.clone());
        state.beta_c.push(beta_c.clone());
        state.gamma_c.push(gamma_c.clone());
    }

    let beta_logits = params.w_soft.matvec(&beta_h);
    let gamma_logits = params.w_soft.matvec(&gamma_h);
    Ok(CdResult {
        span,
        beta_final: beta_h,
        gamma_final: gamma_h,
        beta_logits,
        gamma_logits,
        softmax_bias: params.b_soft.clone(),
        state,
    })
}

/// Positive-minus-negative phrase score; kept as a free function mirroring
/// [`CdResult::scalar_score`].
pub fn scalar_score<F: Real>(result: &CdResult<F>) -> Result<F, CdError> {
    result.scalar_score()
}

/// One decomposition per single-token span, reduced to scalar scores.
pub fn word_scores<F: Real>(params: &LstmParams<F>, xs: &[Vector<F>]) -> Result<Vec<F>, CdError> {
    (1..=xs.len())
        .map(|t| decompose(params, xs, PhraseSpan::new(t, t))?.scalar_score())
        .collect()
}
