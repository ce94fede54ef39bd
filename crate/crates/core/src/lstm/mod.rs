//! A single-layer LSTM classifier built from scratch: parameters, forward
//! traces, manual backpropagation through time, Adam training with early
//! stopping, and model (de)serialization.

mod io;
mod train;

pub use io::{load_model, save_model, ModelIoError};
pub use train::{train_lstm, TrainConfig, TrainError, TrainLog};

use crate::numerics::{sigmoid, stable_softmax, Matrix, Nonlinearity, Vector};
use crate::real::Real;
use rand::Rng;
use std::collections::HashMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LstmError {
    #[error("empty input")]
    EmptyInput,
    #[error("class index {class} out of range for {n_classes} classes")]
    ClassOutOfRange { class: usize, n_classes: usize },
}

/// All weights of the recurrent cell plus the softmax head.
///
/// Shapes: the four input maps are `d2 x d1`, the four recurrent maps
/// `d2 x d2`, gate biases length `d2`, the softmax matrix `C x d2` and its
/// bias length `C`.
#[derive(Clone, Debug, PartialEq)]
pub struct LstmParams<F> {
    pub d1: usize,
    pub d2: usize,
    pub n_classes: usize,
    pub w_o: Matrix<F>,
    pub w_f: Matrix<F>,
    pub w_i: Matrix<F>,
    pub w_g: Matrix<F>,
    pub v_o: Matrix<F>,
    pub v_f: Matrix<F>,
    pub v_i: Matrix<F>,
    pub v_g: Matrix<F>,
    pub b_o: Vector<F>,
    pub b_f: Vector<F>,
    pub b_i: Vector<F>,
    pub b_g: Vector<F>,
    pub w_soft: Matrix<F>,
    pub b_soft: Vector<F>,
}

impl<F: Real> LstmParams<F> {
    pub fn zeros(d1: usize, d2: usize, n_classes: usize) -> Self {
        LstmParams {
            d1,
            d2,
            n_classes,
            w_o: Matrix::zeros(d2, d1),
            w_f: Matrix::zeros(d2, d1),
            w_i: Matrix::zeros(d2, d1),
            w_g: Matrix::zeros(d2, d1),
            v_o: Matrix::zeros(d2, d2),
            v_f: Matrix::zeros(d2, d2),
            v_i: Matrix::zeros(d2, d2),
            v_g: Matrix::zeros(d2, d2),
            b_o: Vector::zeros(d2),
            b_f: Vector::zeros(d2),
            b_i: Vector::zeros(d2),
            b_g: Vector::zeros(d2),
            w_soft: Matrix::zeros(n_classes, d2),
            b_soft: Vector::zeros(n_classes),
        }
    }

    /// Uniform init in `(-scale, scale)` for every weight and bias.
    pub fn random(d1: usize, d2: usize, n_classes: usize, rng: &mut impl Rng, scale: f64) -> Self {
        let mut p = Self::zeros(d1, d2, n_classes);
        p.visit_mut(|m| *m = m.map(|_| crate::real::real(rng.random_range(-scale..scale))));
        p.visit_bias_mut(|v| *v = v.map(|_| crate::real::real(rng.random_range(-scale..scale))));
        p
    }

    /// Checks shape consistency and finiteness of every entry.
    pub fn validate(&self) -> Result<(), String> {
        let checks: [(&str, &Matrix<F>, usize, usize); 9] = [
            ("w_o", &self.w_o, self.d2, self.d1),
            ("w_f", &self.w_f, self.d2, self.d1),
            ("w_i", &self.w_i, self.d2, self.d1),
            ("w_g", &self.w_g, self.d2, self.d1),
            ("v_o", &self.v_o, self.d2, self.d2),
            ("v_f", &self.v_f, self.d2, self.d2),
            ("v_i", &self.v_i, self.d2, self.d2),
            ("v_g", &self.v_g, self.d2, self.d2),
            ("w_soft", &self.w_soft, self.n_classes, self.d2),
        ];
        for (name, m, rows, cols) in checks {
            if m.rows() != rows || m.cols() != cols {
                return Err(format!(
                    "{name}: expected {rows}x{cols}, got {}x{}",
                    m.rows(),
                    m.cols()
                ));
            }
            if !m.is_finite() {
                return Err(format!("{name}: non-finite entry"));
            }
        }
        let biases: [(&str, &Vector<F>, usize); 5] = [
            ("b_o", &self.b_o, self.d2),
            ("b_f", &self.b_f, self.d2),
            ("b_i", &self.b_i, self.d2),
            ("b_g", &self.b_g, self.d2),
            ("b_soft", &self.b_soft, self.n_classes),
        ];
        for (name, v, len) in biases {
            if v.len() != len {
                return Err(format!("{name}: expected length {len}, got {}", v.len()));
            }
            if !v.is_finite() {
                return Err(format!("{name}: non-finite entry"));
            }
        }
        Ok(())
    }

    pub(crate) fn visit_mut(&mut self, mut f: impl FnMut(&mut Matrix<F>)) {
        f(&mut self.w_o);
        f(&mut self.w_f);
        f(&mut self.w_i);
        f(&mut self.w_g);
        f(&mut self.v_o);
        f(&mut self.v_f);
        f(&mut self.v_i);
        f(&mut self.v_g);
        f(&mut self.w_soft);
    }

    pub(crate) fn visit_bias_mut(&mut self, mut f: impl FnMut(&mut Vector<F>)) {
        f(&mut self.b_o);
        f(&mut self.b_f);
        f(&mut self.b_i);
        f(&mut self.b_g);
        f(&mut self.b_soft);
    }
}

/// One timestep of a forward pass: the input, gate pre-activation sums,
/// gate activations, and the resulting cell and hidden states.
#[derive(Clone, Debug)]
pub struct StepTrace<F> {
    pub x: Vector<F>,
    pub pre_o: Vector<F>,
    pub pre_f: Vector<F>,
    pub pre_i: Vector<F>,
    pub pre_g: Vector<F>,
    pub o: Vector<F>,
    pub f: Vector<F>,
    pub i: Vector<F>,
    pub g: Vector<F>,
    pub c: Vector<F>,
    pub h: Vector<F>,
}

/// Per-timestep record of one forward pass, `t = 1..=T`.
#[derive(Clone, Debug)]
pub struct ForwardTrace<F> {
    pub steps: Vec<StepTrace<F>>,
}

impl<F: Real> ForwardTrace<F> {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn h_final(&self) -> &Vector<F> {
        &self.steps.last().expect("trace is never empty").h
    }

    /// Largest violation of the cell update identities over all steps:
    /// `c_t = f_t*c_{t-1} + i_t*g_t` and `h_t = o_t*tanh(c_t)`.
    pub fn max_consistency_error(&self) -> F {
        let mut worst = F::zero();
        let mut prev_c = Vector::zeros(self.steps[0].c.len());
        for step in &self.steps {
            let c = step.f.hadamard(&prev_c).add(&step.i.hadamard(&step.g));
            let h = step.o.hadamard(&step.c.map(|x| x.tanh()));
            worst = worst.max(c.sub(&step.c).max_abs());
            worst = worst.max(h.sub(&step.h).max_abs());
            prev_c = step.c.clone();
        }
        worst
    }
}

/// Runs the cell over the sequence with zero initial state.
pub fn forward<F: Real>(
    params: &LstmParams<F>,
    xs: &[Vector<F>],
) -> Result<ForwardTrace<F>, LstmError> {
    if xs.is_empty() {
        return Err(LstmError::EmptyInput);
    }
    let mut steps = Vec::with_capacity(xs.len());
    let mut h = Vector::zeros(params.d2);
    let mut c = Vector::zeros(params.d2);
    for x in xs {
        let pre_o = params.w_o.matvec(x).add(&params.v_o.matvec(&h)).add(&params.b_o);
        let pre_f = params.w_f.matvec(x).add(&params.v_f.matvec(&h)).add(&params.b_f);
        let pre_i = params.w_i.matvec(x).add(&params.v_i.matvec(&h)).add(&params.b_i);
        let pre_g = params.w_g.matvec(x).add(&params.v_g.matvec(&h)).add(&params.b_g);
        let o = pre_o.map(sigmoid);
        let f = pre_f.map(sigmoid);
        let i = pre_i.map(sigmoid);
        let g = Nonlinearity::Tanh.apply(&pre_g);
        c = f.hadamard(&c).add(&i.hadamard(&g));
        h = o.hadamard(&c.map(|x| x.tanh()));
        steps.push(StepTrace {
            x: x.clone(),
            pre_o,
            pre_f,
            pre_i,
            pre_g,
            o,
            f,
            i,
            g,
            c: c.clone(),
            h: h.clone(),
        });
    }
    Ok(ForwardTrace { steps })
}

/// Class logits `W_soft * h_T + b_soft` for the final hidden state.
pub fn logits<F: Real>(params: &LstmParams<F>, trace: &ForwardTrace<F>) -> Vector<F> {
    params.w_soft.matvec(trace.h_final()).add(&params.b_soft)
}

/// Class probabilities for the sequence.
pub fn classify<F: Real>(
    params: &LstmParams<F>,
    xs: &[Vector<F>],
) -> Result<Vector<F>, LstmError> {
    let trace = forward(params, xs)?;
    Ok(stable_softmax(&logits(params, &trace)))
}

/// Gradients of `log p(target)` with respect to every input vector and
/// every parameter.
#[derive(Clone, Debug)]
pub struct LstmGradients<F> {
    /// One gradient per input position.
    pub inputs: Vec<Vector<F>>,
    /// Parameter gradients, stored in a params-shaped container.
    pub params: LstmParams<F>,
    /// Probabilities from the forward pass (handy for chain-ruling to
    /// probability-space gradients).
    pub probabilities: Vector<F>,
}

/// Backpropagation through time for `log p(target)`.
///
/// The trace must come from [`forward`] with the same parameters.
pub fn backward<F: Real>(
    params: &LstmParams<F>,
    trace: &ForwardTrace<F>,
    target_class: usize,
) -> Result<LstmGradients<F>, LstmError> {
    if target_class >= params.n_classes {
        return Err(LstmError::ClassOutOfRange {
            class: target_class,
            n_classes: params.n_classes,
        });
    }
    let t_len = trace.len();
    let probs = stable_softmax(&logits(params, trace));

    let mut grads = LstmParams::zeros(params.d1, params.d2, params.n_classes);
    let mut input_grads = vec![Vector::zeros(params.d1); t_len];

    // d log p_j / d z = e_j - p.
    let mut dz = probs.neg();
    dz[target_class] += F::one();
    grads.w_soft.add_outer(&dz, trace.h_final());
    grads.b_soft.add_assign(&dz);

    let mut dh = params.w_soft.matvec_t(&dz);
    let mut dc = Vector::zeros(params.d2);

    for t in (0..t_len).rev() {
        let step = &trace.steps[t];
        let (h_prev, c_prev) = if t == 0 {
            (Vector::zeros(params.d2), Vector::zeros(params.d2))
        } else {
            (trace.steps[t - 1].h.clone(), trace.steps[t - 1].c.clone())
        };

        let tanh_c = step.c.map(|x| x.tanh());
        let d_o = dh.hadamard(&tanh_c);
        dc.add_assign(&dh.hadamard(&step.o).hadamard(&tanh_c.map(|y| F::one() - y * y)));

        let d_f = dc.hadamard(&c_prev);
        let d_i = dc.hadamard(&step.g);
        let d_g = dc.hadamard(&step.i);
        let dc_prev = dc.hadamard(&step.f);

        let da_o = d_o.hadamard(&step.o.map(|s| s * (F::one() - s)));
        let da_f = d_f.hadamard(&step.f.map(|s| s * (F::one() - s)));
        let da_i = d_i.hadamard(&step.i.map(|s| s * (F::one() - s)));
        let da_g = d_g.hadamard(&step.g.map(|y| F::one() - y * y));

        grads.w_o.add_outer(&da_o, &step.x);
        grads.w_f.add_outer(&da_f, &step.x);
        grads.w_i.add_outer(&da_i, &step.x);
        grads.w_g.add_outer(&da_g, &step.x);
        grads.v_o.add_outer(&da_o, &h_prev);
        grads.v_f.add_outer(&da_f, &h_prev);
        grads.v_i.add_outer(&da_i, &h_prev);
        grads.v_g.add_outer(&da_g, &h_prev);
        grads.b_o.add_assign(&da_o);
        grads.b_f.add_assign(&da_f);
        grads.b_i.add_assign(&da_i);
        grads.b_g.add_assign(&da_g);

        input_grads[t] = params
            .w_o
            .matvec_t(&da_o)
            .add(&params.w_f.matvec_t(&da_f))
            .add(&params.w_i.matvec_t(&da_i))
            .add(&params.w_g.matvec_t(&da_g));

        dh = params
            .v_o
            .matvec_t(&da_o)
            .add(&params.v_f.matvec_t(&da_f))
            .add(&params.v_i.matvec_t(&da_i))
            .add(&params.v_g.matvec_t(&da_g));
        dc = dc_prev;
    }

    Ok(LstmGradients {
        inputs: input_grads,
        params: grads,
        probabilities: probs,
    })
}

/// A trained classifier: weights plus the vocabulary and its (fine-tuned)
/// embedding table. Embeddings are rows of a `vocab_size x d1` matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct LstmModel {
    pub params: LstmParams<f64>,
    pub vocab: Vec<String>,
    pub embeddings: Matrix<f64>,
    index: HashMap<String, usize>,
}

impl LstmModel {
    pub fn new(params: LstmParams<f64>, vocab: Vec<String>, embeddings: Matrix<f64>) -> Self {
        assert_eq!(embeddings.rows(), vocab.len(), "one embedding row per token");
        assert!(
            vocab.is_empty() || embeddings.cols() == params.d1,
            "embedding width {} != d1 {}",
            embeddings.cols(),
            params.d1
        );
        let index = vocab
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i))
            .collect();
        LstmModel {
            params,
            vocab,
            embeddings,
            index,
        }
    }

    pub fn token_index(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    /// Embedding of a vocabulary token, if present.
    pub fn embedding(&self, token: &str) -> Option<Vector<f64>> {
        self.token_index(token)
            .map(|i| Vector::new(self.embeddings.row(i).to_vec()))
    }

    /// Embeds a token sequence. Out-of-vocabulary tokens map to the zero
    /// vector with a warning.
    pub fn embed(&self, tokens: &[String]) -> Vec<Vector<f64>> {
        tokens
            .iter()
            .map(|tok| {
                self.embedding(tok).unwrap_or_else(|| {
                    log::warn!("token {tok:?} not in model vocabulary; using zero vector");
                    Vector::zeros(self.params.d1)
                })
            })
            .collect()
    }

    pub fn classify_tokens(&self, tokens: &[String]) -> Result<Vector<f64>, LstmError> {
        classify(&self.params, &self.embed(tokens))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn vec64(xs: &[f64]) -> Vector<f64> {
        Vector::new(xs.to_vec())
    }

    #[test]
    fn zero_params_give_zero_states_and_uniform_probabilities() {
        let params = LstmParams::<f64>::zeros(3, 4, 2);
        let xs = vec![vec64(&[1.0, -2.0, 0.5]), vec64(&[0.3, 0.3, 0.3])];
        let trace = forward(&params, &xs).unwrap();
        for step in &trace.steps {
            assert_eq!(step.h.max_abs(), 0.0);
            assert_eq!(step.c.max_abs(), 0.0);
        }
        let p = classify(&params, &xs).unwrap();
        assert!((p[0] - 0.5).abs() < 1e-15 && (p[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn empty_input_is_rejected() {
        let params = LstmParams::<f64>::zeros(2, 2, 2);
        assert!(matches!(forward(&params, &[]), Err(LstmError::EmptyInput)));
    }

    #[test]
    fn scalar_two_step_hand_computation() {
        // d1 = d2 = 1 with hand-set weights; the expected values are the
        // cell equations evaluated with straight-line scalar arithmetic.
        let mut p = LstmParams::<f64>::zeros(1, 1, 2);
        p.w_o = Matrix::from_rows(vec![vec![0.5]]);
        p.w_f = Matrix::from_rows(vec![vec![-0.3]]);
        p.w_i = Matrix::from_rows(vec![vec![0.8]]);
        p.w_g = Matrix::from_rows(vec![vec![1.1]]);
        p.v_o = Matrix::from_rows(vec![vec![0.2]]);
        p.v_f = Matrix::from_rows(vec![vec![0.4]]);
        p.v_i = Matrix::from_rows(vec![vec![-0.6]]);
        p.v_g = Matrix::from_rows(vec![vec![0.7]]);
        p.b_o = vec64(&[0.1]);
        p.b_f = vec64(&[-0.2]);
        p.b_i = vec64(&[0.3]);
        p.b_g = vec64(&[0.05]);

        let x1 = 0.9;
        let x2 = -0.4;
        let sig = |x: f64| 1.0 / (1.0 + (-x).exp());

        let o1 = sig(0.5 * x1 + 0.1);
        // The forget term vanishes at t = 1 because c_0 = 0.
        let i1 = sig(0.8 * x1 + 0.3);
        let g1 = (1.1 * x1 + 0.05).tanh();
        let c1 = i1 * g1;
        let h1 = o1 * c1.tanh();

        let o2 = sig(0.5 * x2 + 0.2 * h1 + 0.1);
        let f2 = sig(-0.3 * x2 + 0.4 * h1 - 0.2);
        let i2 = sig(0.8 * x2 - 0.6 * h1 + 0.3);
        let g2 = (1.1 * x2 + 0.7 * h1 + 0.05).tanh();
        let c2 = f2 * c1 + i2 * g2;
        let h2 = o2 * c2.tanh();

        let trace = forward(&p, &[vec64(&[x1]), vec64(&[x2])]).unwrap();
        assert!((trace.steps[1].c[0] - c2).abs() < 1e-15);
        assert!((trace.steps[1].h[0] - h2).abs() < 1e-15);
        assert!((trace.steps[0].h[0] - h1).abs() < 1e-15);
    }

    #[test]
    fn trace_consistency_on_random_models() {
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        for _ in 0..20 {
            let d1 = rng.random_range(1..4);
            let d2 = rng.random_range(1..5);
            let t_len = rng.random_range(1..7);
            let params = LstmParams::<f64>::random(d1, d2, 2, &mut rng, 0.8);
            let xs: Vec<_> = (0..t_len)
                .map(|_| {
                    (0..d1)
                        .map(|_| rng.random_range(-1.0..1.0))
                        .collect::<Vector<f64>>()
                })
                .collect();
            let trace = forward(&params, &xs).unwrap();
            assert!(trace.max_consistency_error() < 1e-12);
            for step in &trace.steps {
                for k in 0..d2 {
                    assert!(step.o[k] > 0.0 && step.o[k] < 1.0);
                    assert!(step.f[k] > 0.0 && step.f[k] < 1.0);
                    assert!(step.i[k] > 0.0 && step.i[k] < 1.0);
                    assert!(step.g[k] > -1.0 && step.g[k] < 1.0);
                }
            }
        }
    }

    #[test]
    fn order_sensitivity_witness() {
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        let params = LstmParams::<f64>::random(2, 3, 2, &mut rng, 0.9);
        let xs = vec![vec64(&[1.0, 0.0]), vec64(&[0.0, 1.0]), vec64(&[-1.0, 0.5])];
        let mut reversed = xs.clone();
        reversed.reverse();
        let a = forward(&params, &xs).unwrap();
        let b = forward(&params, &reversed).unwrap();
        assert!(a.h_final().sub(b.h_final()).max_abs() > 1e-6);
    }

    #[test]
    fn backward_rejects_bad_class() {
        let params = LstmParams::<f64>::zeros(2, 2, 2);
        let trace = forward(&params, &[vec64(&[0.0, 0.0])]).unwrap();
        assert!(matches!(
            backward(&params, &trace, 5),
            Err(LstmError::ClassOutOfRange { class: 5, n_classes: 2 })
        ));
    }

    #[test]
    fn dead_softmax_head_kills_input_gradients() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let mut params = LstmParams::<f64>::random(2, 3, 2, &mut rng, 0.7);
        params.w_soft = Matrix::zeros(2, 3);
        let xs = vec![vec64(&[0.4, -0.2]), vec64(&[0.1, 0.9])];
        let trace = forward(&params, &xs).unwrap();
        let grads = backward(&params, &trace, 0).unwrap();
        for g in &grads.inputs {
            assert_eq!(g.max_abs(), 0.0);
        }
    }

    #[test]
    fn softmax_probability_gradient_identity() {
        // d p_j / d z_j = p_j (1 - p_j): check via the log-prob gradient
        // d log p_j / d z_j = 1 - p_j.
        let z = vec64(&[0.3, -1.2, 0.7]);
        let p = stable_softmax(&z);
        for j in 0..3 {
            let dlog_dzj = 1.0 - p[j];
            let dp_dzj = p[j] * dlog_dzj;
            assert!((dp_dzj - p[j] * (1.0 - p[j])).abs() < 1e-15);
        }
    }

    /// Central finite differences of log p(target) with respect to a probe
    /// of the full parameter-and-input space.
    fn finite_difference_check(seed: u64) -> f64 {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let d1 = rng.random_range(2..4);
        let d2 = rng.random_range(2..4);
        let t_len = rng.random_range(1..5);
        let params = LstmParams::<f64>::random(d1, d2, 2, &mut rng, 0.6);
        let xs: Vec<Vector<f64>> = (0..t_len)
            .map(|_| (0..d1).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let target = rng.random_range(0..2);

        let trace = forward(&params, &xs).unwrap();
        let grads = backward(&params, &trace, target).unwrap();

        let log_prob = |params: &LstmParams<f64>, xs: &[Vector<f64>]| -> f64 {
            classify(params, xs).unwrap()[target].ln()
        };

        let h = 1e-5;
        let rel = |analytic: f64, numeric: f64| -> f64 {
            let denom = analytic.abs().max(numeric.abs()).max(1e-3);
            (analytic - numeric).abs() / denom
        };

        let mut worst = 0.0f64;
        // Input gradients.
        for (t, x) in xs.iter().enumerate() {
            for k in 0..x.len() {
                let mut plus = xs.to_vec();
                plus[t][k] += h;
                let mut minus = xs.to_vec();
                minus[t][k] -= h;
                let fd = (log_prob(&params, &plus) - log_prob(&params, &minus)) / (2.0 * h);
                worst = worst.max(rel(grads.inputs[t][k], fd));
            }
        }
        // A deterministic sample of parameter coordinates.
        type Probe = Box<dyn Fn(&mut LstmParams<f64>) -> &mut f64>;
        let probes: Vec<(Probe, f64)> = vec![
            (Box::new(|p: &mut LstmParams<f64>| &mut p.w_f[(0, 0)]), grads.params.w_f[(0, 0)]),
            (Box::new(|p: &mut LstmParams<f64>| &mut p.w_g[(1, 1)]), grads.params.w_g[(1, 1)]),
            (Box::new(|p: &mut LstmParams<f64>| &mut p.v_i[(0, 1)]), grads.params.v_i[(0, 1)]),
            (Box::new(|p: &mut LstmParams<f64>| &mut p.v_o[(1, 0)]), grads.params.v_o[(1, 0)]),
            (Box::new(|p: &mut LstmParams<f64>| &mut p.b_i[0]), grads.params.b_i[0]),
            (Box::new(|p: &mut LstmParams<f64>| &mut p.b_g[1]), grads.params.b_g[1]),
            (Box::new(|p: &mut LstmParams<f64>| &mut p.w_soft[(0, 0)]), grads.params.w_soft[(0, 0)]),
            (Box::new(|p: &mut LstmParams<f64>| &mut p.b_soft[1]), grads.params.b_soft[1]),
        ];
        for (access, analytic) in probes {
            let mut plus = params.clone();
            *access(&mut plus) += h;
            let mut minus = params.clone();
            *access(&mut minus) -= h;
            let fd = (log_prob(&plus, &xs) - log_prob(&minus, &xs)) / (2.0 * h);
            worst = worst.max(rel(analytic, fd));
        }
        worst
    }

    #[test]
    fn gradients_match_finite_differences() {
        for seed in 0..20 {
            let worst = finite_difference_check(seed);
            assert!(worst <= 1e-4, "seed {seed}: worst relative error {worst}");
        }
    }

    #[test]
    fn forward_works_at_f32_too() {
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let params = LstmParams::<f32>::random(2, 3, 2, &mut rng, 0.5);
        let xs = vec![Vector::new(vec![0.5f32, -0.25])];
        let trace = forward(&params, &xs).unwrap();
        assert!(trace.max_consistency_error() < 1e-6);
    }
}
