//! Independent scalar transcription of the phrase decomposition for a
//! 1-unit, 1-dimensional, two-step model with the span covering only the
//! first token.
//!
//! This is the derivation script behind `fixtures/cd_scalar_fixture.json`:
//! it re-derives every quantity with bare `f64` arithmetic — its own gate
//! splits, its own permutation averages, its own products — and shares no
//! code with the library. Running the `regenerate_scalar_fixture` test in
//! `acceptance.rs` prints the fixture JSON produced by this file.
//!
//! Step 1 lies inside the phrase: each gate's pre-activation sum is split
//! over four named terms (input, phrase-recurrent, other-recurrent, bias)
//! by averaging telescoping differences over the six orderings that keep
//! the bias first; the term opening an ordering contributes f of the
//! running sum with nothing subtracted, so the sigmoid's f(0) constant
//! stays attached to the bias. Step 2 lies outside the phrase: the input
//! pre-activation joins the other-recurrent term and the split runs over
//! three terms (two orderings, bias first).

/// All scalar weights of the 1-unit model plus the two-class softmax head.
#[derive(Clone, Copy, Debug)]
pub struct ScalarModel {
    pub w_o: f64,
    pub w_f: f64,
    pub w_i: f64,
    pub w_g: f64,
    pub v_o: f64,
    pub v_f: f64,
    pub v_i: f64,
    pub v_g: f64,
    pub b_o: f64,
    pub b_f: f64,
    pub b_i: f64,
    pub b_g: f64,
    pub w_soft: [f64; 2],
    pub b_soft: [f64; 2],
}

#[derive(Clone, Copy, Debug)]
pub struct ScalarDecomposition {
    pub beta_h: f64,
    pub gamma_h: f64,
    pub beta_c: f64,
    pub gamma_c: f64,
    pub beta_logits: [f64; 2],
    pub scalar_score: f64,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Four-term split, orderings restricted to bias first. The remaining
/// three terms (input a, phrase p, other o) take all six orders.
fn split4(f: fn(f64) -> f64, a: f64, p: f64, o: f64, bias: f64) -> (f64, f64, f64, f64) {
    let orderings: [[usize; 3]; 6] = [
        [0, 1, 2],
        [0, 2, 1],
        [1, 0, 2],
        [1, 2, 0],
        [2, 0, 1],
        [2, 1, 0],
    ];
    let values = [a, p, o];
    let mut contributions = [0.0f64; 4]; // a, p, o, bias
    for order in orderings {
        let mut running = bias;
        let mut prev = f(bias);
        contributions[3] += prev;
        for &idx in &order {
            running += values[idx];
            let cur = f(running);
            contributions[idx] += cur - prev;
            prev = cur;
        }
    }
    (
        contributions[0] / 6.0,
        contributions[1] / 6.0,
        contributions[2] / 6.0,
        contributions[3] / 6.0,
    )
}

/// Three-term split (phrase p, other o, bias), bias first, two orderings.
fn split3(f: fn(f64) -> f64, p: f64, o: f64, bias: f64) -> (f64, f64, f64) {
    let fb = f(bias);
    // Ordering bias, p, o.
    let p1 = f(bias + p) - fb;
    let o1 = f(bias + p + o) - f(bias + p);
    // Ordering bias, o, p.
    let o2 = f(bias + o) - fb;
    let p2 = f(bias + o + p) - f(bias + o);
    ((p1 + p2) / 2.0, (o1 + o2) / 2.0, fb)
}

/// Two-term split of tanh for the output stage.
fn split_tanh_pair(first: f64, second: f64) -> f64 {
    0.5 * (first.tanh() + (first + second).tanh() - second.tanh())
}

/// Runs the decomposition for inputs `(x1, x2)` with the phrase = token 1.
pub fn decompose_first_token(m: &ScalarModel, x1: f64, x2: f64) -> ScalarDecomposition {
    // ---- step 1, inside the phrase; previous state is all zero ----
    let (f_x, f_p, _f_o, f_b) = split4(sigmoid, m.w_f * x1, 0.0, 0.0, m.b_f);
    let (i_x, i_p, i_o, i_b) = split4(sigmoid, m.w_i * x1, 0.0, 0.0, m.b_i);
    let (g_x, g_p, g_o, g_b) = split4(f64::tanh, m.w_g * x1, 0.0, 0.0, m.b_g);

    let i_full_1 = sigmoid(m.w_i * x1 + m.b_i);
    let g_full_1 = (m.w_g * x1 + m.b_g).tanh();

    // Forget product against a zero previous cell state.
    let beta_f1 = (f_x + f_p + f_b) * 0.0;
    let gamma_f1 = 0.0;

    // Update product, phrase side: products of phrase-derived factors with
    // at most one of the two biases.
    let beta_u1 = i_x * (g_x + g_p + g_b) + i_p * (g_x + g_p + g_b) + i_b * (g_x + g_p);
    let gamma_u1 = i_o * g_full_1 + i_full_1 * g_o - i_o * g_o + i_b * g_b;

    let beta_c1 = beta_f1 + beta_u1;
    let gamma_c1 = gamma_f1 + gamma_u1;

    let o_1 = sigmoid(m.w_o * x1 + m.b_o);
    let beta_h1 = o_1 * split_tanh_pair(beta_c1, gamma_c1);
    let gamma_h1 = o_1 * split_tanh_pair(gamma_c1, beta_c1);
    let h_1 = beta_h1 + gamma_h1;

    // ---- step 2, outside the phrase ----
    let other_f = m.w_f * x2 + m.v_f * gamma_h1;
    let other_i = m.w_i * x2 + m.v_i * gamma_h1;
    let other_g = m.w_g * x2 + m.v_g * gamma_h1;
    let (f_p2, f_o2, f_b2) = split3(sigmoid, m.v_f * beta_h1, other_f, m.b_f);
    let (i_p2, i_o2, i_b2) = split3(sigmoid, m.v_i * beta_h1, other_i, m.b_i);
    let (g_p2, g_o2, g_b2) = split3(f64::tanh, m.v_g * beta_h1, other_g, m.b_g);

    let f_full_2 = sigmoid(m.w_f * x2 + m.v_f * h_1 + m.b_f);
    let i_full_2 = sigmoid(m.w_i * x2 + m.v_i * h_1 + m.b_i);
    let g_full_2 = (m.w_g * x2 + m.v_g * h_1 + m.b_g).tanh();

    let beta_f2 = (f_p2 + f_b2) * beta_c1;
    let gamma_f2 = f_o2 * beta_c1 + f_full_2 * gamma_c1;

    let beta_u2 = i_p2 * (g_p2 + g_b2) + i_b2 * g_p2;
    let gamma_u2 = i_o2 * g_full_2 + i_full_2 * g_o2 - i_o2 * g_o2 + i_b2 * g_b2;

    let beta_c2 = beta_f2 + beta_u2;
    let gamma_c2 = gamma_f2 + gamma_u2;

    let o_2 = sigmoid(m.w_o * x2 + m.v_o * h_1 + m.b_o);
    let beta_h2 = o_2 * split_tanh_pair(beta_c2, gamma_c2);
    let gamma_h2 = o_2 * split_tanh_pair(gamma_c2, beta_c2);

    let beta_logits = [m.w_soft[0] * beta_h2, m.w_soft[1] * beta_h2];
    ScalarDecomposition {
        beta_h: beta_h2,
        gamma_h: gamma_h2,
        beta_c: beta_c2,
        gamma_c: gamma_c2,
        beta_logits,
        scalar_score: beta_logits[1] - beta_logits[0],
    }
}
