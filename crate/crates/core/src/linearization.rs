//! Linearizing a nonlinearity applied to a sum of named inputs.
//!
//! Given terms `y_1..y_N` (N between 2 and 4) and a gate nonlinearity `f`,
//! each term is assigned a contribution so that the contributions add up to
//! `f(y_1 + .. + y_N)` coordinatewise. A single ordering would use the
//! telescoping differences `f(s_k) - f(s_{k-1})` of partial sums; since the
//! terms have no inherent order, contributions are averaged over every
//! permutation. When one term is a bias, averaging is restricted to the
//! permutations that place the bias first (on by default, switchable).
//!
//! The term opening each permutation contributes `f(y_first)` with no
//! `f(0)` subtracted. For tanh that matches the plain telescoping sum
//! exactly; for sigmoid it pins the `f(0) = 1/2` constant to the leading
//! term (the bias, under the bias-first restriction) so that the
//! completeness identity holds for both nonlinearities.

use crate::numerics::{Nonlinearity, Vector};
use crate::real::Real;
use itertools::Itertools;
use thiserror::Error;

/// Where a summand comes from; routing downstream is by label, not position.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TermLabel {
    PhraseRecurrent,
    OtherRecurrent,
    Input,
    Bias,
}

/// One named summand.
#[derive(Clone, Debug)]
pub struct Term<F> {
    pub label: TermLabel,
    pub value: Vector<F>,
}

impl<F> Term<F> {
    pub fn new(label: TermLabel, value: Vector<F>) -> Self {
        Term { label, value }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LinearizeError {
    #[error("term count {0} outside the supported range 2..=4")]
    TermCount(usize),
    #[error("more than one bias term")]
    MultipleBias,
    #[error("terms have mismatched lengths {0} vs {1}")]
    LengthMismatch(usize, usize),
}

/// A validated group of 2..=4 equal-length terms plus the nonlinearity.
#[derive(Clone, Debug)]
pub struct TermGroup<F> {
    terms: Vec<Term<F>>,
    nonlinearity: Nonlinearity,
}

impl<F: Real> TermGroup<F> {
    pub fn new(terms: Vec<Term<F>>, nonlinearity: Nonlinearity) -> Result<Self, LinearizeError> {
        if !(2..=4).contains(&terms.len()) {
            return Err(LinearizeError::TermCount(terms.len()));
        }
        let n_bias = terms
            .iter()
            .filter(|t| t.label == TermLabel::Bias)
            .count();
        if n_bias > 1 {
            return Err(LinearizeError::MultipleBias);
        }
        let len = terms[0].value.len();
        for t in &terms[1..] {
            if t.value.len() != len {
                return Err(LinearizeError::LengthMismatch(len, t.value.len()));
            }
        }
        Ok(TermGroup {
            terms,
            nonlinearity,
        })
    }

    pub fn terms(&self) -> &[Term<F>] {
        &self.terms
    }

    pub fn nonlinearity(&self) -> Nonlinearity {
        self.nonlinearity
    }

    fn dim(&self) -> usize {
        self.terms[0].value.len()
    }

    fn bias_index(&self) -> Option<usize> {
        self.terms.iter().position(|t| t.label == TermLabel::Bias)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct LinearizeOptions {
    /// Restrict the average to permutations where the bias comes first.
    pub bias_first: bool,
}

impl Default for LinearizeOptions {
    fn default() -> Self {
        LinearizeOptions { bias_first: true }
    }
}

/// Splits `f(sum of terms)` into one contribution per term (same order).
///
/// Uses the default bias-first restriction when a bias term is present.
pub fn linearize<F: Real>(group: &TermGroup<F>) -> Vec<Vector<F>> {
    linearize_with(group, LinearizeOptions::default())
}

/// [`linearize`] with explicit options.
pub fn linearize_with<F: Real>(group: &TermGroup<F>, opts: LinearizeOptions) -> Vec<Vector<F>> {
    let n = group.terms.len();
    let dim = group.dim();
    let f = group.nonlinearity;

    let orderings: Vec<Vec<usize>> = match group.bias_index() {
        Some(b) if opts.bias_first => (0..n)
            .filter(|&i| i != b)
            .permutations(n - 1)
            .map(|rest| std::iter::once(b).chain(rest).collect())
            .collect(),
        _ => (0..n).permutations(n).collect(),
    };

    let mut contributions = vec![Vector::zeros(dim); n];
    for ordering in &orderings {
        let mut running = Vector::zeros(dim);
        // f of the empty prefix counts as zero, see module docs.
        let mut prev = Vector::zeros(dim);
        for &idx in ordering {
            running.add_assign(&group.terms[idx].value);
            let cur = f.apply(&running);
            contributions[idx].add_assign(&cur.sub(&prev));
            prev = cur;
        }
    }
    let inv = F::one() / F::from_usize(orderings.len()).unwrap();
    for c in contributions.iter_mut() {
        c.scale_assign(inv);
    }
    contributions
}

/// Closed form of the two-term split: the contribution assigned to `y1` is
/// `(f(y1) + f(y1 + y2) - f(y2)) / 2`, coordinatewise.
///
/// Identical to [`linearize`] on a bias-free two-term group.
pub fn linearize_pair_closed_form<F: Real>(
    y1: &Vector<F>,
    y2: &Vector<F>,
    nonlinearity: Nonlinearity,
) -> Vector<F> {
    assert_eq!(
        y1.len(),
        y2.len(),
        "linearize_pair_closed_form: length mismatch {} vs {}",
        y1.len(),
        y2.len()
    );
    let half = F::one() / (F::one() + F::one());
    let f = nonlinearity;
    f.apply(y1)
        .add(&f.apply(&y1.add(y2)))
        .sub(&f.apply(y2))
        .scale(half)
}
