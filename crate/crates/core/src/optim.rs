//! Adam optimizer over flat parameter views, shared by the LSTM trainer and
//! the logistic reference models.

/// Adam with bias-corrected first and second moments.
///
/// Parameters are presented as a list of mutable slices; the list must have
/// the same total length and ordering on every call.
pub(crate) struct Adam {
    learning_rate: f64,
    beta1: f64,
    beta2: f64,
    epsilon: f64,
    step: usize,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Adam {
    pub fn new(n_params: usize, learning_rate: f64, beta1: f64, beta2: f64, epsilon: f64) -> Self {
        Adam {
            learning_rate,
            beta1,
            beta2,
            epsilon,
            step: 0,
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
        }
    }

    pub fn step(&mut self, params: &mut [&mut [f64]], grads: &[&[f64]]) {
        self.step += 1;
        let t = self.step as i32;
        let corr1 = 1.0 - self.beta1.powi(t);
        let corr2 = 1.0 - self.beta2.powi(t);
        let mut k = 0;
        for (buf, gbuf) in params.iter_mut().zip(grads) {
            assert_eq!(buf.len(), gbuf.len(), "param/grad shape drift");
            for (p, &g) in buf.iter_mut().zip(gbuf.iter()) {
                self.m[k] = self.beta1 * self.m[k] + (1.0 - self.beta1) * g;
                self.v[k] = self.beta2 * self.v[k] + (1.0 - self.beta2) * g * g;
                let m_hat = self.m[k] / corr1;
                let v_hat = self.v[k] / corr2;
                *p -= self.learning_rate * m_hat / (v_hat.sqrt() + self.epsilon);
                k += 1;
            }
        }
        assert_eq!(k, self.m.len(), "param count drift");
    }
}

/// Scales gradients in place so their global L2 norm is at most `max_norm`.
pub(crate) fn clip_global_norm(grads: &mut [&mut [f64]], max_norm: f64) {
    let sq: f64 = grads
        .iter()
        .map(|g| g.iter().map(|x| x * x).sum::<f64>())
        .sum();
    let norm = sq.sqrt();
    if norm > max_norm && norm > 0.0 {
        let scale = max_norm / norm;
        for g in grads.iter_mut() {
            for x in g.iter_mut() {
                *x *= scale;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn adam_minimizes_a_quadratic() {
        // f(x) = (x - 3)^2, gradient 2(x - 3).
        let mut x = [0.0f64];
        let mut adam = Adam::new(1, 0.05, 0.9, 0.999, 1e-8);
        for _ in 0..2000 {
            let g = [2.0 * (x[0] - 3.0)];
            adam.step(&mut [&mut x], &[&g]);
        }
        assert!((x[0] - 3.0).abs() < 1e-3);
    }

    #[test]
    fn clipping_preserves_direction() {
        let mut a = [3.0f64, 4.0];
        clip_global_norm(&mut [&mut a], 1.0);
        assert!((a[0] - 0.6).abs() < 1e-12);
        assert!((a[1] - 0.8).abs() < 1e-12);

        let mut b = [0.3f64, 0.4];
        clip_global_norm(&mut [&mut b], 1.0);
        assert_eq!(b, [0.3, 0.4]);
    }
}
