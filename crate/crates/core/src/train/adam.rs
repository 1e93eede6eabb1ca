use crate::model::ModelParams;
use crate::scalar::Scalar;

/// Adam with bias correction.
#[derive(Clone, Debug, PartialEq)]
pub struct Adam<S> {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub step: u64,
    pub first_moment: ModelParams<S>,
    pub second_moment: ModelParams<S>,
}

impl<S: Scalar> Adam<S> {
    pub fn new(params: &ModelParams<S>) -> Self {
        Adam {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            first_moment: params.zeros_like(),
            second_moment: params.zeros_like(),
        }
    }

    pub fn update(&mut self, params: &mut ModelParams<S>, grads: &ModelParams<S>, lr: f64) {
        self.step += 1;
        let (b1, b2) = (S::of(self.beta1), S::of(self.beta2));
        let one = S::one();
        let c1 = S::of(1.0 - self.beta1.powi(self.step as i32));
        let c2 = S::of(1.0 - self.beta2.powi(self.step as i32));
        let lr = S::of(lr);
        let eps = S::of(self.eps);
        let tensors = params
            .tensors_mut()
            .into_iter()
            .zip(grads.tensors())
            .zip(self.first_moment.tensors_mut())
            .zip(self.second_moment.tensors_mut());
        for (((p, g), m), v) in tensors {
            let it = p
                .data_mut()
                .iter_mut()
                .zip(g.data())
                .zip(m.data_mut())
                .zip(v.data_mut());
            for (((p, &g), m), v) in it {
                *m = b1 * *m + (one - b1) * g;
                *v = b2 * *v + (one - b2) * g * g;
                let m_hat = *m / c1;
                let v_hat = *v / c2;
                *p -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
    }
}

/// Rescales `grads` so that their global L2 norm is at most `max_norm`.
/// Returns the norm before clipping.
pub fn clip_grad_norm<S: Scalar>(grads: &mut ModelParams<S>, max_norm: f64) -> f64 {
    let norm = grads
        .tensors()
        .iter()
        .flat_map(|t| t.data())
        .map(|&x| {
            let x = x.as_f64();
            x * x
        })
        .sum::<f64>()
        .sqrt();
    if norm > max_norm && norm.is_finite() {
        let scale = S::of(max_norm / norm);
        for t in grads.tensors_mut() {
            t.data_mut().iter_mut().for_each(|x| *x *= scale);
        }
    }
    norm
}
