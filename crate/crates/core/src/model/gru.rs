use rand::Rng;

use crate::scalar::{sigmoid, Scalar};
use crate::tensor::{dot, Matrix};

/// Gated recurrent unit weights. Gate rows are laid out as
/// `[reset; update; candidate]`, each `hidden` wide.
#[derive(Clone, Debug, PartialEq)]
pub struct GruParams<S> {
    pub w_x: Matrix<S>,
    pub w_h: Matrix<S>,
    pub b_x: Matrix<S>,
    pub b_h: Matrix<S>,
}

/// Everything one forward step needs to be differentiated later.
#[derive(Clone, Debug)]
pub struct GruStep<S> {
    pub x: Vec<S>,
    pub h_prev: Vec<S>,
    pub reset: Vec<S>,
    pub update: Vec<S>,
    pub candidate: Vec<S>,
    /// `W_hn h_prev + b_hn`, before the reset gate is applied.
    pub hidden_lin: Vec<S>,
    pub h: Vec<S>,
}

impl<S: Scalar> GruParams<S> {
    pub fn random<R: Rng + ?Sized>(input: usize, hidden: usize, rng: &mut R) -> Self {
        let bound = 1.0 / (hidden as f64).sqrt();
        GruParams {
            w_x: Matrix::uniform(3 * hidden, input, bound, rng),
            w_h: Matrix::uniform(3 * hidden, hidden, bound, rng),
            b_x: Matrix::uniform(1, 3 * hidden, bound, rng),
            b_h: Matrix::uniform(1, 3 * hidden, bound, rng),
        }
    }

    pub fn zeros_like(&self) -> Self {
        GruParams {
            w_x: Matrix::zeros(self.w_x.rows(), self.w_x.cols()),
            w_h: Matrix::zeros(self.w_h.rows(), self.w_h.cols()),
            b_x: Matrix::zeros(1, self.b_x.cols()),
            b_h: Matrix::zeros(1, self.b_h.cols()),
        }
    }

    pub fn hidden(&self) -> usize {
        self.w_h.cols()
    }

    pub fn input(&self) -> usize {
        self.w_x.cols()
    }

    pub fn tensors(&self) -> [&Matrix<S>; 4] {
        [&self.w_x, &self.w_h, &self.b_x, &self.b_h]
    }

    pub fn tensors_mut(&mut self) -> [&mut Matrix<S>; 4] {
        [&mut self.w_x, &mut self.w_h, &mut self.b_x, &mut self.b_h]
    }

    pub fn step(&self, x: &[S], h_prev: &[S]) -> GruStep<S> {
        let d = self.hidden();
        let bx = self.b_x.row(0);
        let bh = self.b_h.row(0);
        let mut reset = Vec::with_capacity(d);
        let mut update = Vec::with_capacity(d);
        let mut candidate = Vec::with_capacity(d);
        let mut hidden_lin = Vec::with_capacity(d);
        let mut h = Vec::with_capacity(d);
        for i in 0..d {
            let r = sigmoid(
                dot(self.w_x.row(i), x) + bx[i] + dot(self.w_h.row(i), h_prev) + bh[i],
            );
            let z = sigmoid(
                dot(self.w_x.row(d + i), x)
                    + bx[d + i]
                    + dot(self.w_h.row(d + i), h_prev)
                    + bh[d + i],
            );
            let hl = dot(self.w_h.row(2 * d + i), h_prev) + bh[2 * d + i];
            let n = (dot(self.w_x.row(2 * d + i), x) + bx[2 * d + i] + r * hl).tanh();
            reset.push(r);
            update.push(z);
            candidate.push(n);
            hidden_lin.push(hl);
            h.push((S::one() - z) * n + z * h_prev[i]);
        }
        GruStep {
            x: x.to_vec(),
            h_prev: h_prev.to_vec(),
            reset,
            update,
            candidate,
            hidden_lin,
            h,
        }
    }

    /// Backpropagates `dh` (gradient w.r.t. `step.h`) through one step.
    /// Accumulates weight gradients into `grads`, input gradient into `dx`,
    /// and returns the gradient w.r.t. `step.h_prev`.
    pub fn backward(
        &self,
        step: &GruStep<S>,
        dh: &[S],
        grads: &mut GruParams<S>,
        dx: &mut [S],
    ) -> Vec<S> {
        let d = self.hidden();
        let one = S::one();
        let mut g_x = vec![S::zero(); 3 * d];
        let mut g_h = vec![S::zero(); 3 * d];
        let mut dh_prev = vec![S::zero(); d];
        for i in 0..d {
            let (r, z, n) = (step.reset[i], step.update[i], step.candidate[i]);
            let dn = dh[i] * (one - z);
            let dz = dh[i] * (step.h_prev[i] - n);
            dh_prev[i] = dh[i] * z;
            let da_n = dn * (one - n * n);
            let dr = da_n * step.hidden_lin[i];
            let da_r = dr * r * (one - r);
            let da_z = dz * z * (one - z);
            g_x[i] = da_r;
            g_x[d + i] = da_z;
            g_x[2 * d + i] = da_n;
            g_h[i] = da_r;
            g_h[d + i] = da_z;
            g_h[2 * d + i] = da_n * r;
        }
        grads.w_x.add_outer(&g_x, &step.x);
        grads.w_h.add_outer(&g_h, &step.h_prev);
        crate::tensor::add_into(&g_x, grads.b_x.row_mut(0));
        crate::tensor::add_into(&g_h, grads.b_h.row_mut(0));
        self.w_x.matvec_t_acc(&g_x, dx);
        self.w_h.matvec_t_acc(&g_h, &mut dh_prev);
        dh_prev
    }
}
