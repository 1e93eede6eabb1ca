//! Multi-hop memory network over the predicate embeddings.
//!
//! Hops `1..K-1` attend with a softmax, read out `o^k = Σ_i α^k_i C^{k+1}_i`
//! and update the query additively. Hop `K` scores `C^K q^K` with an
//! elementwise sigmoid so each predicate fires independently.

use crate::scalar::{sigmoid, softmax, softmax_backward, Scalar};
use crate::tensor::{axpy, Matrix};

#[derive(Clone, Debug)]
pub struct ClassifierTrace<S> {
    /// `q^1..q^K`
    pub queries: Vec<Vec<S>>,
    /// Softmax attention of hops `1..K-1`.
    pub attention: Vec<Vec<S>>,
    /// Final-hop sigmoid activations, one independent trigger probability per
    /// predicate.
    pub alpha: Vec<S>,
}

pub fn classify<S: Scalar>(hops: &[Matrix<S>], query: &[S]) -> ClassifierTrace<S> {
    let k_total = hops.len();
    let mut queries = vec![query.to_vec()];
    let mut attention = Vec::with_capacity(k_total.saturating_sub(1));
    for k in 0..k_total - 1 {
        let q = queries.last().expect("non-empty");
        let attn = softmax(&hops[k].matvec(q));
        let mut next = q.clone();
        for (j, &a) in attn.iter().enumerate() {
            axpy(a, hops[k + 1].row(j), &mut next);
        }
        attention.push(attn);
        queries.push(next);
    }
    let last = queries.last().expect("non-empty");
    let alpha = hops[k_total - 1]
        .matvec(last)
        .into_iter()
        .map(sigmoid)
        .collect();
    ClassifierTrace {
        queries,
        attention,
        alpha,
    }
}

/// Given `dL/d(final scores)` (pre-sigmoid), accumulates hop gradients and
/// returns `dL/dq^1`.
pub fn classify_backward<S: Scalar>(
    hops: &[Matrix<S>],
    trace: &ClassifierTrace<S>,
    d_scores: &[S],
    grads: &mut [Matrix<S>],
) -> Vec<S> {
    let k_total = hops.len();
    let last = k_total - 1;
    grads[last].add_outer(d_scores, &trace.queries[last]);
    let mut dq = vec![S::zero(); trace.queries[0].len()];
    hops[last].matvec_t_acc(d_scores, &mut dq);

    for k in (0..last).rev() {
        // q^{k+1} = q^k + o^k, so dq flows unchanged to q^k and to o^k.
        let attn = &trace.attention[k];
        let d_attn: Vec<S> = (0..attn.len())
            .map(|j| crate::tensor::dot(&dq, hops[k + 1].row(j)))
            .collect();
        grads[k + 1].add_outer(attn, &dq);
        let d_s = softmax_backward(attn, &d_attn);
        grads[k].add_outer(&d_s, &trace.queries[k]);
        hops[k].matvec_t_acc(&d_s, &mut dq);
    }
    dq
}

/// Predicates whose activation reaches `threshold`.
pub fn trigger_set<S: Scalar>(alpha: &[S], threshold: S) -> Vec<usize> {
    alpha
        .iter()
        .enumerate()
        .filter(|(_, &a)| a >= threshold)
        .map(|(j, _)| j)
        .collect()
}
