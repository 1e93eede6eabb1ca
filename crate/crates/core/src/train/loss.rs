//! Training objective: binary cross-entropy over predicate activations,
//! negative log-likelihood of the gold entity tokens, and their λ-weighted
//! sum.

use crate::scalar::Scalar;

/// Activations are clamped to `[ε, 1-ε]` before taking logs.
pub const ALPHA_EPS: f64 = 1e-7;
/// Gold-token probabilities are floored here so the loss stays finite.
pub const PROB_FLOOR: f64 = 1e-12;

/// `-Σ_i [R_i log α_i + (1-R_i) log(1-α_i)]` for one example.
pub fn binary_cross_entropy<S: Scalar>(alpha: &[S], labels: &[S]) -> S {
    let eps = S::of(ALPHA_EPS);
    let one = S::one();
    alpha
        .iter()
        .zip(labels)
        .map(|(&a, &r)| {
            let a = a.max(eps).min(one - eps);
            -(r * a.ln() + (one - r) * (one - a).ln())
        })
        .sum()
}

/// `L_p`: per-example cross-entropy summed over predicates, averaged over
/// the batch.
pub fn predicate_loss<S: Scalar>(alphas: &[Vec<S>], labels: &[Vec<S>]) -> S {
    assert_eq!(alphas.len(), labels.len());
    if alphas.is_empty() {
        return S::zero();
    }
    let total: S = alphas
        .iter()
        .zip(labels)
        .map(|(a, r)| binary_cross_entropy(a, r))
        .sum();
    total / S::of(alphas.len() as f64)
}

/// `-Σ_t log P_final_t(y_t)` for one generated sequence.
pub fn sequence_nll<S: Scalar>(distributions: &[Vec<S>], gold: &[usize]) -> S {
    assert_eq!(distributions.len(), gold.len());
    let floor = S::of(PROB_FLOOR);
    distributions
        .iter()
        .zip(gold)
        .map(|(p, &y)| -p[y].max(floor).ln())
        .sum()
}

/// `L_v`: sequence NLL averaged over every (example, predicate) pair; zero
/// when the batch has no attribute-bearing example.
pub fn entity_loss<S: Scalar>(sequences: &[(Vec<Vec<S>>, Vec<usize>)]) -> S {
    if sequences.is_empty() {
        return S::zero();
    }
    let total: S = sequences.iter().map(|(d, g)| sequence_nll(d, g)).sum();
    total / S::of(sequences.len() as f64)
}

/// `λ L_p + (1-λ) L_v`
pub fn total_loss<S: Scalar>(predicate: S, entity: S, lambda: S) -> S {
    lambda * predicate + (S::one() - lambda) * entity
}
