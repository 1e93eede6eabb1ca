//! Forward and backward pass of the full objective for one example.

use rand::Rng;

use super::example::LabeledExample;
use super::loss::{self, ALPHA_EPS, PROB_FLOOR};
use crate::error::Result;
use crate::model::{
    classify, classify_backward, decode_step, decode_step_backward, encode, encode_backward,
    AttributeExtractor, DecodeStep, ModelParams, PreparedSource,
};
use crate::scalar::Scalar;
use crate::tensor::Matrix;

/// Per-example loss terms before batch weighting.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ExampleLoss<S> {
    /// Cross-entropy summed over predicates.
    pub predicate: S,
    /// Entity NLL summed over this example's target sequences.
    pub entity: S,
    pub pairs: usize,
}

/// Scale factors turning per-example sums into the batch objective:
/// `predicate = λ / batch_size`, `entity = (1-λ) / pairs_in_batch`.
#[derive(Clone, Copy, Debug)]
pub struct LossWeights<S> {
    pub predicate: S,
    pub entity: S,
}

impl<S: Scalar> LossWeights<S> {
    pub fn for_batch(lambda: f64, examples: usize, pairs: usize) -> Self {
        LossWeights {
            predicate: S::of(lambda / examples.max(1) as f64),
            entity: if pairs == 0 {
                S::zero()
            } else {
                S::of((1.0 - lambda) / pairs as f64)
            },
        }
    }
}

fn dropout_mask<S: Scalar, R: Rng + ?Sized>(len: usize, rate: f64, rng: &mut R) -> Vec<S> {
    let keep = S::of(1.0 / (1.0 - rate));
    (0..len)
        .map(|_| if rng.gen::<f64>() < rate { S::zero() } else { keep })
        .collect()
}

/// Runs the model on `source` (the example's source, possibly with masked
/// words), accumulates weighted gradients into `grads`, and returns the raw
/// loss terms. `dropout` enables hidden-output dropout with the given rate.
pub fn accumulate_example<S: Scalar, R: Rng + ?Sized>(
    model: &AttributeExtractor<S>,
    example: &LabeledExample,
    source: PreparedSource,
    weights: LossWeights<S>,
    mut dropout: Option<(f64, &mut R)>,
    grads: &mut ModelParams<S>,
    update_embeddings: bool,
) -> Result<ExampleLoss<S>> {
    let params = &model.params;
    let one = S::one();
    let (ctx, enc_trace) = encode(params, source)?;
    let l = ctx.states.rows();
    let d = ctx.states.cols();

    let state_mask: Option<Vec<S>> = match dropout.as_mut() {
        Some((rate, rng)) if *rate > 0.0 => Some(dropout_mask(l * d, *rate, *rng)),
        _ => None,
    };
    let memory = match &state_mask {
        Some(m) => Matrix::from_vec(
            l,
            d,
            ctx.states.data().iter().zip(m).map(|(&h, &k)| h * k).collect(),
        ),
        None => ctx.states.clone(),
    };

    // predicate classifier
    let cls = classify(&params.hops, &ctx.summary);
    let labels: Vec<S> = example.label_vector();
    let predicate = loss::binary_cross_entropy(&cls.alpha, &labels);
    let eps = S::of(ALPHA_EPS);
    let d_scores: Vec<S> = cls
        .alpha
        .iter()
        .zip(&labels)
        .map(|(&a, &r)| {
            if a >= eps && a <= one - eps {
                weights.predicate * (a - r)
            } else {
                S::zero()
            }
        })
        .collect();
    let mut d_summary = classify_backward(&params.hops, &cls, &d_scores, &mut grads.hops);

    // entity generator, teacher-forced on gold predicates
    let source_ext = ctx.source.ext_ids();
    let floor = S::of(PROB_FLOOR);
    let mut d_memory = Matrix::zeros(l, d);
    let mut entity = S::zero();
    for (&predicate_id, target) in &example.targets {
        let mut steps: Vec<DecodeStep<S>> = Vec::with_capacity(target.len());
        let mut h = ctx.summary.clone();
        for t in 0..target.len() {
            let input = if t == 0 {
                params.predicate_start.row(predicate_id).to_vec()
            } else {
                params
                    .embedding
                    .embed(&model.lexicon.features_of_output(&ctx.source, target[t - 1]))
            };
            let mask = match dropout.as_mut() {
                Some((rate, rng)) if *rate > 0.0 => Some(dropout_mask(d, *rate, *rng)),
                _ => None,
            };
            let step = decode_step(params, &memory, input, &h, mask, None);
            h = step.state().to_vec();
            steps.push(step);
        }

        let mut dh_next = vec![S::zero(); d];
        for t in (0..target.len()).rev() {
            let step = &steps[t];
            let p = step.prob_of(target[t], &source_ext);
            entity += -p.max(floor).ln();
            let d_prob = if p > floor {
                -weights.entity / p
            } else {
                S::zero()
            };
            let mut d_input = vec![S::zero(); step.input.len()];
            dh_next = decode_step_backward(
                params,
                &memory,
                step,
                &source_ext,
                target[t],
                d_prob,
                &dh_next,
                grads,
                &mut d_memory,
                &mut d_input,
            );
            if t == 0 {
                crate::tensor::add_into(&d_input, grads.predicate_start.row_mut(predicate_id));
            } else if update_embeddings {
                let features = model.lexicon.features_of_output(&ctx.source, target[t - 1]);
                grads.embedding.accumulate(&features, &d_input);
            }
        }
        crate::tensor::add_into(&dh_next, &mut d_summary);
    }

    let d_states = match &state_mask {
        Some(m) => Matrix::from_vec(
            l,
            d,
            d_memory.data().iter().zip(m).map(|(&g, &k)| g * k).collect(),
        ),
        None => d_memory,
    };
    encode_backward(
        params,
        &ctx,
        &enc_trace,
        &d_states,
        &d_summary,
        grads,
        update_embeddings,
    );

    Ok(ExampleLoss {
        predicate,
        entity,
        pairs: example.targets.len(),
    })
}

/// Batch objective `λ L_p + (1-λ) L_v` evaluated through the public forward
/// functions and the loss module, without dropout. Shares no code with the
/// backward pass beyond the forward layers.
pub fn batch_loss<S: Scalar>(
    model: &AttributeExtractor<S>,
    examples: &[LabeledExample],
    lambda: f64,
) -> Result<S> {
    let params = &model.params;
    let mut alphas = Vec::with_capacity(examples.len());
    let mut labels = Vec::with_capacity(examples.len());
    let mut sequences = Vec::new();
    for ex in examples {
        let (ctx, _) = encode(params, ex.source.clone())?;
        alphas.push(classify(&params.hops, &ctx.summary).alpha);
        labels.push(ex.label_vector());
        let source_ext = ctx.source.ext_ids();
        let ext_size = ctx.source.ext_size(model.lexicon.vocab_size());
        for (&j, target) in &ex.targets {
            let mut h = ctx.summary.clone();
            let mut input = params.predicate_start.row(j).to_vec();
            let mut dists = Vec::with_capacity(target.len());
            for &y in target {
                let step = decode_step(params, &ctx.states, input, &h, None, None);
                dists.push(step.final_distribution(&source_ext, ext_size));
                h = step.state().to_vec();
                input = params
                    .embedding
                    .embed(&model.lexicon.features_of_output(&ctx.source, y));
            }
            sequences.push((dists, target.clone()));
        }
    }
    Ok(loss::total_loss(
        loss::predicate_loss(&alphas, &labels),
        loss::entity_loss(&sequences),
        S::of(lambda),
    ))
}
