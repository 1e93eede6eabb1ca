use super::gru::GruStep;
use super::lexicon::PreparedSource;
use super::params::ModelParams;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::{add_into, Matrix};

/// Encoder output: one state per token and the summary vector that queries
/// the classifier and seeds the decoder.
#[derive(Clone, Debug)]
pub struct EncodedContext<S> {
    /// `H`, `l × hidden`; each row is the sum of the forward and backward
    /// states at that position.
    pub states: Matrix<S>,
    /// `h_l`: forward final state plus backward final state.
    pub summary: Vec<S>,
    pub source: PreparedSource,
}

/// Cached activations for backpropagation through the encoder.
#[derive(Clone, Debug)]
pub struct EncoderTrace<S> {
    fwd: Vec<GruStep<S>>,
    /// `bwd[k]` consumed position `l - 1 - k`.
    bwd: Vec<GruStep<S>>,
}

pub fn encode<S: Scalar>(
    params: &ModelParams<S>,
    source: PreparedSource,
) -> Result<(EncodedContext<S>, EncoderTrace<S>)> {
    if source.is_empty() {
        return Err(Error::EmptyInput);
    }
    let l = source.len();
    let d = params.encoder_fwd.hidden();
    let inputs: Vec<Vec<S>> = source
        .tokens
        .iter()
        .map(|t| params.embedding.embed(&t.features))
        .collect();

    let mut fwd: Vec<GruStep<S>> = Vec::with_capacity(l);
    let mut h = vec![S::zero(); d];
    for x in &inputs {
        let step = params.encoder_fwd.step(x, &h);
        h.clone_from(&step.h);
        fwd.push(step);
    }
    let mut bwd: Vec<GruStep<S>> = Vec::with_capacity(l);
    let mut h = vec![S::zero(); d];
    for x in inputs.iter().rev() {
        let step = params.encoder_bwd.step(x, &h);
        h.clone_from(&step.h);
        bwd.push(step);
    }

    let mut states = Matrix::zeros(l, d);
    for i in 0..l {
        let row = states.row_mut(i);
        row.copy_from_slice(&fwd[i].h);
        add_into(&bwd[l - 1 - i].h, row);
    }
    let mut summary = fwd[l - 1].h.clone();
    add_into(&bwd[l - 1].h, &mut summary);

    Ok((
        EncodedContext {
            states,
            summary,
            source,
        },
        EncoderTrace { fwd, bwd },
    ))
}

/// Accumulates encoder and embedding gradients given the gradients of the
/// states `H` and of the summary vector.
pub fn encode_backward<S: Scalar>(
    params: &ModelParams<S>,
    ctx: &EncodedContext<S>,
    trace: &EncoderTrace<S>,
    d_states: &Matrix<S>,
    d_summary: &[S],
    grads: &mut ModelParams<S>,
    update_embeddings: bool,
) {
    let l = trace.fwd.len();
    let d = params.encoder_fwd.hidden();
    let e = params.embedding.dim();
    let mut d_inputs = vec![vec![S::zero(); e]; l];

    let mut carry = vec![S::zero(); d];
    for i in (0..l).rev() {
        let mut dh = d_states.row(i).to_vec();
        add_into(&carry, &mut dh);
        if i == l - 1 {
            add_into(d_summary, &mut dh);
        }
        carry = params
            .encoder_fwd
            .backward(&trace.fwd[i], &dh, &mut grads.encoder_fwd, &mut d_inputs[i]);
    }

    let mut carry = vec![S::zero(); d];
    for k in (0..l).rev() {
        let pos = l - 1 - k;
        let mut dh = d_states.row(pos).to_vec();
        add_into(&carry, &mut dh);
        if k == l - 1 {
            add_into(d_summary, &mut dh);
        }
        carry = params
            .encoder_bwd
            .backward(&trace.bwd[k], &dh, &mut grads.encoder_bwd, &mut d_inputs[pos]);
    }

    if update_embeddings {
        for (tok, dx) in ctx.source.tokens.iter().zip(&d_inputs) {
            grads.embedding.accumulate(&tok.features, dx);
        }
    }
}
