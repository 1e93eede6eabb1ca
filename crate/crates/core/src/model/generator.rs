//! Shared entity generator: a GRU decoder whose output distribution mixes a
//! vocabulary softmax with attention over the source tokens.

use super::encoder::EncodedContext;
use super::gru::GruStep;
use super::lexicon::Lexicon;
use super::params::ModelParams;
use crate::scalar::{sigmoid, softmax, softmax_backward, Scalar};
use crate::tensor::{add_into, axpy, dot, Matrix};
use crate::text::{EOS, SEP_TOKEN};

/// One decoder step with every intermediate distribution.
#[derive(Clone, Debug)]
pub struct DecodeStep<S> {
    /// `w_t`, the embedded input token.
    pub input: Vec<S>,
    pub gru: GruStep<S>,
    /// Inverted-dropout mask applied to the decoder output, training only.
    pub mask: Option<Vec<S>>,
    /// `h_dec` after the optional dropout mask.
    pub hidden: Vec<S>,
    /// `v_c = Σ_i P_source_i H_i`
    pub context: Vec<S>,
    pub p_gen: S,
    pub gate_forced: bool,
    pub p_vocab: Vec<S>,
    pub p_source: Vec<S>,
}

impl<S: Scalar> DecodeStep<S> {
    /// Recurrent state handed to the next step.
    pub fn state(&self) -> &[S] {
        &self.gru.h
    }

    /// `P_final(id)` where `source_ext[i]` is the extended id of source
    /// position `i`.
    pub fn prob_of(&self, id: usize, source_ext: &[usize]) -> S {
        let mut copy = S::zero();
        for (&p, &e) in self.p_source.iter().zip(source_ext) {
            if e == id {
                copy += p;
            }
        }
        let generate = self.p_vocab.get(id).copied().unwrap_or_else(S::zero);
        self.p_gen * generate + (S::one() - self.p_gen) * copy
    }

    /// `P_final` over the extended vocabulary; duplicated source tokens
    /// accumulate.
    pub fn final_distribution(&self, source_ext: &[usize], ext_size: usize) -> Vec<S> {
        let mut out = vec![S::zero(); ext_size];
        for (o, &p) in out.iter_mut().zip(&self.p_vocab) {
            *o = self.p_gen * p;
        }
        let copy = S::one() - self.p_gen;
        for (&p, &e) in self.p_source.iter().zip(source_ext) {
            out[e] += copy * p;
        }
        out
    }
}

pub fn decode_step<S: Scalar>(
    params: &ModelParams<S>,
    memory: &Matrix<S>,
    input: Vec<S>,
    h_prev: &[S],
    mask: Option<Vec<S>>,
    force_gate: Option<S>,
) -> DecodeStep<S> {
    let gru = params.decoder.step(&input, h_prev);
    let hidden: Vec<S> = match &mask {
        Some(m) => gru.h.iter().zip(m).map(|(&h, &m)| h * m).collect(),
        None => gru.h.clone(),
    };
    let p_vocab = softmax(&params.vocab_proj.matvec(&hidden));
    let p_source = softmax(&memory.matvec(&hidden));
    let mut context = vec![S::zero(); hidden.len()];
    for (i, &p) in p_source.iter().enumerate() {
        axpy(p, memory.row(i), &mut context);
    }
    let (p_gen, gate_forced) = match force_gate {
        Some(g) => (g, true),
        None => {
            let w = params.gate.row(0);
            let d = hidden.len();
            let e = input.len();
            let a = dot(&w[..d], &hidden) + dot(&w[d..d + e], &input) + dot(&w[d + e..], &context);
            (sigmoid(a), false)
        }
    };
    DecodeStep {
        input,
        gru,
        mask,
        hidden,
        context,
        p_gen,
        gate_forced,
        p_vocab,
        p_source,
    }
}

/// Backpropagates `d_prob = dL/dP_final(gold)` plus `dh_next` (gradient of
/// the recurrent state from later steps). Accumulates into `grads`,
/// `d_memory` and `d_input`; returns the gradient of the previous state.
#[allow(clippy::too_many_arguments)]
pub fn decode_step_backward<S: Scalar>(
    params: &ModelParams<S>,
    memory: &Matrix<S>,
    step: &DecodeStep<S>,
    source_ext: &[usize],
    gold: usize,
    d_prob: S,
    dh_next: &[S],
    grads: &mut ModelParams<S>,
    d_memory: &mut Matrix<S>,
    d_input: &mut [S],
) -> Vec<S> {
    let one = S::one();
    let d = step.hidden.len();
    let e = step.input.len();
    let g = step.p_gen;

    let copy_sum: S = step
        .p_source
        .iter()
        .zip(source_ext)
        .filter(|(_, &x)| x == gold)
        .map(|(&p, _)| p)
        .sum();
    let p_vocab_gold = step.p_vocab.get(gold).copied().unwrap_or_else(S::zero);

    let mut d_hidden = vec![S::zero(); d];

    // gate
    if !step.gate_forced {
        let d_gate = d_prob * (p_vocab_gold - copy_sum);
        let d_a = d_gate * g * (one - g);
        let w = params.gate.row(0);
        let gw = grads.gate.row_mut(0);
        axpy(d_a, &step.hidden, &mut gw[..d]);
        axpy(d_a, &step.input, &mut gw[d..d + e]);
        axpy(d_a, &step.context, &mut gw[d + e..]);
        axpy(d_a, &w[..d], &mut d_hidden);
        axpy(d_a, &w[d..d + e], d_input);
        let d_context: Vec<S> = w[d + e..].iter().map(|&x| x * d_a).collect();
        // v_c = Σ P_source_i H_i
        let mut d_psrc: Vec<S> = (0..memory.rows())
            .map(|i| dot(&d_context, memory.row(i)))
            .collect();
        for (i, &p) in step.p_source.iter().enumerate() {
            axpy(p, &d_context, d_memory.row_mut(i));
        }
        for (dp, &x) in d_psrc.iter_mut().zip(source_ext) {
            if x == gold {
                *dp += d_prob * (one - g);
            }
        }
        source_attention_backward(memory, step, &d_psrc, &mut d_hidden, d_memory);
    } else {
        let d_psrc: Vec<S> = source_ext
            .iter()
            .map(|&x| if x == gold { d_prob * (one - g) } else { S::zero() })
            .collect();
        source_attention_backward(memory, step, &d_psrc, &mut d_hidden, d_memory);
    }

    // vocabulary softmax
    if gold < step.p_vocab.len() {
        let mut d_pv = vec![S::zero(); step.p_vocab.len()];
        d_pv[gold] = d_prob * g;
        let d_logits = softmax_backward(&step.p_vocab, &d_pv);
        grads.vocab_proj.add_outer(&d_logits, &step.hidden);
        params.vocab_proj.matvec_t_acc(&d_logits, &mut d_hidden);
    }

    let mut dh: Vec<S> = match &step.mask {
        Some(m) => d_hidden.iter().zip(m).map(|(&a, &b)| a * b).collect(),
        None => d_hidden,
    };
    add_into(dh_next, &mut dh);
    params
        .decoder
        .backward(&step.gru, &dh, &mut grads.decoder, d_input)
}

fn source_attention_backward<S: Scalar>(
    memory: &Matrix<S>,
    step: &DecodeStep<S>,
    d_psrc: &[S],
    d_hidden: &mut [S],
    d_memory: &mut Matrix<S>,
) {
    let d_scores = softmax_backward(&step.p_source, d_psrc);
    for (i, &ds) in d_scores.iter().enumerate() {
        if ds != S::zero() {
            axpy(ds, memory.row(i), d_hidden);
            axpy(ds, &step.hidden, d_memory.row_mut(i));
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct DecodeOptions<S> {
    pub max_len: usize,
    /// Overrides the learned copy gate when set.
    pub force_gate: Option<S>,
}

#[derive(Clone, Debug)]
pub struct Generation<S> {
    /// Extended ids, without the final EOS.
    pub ids: Vec<usize>,
    pub tokens: Vec<String>,
    pub steps: Vec<DecodeStep<S>>,
}

/// Greedy decoding for one predicate. Ties go to the lower id.
pub fn generate<S: Scalar>(
    params: &ModelParams<S>,
    lexicon: &Lexicon,
    ctx: &EncodedContext<S>,
    predicate: usize,
    options: DecodeOptions<S>,
) -> Generation<S> {
    let source_ext = ctx.source.ext_ids();
    let ext_size = ctx.source.ext_size(lexicon.vocab_size());
    let mut input = params.predicate_start.row(predicate).to_vec();
    let mut h = ctx.summary.clone();
    let mut ids = Vec::new();
    let mut steps = Vec::new();
    for _ in 0..options.max_len {
        let step = decode_step(params, &ctx.states, input, &h, None, options.force_gate);
        let dist = step.final_distribution(&source_ext, ext_size);
        let best = argmax(&dist);
        h = step.state().to_vec();
        steps.push(step);
        if best == EOS {
            break;
        }
        ids.push(best);
        input = params
            .embedding
            .embed(&lexicon.features_of_output(&ctx.source, best));
    }
    let tokens = ids.iter().map(|&id| lexicon.surface(&ctx.source, id)).collect();
    Generation { ids, tokens, steps }
}

fn argmax<S: Scalar>(v: &[S]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Subject and object phrases recovered from a generated `subject ; object`
/// sequence.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EntityPhrases {
    pub subject: Vec<String>,
    pub object: Vec<String>,
    /// No separator was generated; the subject defaulted to `i`.
    pub missing_separator: bool,
}

pub fn split_entities(tokens: &[String]) -> EntityPhrases {
    match tokens.iter().position(|t| t == SEP_TOKEN) {
        Some(at) => EntityPhrases {
            subject: tokens[..at].to_vec(),
            object: tokens[at + 1..]
                .iter()
                .filter(|t| *t != SEP_TOKEN)
                .cloned()
                .collect(),
            missing_separator: false,
        },
        None => EntityPhrases {
            subject: vec!["i".to_string()],
            object: tokens.to_vec(),
            missing_separator: true,
        },
    }
}

/// `subject ; object <eos>` target tokens for teacher forcing.
pub fn target_tokens(subject: &[String], object: &[String]) -> Vec<String> {
    let mut out = subject.to_vec();
    out.push(SEP_TOKEN.to_string());
    out.extend_from_slice(object);
    out
}
