//! Tokenization, vocabulary, embeddings and word dropout.

mod embedding;
mod tokenize;
mod vocab;

pub use embedding::{EmbeddingTable, TokenFeatures, TrigramIndex};
pub use tokenize::{normalize, tokenize};
pub use vocab::{
    Vocabulary, EOS, EOS_TOKEN, PAD, PAD_TOKEN, RESERVED, SEP, SEP_TOKEN, SOS, SOS_TOKEN, UNK,
    UNK_TOKEN,
};

use rand::Rng;

/// Replaces each non-reserved id by UNK with probability `rate`.
pub fn word_dropout<R: Rng + ?Sized>(ids: &[usize], rate: f64, rng: &mut R) -> Vec<usize> {
    ids.iter()
        .map(|&id| {
            if id >= RESERVED.len() && rng.gen::<f64>() < rate {
                UNK
            } else {
                id
            }
        })
        .collect()
}
