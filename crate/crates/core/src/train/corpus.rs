use crate::error::{Error, Result};
use crate::model::{Lexicon, PredicateVocabulary};
use crate::supervision::LabeledUtterance;
use crate::text::{tokenize, Vocabulary};

use super::LabeledExample;

/// Token vocabulary over the utterances and the gold triplet phrases (the
/// decoder must be able to emit a subject that is not in the source).
pub fn build_lexicon(corpus: &[LabeledUtterance], min_freq: usize) -> Lexicon {
    let mut sequences: Vec<Vec<String>> = Vec::with_capacity(corpus.len());
    for u in corpus {
        let mut toks = tokenize(&u.utterance);
        for t in &u.triplets {
            toks.extend(tokenize(&t.subject));
            toks.extend(tokenize(&t.object));
        }
        sequences.push(toks);
    }
    Lexicon::new(Vocabulary::build(sequences.iter().map(Vec::as_slice), min_freq))
}

/// What [`examples_from_corpus`] left out.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PrepareReport {
    pub empty_utterances: usize,
    pub duplicate_predicates: usize,
}

/// Converts a labeled corpus into training examples. Empty utterances are
/// skipped; an unknown predicate is an error.
pub fn examples_from_corpus(
    corpus: &[LabeledUtterance],
    lexicon: &Lexicon,
    predicates: &PredicateVocabulary,
) -> Result<(Vec<LabeledExample>, PrepareReport)> {
    let mut report = PrepareReport::default();
    let mut out = Vec::with_capacity(corpus.len());
    for u in corpus {
        match LabeledExample::build(lexicon, predicates, &u.utterance, &u.triplets) {
            Ok((ex, dropped)) => {
                report.duplicate_predicates += dropped;
                out.push(ex);
            }
            Err(Error::EmptyInput) => report.empty_utterances += 1,
            Err(e) => return Err(e),
        }
    }
    Ok((out, report))
}
