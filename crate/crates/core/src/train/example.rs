use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::model::{target_tokens, Lexicon, PredicateVocabulary, PreparedSource, TripletText};
use crate::scalar::Scalar;
use crate::text::{tokenize, EOS};

/// A training example in id space.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledExample {
    pub source: PreparedSource,
    /// Multi-hot `R^label` over predicates.
    pub labels: Vec<bool>,
    /// Extended-id targets `subject ; object <eos>` keyed by predicate. Keys
    /// are exactly the predicates set in `labels`.
    pub targets: BTreeMap<usize, Vec<usize>>,
}

impl LabeledExample {
    /// Builds an example from raw text. Returns the example and the number of
    /// triplets dropped because their predicate was already taken (the
    /// generator produces one phrase pair per predicate).
    pub fn build(
        lexicon: &Lexicon,
        predicates: &PredicateVocabulary,
        utterance: &str,
        triplets: &[TripletText],
    ) -> Result<(Self, usize)> {
        let tokens = tokenize(utterance);
        if tokens.is_empty() {
            return Err(Error::EmptyInput);
        }
        let source = lexicon.prepare(&tokens);
        let mut labels = vec![false; predicates.len()];
        let mut targets = BTreeMap::new();
        let mut dropped = 0;
        for t in triplets {
            let triplet = t.to_triplet(predicates)?;
            if triplet.subject.is_empty() || triplet.object.is_empty() {
                return Err(Error::Config(format!("triplet {t} has an empty phrase")));
            }
            if labels[triplet.predicate] {
                dropped += 1;
                continue;
            }
            labels[triplet.predicate] = true;
            let mut ids: Vec<usize> = target_tokens(&triplet.subject, &triplet.object)
                .iter()
                .map(|tok| lexicon.target_id(&source, tok))
                .collect();
            ids.push(EOS);
            targets.insert(triplet.predicate, ids);
        }
        Ok((
            LabeledExample {
                source,
                labels,
                targets,
            },
            dropped,
        ))
    }

    pub fn label_vector<S: Scalar>(&self) -> Vec<S> {
        self.labels
            .iter()
            .map(|&b| if b { S::one() } else { S::zero() })
            .collect()
    }

    pub fn has_attribute(&self) -> bool {
        !self.targets.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::{Vocabulary, SEP};

    #[test]
    fn keys_follow_labels_and_oov_targets_use_extended_ids() {
        let lex = Lexicon::new(Vocabulary::from_tokens(["i", "have", "a", "ford"]));
        let preds = PredicateVocabulary::new(["have_vehicle", "like_food"]).unwrap();
        let v = lex.vocab_size();
        let (ex, dropped) = LabeledExample::build(
            &lex,
            &preds,
            "I have a Porsche",
            &[TripletText::new("i", "have_vehicle", "porsche")],
        )
        .unwrap();
        assert_eq!(dropped, 0);
        assert_eq!(ex.labels, vec![true, false]);
        assert_eq!(ex.targets.keys().copied().collect::<Vec<_>>(), vec![0]);
        assert_eq!(ex.targets[&0], vec![5, SEP, v, EOS]);
    }

    #[test]
    fn unknown_predicate_is_an_error() {
        let lex = Lexicon::new(Vocabulary::from_tokens(["i"]));
        let preds = PredicateVocabulary::new(["a"]).unwrap();
        let err = LabeledExample::build(&lex, &preds, "i", &[TripletText::new("i", "zzz", "x")]);
        assert!(matches!(err, Err(Error::UnknownPredicate(_))));
    }

    #[test]
    fn repeated_predicate_keeps_first() {
        let lex = Lexicon::new(Vocabulary::from_tokens(["i", "like", "cats", "dogs"]));
        let preds = PredicateVocabulary::new(["like_animal"]).unwrap();
        let (ex, dropped) = LabeledExample::build(
            &lex,
            &preds,
            "i like cats and dogs",
            &[
                TripletText::new("i", "like_animal", "cats"),
                TripletText::new("i", "like_animal", "dogs"),
            ],
        )
        .unwrap();
        assert_eq!(dropped, 1);
        assert_eq!(ex.targets.len(), 1);
    }
}
