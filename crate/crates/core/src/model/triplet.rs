use serde::{Deserialize, Serialize};

use super::PredicateVocabulary;
use crate::error::{Error, Result};
use crate::text::tokenize;

/// `(subject, predicate, object)` with the predicate as an index into the
/// model's predicate vocabulary.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AttributeTriplet {
    pub subject: Vec<String>,
    pub predicate: usize,
    pub object: Vec<String>,
}

impl AttributeTriplet {
    pub fn to_text(&self, predicates: &PredicateVocabulary) -> TripletText {
        TripletText {
            subject: self.subject.join(" "),
            predicate: predicates.name(self.predicate).to_string(),
            object: self.object.join(" "),
        }
    }
}

/// Triplet as it appears in corpus and output files.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TripletText {
    pub subject: String,
    pub predicate: String,
    pub object: String,
}

impl TripletText {
    pub fn new(subject: &str, predicate: &str, object: &str) -> Self {
        TripletText {
            subject: subject.to_string(),
            predicate: predicate.to_string(),
            object: object.to_string(),
        }
    }

    /// Tokenizer-normalised copy, so that comparisons are token-exact.
    pub fn normalized(&self) -> Self {
        TripletText {
            subject: tokenize(&self.subject).join(" "),
            predicate: self.predicate.trim().to_string(),
            object: tokenize(&self.object).join(" "),
        }
    }

    pub fn to_triplet(&self, predicates: &PredicateVocabulary) -> Result<AttributeTriplet> {
        let predicate = predicates
            .id(self.predicate.trim())
            .ok_or_else(|| Error::UnknownPredicate(self.predicate.clone()))?;
        Ok(AttributeTriplet {
            subject: tokenize(&self.subject),
            predicate,
            object: tokenize(&self.object),
        })
    }
}

impl std::fmt::Display for TripletText {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {}, {})", self.subject, self.predicate, self.object)
    }
}
