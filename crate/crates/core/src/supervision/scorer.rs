use std::collections::{HashMap, HashSet};
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};

use super::records::{persona_key, PersonaRecord, ScoreRecord};
use crate::error::{Error, Result};
use crate::io::read_jsonl;
use crate::text::tokenize;

/// A keyed sentence handed to a scorer.
#[derive(Clone, Copy, Debug)]
pub struct Sentence<'a> {
    pub key: &'a str,
    pub text: &'a str,
}

/// Entailment scorer: `score(premise, hypothesis)` is in `[0, 1]` and pure.
pub trait EntailmentScorer: Sync {
    fn score(&self, premise: Sentence<'_>, hypothesis: Sentence<'_>) -> f64;
}

/// Returns the same score for every pair.
#[derive(Clone, Copy, Debug)]
pub struct ConstantScorer(pub f64);

impl EntailmentScorer for ConstantScorer {
    fn score(&self, _: Sentence<'_>, _: Sentence<'_>) -> f64 {
        self.0.clamp(0.0, 1.0)
    }
}

const STOPWORDS: &[&str] = &[
    "a", "about", "all", "also", "am", "an", "and", "any", "are", "as", "at", "be", "been", "but",
    "by", "can", "could", "did", "do", "does", "for", "from", "had", "has", "have", "he", "her",
    "him", "his", "how", "i", "i'm", "if", "in", "into", "is", "it", "it's", "its", "just", "me",
    "my", "myself", "no", "not", "of", "on", "or", "our", "really", "she", "so", "some", "than",
    "that", "the", "their", "them", "then", "there", "they", "this", "to", "too", "very", "was",
    "we", "were", "what", "when", "where", "which", "who", "why", "will", "with", "would", "you",
    "your",
];

/// Content-word overlap coefficient:
/// `|content(p) ∩ content(h)| / max(1, |content(h)|)`.
#[derive(Clone, Debug)]
pub struct LexicalScorer {
    stopwords: HashSet<&'static str>,
}

impl Default for LexicalScorer {
    fn default() -> Self {
        LexicalScorer {
            stopwords: STOPWORDS.iter().copied().collect(),
        }
    }
}

impl LexicalScorer {
    pub fn content_words(&self, text: &str) -> HashSet<String> {
        tokenize(text)
            .into_iter()
            .filter(|t| t.chars().any(char::is_alphanumeric) && !self.stopwords.contains(t.as_str()))
            .collect()
    }

    pub fn overlap(&self, premise: &str, hypothesis: &str) -> f64 {
        let p = self.content_words(premise);
        let h = self.content_words(hypothesis);
        let shared = h.intersection(&p).count();
        shared as f64 / h.len().max(1) as f64
    }
}

impl EntailmentScorer for LexicalScorer {
    fn score(&self, premise: Sentence<'_>, hypothesis: Sentence<'_>) -> f64 {
        self.overlap(premise.text, hypothesis.text)
    }
}

/// Scores when the persona triplet's object occurs as a contiguous token
/// run inside the utterance. Exact for corpora whose fillers never appear
/// by chance.
#[derive(Clone, Debug, Default)]
pub struct SubstringScorer {
    objects: HashMap<String, Vec<String>>,
}

impl SubstringScorer {
    pub fn new(personas: &[PersonaRecord]) -> Self {
        let mut counts: HashMap<&str, usize> = HashMap::new();
        let mut objects = HashMap::new();
        for p in personas {
            let n = counts.entry(p.persona_id.as_str()).or_default();
            objects.insert(persona_key(&p.persona_id, *n), tokenize(&p.triplet.object));
            *n += 1;
        }
        SubstringScorer { objects }
    }
}

fn contains_run(haystack: &[String], needle: &[String]) -> bool {
    !needle.is_empty() && haystack.windows(needle.len()).any(|w| w == needle)
}

impl EntailmentScorer for SubstringScorer {
    fn score(&self, premise: Sentence<'_>, hypothesis: Sentence<'_>) -> f64 {
        match self.objects.get(hypothesis.key) {
            Some(obj) if contains_run(&tokenize(premise.text), obj) => 1.0,
            _ => 0.0,
        }
    }
}

/// Looks up externally computed scores by `(utterance key, persona key)`.
/// Absent pairs score 0 and are counted.
#[derive(Debug, Default)]
pub struct FileScorer {
    scores: HashMap<(String, String), f64>,
    missing: AtomicUsize,
}

impl FileScorer {
    pub fn from_records(records: impl IntoIterator<Item = ScoreRecord>) -> Self {
        FileScorer {
            scores: records
                .into_iter()
                .map(|r| ((r.u_key, r.p_key), r.score))
                .collect(),
            missing: AtomicUsize::new(0),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let (_, records): (_, Vec<ScoreRecord>) = read_jsonl(path)?;
        for (i, r) in records.iter().enumerate() {
            if !(0.0..=1.0).contains(&r.score) {
                return Err(Error::Malformed {
                    path: path.into(),
                    line: i + 1,
                    message: format!("score {} outside [0, 1]", r.score),
                });
            }
        }
        Ok(Self::from_records(records))
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    /// Number of lookups that found no stored pair.
    pub fn missing_lookups(&self) -> usize {
        self.missing.load(Ordering::Relaxed)
    }
}

impl EntailmentScorer for FileScorer {
    fn score(&self, premise: Sentence<'_>, hypothesis: Sentence<'_>) -> f64 {
        let key = (premise.key.to_string(), hypothesis.key.to_string());
        match self.scores.get(&key) {
            Some(&s) => s,
            None => {
                self.missing.fetch_add(1, Ordering::Relaxed);
                0.0
            }
        }
    }
}
