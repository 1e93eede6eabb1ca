use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const PAD: usize = 0;
pub const UNK: usize = 1;
pub const SOS: usize = 2;
pub const EOS: usize = 3;
pub const SEP: usize = 4;

pub const PAD_TOKEN: &str = "<pad>";
pub const UNK_TOKEN: &str = "<unk>";
pub const SOS_TOKEN: &str = "<sos>";
pub const EOS_TOKEN: &str = "<eos>";
pub const SEP_TOKEN: &str = ";";

pub const RESERVED: [&str; 5] = [PAD_TOKEN, UNK_TOKEN, SOS_TOKEN, EOS_TOKEN, SEP_TOKEN];

/// Token ↔ id mapping. Ids `0..5` are reserved for PAD, UNK, SOS, EOS and SEP.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct Vocabulary {
    id_to_token: Vec<String>,
    token_to_id: HashMap<String, usize>,
}

impl Default for Vocabulary {
    fn default() -> Self {
        Self::from_tokens(std::iter::empty::<String>())
    }
}

impl Vocabulary {
    /// Reserved tokens followed by `tokens` in order; duplicates and reserved
    /// strings are skipped.
    pub fn from_tokens<I, T>(tokens: I) -> Self
    where
        I: IntoIterator<Item = T>,
        T: Into<String>,
    {
        let mut vocab = Vocabulary {
            id_to_token: Vec::new(),
            token_to_id: HashMap::new(),
        };
        for t in RESERVED {
            vocab.push(t.to_string());
        }
        for t in tokens {
            let t = t.into();
            if !vocab.token_to_id.contains_key(&t) {
                vocab.push(t);
            }
        }
        vocab
    }

    fn push(&mut self, token: String) {
        self.token_to_id.insert(token.clone(), self.id_to_token.len());
        self.id_to_token.push(token);
    }

    /// Keeps tokens with frequency ≥ `min_freq`, ordered by descending
    /// frequency with a lexicographic tie-break.
    pub fn build<'a, I, S>(corpus: I, min_freq: usize) -> Self
    where
        I: IntoIterator<Item = &'a [S]>,
        S: AsRef<str> + 'a,
    {
        let min_freq = min_freq.max(1);
        let mut counts: HashMap<&str, usize> = HashMap::new();
        for seq in corpus {
            for tok in seq {
                *counts.entry(tok.as_ref()).or_default() += 1;
            }
        }
        let mut kept: Vec<(&str, usize)> = counts
            .into_iter()
            .filter(|&(t, c)| c >= min_freq && !RESERVED.contains(&t))
            .collect();
        kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        Self::from_tokens(kept.into_iter().map(|(t, _)| t))
    }

    pub fn len(&self) -> usize {
        self.id_to_token.len()
    }

    pub fn is_empty(&self) -> bool {
        self.id_to_token.is_empty()
    }

    pub fn id(&self, token: &str) -> Option<usize> {
        self.token_to_id.get(token).copied()
    }

    pub fn id_or_unk(&self, token: &str) -> usize {
        self.id(token).unwrap_or(UNK)
    }

    pub fn token(&self, id: usize) -> Result<&str> {
        self.id_to_token
            .get(id)
            .map(String::as_str)
            .ok_or(Error::IdOutOfRange {
                id,
                size: self.len(),
            })
    }

    pub fn tokens(&self) -> &[String] {
        &self.id_to_token
    }

    pub fn encode<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<usize> {
        tokens.iter().map(|t| self.id_or_unk(t.as_ref())).collect()
    }

    pub fn decode(&self, ids: &[usize]) -> Result<Vec<String>> {
        ids.iter()
            .map(|&id| self.token(id).map(str::to_string))
            .collect()
    }
}

impl TryFrom<Vec<String>> for Vocabulary {
    type Error = String;

    fn try_from(tokens: Vec<String>) -> std::result::Result<Self, String> {
        if tokens.len() < RESERVED.len() || tokens[..RESERVED.len()] != RESERVED {
            return Err("vocabulary must start with the five reserved tokens".into());
        }
        let vocab = Vocabulary::from_tokens(tokens.iter().skip(RESERVED.len()).cloned());
        if vocab.len() != tokens.len() {
            return Err("vocabulary contains duplicate tokens".into());
        }
        Ok(vocab)
    }
}

impl From<Vocabulary> for Vec<String> {
    fn from(v: Vocabulary) -> Self {
        v.id_to_token
    }
}
