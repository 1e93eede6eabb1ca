use crate::text::{TokenFeatures, TrigramIndex, Vocabulary, UNK};

/// Vocabulary plus the character-trigram index derived from it.
#[derive(Clone, Debug, PartialEq)]
pub struct Lexicon {
    vocab: Vocabulary,
    trigrams: TrigramIndex,
    token_trigrams: Vec<Vec<usize>>,
}

/// One source position: its surface form, its embedding inputs, and its id in
/// the per-utterance extended vocabulary used by the copy distribution.
#[derive(Clone, Debug, PartialEq)]
pub struct SourceToken {
    pub surface: String,
    pub features: TokenFeatures,
    pub ext: usize,
}

/// A tokenized utterance ready for the encoder. Out-of-vocabulary surfaces
/// receive extended ids `|V|, |V|+1, ...` in order of first appearance.
#[derive(Clone, Debug, PartialEq)]
pub struct PreparedSource {
    pub tokens: Vec<SourceToken>,
    pub oov: Vec<String>,
}

impl Lexicon {
    pub fn new(vocab: Vocabulary) -> Self {
        let trigrams = TrigramIndex::build(&vocab);
        Self::with_trigrams(vocab, trigrams)
    }

    pub fn with_trigrams(vocab: Vocabulary, trigrams: TrigramIndex) -> Self {
        let token_trigrams = vocab.tokens().iter().map(|t| trigrams.lookup(t)).collect();
        Lexicon {
            vocab,
            trigrams,
            token_trigrams,
        }
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn trigrams(&self) -> &TrigramIndex {
        &self.trigrams
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab.len()
    }

    pub fn features(&self, token: &str) -> TokenFeatures {
        match self.vocab.id(token) {
            Some(id) => self.features_of_id(id),
            None => TokenFeatures {
                word: UNK,
                trigrams: self.trigrams.lookup(token),
            },
        }
    }

    pub fn features_of_id(&self, id: usize) -> TokenFeatures {
        TokenFeatures {
            word: id,
            trigrams: self.token_trigrams[id].clone(),
        }
    }

    pub fn prepare<T: AsRef<str>>(&self, tokens: &[T]) -> PreparedSource {
        let mut oov: Vec<String> = Vec::new();
        let tokens = tokens
            .iter()
            .map(|t| {
                let surface = t.as_ref().to_string();
                let ext = match self.vocab.id(&surface) {
                    Some(id) => id,
                    None => {
                        let k = oov.iter().position(|o| *o == surface).unwrap_or_else(|| {
                            oov.push(surface.clone());
                            oov.len() - 1
                        });
                        self.vocab.len() + k
                    }
                };
                SourceToken {
                    features: self.features(&surface),
                    surface,
                    ext,
                }
            })
            .collect();
        PreparedSource { tokens, oov }
    }

    /// Extended id a decoder should emit for `token` given this source.
    pub fn target_id(&self, source: &PreparedSource, token: &str) -> usize {
        if let Some(id) = self.vocab.id(token) {
            return id;
        }
        match source.oov.iter().position(|o| o == token) {
            Some(k) => self.vocab.len() + k,
            None => UNK,
        }
    }

    /// Surface form of an extended id.
    pub fn surface(&self, source: &PreparedSource, id: usize) -> String {
        if id < self.vocab.len() {
            self.vocab.tokens()[id].clone()
        } else {
            source.oov[id - self.vocab.len()].clone()
        }
    }

    /// Decoder input features for a previously emitted extended id. Copied
    /// out-of-vocabulary tokens are fed as UNK plus their own trigrams.
    pub fn features_of_output(&self, source: &PreparedSource, id: usize) -> TokenFeatures {
        if id < self.vocab.len() {
            self.features_of_id(id)
        } else {
            self.features(&source.oov[id - self.vocab.len()])
        }
    }
}

impl PreparedSource {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn ext_ids(&self) -> Vec<usize> {
        self.tokens.iter().map(|t| t.ext).collect()
    }

    pub fn ext_size(&self, vocab_size: usize) -> usize {
        vocab_size + self.oov.len()
    }
}
