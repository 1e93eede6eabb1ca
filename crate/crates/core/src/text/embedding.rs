use std::collections::{BTreeSet, HashMap};
use std::io::{BufRead, BufReader};
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::vocab::{Vocabulary, PAD, RESERVED};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Matrix;

/// Character trigrams of `<token>`, used for the character half of a word
/// embedding.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct TrigramIndex {
    list: Vec<String>,
    map: HashMap<String, usize>,
}

fn raw_trigrams(token: &str) -> Vec<String> {
    let chars: Vec<char> = std::iter::once('<')
        .chain(token.chars())
        .chain(std::iter::once('>'))
        .collect();
    chars.windows(3).map(|w| w.iter().collect()).collect()
}

impl TrigramIndex {
    /// Indexes every trigram of every non-reserved vocabulary token, in
    /// first-seen order.
    pub fn build(vocab: &Vocabulary) -> Self {
        let mut index = TrigramIndex::default();
        for tok in vocab.tokens().iter().skip(RESERVED.len()) {
            for tri in raw_trigrams(tok) {
                if !index.map.contains_key(&tri) {
                    index.map.insert(tri.clone(), index.list.len());
                    index.list.push(tri);
                }
            }
        }
        index
    }

    pub fn len(&self) -> usize {
        self.list.len()
    }

    pub fn is_empty(&self) -> bool {
        self.list.is_empty()
    }

    /// Known trigram ids of `token`, deduplicated and sorted. Reserved tokens
    /// have none.
    pub fn lookup(&self, token: &str) -> Vec<usize> {
        if RESERVED.contains(&token) {
            return Vec::new();
        }
        let ids: BTreeSet<usize> = raw_trigrams(token)
            .iter()
            .filter_map(|t| self.map.get(t).copied())
            .collect();
        ids.into_iter().collect()
    }
}

impl From<Vec<String>> for TrigramIndex {
    fn from(list: Vec<String>) -> Self {
        let map = list
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        TrigramIndex { list, map }
    }
}

impl From<TrigramIndex> for Vec<String> {
    fn from(t: TrigramIndex) -> Self {
        t.list
    }
}

/// Input features of one token: its word id and the ids of its character
/// trigrams.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TokenFeatures {
    pub word: usize,
    pub trigrams: Vec<usize>,
}

/// Word vectors concatenated with the mean of the token's character-trigram
/// vectors. The PAD row is zero and never receives gradient.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingTable<S> {
    pub words: Matrix<S>,
    pub chars: Matrix<S>,
}

impl<S: Scalar> EmbeddingTable<S> {
    pub fn random<R: Rng + ?Sized>(
        vocab_size: usize,
        trigram_count: usize,
        word_dim: usize,
        char_dim: usize,
        rng: &mut R,
    ) -> Self {
        let mut words = Matrix::uniform(vocab_size, word_dim, 0.1, rng);
        words.row_mut(PAD).fill(S::zero());
        let chars = Matrix::uniform(trigram_count, char_dim, 0.1, rng);
        EmbeddingTable { words, chars }
    }

    pub fn zeros_like(&self) -> Self {
        EmbeddingTable {
            words: Matrix::zeros(self.words.rows(), self.words.cols()),
            chars: Matrix::zeros(self.chars.rows(), self.chars.cols()),
        }
    }

    pub fn word_dim(&self) -> usize {
        self.words.cols()
    }

    pub fn char_dim(&self) -> usize {
        self.chars.cols()
    }

    pub fn dim(&self) -> usize {
        self.word_dim() + self.char_dim()
    }

    pub fn embed(&self, token: &TokenFeatures) -> Vec<S> {
        let mut out = Vec::with_capacity(self.dim());
        out.extend_from_slice(self.words.row(token.word));
        let mut chars = vec![S::zero(); self.char_dim()];
        if !token.trigrams.is_empty() && self.char_dim() > 0 {
            let scale = S::one() / S::of(token.trigrams.len() as f64);
            for &t in &token.trigrams {
                crate::tensor::axpy(scale, self.chars.row(t), &mut chars);
            }
        }
        out.extend(chars);
        out
    }

    /// Scatters `grad` (length `dim()`) back onto the rows `embed` read.
    pub fn accumulate(&mut self, token: &TokenFeatures, grad: &[S]) {
        let wd = self.word_dim();
        if token.word != PAD {
            crate::tensor::add_into(&grad[..wd], self.words.row_mut(token.word));
        }
        if !token.trigrams.is_empty() && self.char_dim() > 0 {
            let scale = S::one() / S::of(token.trigrams.len() as f64);
            for &t in &token.trigrams {
                crate::tensor::axpy(scale, &grad[wd..], self.chars.row_mut(t));
            }
        }
    }

    /// Overwrites word rows from a plain-text `token v1 v2 ...` file. Returns
    /// the number of vocabulary rows initialised.
    pub fn load_pretrained(&mut self, path: &Path, vocab: &Vocabulary) -> Result<usize> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut loaded = 0;
        for (n, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            let mut parts = line.split_whitespace();
            let Some(token) = parts.next() else { continue };
            let values = parts
                .map(|v| v.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Malformed {
                    path: path.into(),
                    line: n + 1,
                    message: format!("bad embedding value: {e}"),
                })?;
            if values.len() != self.word_dim() {
                return Err(Error::Malformed {
                    path: path.into(),
                    line: n + 1,
                    message: format!(
                        "expected {} values, found {}",
                        self.word_dim(),
                        values.len()
                    ),
                });
            }
            if let Some(id) = vocab.id(token).filter(|&id| id != PAD) {
                for (dst, v) in self.words.row_mut(id).iter_mut().zip(values) {
                    *dst = S::of(v);
                }
                loaded += 1;
            }
        }
        Ok(loaded)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::io::Write;

    fn table() -> (Vocabulary, TrigramIndex, EmbeddingTable<f64>) {
        let vocab = Vocabulary::from_tokens(["cat", "cats", "dog"]);
        let tri = TrigramIndex::build(&vocab);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let emb = EmbeddingTable::random(vocab.len(), tri.len(), 4, 3, &mut rng);
        (vocab, tri, emb)
    }

    #[test]
    fn pad_row_is_zero_and_gets_no_gradient() {
        let (_, _, emb) = table();
        assert!(emb.words.row(PAD).iter().all(|&x| x == 0.0));
        let mut grad = emb.zeros_like();
        let pad = TokenFeatures {
            word: PAD,
            trigrams: vec![],
        };
        grad.accumulate(&pad, &[1.0; 7]);
        assert!(grad.words.data().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn trigrams_shared_between_related_words() {
        let (_, tri, _) = table();
        let cat = tri.lookup("cat");
        let cats = tri.lookup("cats");
        assert_eq!(cat.len(), 3);
        assert!(cat.iter().filter(|t| cats.contains(t)).count() >= 2);
        assert!(tri.lookup("<unk>").is_empty());
        // unseen word still maps its known trigrams
        assert!(!tri.lookup("catalog").is_empty());
    }

    #[test]
    fn embed_concatenates_word_and_char_mean() {
        let (vocab, tri, emb) = table();
        let id = vocab.id("dog").unwrap();
        let feats = TokenFeatures {
            word: id,
            trigrams: tri.lookup("dog"),
        };
        let v = emb.embed(&feats);
        assert_eq!(v.len(), 7);
        assert_eq!(&v[..4], emb.words.row(id));
        for c in 0..3 {
            let mean: f64 = feats.trigrams.iter().map(|&t| emb.chars.get(t, c)).sum::<f64>()
                / feats.trigrams.len() as f64;
            assert!((v[4 + c] - mean).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_char_dim_disables_char_features() {
        let vocab = Vocabulary::from_tokens(["a"]);
        let tri = TrigramIndex::build(&vocab);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let emb = EmbeddingTable::<f32>::random(vocab.len(), tri.len(), 5, 0, &mut rng);
        let v = emb.embed(&TokenFeatures {
            word: 5,
            trigrams: tri.lookup("a"),
        });
        assert_eq!(v.len(), 5);
    }

    #[test]
    fn pretrained_file_overrides_known_rows() {
        let (vocab, _, mut emb) = table();
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "dog 1 2 3 4").unwrap();
        writeln!(f, "unseen 9 9 9 9").unwrap();
        let n = emb.load_pretrained(f.path(), &vocab).unwrap();
        assert_eq!(n, 1);
        assert_eq!(emb.words.row(vocab.id("dog").unwrap()), &[1.0, 2.0, 3.0, 4.0]);

        let mut bad = tempfile::NamedTempFile::new().unwrap();
        writeln!(bad, "dog 1 2").unwrap();
        assert!(matches!(
            emb.load_pretrained(bad.path(), &vocab),
            Err(Error::Malformed { line: 1, .. })
        ));
    }
}
