use rand::Rng;

use super::gru::GruParams;
use super::ModelConfig;
use crate::scalar::Scalar;
use crate::tensor::Matrix;
use crate::text::EmbeddingTable;

/// All trainable tensors of the extractor.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams<S> {
    pub embedding: EmbeddingTable<S>,
    pub encoder_fwd: GruParams<S>,
    pub encoder_bwd: GruParams<S>,
    /// Memory embedding matrices `C^1..C^K`, each `J × hidden`.
    pub hops: Vec<Matrix<S>>,
    /// One learned start-of-sequence input per predicate, `J × embed_dim`.
    pub predicate_start: Matrix<S>,
    pub decoder: GruParams<S>,
    /// `W1`: vocabulary projection, `|V| × hidden`.
    pub vocab_proj: Matrix<S>,
    /// `W2`: copy gate over `[h_dec; w_t; v_c]`, `1 × (2·hidden + embed_dim)`.
    pub gate: Matrix<S>,
}

impl<S: Scalar> ModelParams<S> {
    pub fn random<R: Rng + ?Sized>(
        config: &ModelConfig,
        vocab_size: usize,
        trigram_count: usize,
        rng: &mut R,
    ) -> Self {
        let d = config.hidden;
        let embedding =
            EmbeddingTable::random(vocab_size, trigram_count, config.word_dim, config.char_dim, rng);
        let e = embedding.dim();
        let bound = 1.0 / (d as f64).sqrt();
        ModelParams {
            encoder_fwd: GruParams::random(e, d, rng),
            encoder_bwd: GruParams::random(e, d, rng),
            hops: (0..config.hops)
                .map(|_| Matrix::uniform(config.predicates, d, bound, rng))
                .collect(),
            predicate_start: Matrix::uniform(config.predicates, e, 0.1, rng),
            decoder: GruParams::random(e, d, rng),
            vocab_proj: Matrix::uniform(vocab_size, d, bound, rng),
            gate: Matrix::uniform(1, 2 * d + e, 0.1, rng),
            embedding,
        }
    }

    pub fn zeros_like(&self) -> Self {
        let z = |m: &Matrix<S>| Matrix::zeros(m.rows(), m.cols());
        ModelParams {
            embedding: self.embedding.zeros_like(),
            encoder_fwd: self.encoder_fwd.zeros_like(),
            encoder_bwd: self.encoder_bwd.zeros_like(),
            hops: self.hops.iter().map(z).collect(),
            predicate_start: z(&self.predicate_start),
            decoder: self.decoder.zeros_like(),
            vocab_proj: z(&self.vocab_proj),
            gate: z(&self.gate),
        }
    }

    pub fn hidden(&self) -> usize {
        self.decoder.hidden()
    }

    pub fn predicates(&self) -> usize {
        self.predicate_start.rows()
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_proj.rows()
    }

    /// Stable parameter names, in the same order as [`tensors`](Self::tensors).
    pub fn names(&self) -> Vec<String> {
        let gru = |prefix: &'static str| {
            ["w_x", "w_h", "b_x", "b_h"]
                .into_iter()
                .map(move |n| format!("{prefix}.{n}"))
        };
        let mut names = vec!["embedding.words".to_string(), "embedding.chars".to_string()];
        names.extend(gru("encoder.fwd"));
        names.extend(gru("encoder.bwd"));
        names.extend((1..=self.hops.len()).map(|k| format!("classifier.hop{k}")));
        names.push("generator.start".into());
        names.extend(gru("generator.gru"));
        names.push("generator.vocab_proj".into());
        names.push("generator.gate".into());
        names
    }

    pub fn tensors(&self) -> Vec<&Matrix<S>> {
        let mut out = vec![&self.embedding.words, &self.embedding.chars];
        out.extend(self.encoder_fwd.tensors());
        out.extend(self.encoder_bwd.tensors());
        out.extend(self.hops.iter());
        out.push(&self.predicate_start);
        out.extend(self.decoder.tensors());
        out.push(&self.vocab_proj);
        out.push(&self.gate);
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Matrix<S>> {
        let mut out = vec![&mut self.embedding.words, &mut self.embedding.chars];
        out.extend(self.encoder_fwd.tensors_mut());
        out.extend(self.encoder_bwd.tensors_mut());
        out.extend(self.hops.iter_mut());
        out.push(&mut self.predicate_start);
        out.extend(self.decoder.tensors_mut());
        out.push(&mut self.vocab_proj);
        out.push(&mut self.gate);
        out
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.is_finite())
    }

    pub fn fill_zero(&mut self) {
        for t in self.tensors_mut() {
            t.fill(S::zero());
        }
    }

    pub fn parameter_count(&self) -> usize {
        self.tensors().iter().map(|t| t.data().len()).sum()
    }

    /// Checks every tensor shape against `config` and the given sizes.
    pub fn check_shapes(&self, config: &ModelConfig, vocab_size: usize, trigram_count: usize) -> bool {
        let d = config.hidden;
        let e = config.word_dim + config.char_dim;
        let j = config.predicates;
        let gru_ok = |g: &GruParams<S>| {
            g.w_x.shape() == (3 * d, e)
                && g.w_h.shape() == (3 * d, d)
                && g.b_x.shape() == (1, 3 * d)
                && g.b_h.shape() == (1, 3 * d)
        };
        self.embedding.words.shape() == (vocab_size, config.word_dim)
            && self.embedding.chars.shape() == (trigram_count, config.char_dim)
            && gru_ok(&self.encoder_fwd)
            && gru_ok(&self.encoder_bwd)
            && gru_ok(&self.decoder)
            && self.hops.len() == config.hops
            && self.hops.iter().all(|h| h.shape() == (j, d))
            && self.predicate_start.shape() == (j, e)
            && self.vocab_proj.shape() == (vocab_size, d)
            && self.gate.shape() == (1, 2 * d + e)
    }
}
