//! The two-stage extractor: context encoder, memory-network predicate
//! classifier and shared copy-capable entity generator.

pub(crate) mod checkpoint;
mod classifier;
mod encoder;
mod generator;
mod gru;
mod lexicon;
mod params;
mod triplet;

use std::collections::{BTreeSet, HashMap};

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use checkpoint::{Checkpoint, OptimizerRecord, TensorRecord};
pub use classifier::{classify, classify_backward, trigger_set, ClassifierTrace};
pub use encoder::{encode, encode_backward, EncodedContext, EncoderTrace};
pub use generator::{
    decode_step, decode_step_backward, generate, split_entities, target_tokens, DecodeOptions,
    DecodeStep, EntityPhrases, Generation,
};
pub use gru::{GruParams, GruStep};
pub use lexicon::{Lexicon, PreparedSource, SourceToken};
pub use params::ModelParams;
pub use triplet::{AttributeTriplet, TripletText};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::text::tokenize;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    /// Recurrent hidden size `d_hdd`.
    pub hidden: usize,
    /// Memory hops `K`.
    pub hops: usize,
    /// Number of predicates `J`.
    pub predicates: usize,
    pub word_dim: usize,
    /// Character-trigram embedding width; 0 disables it.
    pub char_dim: usize,
    pub trigger_threshold: f64,
    pub max_decode_len: usize,
    /// `λ` weighting the predicate loss against the entity loss.
    pub lambda_loss: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            hidden: 128,
            hops: 3,
            predicates: 1,
            word_dim: 300,
            char_dim: 100,
            trigger_threshold: 0.5,
            max_decode_len: 12,
            lambda_loss: 0.5,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Config(m.to_string()));
        if self.hops < 1 {
            return fail("hops must be at least 1");
        }
        if self.predicates < 1 {
            return fail("at least one predicate is required");
        }
        if self.hidden < 1 || self.word_dim < 1 {
            return fail("hidden and word_dim must be positive");
        }
        if !(self.trigger_threshold > 0.0 && self.trigger_threshold < 1.0) {
            return fail("trigger_threshold must lie in (0, 1)");
        }
        if !(0.0..=1.0).contains(&self.lambda_loss) {
            return fail("lambda_loss must lie in [0, 1]");
        }
        if self.max_decode_len < 1 {
            return fail("max_decode_len must be at least 1");
        }
        Ok(())
    }

    pub fn embed_dim(&self) -> usize {
        self.word_dim + self.char_dim
    }
}

/// Ordered, duplicate-free predicate names; the index is the predicate id.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct PredicateVocabulary {
    names: Vec<String>,
    index: HashMap<String, usize>,
}

impl PredicateVocabulary {
    pub fn new<I, T>(names: I) -> Result<Self>
    where
        I: IntoIterator<Item = T>,
        T: Into<String>,
    {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        let mut index = HashMap::with_capacity(names.len());
        for (i, n) in names.iter().enumerate() {
            if n.trim().is_empty() {
                return Err(Error::Config("empty predicate name".into()));
            }
            if index.insert(n.clone(), i).is_some() {
                return Err(Error::Config(format!("duplicate predicate `{n}`")));
            }
        }
        Ok(PredicateVocabulary { names, index })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn id(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn name(&self, id: usize) -> &str {
        &self.names[id]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }
}

impl TryFrom<Vec<String>> for PredicateVocabulary {
    type Error = String;

    fn try_from(v: Vec<String>) -> std::result::Result<Self, String> {
        PredicateVocabulary::new(v).map_err(|e| e.to_string())
    }
}

impl From<PredicateVocabulary> for Vec<String> {
    fn from(p: PredicateVocabulary) -> Self {
        p.names
    }
}

/// Result of running the extractor on one utterance.
#[derive(Clone, Debug)]
pub struct Extraction<S> {
    pub triplets: Vec<AttributeTriplet>,
    pub alpha: Vec<S>,
    pub triggered: Vec<usize>,
    /// Generations that lacked a separator and fell back to subject `i`.
    pub missing_separator: usize,
}

/// Trained (or freshly initialised) extractor: configuration, token and
/// predicate vocabularies, and parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct AttributeExtractor<S> {
    pub config: ModelConfig,
    pub lexicon: Lexicon,
    pub predicates: PredicateVocabulary,
    pub params: ModelParams<S>,
}

impl<S: Scalar> AttributeExtractor<S> {
    pub fn new<R: Rng + ?Sized>(
        mut config: ModelConfig,
        lexicon: Lexicon,
        predicates: PredicateVocabulary,
        rng: &mut R,
    ) -> Result<Self> {
        config.predicates = predicates.len();
        config.validate()?;
        let params = ModelParams::random(
            &config,
            lexicon.vocab_size(),
            lexicon.trigrams().len(),
            rng,
        );
        Ok(AttributeExtractor {
            config,
            lexicon,
            predicates,
            params,
        })
    }

    pub fn decode_options(&self) -> DecodeOptions<S> {
        DecodeOptions {
            max_len: self.config.max_decode_len,
            force_gate: None,
        }
    }

    pub fn encode_tokens<T: AsRef<str>>(&self, tokens: &[T]) -> Result<EncodedContext<S>> {
        let source = self.lexicon.prepare(tokens);
        encode(&self.params, source).map(|(ctx, _)| ctx)
    }

    /// Final-hop activations `α ∈ [0,1]^J`.
    pub fn classify(&self, ctx: &EncodedContext<S>) -> Vec<S> {
        classify(&self.params.hops, &ctx.summary).alpha
    }

    pub fn generate(&self, ctx: &EncodedContext<S>, predicate: usize) -> Generation<S> {
        generate(
            &self.params,
            &self.lexicon,
            ctx,
            predicate,
            self.decode_options(),
        )
    }

    /// Generates and parses the entity phrases for one predicate. Returns
    /// `None` when the subject or object came out empty.
    pub fn generate_triplet(
        &self,
        ctx: &EncodedContext<S>,
        predicate: usize,
    ) -> (Option<AttributeTriplet>, bool) {
        let generation = self.generate(ctx, predicate);
        let phrases = split_entities(&generation.tokens);
        let triplet = (!phrases.subject.is_empty() && !phrases.object.is_empty()).then_some(
            AttributeTriplet {
                subject: phrases.subject,
                predicate,
                object: phrases.object,
            },
        );
        (triplet, phrases.missing_separator)
    }

    /// Runs the generator once per predicate in `predicates` and collects the
    /// deduplicated triplets.
    pub fn extract_with_predicates(
        &self,
        ctx: &EncodedContext<S>,
        predicates: &[usize],
    ) -> (Vec<AttributeTriplet>, usize) {
        let mut out = BTreeSet::new();
        let mut missing = 0;
        for &j in predicates {
            let (triplet, missing_sep) = self.generate_triplet(ctx, j);
            missing += missing_sep as usize;
            if let Some(t) = triplet {
                out.insert(t);
            }
        }
        (out.into_iter().collect(), missing)
    }

    /// An empty token sequence yields an empty extraction with `α = 0`.
    pub fn extract_tokens<T: AsRef<str>>(&self, tokens: &[T]) -> Result<Extraction<S>> {
        if tokens.is_empty() {
            return Ok(Extraction {
                triplets: Vec::new(),
                alpha: vec![S::zero(); self.predicates.len()],
                triggered: Vec::new(),
                missing_separator: 0,
            });
        }
        let ctx = self.encode_tokens(tokens)?;
        let alpha = self.classify(&ctx);
        let triggered = trigger_set(&alpha, S::of(self.config.trigger_threshold));
        let (triplets, missing_separator) = self.extract_with_predicates(&ctx, &triggered);
        Ok(Extraction {
            triplets,
            alpha,
            triggered,
            missing_separator,
        })
    }

    pub fn extract(&self, utterance: &str) -> Result<Extraction<S>> {
        self.extract_tokens(&tokenize(utterance))
    }
}
