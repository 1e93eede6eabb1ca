//! User-attribute extraction from dialogue utterances.
//!
//! A bi-directional GRU encodes the utterance; a multi-hop memory network
//! over predicate embeddings decides which predicates fire (independent
//! sigmoid per predicate); a single GRU decoder with a copy mechanism then
//! generates `subject ; object` once per triggered predicate.
//!
//! The numeric core is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the common choices.

pub mod error;
pub mod eval;
pub mod io;
pub mod model;
pub mod scalar;
pub mod supervision;
pub mod tensor;
pub mod text;
pub mod train;

pub use error::{Error, Result};
pub use model::{
    AttributeExtractor, AttributeTriplet, Checkpoint, Lexicon, ModelConfig, ModelParams,
    PredicateVocabulary, TripletText,
};
pub use scalar::Scalar;

/// Double-precision extractor, used by the command-line tool.
pub type Extractor = AttributeExtractor<f64>;
/// Single-precision extractor.
pub type Extractor32 = AttributeExtractor<f32>;
pub type Params = ModelParams<f64>;
pub type Params32 = ModelParams<f32>;
