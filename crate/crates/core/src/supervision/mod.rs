//! Distant supervision: label user turns with the triplets of the persona
//! sentences they entail, plus a seeded corpus generator with planted labels.

mod labels;
mod records;
mod scorer;
pub mod synth;

pub use labels::{build_labels, predicate_vocabulary, BuildReport};
pub use records::{
    persona_key, utterance_key, DialogueRecord, LabeledUtterance, PersonaRecord, Role, ScoreRecord,
    Turn,
};
pub use scorer::{
    ConstantScorer, EntailmentScorer, FileScorer, LexicalScorer, Sentence, SubstringScorer,
};
pub use synth::{synth_corpus, FillerSplit, SynthConfig, SynthCorpus};
