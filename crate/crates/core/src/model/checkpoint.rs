use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{AttributeExtractor, Lexicon, ModelConfig, ModelParams, PredicateVocabulary};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Matrix;
use crate::text::{TrigramIndex, Vocabulary};

const FORMAT: &str = "attrex-checkpoint";
const VERSION: u32 = 1;

/// A named tensor with its shape header. Values are stored as `f64`, which
/// represents both supported scalar types exactly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TensorRecord {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

/// Optimizer state carried along so that training can resume.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerRecord {
    pub epochs_completed: usize,
    pub step: u64,
    pub first_moment: Vec<TensorRecord>,
    pub second_moment: Vec<TensorRecord>,
}

/// Self-describing model file: configuration, vocabularies, predicate list
/// and every parameter array.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub scalar: String,
    pub config: ModelConfig,
    pub vocabulary: Vocabulary,
    pub trigrams: TrigramIndex,
    pub predicates: PredicateVocabulary,
    pub tensors: Vec<TensorRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimizer: Option<OptimizerRecord>,
    /// Free-form provenance (run configuration, seed).
    #[serde(default)]
    pub meta: serde_json::Value,
}

pub fn params_to_records<S: Scalar>(params: &ModelParams<S>) -> Vec<TensorRecord> {
    params
        .names()
        .into_iter()
        .zip(params.tensors())
        .map(|(name, t)| TensorRecord {
            name,
            rows: t.rows(),
            cols: t.cols(),
            data: t.data().iter().map(|x| x.as_f64()).collect(),
        })
        .collect()
}

/// Copies records into `params`, checking names and shapes.
pub fn records_into_params<S: Scalar>(
    records: &[TensorRecord],
    params: &mut ModelParams<S>,
) -> Result<()> {
    let names = params.names();
    if records.len() != names.len() {
        return Err(Error::Checkpoint(format!(
            "expected {} tensors, found {}",
            names.len(),
            records.len()
        )));
    }
    for ((rec, name), tensor) in records.iter().zip(names).zip(params.tensors_mut()) {
        if rec.name != name || (rec.rows, rec.cols) != tensor.shape() {
            return Err(Error::Checkpoint(format!(
                "tensor `{}` {}x{} does not match expected `{}` {}x{}",
                rec.name,
                rec.rows,
                rec.cols,
                name,
                tensor.rows(),
                tensor.cols()
            )));
        }
        if rec.data.len() != rec.rows * rec.cols {
            return Err(Error::Checkpoint(format!(
                "tensor `{}` has {} values for shape {}x{}",
                rec.name,
                rec.data.len(),
                rec.rows,
                rec.cols
            )));
        }
        *tensor = Matrix::from_vec(rec.rows, rec.cols, rec.data.iter().map(|&x| S::of(x)).collect());
    }
    Ok(())
}

impl Checkpoint {
    pub fn from_model<S: Scalar>(model: &AttributeExtractor<S>) -> Self {
        Checkpoint {
            format: FORMAT.into(),
            version: VERSION,
            scalar: S::NAME.into(),
            config: model.config.clone(),
            vocabulary: model.lexicon.vocab().clone(),
            trigrams: model.lexicon.trigrams().clone(),
            predicates: model.predicates.clone(),
            tensors: params_to_records(&model.params),
            optimizer: None,
            meta: serde_json::Value::Null,
        }
    }

    pub fn to_model<S: Scalar>(&self) -> Result<AttributeExtractor<S>> {
        if self.format != FORMAT || self.version != VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported checkpoint format {} v{}",
                self.format, self.version
            )));
        }
        if self.scalar != S::NAME {
            return Err(Error::Checkpoint(format!(
                "checkpoint holds {} parameters, requested {}",
                self.scalar,
                S::NAME
            )));
        }
        self.config.validate()?;
        if self.config.predicates != self.predicates.len() {
            return Err(Error::Checkpoint("predicate count does not match config".into()));
        }
        let lexicon = Lexicon::with_trigrams(self.vocabulary.clone(), self.trigrams.clone());
        // Shape-only skeleton; every value is overwritten below.
        let mut params =
            ModelParams::zeros_skeleton(&self.config, lexicon.vocab_size(), lexicon.trigrams().len());
        records_into_params(&self.tensors, &mut params)?;
        Ok(AttributeExtractor {
            config: self.config.clone(),
            lexicon,
            predicates: self.predicates.clone(),
            params,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        serde_json::to_writer(&mut w, self)
            .map_err(|e| Error::Checkpoint(format!("serialising {}: {e}", path.display())))?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_reader(BufReader::new(file))
            .map_err(|e| Error::Checkpoint(format!("reading {}: {e}", path.display())))
    }
}

impl<S: Scalar> ModelParams<S> {
    pub(crate) fn zeros_skeleton(config: &ModelConfig, vocab_size: usize, trigram_count: usize) -> Self {
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(0);
        let mut p = ModelParams::random(config, vocab_size, trigram_count, &mut rng);
        p.fill_zero();
        p
    }
}
