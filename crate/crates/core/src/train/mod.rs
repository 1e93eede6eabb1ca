//! End-to-end optimisation of the extractor.

mod adam;
mod backprop;
mod corpus;
mod example;
mod gradcheck;
pub mod loss;

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use adam::{clip_grad_norm, Adam};
pub use backprop::{accumulate_example, batch_loss, ExampleLoss, LossWeights};
pub use corpus::{build_lexicon, examples_from_corpus, PrepareReport};
pub use example::LabeledExample;
pub use gradcheck::{analytic_gradients, gradient_check, GradCheckReport};

use crate::error::{Error, Result};
use crate::model::checkpoint::{params_to_records, records_into_params, OptimizerRecord};
use crate::model::{AttributeExtractor, ModelParams, PreparedSource};
use crate::scalar::Scalar;
use crate::text::word_dropout;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub lr_start: f64,
    pub lr_end: f64,
    /// Dropout on encoder and decoder hidden outputs.
    pub dropout: f64,
    pub word_dropout: f64,
    pub max_epochs: usize,
    pub seed: u64,
    pub clip_norm: f64,
    pub freeze_embeddings: bool,
    /// Adds wall-clock seconds to each epoch record (breaks byte-identical
    /// logs).
    pub record_timing: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 32,
            lr_start: 1e-3,
            lr_end: 1e-4,
            dropout: 0.6,
            word_dropout: 0.1,
            max_epochs: 50,
            seed: 0,
            clip_norm: 5.0,
            freeze_embeddings: false,
            record_timing: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Config(m.to_string()));
        if self.batch_size == 0 {
            return fail("batch_size must be positive");
        }
        let ordered = self.lr_end <= self.lr_start;
        if !ordered || self.lr_end < 0.0 {
            return fail("learning rates must satisfy 0 <= lr_end <= lr_start");
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return fail("dropout must lie in [0, 1)");
        }
        if !(0.0..=1.0).contains(&self.word_dropout) {
            return fail("word_dropout must lie in [0, 1]");
        }
        let positive = self.clip_norm > 0.0;
        if !positive {
            return fail("clip_norm must be positive");
        }
        Ok(())
    }

    /// Linear annealing from `lr_start` (first epoch) to `lr_end` (last).
    pub fn learning_rate(&self, epoch: usize) -> f64 {
        if self.max_epochs <= 1 {
            return self.lr_start;
        }
        let frac = epoch.min(self.max_epochs - 1) as f64 / (self.max_epochs - 1) as f64;
        self.lr_start + (self.lr_end - self.lr_start) * frac
    }
}

/// One line of the metrics log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub predicate_loss: f64,
    pub entity_loss: f64,
    pub total_loss: f64,
    pub lr: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_seconds: Option<f64>,
}

pub struct Trainer<S> {
    pub config: TrainConfig,
    pub optimizer: Adam<S>,
    pub epochs_completed: usize,
}

fn masked_source<R: rand::Rng>(source: &PreparedSource, rate: f64, rng: &mut R) -> PreparedSource {
    let mut out = source.clone();
    if rate > 0.0 {
        let ids: Vec<usize> = out.tokens.iter().map(|t| t.features.word).collect();
        for (tok, id) in out.tokens.iter_mut().zip(word_dropout(&ids, rate, rng)) {
            tok.features.word = id;
        }
    }
    out
}

impl<S: Scalar> Trainer<S> {
    pub fn new(config: TrainConfig, model: &AttributeExtractor<S>) -> Result<Self> {
        config.validate()?;
        Ok(Trainer {
            config,
            optimizer: Adam::new(&model.params),
            epochs_completed: 0,
        })
    }

    /// Restores optimizer state saved by [`to_record`](Self::to_record).
    pub fn resume(
        config: TrainConfig,
        model: &AttributeExtractor<S>,
        record: &OptimizerRecord,
    ) -> Result<Self> {
        let mut trainer = Trainer::new(config, model)?;
        records_into_params(&record.first_moment, &mut trainer.optimizer.first_moment)?;
        records_into_params(&record.second_moment, &mut trainer.optimizer.second_moment)?;
        trainer.optimizer.step = record.step;
        trainer.epochs_completed = record.epochs_completed;
        Ok(trainer)
    }

    pub fn to_record(&self) -> OptimizerRecord {
        OptimizerRecord {
            epochs_completed: self.epochs_completed,
            step: self.optimizer.step,
            first_moment: params_to_records(&self.optimizer.first_moment),
            second_moment: params_to_records(&self.optimizer.second_moment),
        }
    }

    /// Runs one epoch (0-based index `epoch`). The shuffling, word masking and
    /// dropout streams depend only on the seed and the epoch index.
    pub fn train_epoch(
        &mut self,
        model: &mut AttributeExtractor<S>,
        examples: &[LabeledExample],
        epoch: usize,
    ) -> Result<EpochMetrics> {
        if examples.is_empty() {
            return Err(Error::Config("training corpus is empty".into()));
        }
        let started = Instant::now();
        let lambda = model.config.lambda_loss;
        let lr = self.config.learning_rate(epoch);
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
        rng.set_stream(epoch as u64);
        let mut order: Vec<usize> = (0..examples.len()).collect();
        order.shuffle(&mut rng);

        let mut grads: ModelParams<S> = model.params.zeros_like();
        let (mut sum_lp, mut sum_lv, mut pairs_total) = (0.0, 0.0, 0usize);
        for (batch, chunk) in order.chunks(self.config.batch_size).enumerate() {
            grads.fill_zero();
            let pairs: usize = chunk.iter().map(|&i| examples[i].targets.len()).sum();
            let weights = LossWeights::for_batch(lambda, chunk.len(), pairs);
            let (mut lp, mut lv) = (S::zero(), S::zero());
            for &i in chunk {
                let ex = &examples[i];
                let source = masked_source(&ex.source, self.config.word_dropout, &mut rng);
                let l = accumulate_example(
                    model,
                    ex,
                    source,
                    weights,
                    Some((self.config.dropout, &mut rng)),
                    &mut grads,
                    !self.config.freeze_embeddings,
                )?;
                lp += l.predicate;
                lv += l.entity;
            }
            let batch_total = lambda * lp.as_f64() / chunk.len() as f64
                + if pairs > 0 {
                    (1.0 - lambda) * lv.as_f64() / pairs as f64
                } else {
                    0.0
                };
            if !batch_total.is_finite() || !grads.is_finite() {
                return Err(Error::NonFiniteLoss { epoch, batch });
            }
            clip_grad_norm(&mut grads, self.config.clip_norm);
            self.optimizer.update(&mut model.params, &grads, lr);
            sum_lp += lp.as_f64();
            sum_lv += lv.as_f64();
            pairs_total += pairs;
        }
        self.epochs_completed = epoch + 1;

        let predicate_loss = sum_lp / examples.len() as f64;
        let entity_loss = if pairs_total > 0 {
            sum_lv / pairs_total as f64
        } else {
            0.0
        };
        Ok(EpochMetrics {
            epoch: epoch + 1,
            predicate_loss,
            entity_loss,
            total_loss: lambda * predicate_loss + (1.0 - lambda) * entity_loss,
            lr,
            wall_seconds: self
                .config
                .record_timing
                .then(|| started.elapsed().as_secs_f64()),
        })
    }

    /// Trains from `epochs_completed` up to `max_epochs`, calling `on_epoch`
    /// after each epoch (for checkpointing and logging).
    pub fn fit<F>(
        &mut self,
        model: &mut AttributeExtractor<S>,
        examples: &[LabeledExample],
        mut on_epoch: F,
    ) -> Result<Vec<EpochMetrics>>
    where
        F: FnMut(&EpochMetrics, &AttributeExtractor<S>, &Trainer<S>) -> Result<()>,
    {
        let mut log = Vec::new();
        for epoch in self.epochs_completed..self.config.max_epochs {
            let metrics = self.train_epoch(model, examples, epoch)?;
            on_epoch(&metrics, model, self)?;
            log.push(metrics);
        }
        Ok(log)
    }
}
