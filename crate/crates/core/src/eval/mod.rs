//! Automatic metrics: exact-set accuracy, micro triplet F1, corpus BLEU-1,
//! and oracle evaluation of each pipeline stage in isolation.

mod metrics;

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

pub use metrics::{bleu1, per_key_counts, strict_match, triplet_f1, Prf, StrictMatch};

use crate::error::{Error, Result};
use crate::model::{trigger_set, AttributeExtractor, PredicateVocabulary, TripletText};
use crate::scalar::Scalar;
use crate::supervision::LabeledUtterance;
use crate::text::tokenize;

pub type TripletSet = BTreeSet<TripletText>;

/// Which stage to isolate in [`oracle_eval`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OracleMode {
    /// Predicate-set prediction alone.
    Classifier,
    /// Generation given the gold predicates.
    Generator,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PredicateScore {
    pub predicate: String,
    pub true_positives: usize,
    pub predicted: usize,
    pub gold: usize,
    pub precision: f64,
    pub recall: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvalReport {
    pub utterances: usize,
    pub predicted_triplets: usize,
    pub gold_triplets: usize,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub bleu1: f64,
    pub per_predicate: Vec<PredicateScore>,
}

impl EvalReport {
    /// Human-readable summary with metrics scaled to percent.
    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "utterances {}  predicted {}  gold {}",
            self.utterances, self.predicted_triplets, self.gold_triplets
        );
        let _ = writeln!(
            s,
            "ACC {:6.2}  P {:6.2}  R {:6.2}  F1 {:6.2}  BLEU-1 {:6.2}",
            100.0 * self.accuracy,
            100.0 * self.precision,
            100.0 * self.recall,
            100.0 * self.f1,
            100.0 * self.bleu1
        );
        let width = self
            .per_predicate
            .iter()
            .map(|p| p.predicate.len())
            .max()
            .unwrap_or(0)
            .max(9);
        let _ = writeln!(s, "{:width$}  {:>5} {:>5} {:>5} {:>7} {:>7}", "predicate", "tp", "pred", "gold", "P", "R");
        for p in &self.per_predicate {
            let _ = writeln!(
                s,
                "{:width$}  {:>5} {:>5} {:>5} {:>7.2} {:>7.2}",
                p.predicate,
                p.true_positives,
                p.predicted,
                p.gold,
                100.0 * p.precision,
                100.0 * p.recall
            );
        }
        s
    }
}

/// Normalised set of the triplets of one utterance.
pub fn triplet_set<'a>(triplets: impl IntoIterator<Item = &'a TripletText>) -> TripletSet {
    triplets.into_iter().map(TripletText::normalized).collect()
}

/// Tokens of `subject ; predicate ; object` for each triplet, ordered by
/// predicate id (unknown predicates last, by name).
pub fn triplet_tokens(set: &TripletSet, predicates: &PredicateVocabulary) -> Vec<String> {
    let mut ordered: Vec<&TripletText> = set.iter().collect();
    ordered.sort_by_key(|t| (predicates.id(&t.predicate).unwrap_or(usize::MAX), *t));
    let mut out = Vec::new();
    for t in ordered {
        out.extend(tokenize(&t.subject));
        out.push(";".into());
        out.push(t.predicate.clone());
        out.push(";".into());
        out.extend(tokenize(&t.object));
    }
    out
}

/// Scores predicted against gold triplet sets, one pair per utterance.
pub fn evaluate(
    pred: &[TripletSet],
    gold: &[TripletSet],
    predicates: &PredicateVocabulary,
) -> Result<EvalReport> {
    let strict = strict_match(pred, gold)?;
    let prf = triplet_f1(pred, gold)?;
    let cand: Vec<Vec<String>> = pred.iter().map(|s| triplet_tokens(s, predicates)).collect();
    let refs: Vec<Vec<String>> = gold.iter().map(|s| triplet_tokens(s, predicates)).collect();
    let bleu = bleu1(&cand, &refs)?;
    let table = per_key_counts(pred, gold, |t: &TripletText| t.predicate.clone());
    Ok(report(strict.accuracy, prf, bleu, pred.len(), predicate_rows(predicates, |name| {
        table.get(name).copied().unwrap_or_default()
    }, table.keys())))
}

fn predicate_rows<'a, F>(
    predicates: &PredicateVocabulary,
    lookup: F,
    extra: impl Iterator<Item = &'a String>,
) -> Vec<PredicateScore>
where
    F: Fn(&str) -> (usize, usize, usize),
{
    let mut names: Vec<String> = predicates.names().to_vec();
    let mut unknown: Vec<String> = extra.filter(|n| predicates.id(n).is_none()).cloned().collect();
    unknown.sort();
    names.extend(unknown);
    names
        .into_iter()
        .map(|predicate| {
            let (tp, np, ng) = lookup(&predicate);
            let prf = Prf::from_counts(tp, np, ng);
            PredicateScore {
                predicate,
                true_positives: tp,
                predicted: np,
                gold: ng,
                precision: if np == 0 { 0.0 } else { prf.precision },
                recall: if ng == 0 { 0.0 } else { prf.recall },
            }
        })
        .collect()
}

fn report(accuracy: f64, prf: Prf, bleu1: f64, n: usize, per_predicate: Vec<PredicateScore>) -> EvalReport {
    EvalReport {
        utterances: n,
        predicted_triplets: prf.predicted,
        gold_triplets: prf.gold,
        accuracy,
        precision: prf.precision,
        recall: prf.recall,
        f1: prf.f1,
        bleu1,
        per_predicate,
    }
}

/// Gold sets of a labeled corpus, failing on predicates the model lacks.
pub fn gold_sets(corpus: &[LabeledUtterance], predicates: &PredicateVocabulary) -> Result<Vec<TripletSet>> {
    corpus
        .iter()
        .map(|u| {
            for t in &u.triplets {
                if predicates.id(t.predicate.trim()).is_none() {
                    return Err(Error::UnknownPredicate(t.predicate.clone()));
                }
            }
            Ok(triplet_set(&u.triplets))
        })
        .collect()
}

/// End-to-end predictions for every utterance.
pub fn predict<S: Scalar>(model: &AttributeExtractor<S>, utterances: &[&str]) -> Result<Vec<TripletSet>> {
    utterances
        .iter()
        .map(|u| {
            let ex = model.extract(u)?;
            Ok(ex.triplets.iter().map(|t| t.to_text(&model.predicates).normalized()).collect())
        })
        .collect()
}

/// End-to-end evaluation of a model on a labeled corpus.
pub fn evaluate_model<S: Scalar>(model: &AttributeExtractor<S>, corpus: &[LabeledUtterance]) -> Result<EvalReport> {
    let gold = gold_sets(corpus, &model.predicates)?;
    let texts: Vec<&str> = corpus.iter().map(|u| u.utterance.as_str()).collect();
    let pred = predict(model, &texts)?;
    evaluate(&pred, &gold, &model.predicates)
}

/// Scores one stage with the other stage's errors removed.
///
/// Classifier mode compares predicted and gold predicate sets (BLEU-1 over
/// predicate names). Generator mode decodes once per gold predicate and
/// scores the resulting triplets like an end-to-end run.
pub fn oracle_eval<S: Scalar>(
    model: &AttributeExtractor<S>,
    corpus: &[LabeledUtterance],
    mode: OracleMode,
) -> Result<EvalReport> {
    let preds = &model.predicates;
    let gold = gold_sets(corpus, preds)?;
    let gold_ids: Vec<BTreeSet<usize>> = gold
        .iter()
        .map(|s| s.iter().filter_map(|t| preds.id(&t.predicate)).collect())
        .collect();
    match mode {
        OracleMode::Classifier => {
            let threshold = S::of(model.config.trigger_threshold);
            let mut pred_ids = Vec::with_capacity(corpus.len());
            for u in corpus {
                let tokens = tokenize(&u.utterance);
                if tokens.is_empty() {
                    pred_ids.push(BTreeSet::new());
                    continue;
                }
                let ctx = model.encode_tokens(&tokens)?;
                pred_ids.push(trigger_set(&model.classify(&ctx), threshold).into_iter().collect());
            }
            let strict = strict_match(&pred_ids, &gold_ids)?;
            let prf = triplet_f1(&pred_ids, &gold_ids)?;
            let names = |s: &BTreeSet<usize>| -> Vec<&str> { s.iter().map(|&j| preds.name(j)).collect() };
            let cand: Vec<Vec<&str>> = pred_ids.iter().map(names).collect();
            let refs: Vec<Vec<&str>> = gold_ids.iter().map(names).collect();
            let bleu = bleu1(&cand, &refs)?;
            let table = per_key_counts(&pred_ids, &gold_ids, |&j| j);
            let rows = predicate_rows(
                preds,
                |name| table.get(&preds.id(name).expect("known")).copied().unwrap_or_default(),
                std::iter::empty(),
            );
            Ok(report(strict.accuracy, prf, bleu, corpus.len(), rows))
        }
        OracleMode::Generator => {
            let mut pred = Vec::with_capacity(corpus.len());
            for (u, ids) in corpus.iter().zip(&gold_ids) {
                let tokens = tokenize(&u.utterance);
                if tokens.is_empty() || ids.is_empty() {
                    pred.push(TripletSet::new());
                    continue;
                }
                let ctx = model.encode_tokens(&tokens)?;
                let ids: Vec<usize> = ids.iter().copied().collect();
                let (triplets, _) = model.extract_with_predicates(&ctx, &ids);
                pred.push(triplets.iter().map(|t| t.to_text(preds).normalized()).collect());
            }
            evaluate(&pred, &gold, preds)
        }
    }
}
