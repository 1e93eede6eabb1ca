use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::Serialize;

use super::records::{persona_key, utterance_key, DialogueRecord, LabeledUtterance, PersonaRecord, Role};
use super::scorer::{EntailmentScorer, Sentence};
use crate::error::{Error, Result};
use crate::model::{PredicateVocabulary, TripletText};

/// Counts produced by [`build_labels`].
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct BuildReport {
    pub threshold: f64,
    pub dialogues: usize,
    pub skipped_dialogues: usize,
    pub skipped: Vec<String>,
    pub user_utterances: usize,
    pub labeled: usize,
    pub unlabeled: usize,
    pub triplets: usize,
    pub triplets_per_predicate: BTreeMap<String, usize>,
}

struct PersonaSentence<'a> {
    key: String,
    record: &'a PersonaRecord,
}

/// Predicate names present in the persona file, sorted.
pub fn predicate_vocabulary(personas: &[PersonaRecord]) -> Result<PredicateVocabulary> {
    let names: BTreeSet<&str> = personas.iter().map(|p| p.triplet.predicate.trim()).collect();
    PredicateVocabulary::new(names)
}

/// Labels every user turn with the triplets of the persona sentences it
/// entails at or above `threshold`. Dialogues whose persona is unknown or
/// whose roles do not alternate are skipped and listed in the report.
pub fn build_labels(
    dialogues: &[DialogueRecord],
    personas: &[PersonaRecord],
    scorer: &dyn EntailmentScorer,
    threshold: f64,
) -> Result<(Vec<LabeledUtterance>, BuildReport)> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::Config(format!("threshold {threshold} must lie in (0, 1)")));
    }
    let mut by_persona: HashMap<&str, Vec<PersonaSentence<'_>>> = HashMap::new();
    for p in personas {
        let group = by_persona.entry(p.persona_id.as_str()).or_default();
        group.push(PersonaSentence {
            key: persona_key(&p.persona_id, group.len()),
            record: p,
        });
    }

    let mut report = BuildReport {
        threshold,
        dialogues: dialogues.len(),
        ..Default::default()
    };
    let mut corpus = Vec::new();
    for d in dialogues {
        let Some(group) = by_persona.get(d.persona_id.as_str()) else {
            log::warn!("dialogue {}: unknown persona {}", d.dialogue_id, d.persona_id);
            report.skipped_dialogues += 1;
            report
                .skipped
                .push(format!("{}: unknown persona {}", d.dialogue_id, d.persona_id));
            continue;
        };
        if !d.is_well_formed() {
            log::warn!("dialogue {}: empty or non-alternating turns", d.dialogue_id);
            report.skipped_dialogues += 1;
            report
                .skipped
                .push(format!("{}: empty or non-alternating turns", d.dialogue_id));
            continue;
        }
        for (t, turn) in d.turns.iter().enumerate() {
            if turn.role != Role::User {
                continue;
            }
            let key = utterance_key(&d.dialogue_id, t);
            let premise = Sentence { key: &key, text: &turn.text };
            let triplets: BTreeSet<TripletText> = group
                .iter()
                .filter(|p| {
                    let hyp = Sentence { key: &p.key, text: &p.record.sentence };
                    scorer.score(premise, hyp) >= threshold
                })
                .map(|p| p.record.triplet.normalized())
                .collect();
            report.user_utterances += 1;
            if triplets.is_empty() {
                report.unlabeled += 1;
            } else {
                report.labeled += 1;
            }
            for tr in &triplets {
                report.triplets += 1;
                *report
                    .triplets_per_predicate
                    .entry(tr.predicate.clone())
                    .or_default() += 1;
            }
            corpus.push(LabeledUtterance {
                key: Some(key),
                utterance: turn.text.clone(),
                triplets: triplets.into_iter().collect(),
            });
        }
    }
    Ok((corpus, report))
}
