use serde::{Deserialize, Serialize};

use crate::model::TripletText;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    User,
    System,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Turn {
    pub role: Role,
    pub text: String,
}

/// One line of the dialogues file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DialogueRecord {
    pub dialogue_id: String,
    pub persona_id: String,
    pub turns: Vec<Turn>,
}

impl DialogueRecord {
    /// At least one turn, and speaker roles alternate.
    pub fn is_well_formed(&self) -> bool {
        !self.turns.is_empty() && self.turns.windows(2).all(|w| w[0].role != w[1].role)
    }
}

/// One line of the personas file: a persona sentence and its triplet.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PersonaRecord {
    pub persona_id: String,
    pub sentence: String,
    pub triplet: TripletText,
}

/// One line of a labeled corpus: the train/test format.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledUtterance {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub key: Option<String>,
    pub utterance: String,
    pub triplets: Vec<TripletText>,
}

/// One line of an externally computed entailment score file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub u_key: String,
    pub p_key: String,
    pub score: f64,
}

/// Key of a dialogue turn, `dialogue_id:turn_index`.
pub fn utterance_key(dialogue_id: &str, turn: usize) -> String {
    format!("{dialogue_id}:{turn}")
}

/// Key of a persona sentence, `persona_id:index` where the index counts that
/// persona's sentences in file order.
pub fn persona_key(persona_id: &str, index: usize) -> String {
    format!("{persona_id}:{index}")
}
